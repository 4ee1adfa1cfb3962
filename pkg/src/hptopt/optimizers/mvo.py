"""Multi-Verse Optimizer.

Population metaheuristic: better universes (lower objective = higher
inflation rate) donate coordinates through white-hole/black-hole roulette
exchange, and every universe is perturbed around the best one through
wormholes whose reach (TDR) shrinks and whose probability (WEP) grows
over the iterations.
"""

from __future__ import annotations

import numpy as np

from .trace import BudgetExhausted, ObjectiveHandle, OptimizationTrace

__all__ = ["mvo"]

WEP_MIN = 0.2
WEP_MAX = 1.0
TDR_POWER = 6.0


def _roulette(weights: np.ndarray, r: float) -> int:
    cdf = np.cumsum(weights)
    total = cdf[-1]
    if total <= 0.0:
        return 0
    return int(np.searchsorted(cdf, r * total, side="left"))


def mvo(
    obj: ObjectiveHandle,
    n_universes: int,
    n_iter: int,
    seed: int,
) -> OptimizationTrace:
    """Minimize through the handle with n_universes agents for n_iter
    iterations (one full population evaluation each, plus the initial one)."""
    if n_universes < 2:
        raise ValueError(f"need at least 2 universes, got {n_universes}")
    rng = np.random.default_rng(seed)
    lo, hi = obj.bounds[:, 0], obj.bounds[:, 1]
    d = obj.dim

    pop = rng.uniform(lo, hi, size=(n_universes, d))
    fitness = np.empty(n_universes)
    try:
        for i in range(n_universes):
            fitness[i] = obj(pop[i])

        best_x = pop[np.argmin(fitness)].copy()
        best_f = float(np.min(fitness))

        for t in range(1, n_iter + 1):
            wep = WEP_MIN + t * (WEP_MAX - WEP_MIN) / n_iter
            tdr = 1.0 - (t / n_iter) ** (1.0 / TDR_POWER)

            order = np.argsort(fitness, kind="stable")
            pop = pop[order]
            fitness = fitness[order]

            f_min, f_max = fitness[0], fitness[-1]
            if f_max > f_min:
                quality = (f_max - fitness) / (f_max - f_min)  # 1 = best, 0 = worst
            else:
                quality = np.ones(n_universes)
            # worse universes are more likely to receive white-hole objects
            receive_prob = 1.0 - quality

            new_pop = pop.copy()
            for i in range(1, n_universes):
                for j in range(d):
                    if rng.random() < receive_prob[i]:
                        k = _roulette(quality, rng.random())
                        new_pop[i, j] = pop[k, j]
                    if rng.random() < wep:
                        reach = tdr * ((hi[j] - lo[j]) * rng.random() + lo[j])
                        if rng.random() < 0.5:
                            new_pop[i, j] = best_x[j] + reach
                        else:
                            new_pop[i, j] = best_x[j] - reach
            pop = np.clip(new_pop, lo, hi)
            for i in range(n_universes):
                fitness[i] = obj(pop[i])

            i_best = int(np.argmin(fitness))
            if fitness[i_best] < best_f:
                best_f = float(fitness[i_best])
                best_x = pop[i_best].copy()
    except BudgetExhausted:
        pass
    return obj.trace
