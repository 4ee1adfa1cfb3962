"""Real-coded genetic algorithm building blocks.

Selection is stochastic universal sampling on rank-based fitness (ranks
survive the huge penalty values the feasibility wrapper produces),
crossover is uniform, mutation is per-gene Gaussian. Duplicate offspring
are re-mutated so the population keeps exploring.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trace import BudgetExhausted, ObjectiveHandle, OptimizationTrace

__all__ = ["GaParams", "sus_select", "ga_generation", "ga_run"]


@dataclass(frozen=True)
class GaParams:
    crossover_prob: float = 0.9
    mutation_prob: float = 0.1
    mutation_sigma_frac: float = 0.05  # of the box range, per gene

    def __post_init__(self):
        for name in ("crossover_prob", "mutation_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if self.mutation_sigma_frac <= 0.0:
            raise ValueError("mutation_sigma_frac must be > 0")


def sus_select(weights, n_select: int, rng: np.random.Generator) -> np.ndarray:
    """Stochastic universal sampling: n_select indices with counts
    proportional to the (non-negative) weights, within +/-1 of expectation."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0.0):
        raise ValueError("weights must be non-negative")
    total = float(np.sum(w))
    if total <= 0.0:
        raise ValueError("weights must not all be zero")
    step = total / n_select
    start = rng.uniform(0.0, step)
    pointers = start + step * np.arange(n_select)
    cdf = np.cumsum(w)
    return np.searchsorted(cdf, pointers, side="right").clip(0, len(w) - 1)


def _rank_weights(values: np.ndarray) -> np.ndarray:
    """Linear rank fitness: best value gets weight n, worst gets 1."""
    n = len(values)
    order = np.argsort(values, kind="stable")
    weights = np.empty(n)
    weights[order] = np.arange(n, 0, -1)
    return weights


def ga_generation(
    population: np.ndarray,
    values: np.ndarray,
    bounds,
    params: GaParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Breed the next population from the current one and its objective
    values (minimization). Population size must be even."""
    pop = np.asarray(population, dtype=float)
    n, d = pop.shape
    if n < 2 or n % 2 != 0:
        raise ValueError(f"population size must be even and >= 2, got {n}")
    bounds = np.asarray(bounds, dtype=float)
    lo, hi = bounds[:, 0], bounds[:, 1]
    span = hi - lo

    parents_idx = sus_select(_rank_weights(np.asarray(values, dtype=float)), n, rng)
    rng.shuffle(parents_idx)
    parents = pop[parents_idx]

    offspring = parents.copy()
    for i in range(0, n, 2):
        if rng.random() < params.crossover_prob:
            mask = rng.random(d) < 0.5
            a, b = offspring[i].copy(), offspring[i + 1].copy()
            offspring[i, mask] = b[mask]
            offspring[i + 1, mask] = a[mask]

    mutate = params.mutation_prob > 0.0
    if mutate:
        mask = rng.random((n, d)) < params.mutation_prob
        noise = rng.normal(0.0, 1.0, size=(n, d)) * (params.mutation_sigma_frac * span)
        offspring = np.where(mask, offspring + noise, offspring)
        offspring = np.clip(offspring, lo, hi)

        # re-mutate duplicates so the population stays diverse
        for i in range(n):
            attempts = 0
            while attempts < 100 and any(
                np.array_equal(offspring[i], offspring[j]) for j in range(i)
            ):
                jitter = rng.normal(0.0, 1.0, size=d) * (params.mutation_sigma_frac * span)
                offspring[i] = np.clip(offspring[i] + jitter, lo, hi)
                attempts += 1
    return offspring


def ga_run(
    obj: ObjectiveHandle,
    npop: int,
    budget: int,
    seed: int,
    params: GaParams | None = None,
) -> OptimizationTrace:
    """Plain generational GA consuming exactly `budget` evaluations."""
    if params is None:
        params = GaParams()
    rng = np.random.default_rng(seed)
    lo, hi = obj.bounds[:, 0], obj.bounds[:, 1]

    pop = rng.uniform(lo, hi, size=(npop, obj.dim))
    values = np.empty(npop)
    spent = 0
    try:
        for i in range(npop):
            if spent >= budget:
                raise BudgetExhausted
            values[i] = obj(pop[i])
            spent += 1
        while spent < budget:
            pop = ga_generation(pop, values, obj.bounds, params, rng)
            for i in range(npop):
                if spent >= budget:
                    raise BudgetExhausted
                values[i] = obj(pop[i])
                spent += 1
    except BudgetExhausted:
        pass
    return obj.trace
