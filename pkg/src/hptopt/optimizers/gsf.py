"""GA + Kriging-surrogate + simplex-refinement composite optimizer.

Each generation breeds the population with the GA operators, then swaps
the offspring with the worst surrogate predictions for the best candidates
found by probing the surrogate at random points (model probes are free;
only population evaluations touch the budget). A Nelder-Mead polish from
the incumbent consumes the remaining evaluations, so the trace length is
npop * ngen + n_fminsearch exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .ga import GaParams, ga_generation
from .kriging import KrigingFitError, kriging_fit
from .nelder_mead import nelder_mead
from .trace import ObjectiveHandle, OptimizationTrace

__all__ = ["GsfConfig", "GSF_PRESETS", "gsf_run"]

log = logging.getLogger(__name__)

N_SURROGATE_PROBES = 1000
MAX_TRAIN_POINTS = 250  # surrogate training-set cap (best half + most recent half)
THETA_REFRESH = 10  # generations between full length-scale searches

# Named configurations: (npop, surrogate elitism factor, ngen, n_fminsearch).
GSF_PRESETS = {
    "gsf1": (40, 0.1, 50, 100),
    "gsf2": (60, 0.1, 50, 100),
    "gsf3": (80, 0.1, 50, 100),
    "gsf4": (40, 0.2, 50, 100),
    "gsf5": (60, 0.2, 50, 100),
    "gsf6": (80, 0.2, 50, 100),
}


@dataclass(frozen=True)
class GsfConfig:
    """Composite-run shape. factor = 0 degenerates to plain GA + simplex."""

    npop: int
    factor: float
    ngen: int
    n_fminsearch: int
    seed: int = 0
    ga_params: GaParams = GaParams()

    def __post_init__(self):
        if self.npop < 2 or self.npop % 2 != 0:
            raise ValueError(f"npop must be even and >= 2, got {self.npop}")
        if not 0.0 <= self.factor < 1.0:
            raise ValueError(f"factor must be in [0, 1), got {self.factor}")
        if self.ngen < 1:
            raise ValueError(f"ngen must be >= 1, got {self.ngen}")
        if self.n_fminsearch < 0:
            raise ValueError(f"n_fminsearch must be >= 0, got {self.n_fminsearch}")

    @property
    def total_evaluations(self) -> int:
        return self.npop * self.ngen + self.n_fminsearch

    @classmethod
    def preset(cls, name: str, seed: int = 0) -> "GsfConfig":
        key = name.lower()
        if key not in GSF_PRESETS:
            raise KeyError(f"unknown GSF preset {name!r}; have {sorted(GSF_PRESETS)}")
        npop, factor, ngen, nfm = GSF_PRESETS[key]
        return cls(npop=npop, factor=factor, ngen=ngen, n_fminsearch=nfm, seed=seed)


def _normalize(x, bounds):
    return (x - bounds[:, 0]) / (bounds[:, 1] - bounds[:, 0])


def _training_subset(x_all, y_all):
    """Best half + most recent half of the evaluations, capped."""
    n = len(y_all)
    if n <= MAX_TRAIN_POINTS:
        return x_all, y_all
    half = MAX_TRAIN_POINTS // 2
    best_idx = np.argsort(y_all, kind="stable")[:half]
    recent_idx = np.arange(n - half, n)
    idx = np.unique(np.concatenate([best_idx, recent_idx]))
    return x_all[idx], y_all[idx]


def _fit_surrogate(x_all, y_all, bounds, feasible_threshold, theta_init=None):
    mask = y_all < feasible_threshold
    x_feas, y_feas = x_all[mask], y_all[mask]
    d = x_all.shape[1]
    if len(y_feas) < d + 2:
        raise KrigingFitError(f"only {len(y_feas)} feasible evaluations")
    x_sub, y_sub = _training_subset(x_feas, y_feas)
    return kriging_fit(_normalize(x_sub, bounds), y_sub, theta_init=theta_init)


def gsf_run(obj: ObjectiveHandle, cfg: GsfConfig) -> OptimizationTrace:
    """Run the composite pipeline through the handle.

    The handle must have at least cfg.total_evaluations remaining; the run
    consumes exactly that many.
    """
    if obj.remaining < cfg.total_evaluations:
        raise ValueError(
            f"budget {obj.remaining} below the configured total {cfg.total_evaluations}"
        )
    rng = np.random.default_rng(cfg.seed)
    bounds = obj.bounds
    lo, hi = bounds[:, 0], bounds[:, 1]
    d = obj.dim
    n_replace = math.ceil(cfg.factor * cfg.npop)

    x_all: list[np.ndarray] = []
    y_all: list[float] = []

    def evaluate(pop):
        vals = np.empty(len(pop))
        for i in range(len(pop)):
            vals[i] = obj(pop[i])
            x_all.append(np.array(pop[i]))
            y_all.append(vals[i])
        return vals

    pop = rng.uniform(lo, hi, size=(cfg.npop, d))
    values = evaluate(pop)
    theta = None

    for gen in range(cfg.ngen - 1):
        next_pop = ga_generation(pop, values, bounds, cfg.ga_params, rng)

        if n_replace > 0:
            theta_init = theta if gen % THETA_REFRESH != 0 else None
            try:
                model = _fit_surrogate(
                    np.array(x_all), np.array(y_all), bounds,
                    obj.feasible_threshold, theta_init=theta_init,
                )
                theta = model.theta
            except KrigingFitError as exc:
                log.info("surrogate fit skipped: %s", exc)
                model = None
            if model is not None:
                probes = rng.uniform(lo, hi, size=(N_SURROGATE_PROBES, d))
                probe_pred = model.predict(_normalize(probes, bounds))
                candidates = probes[np.argsort(probe_pred, kind="stable")[:n_replace]]
                offspring_pred = model.predict(_normalize(next_pop, bounds))
                worst = np.argsort(offspring_pred, kind="stable")[::-1][:n_replace]
                next_pop[worst] = candidates

        pop = next_pop
        values = evaluate(pop)

    # simplex polish from the incumbent, budget-terminated (tol=0) so the
    # total evaluation count matches the configured shape exactly
    if cfg.n_fminsearch > 0:
        incumbent = x_all[int(np.argmin(y_all))]
        inner = ObjectiveHandle(
            obj.fun, bounds, budget=len(obj.trace) + cfg.n_fminsearch,
            feasible_threshold=obj.feasible_threshold,
        )
        inner.trace = obj.trace  # same trace, tighter budget
        nelder_mead(inner, incumbent, tol=0.0)
    return obj.trace
