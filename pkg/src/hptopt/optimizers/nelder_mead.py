"""Nelder-Mead simplex search with box clamping.

Standard coefficients: reflection 1, expansion 2, contraction 0.5,
shrink 0.5. Trial points are clamped into the box; termination is a
normalized simplex-diameter tolerance or budget exhaustion.
"""

from __future__ import annotations

import numpy as np

from .trace import BudgetExhausted, ObjectiveHandle, OptimizationTrace

__all__ = ["nelder_mead"]

ALPHA = 1.0  # reflection
GAMMA = 2.0  # expansion
RHO = 0.5  # contraction
SIGMA = 0.5  # shrink

INIT_STEP_FRAC = 0.05  # initial simplex size as a fraction of the box range


def _diameter(simplex, span) -> float:
    d = 0.0
    for i in range(len(simplex)):
        for j in range(i + 1, len(simplex)):
            d = max(d, float(np.max(np.abs(simplex[i] - simplex[j]) / span)))
    return d


def nelder_mead(
    obj: ObjectiveHandle,
    x0,
    tol: float = 1e-6,
    max_iter: int | None = None,
) -> OptimizationTrace:
    """Minimize through the handle starting from x0 (inside the box).

    Returns the trace; if the budget runs out the trace carries
    budget_exhausted=True and the best-so-far seen up to that point.
    """
    lo, hi = obj.bounds[:, 0], obj.bounds[:, 1]
    span = hi - lo
    d = obj.dim
    x0 = obj.clamp(x0)
    if max_iter is None:
        max_iter = 200 * d * 50  # effectively budget-limited

    try:
        simplex = [x0.copy()]
        fvals = [obj(x0)]
        for i in range(d):
            step = INIT_STEP_FRAC * span[i]
            v = x0.copy()
            if v[i] + step <= hi[i]:
                v[i] += step
            else:
                v[i] -= step
            simplex.append(v)
            fvals.append(obj(v))

        for _ in range(max_iter):
            order = np.argsort(fvals, kind="stable")
            simplex = [simplex[i] for i in order]
            fvals = [fvals[i] for i in order]

            if tol > 0.0 and _diameter(simplex, span) < tol:
                break

            centroid = np.mean(simplex[:-1], axis=0)
            xr = obj.clamp(centroid + ALPHA * (centroid - simplex[-1]))
            fr = obj(xr)

            if fr < fvals[0]:
                xe = obj.clamp(centroid + GAMMA * (xr - centroid))
                fe = obj(xe)
                if fe < fr:
                    simplex[-1], fvals[-1] = xe, fe
                else:
                    simplex[-1], fvals[-1] = xr, fr
            elif fr < fvals[-2]:
                simplex[-1], fvals[-1] = xr, fr
            else:
                if fr < fvals[-1]:
                    xc = obj.clamp(centroid + RHO * (xr - centroid))
                else:
                    xc = obj.clamp(centroid + RHO * (simplex[-1] - centroid))
                fc = obj(xc)
                if fc < min(fr, fvals[-1]):
                    simplex[-1], fvals[-1] = xc, fc
                else:
                    # shrink toward the best vertex
                    for i in range(1, d + 1):
                        simplex[i] = obj.clamp(simplex[0] + SIGMA * (simplex[i] - simplex[0]))
                        fvals[i] = obj(simplex[i])
    except BudgetExhausted:
        pass
    return obj.trace
