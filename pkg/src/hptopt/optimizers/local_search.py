"""Box-constrained quasi-Newton local search.

BFGS on a forward-finite-difference gradient with Armijo backtracking,
working in box-normalized coordinates. Components resting on an active
bound with the gradient pushing outward are frozen for the step, which is
the active-set treatment the 4-variable problem needs.
"""

from __future__ import annotations

import numpy as np

from .trace import BudgetExhausted, InfeasibleStartError, ObjectiveHandle, OptimizationTrace

__all__ = ["local_gradient_search"]

FD_STEP = 1e-6  # finite-difference step in normalized coordinates
ARMIJO_C1 = 1e-4
BACKTRACK = 0.5
MAX_BACKTRACKS = 40
BOUND_EPS = 1e-12


def local_gradient_search(
    obj: ObjectiveHandle,
    x0,
    gtol: float = 1e-6,
    max_iter: int = 200,
) -> OptimizationTrace:
    """Minimize through the handle from a feasible x0.

    Terminates when the projected-gradient norm (normalized coordinates)
    drops below gtol, on a failed line search, after max_iter iterations,
    or when the budget runs out.
    """
    lo, hi = obj.bounds[:, 0], obj.bounds[:, 1]
    span = hi - lo
    d = obj.dim

    def to_u(x):
        return (np.asarray(x, dtype=float) - lo) / span

    def to_x(u):
        return lo + np.clip(u, 0.0, 1.0) * span

    def f_of(u):
        return obj(to_x(u))

    u = to_u(obj.clamp(x0))

    try:
        fu = f_of(u)
        if fu >= obj.feasible_threshold:
            raise InfeasibleStartError(
                f"starting point is penalized (objective {fu:.3e}); pick a feasible start"
            )

        def gradient(u, fu):
            g = np.zeros(d)
            for i in range(d):
                h = FD_STEP
                up = u.copy()
                if up[i] + h <= 1.0:
                    up[i] += h
                    g[i] = (f_of(up) - fu) / h
                else:
                    up[i] -= h
                    g[i] = (fu - f_of(up)) / h
            return g

        def projected(g, u):
            pg = g.copy()
            at_lo = u <= BOUND_EPS
            at_hi = u >= 1.0 - BOUND_EPS
            pg[at_lo & (g > 0.0)] = 0.0
            pg[at_hi & (g < 0.0)] = 0.0
            return pg

        g = gradient(u, fu)
        h_inv = np.eye(d)

        for _ in range(max_iter):
            pg = projected(g, u)
            if np.linalg.norm(pg) < gtol:
                break

            p = -h_inv @ g
            at_lo = u <= BOUND_EPS
            at_hi = u >= 1.0 - BOUND_EPS
            frozen = (at_lo & (p < 0.0)) | (at_hi & (p > 0.0))
            p[frozen] = 0.0
            if not np.any(p):
                break
            if np.dot(p, g) >= 0.0:  # not a descent direction: reset model
                p = -pg
                h_inv = np.eye(d)

            alpha = 1.0
            accepted = False
            for _ in range(MAX_BACKTRACKS):
                u_new = np.clip(u + alpha * p, 0.0, 1.0)
                step = u_new - u
                if not np.any(step):
                    break
                f_new = f_of(u_new)
                if f_new <= fu + ARMIJO_C1 * np.dot(g, step):
                    accepted = True
                    break
                alpha *= BACKTRACK
            if not accepted:
                break

            g_new = gradient(u_new, f_new)
            s = u_new - u
            y = g_new - g
            sy = float(np.dot(s, y))
            if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
                rho = 1.0 / sy
                eye = np.eye(d)
                h_inv = (eye - rho * np.outer(s, y)) @ h_inv @ (eye - rho * np.outer(y, s)) \
                    + rho * np.outer(s, s)
            u, fu, g = u_new, f_new, g_new
    except BudgetExhausted:
        pass
    return obj.trace
