"""Ordinary Kriging interpolator with a Gaussian correlation kernel.

Predictions are linear combinations of the training values whose weights
come from the fitted correlation model, so training points are reproduced
exactly (up to the tiny nugget used for conditioning). Length-scales are
chosen by maximizing the concentrated log-likelihood over a log-spaced
grid -- first a shared value, then one coordinate sweep per dimension --
keeping only candidates whose training-point reproduction stays within
the interpolation tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["KrigingModel", "KrigingFitError", "kriging_fit"]

NUGGET = 1e-10
INTERP_RTOL = 1e-8  # of the training-value range
THETA_GRID = np.logspace(-2.0, 3.0, 11)


class KrigingFitError(RuntimeError):
    """Model could not be fit (conflicting duplicates or singular kernel)."""


def _corr_matrix(x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - x[None, :, :]
    return np.exp(-np.sum(theta * diff * diff, axis=2))


def _chol_solve(chol, b):
    z = np.linalg.solve(chol, b)
    return np.linalg.solve(chol.T, z)


def _fit_given_theta(x, y, theta, nugget):
    """Cholesky fit at fixed hyperparameters; None when not positive.

    The returned dict carries the worst training-point reproduction error:
    with a nugget the prediction at x_i is y_i - nugget * alpha_i, so the
    error is nugget * max|alpha|; without one it is the solve residual.
    """
    n = len(y)
    corr = _corr_matrix(x, theta)
    r = corr + nugget * np.eye(n)
    try:
        chol = np.linalg.cholesky(r)
    except np.linalg.LinAlgError:
        return None
    ones = np.ones(n)
    ri_1 = _chol_solve(chol, ones)
    denom = float(ones @ ri_1)
    if denom <= 0.0:
        return None
    mu = float(ones @ _chol_solve(chol, y)) / denom
    resid = y - mu
    alpha = _chol_solve(chol, resid)
    sigma2 = float(resid @ alpha) / n
    if sigma2 <= 0.0:
        sigma2 = 1e-300
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    loglik = -0.5 * (n * np.log(sigma2) + log_det)
    if nugget > 0.0:
        interp_err = nugget * float(np.max(np.abs(alpha)))
    else:
        interp_err = float(np.max(np.abs(corr @ alpha - resid)))
    return {
        "mu": mu,
        "sigma2": sigma2,
        "alpha": alpha,
        "loglik": loglik,
        "nugget": nugget,
        "interp_err": interp_err,
    }


@dataclass
class KrigingModel:
    """Fitted interpolator over inputs normalized to the unit box."""

    x_train: np.ndarray
    y_train: np.ndarray
    theta: np.ndarray
    mu: float
    sigma2: float
    alpha: np.ndarray  # R^-1 (y - mu)
    nugget: float

    def predict(self, x) -> np.ndarray:
        """Predicted values at one point (d,) or a batch (m, d)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        diff = x[:, None, :] - self.x_train[None, :, :]
        r = np.exp(-np.sum(self.theta * diff * diff, axis=2))
        return self.mu + r @ self.alpha

    def predict_one(self, x) -> float:
        return float(self.predict(x)[0])


def kriging_fit(x, y, theta_grid=THETA_GRID, theta_init=None) -> KrigingModel:
    """Fit the model to n >= d+2 points in the unit box.

    Exact duplicate inputs with matching values are collapsed; duplicates
    with conflicting values raise KrigingFitError. Passing theta_init
    reuses those length-scales when they still interpolate, skipping the
    grid search (cheap warm restarts while new data accumulates).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"x must be 2-D, got shape {x.shape}")
    n, d = x.shape
    if len(y) != n:
        raise ValueError("x and y lengths differ")

    keep = []
    seen: dict[tuple, float] = {}
    for i in range(n):
        key = tuple(x[i])
        if key in seen:
            if seen[key] != y[i]:
                raise KrigingFitError(f"conflicting values at duplicate input {key}")
            continue
        seen[key] = y[i]
        keep.append(i)
    x, y = x[keep], y[keep]
    n = len(y)
    if n < d + 2:
        raise KrigingFitError(f"need at least {d + 2} distinct points, got {n}")

    y_span = float(np.max(y) - np.min(y))
    tol = INTERP_RTOL * y_span if y_span > 0.0 else INTERP_RTOL

    def attempt(theta):
        fit = _fit_given_theta(x, y, theta, 0.0)
        if fit is None or fit["interp_err"] > tol:
            fit = _fit_given_theta(x, y, theta, NUGGET)
        if fit is None or fit["interp_err"] > tol:
            return None
        return fit

    best = None
    best_theta = None

    if theta_init is not None:
        theta = np.asarray(theta_init, dtype=float)
        fit = attempt(theta)
        if fit is not None:
            best, best_theta = fit, theta

    if best is None:
        for t in theta_grid:
            theta = np.full(d, t)
            fit = attempt(theta)
            if fit is not None and (best is None or fit["loglik"] > best["loglik"]):
                best, best_theta = fit, theta
        if best is None:
            raise KrigingFitError("no length-scale passed the interpolation check")
        for j in range(d):
            for t in theta_grid:
                if t == best_theta[j]:
                    continue
                theta = best_theta.copy()
                theta[j] = t
                fit = attempt(theta)
                if fit is not None and fit["loglik"] > best["loglik"]:
                    best, best_theta = fit, theta

    model = KrigingModel(
        x, y, best_theta, best["mu"], best["sigma2"], best["alpha"], best["nugget"]
    )
    pred = model.predict(x)
    if np.max(np.abs(pred - y)) > tol:
        raise KrigingFitError("interpolation tolerance not met")
    return model
