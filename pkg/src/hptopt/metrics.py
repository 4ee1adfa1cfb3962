"""Reduction of simulation time series to scalar performance numbers."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .simulate import SimulationResult

__all__ = [
    "Metrics",
    "mean_after_ramp",
    "percentile_linear",
    "power_fluctuation_ratio",
    "extremes",
    "compute_metrics",
]


@dataclass(frozen=True)
class Metrics:
    """Scalar outputs of one run (post-ramp window).

    Powers in W, force in N, pressures in Pa, displacements in m.
    """

    mean_absorbed: float
    mean_mech: float
    mean_elec: float
    rpf: float
    max_pto_force: float
    max_piston_pressure: float
    min_piston_pressure: float
    max_float_disp: float
    max_spar_disp: float

    def as_dict(self) -> dict:
        return asdict(self)


def _post_ramp(series, time, ramp: float) -> np.ndarray:
    series = np.asarray(series, dtype=float)
    time = np.asarray(time, dtype=float)
    if series.shape != time.shape:
        raise ValueError("series and time grids differ in length")
    window = series[time >= ramp]
    if window.size == 0:
        raise ValueError(f"no samples at or after ramp={ramp}")
    return window


def mean_after_ramp(series, time, ramp: float) -> float:
    """Arithmetic mean of the samples with t >= ramp."""
    return float(np.mean(_post_ramp(series, time, ramp)))


def percentile_linear(samples, q: float) -> float:
    """q-th percentile by linear interpolation on the sorted samples."""
    return float(np.percentile(np.asarray(samples, dtype=float), q, method="linear"))


def power_fluctuation_ratio(p_series, time, ramp: float) -> float:
    """R_PF = (p99.9 - p0.1) / mean over the post-ramp window.

    The extreme levels are the 99.9th and 0.1th percentiles of the
    post-ramp samples. Raises on a zero-mean window.
    """
    window = _post_ramp(p_series, time, ramp)
    mean = float(np.mean(window))
    if mean == 0.0:
        raise ValueError("power fluctuation ratio undefined for zero-mean series")
    return (percentile_linear(window, 99.9) - percentile_linear(window, 0.1)) / mean


def extremes(result: SimulationResult, ramp: float) -> dict:
    """Post-ramp extreme values of the tracked series."""
    t = result.time

    def _mx(name, absolute=False):
        w = _post_ramp(result[name], t, ramp)
        return float(np.max(np.abs(w))) if absolute else float(np.max(w))

    piston = np.concatenate(
        [_post_ramp(result["p_top"], t, ramp), _post_ramp(result["p_bottom"], t, ramp)]
    )
    return {
        "max_pto_force": _mx("f_pto", absolute=True),
        "max_piston_pressure": float(np.max(piston)),
        "min_piston_pressure": float(np.min(piston)),
        "max_float_disp": _mx("pos_float", absolute=True),
        "max_spar_disp": _mx("pos_spar", absolute=True),
    }


def compute_metrics(result: SimulationResult, ramp: float) -> Metrics:
    """All scalar outputs for one completed simulation.

    The fluctuation ratio is taken on the electrical power series; a run
    that never produced electrical power gets rpf = 0 rather than the
    undefined-ratio error.
    """
    t = result.time
    if np.mean(_post_ramp(result["p_elec"], t, ramp)) == 0.0:
        rpf = 0.0
    else:
        rpf = power_fluctuation_ratio(result["p_elec"], t, ramp)
    return Metrics(
        mean_absorbed=mean_after_ramp(result["p_abs"], t, ramp),
        mean_mech=mean_after_ramp(result["p_mech"], t, ramp),
        mean_elec=mean_after_ramp(result["p_elec"], t, ramp),
        rpf=rpf,
        **extremes(result, ramp),
    )
