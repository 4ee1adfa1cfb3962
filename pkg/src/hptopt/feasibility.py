"""Feasible-region construction and the penalized objective.

The design space is the Table-style box minus an empirically flagged zone
where small HPA volumes make the simulation blow up. Calibration replays
that construction: sweep a (piston area, HPA volume) grid, flag the
non-physical runs, and keep the per-area minimum surviving volume as a
piecewise-linear threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .hpto import DESIGN_BOUNDS, DesignVector
from .metrics import compute_metrics
from .simulate import SimulationResult

__all__ = [
    "FeasibleRegion",
    "CalibrationGrid",
    "CalibrationError",
    "PENALTY_FLOOR",
    "is_feasible",
    "flag_non_physical",
    "calibrate_region",
    "penalized_objective",
    "make_penalized_objective",
]

PENALTY_FLOOR = 1.0e9

# Non-physical run detection thresholds.
MAX_PISTON_PRESSURE = 250.0e6  # Pa
MAX_DISPLACEMENT = 10.0  # m


class CalibrationError(RuntimeError):
    """Raised when a calibration column contains no physical run."""


@dataclass(frozen=True)
class FeasibleRegion:
    """Box bounds plus the minimum-HPA-volume threshold over piston area.

    knots : sequence of (piston_area, min_hpa_volume), strictly increasing
    in area; the threshold interpolates linearly between knots and clamps
    at the end knots.
    """

    bounds: np.ndarray = field(default_factory=lambda: DESIGN_BOUNDS.copy())
    knots: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        if b.shape != (4, 2):
            raise ValueError(f"bounds must be (4, 2), got {b.shape}")
        object.__setattr__(self, "bounds", b)
        ks = tuple((float(a), float(v)) for a, v in self.knots)
        aps = [a for a, _ in ks]
        if any(a2 <= a1 for a1, a2 in zip(aps, aps[1:])):
            raise ValueError("knot piston areas must be strictly increasing")
        for _, v in ks:
            if not b[1, 0] <= v <= b[1, 1]:
                raise ValueError(f"knot volume {v} outside HPA box bounds")
        object.__setattr__(self, "knots", ks)

    def threshold(self, piston_area: float) -> float:
        """Minimum feasible HPA volume at this piston area."""
        if not self.knots:
            return float(self.bounds[1, 0])
        aps = np.array([a for a, _ in self.knots])
        vs = np.array([v for _, v in self.knots])
        return float(np.interp(piston_area, aps, vs))

    def save(self, path) -> None:
        payload = {
            "bounds": self.bounds.tolist(),
            "knots": [list(k) for k in self.knots],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "FeasibleRegion":
        with open(path) as fh:
            payload = json.load(fh)
        return cls(
            bounds=np.asarray(payload["bounds"], dtype=float),
            knots=tuple(tuple(k) for k in payload["knots"]),
        )


def is_feasible(x: DesignVector, region: FeasibleRegion) -> bool:
    """Inside the box and at or above the HPA-volume threshold (closed set)."""
    arr = x.as_array()
    b = region.bounds
    if np.any(arr < b[:, 0]) or np.any(arr > b[:, 1]):
        return False
    return x.hpa_volume >= region.threshold(x.piston_area)


def flag_non_physical(result: SimulationResult, ramp: float) -> str | None:
    """Reason string when a run violates the physicality thresholds, else None.

    A run is non-physical when it diverged or hit an accumulator pole, or
    when its post-ramp extremes show non-positive piston pressure, piston
    pressure above 250 MPa, or displacement above 10 m.
    """
    if result.non_physical and result.reason != "displacement-cap":
        return result.reason
    ext_ramp = ramp if result.time[-1] > ramp else 0.0
    try:
        m = compute_metrics(result, ext_ramp)
    except ValueError:
        return "empty-metrics-window"
    if m.min_piston_pressure <= 0.0:
        return "non-positive-piston-pressure"
    if m.max_piston_pressure > MAX_PISTON_PRESSURE:
        return "piston-pressure-exceeded"
    if max(m.max_float_disp, m.max_spar_disp) > MAX_DISPLACEMENT:
        return "displacement-exceeded"
    return None


@dataclass(frozen=True)
class CalibrationGrid:
    """Grid for the feasibility sweep: all (piston area, HPA volume) pairs
    at fixed LPA settings."""

    ap_values: tuple[float, ...]
    hpa_values: tuple[float, ...]
    lpa_volume: float
    lpa_precharge: float

    @classmethod
    def from_box(cls, n_ap: int, n_hpa: int, lpa_volume: float, lpa_precharge: float,
                 bounds=None) -> "CalibrationGrid":
        b = DESIGN_BOUNDS if bounds is None else np.asarray(bounds)
        return cls(
            ap_values=tuple(np.linspace(b[0, 0], b[0, 1], n_ap)),
            hpa_values=tuple(np.linspace(b[1, 0], b[1, 1], n_hpa)),
            lpa_volume=lpa_volume,
            lpa_precharge=lpa_precharge,
        )

    @property
    def n_runs(self) -> int:
        return len(self.ap_values) * len(self.hpa_values)


def calibrate_region(
    grid: CalibrationGrid,
    pipeline,
    ramp: float,
    bounds=None,
) -> tuple[FeasibleRegion, dict]:
    """Replay the sensitivity sweep and fit the feasibility threshold.

    `pipeline` maps a DesignVector to a SimulationResult. For every piston
    area the knot is the smallest HPA volume whose run stayed physical; a
    column with no physical run aborts with CalibrationError. Returns the
    region plus a summary dict (run counts and flags).
    """
    b = DESIGN_BOUNDS if bounds is None else np.asarray(bounds)
    knots = []
    flagged = 0
    flags = {}
    for ap in grid.ap_values:
        feasible_vols = []
        for vh0 in grid.hpa_values:
            x = DesignVector(ap, vh0, grid.lpa_volume, grid.lpa_precharge)
            result = pipeline(x)
            reason = flag_non_physical(result, ramp)
            if reason is None:
                feasible_vols.append(vh0)
            else:
                flagged += 1
                flags[(float(ap), float(vh0))] = reason
        if not feasible_vols:
            raise CalibrationError(f"every run non-physical at piston area {ap}")
        knots.append((float(ap), float(min(feasible_vols))))
    region = FeasibleRegion(bounds=np.asarray(b, dtype=float), knots=tuple(knots))
    summary = {"total_runs": grid.n_runs, "flagged_runs": flagged, "flags": flags}
    return region, summary


def _violation(x: DesignVector, region: FeasibleRegion) -> float:
    """Normalized distance-to-feasible used in the penalty term."""
    arr = x.as_array()
    b = region.bounds
    span = b[:, 1] - b[:, 0]
    v = np.maximum(b[:, 0] - arr, 0.0) / span + np.maximum(arr - b[:, 1], 0.0) / span
    total = float(np.sum(v))
    shortfall = region.threshold(x.piston_area) - x.hpa_volume
    if shortfall > 0.0:
        total += shortfall / span[1]
    return total


def penalized_objective(x: DesignVector, region: FeasibleRegion, pipeline, ramp: float) -> float:
    """Scalar to minimize: -mean electrical power, or a large penalty.

    Region-infeasible designs are penalized without simulating; runs that
    come back non-physical get the bare penalty floor. Simulation errors
    are absorbed into the penalty, never raised.
    """
    if not is_feasible(x, region):
        return PENALTY_FLOOR + _violation(x, region)
    try:
        result = pipeline(x)
    except Exception:
        return PENALTY_FLOOR
    if flag_non_physical(result, ramp) is not None:
        return PENALTY_FLOOR
    return -compute_metrics(result, ramp).mean_elec


def make_penalized_objective(region: FeasibleRegion, pipeline, ramp: float):
    """Bind region/pipeline into an array -> float objective for optimizers."""

    def objective(arr) -> float:
        try:
            x = DesignVector.from_array(arr)
        except ValueError:
            return PENALTY_FLOOR + 1.0
        return penalized_objective(x, region, pipeline, ramp)

    return objective
