"""Hydraulic power take-off chain.

Piston pump -> ideal rectifying valves -> high/low pressure gas
accumulators -> variable-displacement motor -> generator. All state lives
in the two accumulator fluid volumes and the motor speed; pressures follow
from the isentropic gas law.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DesignVector",
    "DESIGN_BOUNDS",
    "DESIGN_NAMES",
    "SIM_VALID_BOUNDS",
    "HptoFixedParams",
    "HptoState",
    "HptoStepOutput",
    "AccumulatorFullError",
    "EfficiencyTable",
    "pto_force",
    "absorbed_power",
    "piston_flow",
    "accumulator_pressure",
    "rectified_flows",
    "motor_displacement",
    "motor_accel",
    "motor_flow",
    "generator_damping",
    "generator_efficiency",
    "generator_powers",
    "hpto_step",
    "initial_state",
]

ADIABATIC_INDEX = 1.4

# Motor displacement law constants: alpha*D = MD_SLOPE * dP + MD_OFFSET
# inside the (4, 15) MPa window, a small constant displacement outside it.
MD_SLOPE = 2.67e-11  # m^3/Pa
MD_OFFSET = -8.52e-5  # m^3
MD_FLOOR = 2.0e-5  # m^3
MD_WINDOW = (4.0e6, 15.0e6)  # Pa

# Optimization design space (short names ap, vh0, vl0, pl0).
DESIGN_NAMES = ("piston_area", "hpa_volume", "lpa_volume", "lpa_precharge")
DESIGN_BOUNDS = np.array(
    [
        [0.045, 0.18],  # piston area [m^2]
        [0.5, 10.0],  # HPA volume [m^3]
        [0.5, 8.0],  # LPA volume [m^3]
        [3.5e6, 9.6e6],  # LPA pre-charge [Pa]
    ]
)

# Wider sanity box accepted by the standalone simulator: the reference
# non-optimized design (piston area 0.038 m^2) sits below the optimization
# box but is still a perfectly simulatable machine.
SIM_VALID_BOUNDS = np.array(
    [
        [1.0e-3, 1.0],
        [0.05, 50.0],
        [0.05, 50.0],
        [1.0e5, 5.0e7],
    ]
)


class AccumulatorFullError(RuntimeError):
    """Fluid volume reached the accumulator shell volume (gas-law pole)."""

    def __init__(self, which: str, v_in: float, v0: float):
        super().__init__(f"{which} accumulator full: v_in={v_in:.4f} m^3 >= v0={v0:.4f} m^3")
        self.which = which
        self.v_in = v_in
        self.v0 = v0


@dataclass(frozen=True)
class DesignVector:
    """The four decision variables of the PTO.

    piston_area : double-acting piston area [m^2]
    hpa_volume : high-pressure accumulator shell volume [m^3]
    lpa_volume : low-pressure accumulator shell volume [m^3]
    lpa_precharge : low-pressure accumulator gas pre-charge [Pa]
    """

    piston_area: float
    hpa_volume: float
    lpa_volume: float
    lpa_precharge: float

    def __post_init__(self):
        vals = self.as_array()
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0.0):
            raise ValueError(f"design values must be finite and positive, got {vals}")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.piston_area, self.hpa_volume, self.lpa_volume, self.lpa_precharge]
        )

    @classmethod
    def from_array(cls, x) -> "DesignVector":
        x = np.asarray(x, dtype=float)
        if x.shape != (4,):
            raise ValueError(f"expected 4 design values, got shape {x.shape}")
        return cls(*x.tolist())

    def in_box(self, bounds=None) -> bool:
        b = DESIGN_BOUNDS if bounds is None else np.asarray(bounds)
        x = self.as_array()
        return bool(np.all(x >= b[:, 0]) and np.all(x <= b[:, 1]))


@dataclass(frozen=True)
class HptoFixedParams:
    """PTO constants that are not decision variables.

    hpa_precharge : HPA gas pre-charge [Pa]
    motor_inertia : combined motor/generator inertia [kg m^2]
    friction_torque : constant friction torque on the motor shaft [N m]
    desired_speed : generator design speed [rad/s]
    mech_eff_divisor : mechanical-efficiency divisor in the damping law
    eta_max : peak electrical efficiency of the parametric generator curve
    efficiency_table : optional measured (speed, torque) -> efficiency map
    """

    hpa_precharge: float = 6.0e6
    motor_inertia: float = 20.0
    friction_torque: float = 0.0
    desired_speed: float = 150.0
    mech_eff_divisor: float = 1.05
    eta_max: float = 0.85
    efficiency_table: "EfficiencyTable | None" = None

    def __post_init__(self):
        for name in ("hpa_precharge", "motor_inertia", "desired_speed", "mech_eff_divisor", "eta_max"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")
        if self.friction_torque < 0.0:
            raise ValueError("friction_torque must be >= 0")
        if self.eta_max > 1.0:
            raise ValueError("eta_max must be <= 1")


@dataclass(frozen=True)
class HptoState:
    """Instantaneous hydraulic state.

    p_high, p_low : accumulator pressures [Pa]
    v_in_high, v_in_low : cumulative fluid volume into each accumulator [m^3]
    omega_m : motor shaft speed [rad/s], never negative
    """

    p_high: float
    p_low: float
    v_in_high: float
    v_in_low: float
    omega_m: float

    def __post_init__(self):
        if self.p_high <= 0.0 or self.p_low <= 0.0:
            raise ValueError("pressures must be positive")
        if self.omega_m < 0.0:
            raise ValueError("omega_m must be >= 0")


@dataclass(frozen=True)
class HptoStepOutput:
    """One integration step of the hydraulic chain."""

    state: HptoState
    f_pto: float
    alpha_d: float
    c_gen: float
    p_abs: float
    p_mech: float
    p_elec: float


def initial_state(design: DesignVector, fixed: HptoFixedParams) -> HptoState:
    """Rest state: empty accumulators at pre-charge, motor stopped."""
    return HptoState(
        p_high=fixed.hpa_precharge,
        p_low=design.lpa_precharge,
        v_in_high=0.0,
        v_in_low=0.0,
        omega_m=0.0,
    )


def pto_force(v: float, p_high: float, p_low: float, ap: float) -> float:
    """Piston force F = -sign(v) * (p_high - p_low) * Ap [N].

    Opposes the relative motion whenever p_high > p_low; zero velocity
    gives zero force (sign(0) treated as 0).
    """
    if ap <= 0.0:
        raise ValueError(f"piston area must be > 0, got {ap}")
    return -float(np.sign(v)) * (p_high - p_low) * ap


def absorbed_power(f_pto: float, v: float) -> float:
    """Instantaneous absorbed (rectified) power |F * v| [W]."""
    return abs(f_pto * v)


def piston_flow(ap: float, v: float) -> float:
    """Signed volume flow from the piston, Q = Ap * v [m^3/s]."""
    if ap <= 0.0:
        raise ValueError(f"piston area must be > 0, got {ap}")
    return ap * v


def accumulator_pressure(precharge: float, v_in: float, v0: float) -> float:
    """Isentropic gas pressure p = precharge / (1 - v_in/v0)^1.4 [Pa].

    Raises AccumulatorFullError at the pole v_in >= v0. Negative v_in
    (net fluid withdrawn) lowers the pressure below the pre-charge.
    """
    if v_in >= v0:
        raise AccumulatorFullError("gas", v_in, v0)
    return precharge / (1.0 - v_in / v0) ** ADIABATIC_INDEX


def rectified_flows(q_piston: float, q_motor: float) -> tuple[float, float]:
    """Net flows through the ideal four-valve rectifier.

    Returns (flow into HPA, flow into LPA) = (|Q_piston| - Q_motor, its
    negation): the piston always delivers toward the HPA while the motor
    returns fluid to the LPA, so the two accumulator volumes mirror each
    other exactly.
    """
    if q_motor < 0.0:
        raise ValueError(f"motor flow must be >= 0, got {q_motor}")
    q_in = abs(q_piston) - q_motor
    return q_in, -q_in


def motor_displacement(delta_p: float) -> float:
    """Swashplate-controlled motor displacement alpha*D [m^3].

    Linear in the accumulator pressure difference inside the 4-15 MPa
    control window, a small constant displacement outside it.
    """
    if MD_WINDOW[0] < delta_p < MD_WINDOW[1]:
        return MD_SLOPE * delta_p + MD_OFFSET
    return MD_FLOOR


def motor_accel(p_h: float, p_l: float, alpha_d: float, t_g: float, t_f: float, i_mg: float) -> float:
    """Motor shaft acceleration ((p_h - p_l) * alphaD - T_g - T_f) / I [rad/s^2]."""
    if i_mg <= 0.0:
        raise ValueError(f"motor inertia must be > 0, got {i_mg}")
    return ((p_h - p_l) * alpha_d - t_g - t_f) / i_mg


def motor_flow(omega_m: float, alpha_d: float) -> float:
    """Volume flow through the motor, Q = omega_m * alphaD [m^3/s]."""
    if omega_m < 0.0:
        raise ValueError(f"motor speed must be >= 0, got {omega_m}")
    return omega_m * alpha_d


def generator_damping(delta_p: float, alpha_d: float, omega_m: float, params: HptoFixedParams) -> float:
    """Generator damping C_gen = dP*alphaD * (w/w_desired) / 1.05 [N m].

    The speed ratio is the volumetric efficiency; the divisor accounts for
    mechanical efficiency.
    """
    return (delta_p * alpha_d) * (omega_m / params.desired_speed) / params.mech_eff_divisor


def generator_efficiency(omega_m: float, torque: float, params: HptoFixedParams) -> float:
    """Electrical conversion efficiency in (0, eta_max].

    Uses the measured table when one is configured, otherwise the
    parametric speed curve

        eta(w) = eta_max * (w/wd) / (0.1 + 0.9 * (w/wd)^2).
    """
    if params.efficiency_table is not None:
        return params.efficiency_table.efficiency(omega_m, torque)
    r = omega_m / params.desired_speed
    eta = params.eta_max * r / (0.1 + 0.9 * r * r)
    return min(max(eta, 0.0), params.eta_max)


def generator_powers(c_gen: float, omega_m: float, params: HptoFixedParams) -> tuple[float, float]:
    """Mechanical and electrical power at the generator [W].

    The damping value acts directly as the braking torque, floored at zero
    (the generator never drives the shaft), so both powers are
    non-negative and p_elec <= p_mech always holds.
    """
    t_g = max(c_gen, 0.0)
    p_mech = t_g * omega_m
    eta = generator_efficiency(omega_m, t_g, params)
    return p_mech, eta * p_mech


def hpto_step(
    state: HptoState,
    v_rel: float,
    x: DesignVector,
    fixed: HptoFixedParams,
    dt: float,
) -> HptoStepOutput:
    """Advance the hydraulic chain one step of size dt.

    Forward-integrates the accumulator volumes (V_in += Q_in dt) and the
    motor speed, floored at zero. Raises AccumulatorFullError when a fluid
    volume reaches its shell volume.
    """
    p_h, p_l = state.p_high, state.p_low
    delta_p = p_h - p_l

    f = pto_force(v_rel, p_h, p_l, x.piston_area)
    q_p = piston_flow(x.piston_area, v_rel)
    alpha_d = motor_displacement(delta_p)
    q_m = motor_flow(state.omega_m, alpha_d)
    q_hpa, q_lpa = rectified_flows(q_p, q_m)

    c_gen = generator_damping(delta_p, alpha_d, state.omega_m, fixed)
    t_g = max(c_gen, 0.0)
    acc = motor_accel(p_h, p_l, alpha_d, t_g, fixed.friction_torque, fixed.motor_inertia)

    v_in_high = state.v_in_high + q_hpa * dt
    v_in_low = state.v_in_low + q_lpa * dt
    omega_new = max(state.omega_m + acc * dt, 0.0)

    try:
        p_high_new = accumulator_pressure(fixed.hpa_precharge, v_in_high, x.hpa_volume)
    except AccumulatorFullError:
        raise AccumulatorFullError("high-pressure", v_in_high, x.hpa_volume) from None
    try:
        p_low_new = accumulator_pressure(x.lpa_precharge, v_in_low, x.lpa_volume)
    except AccumulatorFullError:
        raise AccumulatorFullError("low-pressure", v_in_low, x.lpa_volume) from None

    p_abs = absorbed_power(f, v_rel)
    p_mech, p_elec = generator_powers(c_gen, state.omega_m, fixed)

    new_state = HptoState(
        p_high=p_high_new,
        p_low=p_low_new,
        v_in_high=v_in_high,
        v_in_low=v_in_low,
        omega_m=omega_new,
    )
    return HptoStepOutput(
        state=new_state,
        f_pto=f,
        alpha_d=alpha_d,
        c_gen=c_gen,
        p_abs=p_abs,
        p_mech=p_mech,
        p_elec=p_elec,
    )


class EfficiencyTable:
    """Bilinear (speed, torque) -> efficiency lookup loaded from CSV.

    The file must carry the header `omega_rad_s,torque_Nm,efficiency` and
    enumerate a full rectangular grid of speed/torque breakpoints.
    Efficiencies are clamped into (0, 1]; queries outside the grid clamp
    to the edges.
    """

    def __init__(self, omega_grid, torque_grid, eff):
        self.omega_grid = np.asarray(omega_grid, dtype=float)
        self.torque_grid = np.asarray(torque_grid, dtype=float)
        self.eff = np.asarray(eff, dtype=float)
        if self.eff.shape != (len(self.omega_grid), len(self.torque_grid)):
            raise ValueError("efficiency matrix shape does not match the grids")
        if np.any(np.diff(self.omega_grid) <= 0) or np.any(np.diff(self.torque_grid) <= 0):
            raise ValueError("grid breakpoints must be strictly increasing")
        self.eff = np.clip(self.eff, 1e-12, 1.0)

    @classmethod
    def from_csv(cls, path) -> "EfficiencyTable":
        data = np.genfromtxt(path, delimiter=",", names=True)
        expected = ("omega_rad_s", "torque_Nm", "efficiency")
        if data.dtype.names != expected:
            raise ValueError(f"expected header {','.join(expected)}, got {data.dtype.names}")
        omegas = np.unique(data["omega_rad_s"])
        torques = np.unique(data["torque_Nm"])
        if len(data) != len(omegas) * len(torques):
            raise ValueError("table rows do not form a full (speed, torque) grid")
        eff = np.full((len(omegas), len(torques)), np.nan)
        oi = np.searchsorted(omegas, data["omega_rad_s"])
        ti = np.searchsorted(torques, data["torque_Nm"])
        eff[oi, ti] = data["efficiency"]
        if np.any(np.isnan(eff)):
            raise ValueError("table rows do not form a full (speed, torque) grid")
        return cls(omegas, torques, eff)

    def efficiency(self, omega: float, torque: float) -> float:
        og, tg = self.omega_grid, self.torque_grid
        o = min(max(omega, og[0]), og[-1])
        t = min(max(torque, tg[0]), tg[-1])
        i = min(int(np.searchsorted(og, o, side="right")) - 1, len(og) - 2)
        j = min(int(np.searchsorted(tg, t, side="right")) - 1, len(tg) - 2)
        i = max(i, 0)
        j = max(j, 0)
        fo = (o - og[i]) / (og[i + 1] - og[i])
        ft = (t - tg[j]) / (tg[j + 1] - tg[j])
        e = (
            self.eff[i, j] * (1 - fo) * (1 - ft)
            + self.eff[i + 1, j] * fo * (1 - ft)
            + self.eff[i, j + 1] * (1 - fo) * ft
            + self.eff[i + 1, j + 1] * fo * ft
        )
        return float(min(max(e, 1e-12), 1.0))
