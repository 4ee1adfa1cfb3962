"""Coupled float/spar + hydraulic PTO time-domain simulation.

The body dynamics advance with the PTO force frozen over each step while
the hydraulic state advances with the relative velocity frozen — the same
operator splitting as composing dynamics.step with hpto.hpto_step, but
compiled with numba so a full design evaluation costs milliseconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .dynamics import DISPLACEMENT_CAP, BodyHydro, SimConfig
from .hpto import (
    MD_FLOOR,
    MD_OFFSET,
    MD_SLOPE,
    MD_WINDOW,
    DesignVector,
    HptoFixedParams,
)
from .wave import SpectrumSpec, WaveRealization, elevation, realize

__all__ = ["Scenario", "SimulationResult", "build_scenario", "simulate_design", "SERIES_NAMES"]

SERIES_NAMES = (
    "pos_float",
    "vel_float",
    "pos_spar",
    "vel_spar",
    "f_pto",
    "p_top",
    "p_bottom",
    "p_hpa",
    "p_lpa",
    "omega_m",
    "alpha_d",
    "c_gen",
    "p_abs",
    "p_mech",
    "p_elec",
)

_STATUS_OK = 0
_STATUS_HPA_FULL = 1
_STATUS_LPA_FULL = 2
_STATUS_NONFINITE = 3

# plain-float copies of the displacement-law constants for the jitted kernel
MD_WINDOW_LO = MD_WINDOW[0]
MD_WINDOW_HI = MD_WINDOW[1]
MD_SLOPE_C = MD_SLOPE
MD_OFFSET_C = MD_OFFSET
MD_FLOOR_C = MD_FLOOR

_EMPTY = np.empty(0, dtype=np.float64)
_EMPTY2D = np.empty((0, 0), dtype=np.float64)


@dataclass(frozen=True)
class Scenario:
    """Everything a design evaluation needs except the design itself.

    The elevation series is synthesized once per (spectrum, seed, grid) and
    shared across all design evaluations.
    """

    time: np.ndarray
    eta: np.ndarray
    sim: SimConfig
    float_body: BodyHydro
    spar_body: BodyHydro
    fixed: HptoFixedParams
    realization: WaveRealization


@dataclass
class SimulationResult:
    """Full time series of one design evaluation plus physicality flags."""

    time: np.ndarray
    series: dict[str, np.ndarray]
    non_physical: bool = False
    reason: str | None = None

    def __post_init__(self):
        n = len(self.time)
        for name, arr in self.series.items():
            if len(arr) != n:
                raise ValueError(f"series {name!r} length {len(arr)} != time grid {n}")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.series[name]


def build_scenario(
    spectrum: SpectrumSpec,
    float_body: BodyHydro,
    spar_body: BodyHydro,
    sim: SimConfig,
    fixed: HptoFixedParams,
) -> Scenario:
    """Realize the sea state and precompute elevation on the time grid."""
    wr = realize(spectrum)
    time = np.arange(sim.n_steps + 1) * sim.dt
    eta = elevation(wr, time)
    return Scenario(
        time=time,
        eta=eta,
        sim=sim,
        float_body=float_body,
        spar_body=spar_body,
        fixed=fixed,
        realization=wr,
    )


@njit(cache=True)
def _bilinear_eff(og, tg, eff, omega, torque):
    o = min(max(omega, og[0]), og[-1])
    t = min(max(torque, tg[0]), tg[-1])
    i = np.searchsorted(og, o, side="right") - 1
    j = np.searchsorted(tg, t, side="right") - 1
    if i > len(og) - 2:
        i = len(og) - 2
    if j > len(tg) - 2:
        j = len(tg) - 2
    if i < 0:
        i = 0
    if j < 0:
        j = 0
    fo = (o - og[i]) / (og[i + 1] - og[i])
    ft = (t - tg[j]) / (tg[j + 1] - tg[j])
    e = (
        eff[i, j] * (1 - fo) * (1 - ft)
        + eff[i + 1, j] * fo * (1 - ft)
        + eff[i, j + 1] * (1 - fo) * ft
        + eff[i + 1, j + 1] * fo * ft
    )
    return min(max(e, 1e-12), 1.0)


@njit(cache=True)
def _integrate(
    eta,
    dt,
    ramp_time,
    rk4,
    mi1, br1, kh1, cd1, gx1,
    mi2, br2, kh2, cd2, gx2,
    ap, vh0, vl0, pl0, ph0,
    i_mg, t_f, w_des, mech_div, eta_max,
    use_table, tab_omega, tab_torque, tab_eff,
    disp_cap,
    out,
):
    """Fill `out` (15 x n+1) with the coupled time series.

    Returns (status, index of first failed step, displacement-cap flag).
    On a non-OK status the series are valid up to and including the
    returned index.
    """
    n = eta.shape[0] - 1
    gamma = 1.4

    x1 = 0.0
    v1 = 0.0
    x2 = 0.0
    v2 = 0.0
    v_in_h = 0.0
    v_in_l = 0.0
    w_m = 0.0
    p_h = ph0
    p_l = pl0
    cap_hit = False

    for k in range(n + 1):
        t = k * dt
        v_rel = v1 - v2
        d_p = p_h - p_l

        if v_rel > 0.0:
            sgn = 1.0
        elif v_rel < 0.0:
            sgn = -1.0
        else:
            sgn = 0.0
        f_pto = -sgn * d_p * ap

        if MD_WINDOW_LO < d_p < MD_WINDOW_HI:
            alpha_d = MD_SLOPE_C * d_p + MD_OFFSET_C
        else:
            alpha_d = MD_FLOOR_C

        c_gen = (d_p * alpha_d) * (w_m / w_des) / mech_div
        t_g = c_gen if c_gen > 0.0 else 0.0
        p_mech = t_g * w_m
        if use_table:
            eff = _bilinear_eff(tab_omega, tab_torque, tab_eff, w_m, t_g)
        else:
            r = w_m / w_des
            eff = eta_max * r / (0.1 + 0.9 * r * r)
            if eff < 0.0:
                eff = 0.0
            elif eff > eta_max:
                eff = eta_max
        p_elec = eff * p_mech

        # recorded chamber pressures: the compressed side sees the HPA
        if v_rel > 0.0:
            p_top = p_h
            p_bottom = p_l
        elif v_rel < 0.0:
            p_top = p_l
            p_bottom = p_h
        else:
            p_top = 0.5 * (p_h + p_l)
            p_bottom = p_top

        out[0, k] = x1
        out[1, k] = v1
        out[2, k] = x2
        out[3, k] = v2
        out[4, k] = f_pto
        out[5, k] = p_top
        out[6, k] = p_bottom
        out[7, k] = p_h
        out[8, k] = p_l
        out[9, k] = w_m
        out[10, k] = alpha_d
        out[11, k] = c_gen
        out[12, k] = abs(f_pto * v_rel)
        out[13, k] = p_mech
        out[14, k] = p_elec

        if k == n:
            break

        # --- mechanical step, PTO force frozen ---
        eta0 = eta[k]
        eta1 = eta[k + 1]
        eta_mid = 0.5 * (eta0 + eta1)
        if ramp_time > 0.0:
            r0 = t / ramp_time
            if r0 > 1.0:
                r0 = 1.0
            rm = (t + 0.5 * dt) / ramp_time
            if rm > 1.0:
                rm = 1.0
            r1 = (t + dt) / ramp_time
            if r1 > 1.0:
                r1 = 1.0
        else:
            r0 = 1.0
            rm = 1.0
            r1 = 1.0

        fe1_0 = gx1 * eta0 * r0
        fe1_m = gx1 * eta_mid * rm
        fe1_1 = gx1 * eta1 * r1
        fe2_0 = gx2 * eta0 * r0
        fe2_m = gx2 * eta_mid * rm
        fe2_1 = gx2 * eta1 * r1

        if rk4:
            # float (+f_pto)
            k1x = v1
            k1v = (fe1_0 - (br1 + cd1) * v1 - kh1 * x1 + f_pto) / mi1
            k2x = v1 + 0.5 * dt * k1v
            k2v = (fe1_m - (br1 + cd1) * (v1 + 0.5 * dt * k1v) - kh1 * (x1 + 0.5 * dt * k1x) + f_pto) / mi1
            k3x = v1 + 0.5 * dt * k2v
            k3v = (fe1_m - (br1 + cd1) * (v1 + 0.5 * dt * k2v) - kh1 * (x1 + 0.5 * dt * k2x) + f_pto) / mi1
            k4x = v1 + dt * k3v
            k4v = (fe1_1 - (br1 + cd1) * (v1 + dt * k3v) - kh1 * (x1 + dt * k3x) + f_pto) / mi1
            x1n = x1 + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            v1n = v1 + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            # spar (-f_pto)
            k1x = v2
            k1v = (fe2_0 - (br2 + cd2) * v2 - kh2 * x2 - f_pto) / mi2
            k2x = v2 + 0.5 * dt * k1v
            k2v = (fe2_m - (br2 + cd2) * (v2 + 0.5 * dt * k1v) - kh2 * (x2 + 0.5 * dt * k1x) - f_pto) / mi2
            k3x = v2 + 0.5 * dt * k2v
            k3v = (fe2_m - (br2 + cd2) * (v2 + 0.5 * dt * k2v) - kh2 * (x2 + 0.5 * dt * k2x) - f_pto) / mi2
            k4x = v2 + dt * k3v
            k4v = (fe2_1 - (br2 + cd2) * (v2 + dt * k3v) - kh2 * (x2 + dt * k3x) - f_pto) / mi2
            x2n = x2 + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            v2n = v2 + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        else:
            v1n = v1 + dt * (fe1_0 - (br1 + cd1) * v1 - kh1 * x1 + f_pto) / mi1
            x1n = x1 + dt * v1n
            v2n = v2 + dt * (fe2_0 - (br2 + cd2) * v2 - kh2 * x2 - f_pto) / mi2
            x2n = x2 + dt * v2n

        # --- hydraulic step, relative velocity frozen ---
        q_p = ap * v_rel
        q_m = w_m * alpha_d
        q_in = abs(q_p) - q_m
        v_in_h_n = v_in_h + q_in * dt
        v_in_l_n = v_in_l - q_in * dt
        acc = (d_p * alpha_d - t_g - t_f) / i_mg
        w_n = w_m + acc * dt
        if w_n < 0.0:
            w_n = 0.0

        if v_in_h_n >= vh0:
            return _STATUS_HPA_FULL, k, cap_hit
        if v_in_l_n >= vl0:
            return _STATUS_LPA_FULL, k, cap_hit

        p_h = ph0 / (1.0 - v_in_h_n / vh0) ** gamma
        p_l = pl0 / (1.0 - v_in_l_n / vl0) ** gamma

        if not (
            math.isfinite(x1n)
            and math.isfinite(v1n)
            and math.isfinite(x2n)
            and math.isfinite(v2n)
            and math.isfinite(p_h)
            and math.isfinite(p_l)
            and math.isfinite(w_n)
        ):
            return _STATUS_NONFINITE, k, cap_hit

        if abs(x1n) > disp_cap or abs(x2n) > disp_cap:
            cap_hit = True

        x1, v1, x2, v2 = x1n, v1n, x2n, v2n
        v_in_h, v_in_l, w_m = v_in_h_n, v_in_l_n, w_n

    return _STATUS_OK, n, cap_hit


def simulate_design(design: DesignVector, scenario: Scenario) -> SimulationResult:
    """Run the coupled simulation for one design.

    Returns the full-grid result for completed runs. Runs that hit the
    accumulator pole or lose finiteness are truncated at the failing step
    and flagged non-physical; exceeding the heave displacement cap only
    flags, the run still completes.
    """
    sim = scenario.sim
    fixed = scenario.fixed
    fb, sb = scenario.float_body, scenario.spar_body
    n = sim.n_steps
    out = np.empty((len(SERIES_NAMES), n + 1))

    table = fixed.efficiency_table
    if table is not None:
        use_table = True
        tab_o, tab_t, tab_e = table.omega_grid, table.torque_grid, table.eff
    else:
        use_table = False
        tab_o, tab_t, tab_e = _EMPTY, _EMPTY, _EMPTY2D

    status, last, cap_hit = _integrate(
        scenario.eta,
        sim.dt,
        sim.ramp_time,
        sim.integrator == "rk4",
        fb.total_inertia, fb.radiation_damping, fb.hydrostatic_stiffness, fb.drag_coeff, fb.excitation_coeff,
        sb.total_inertia, sb.radiation_damping, sb.hydrostatic_stiffness, sb.drag_coeff, sb.excitation_coeff,
        design.piston_area, design.hpa_volume, design.lpa_volume, design.lpa_precharge, fixed.hpa_precharge,
        fixed.motor_inertia, fixed.friction_torque, fixed.desired_speed, fixed.mech_eff_divisor, fixed.eta_max,
        use_table, tab_o, tab_t, tab_e,
        DISPLACEMENT_CAP,
        out,
    )

    if status == _STATUS_OK:
        time = scenario.time
        data = out
        non_physical = cap_hit
        reason = "displacement-cap" if cap_hit else None
    else:
        time = scenario.time[: last + 1]
        data = out[:, : last + 1]
        non_physical = True
        reason = {
            _STATUS_HPA_FULL: "hpa-accumulator-full",
            _STATUS_LPA_FULL: "lpa-accumulator-full",
            _STATUS_NONFINITE: "diverged",
        }[status]

    series = {name: np.ascontiguousarray(data[i]) for i, name in enumerate(SERIES_NAMES)}
    return SimulationResult(time=time.copy(), series=series, non_physical=non_physical, reason=reason)
