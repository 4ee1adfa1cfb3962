"""Heave-only rigid-body dynamics of the float/spar pair.

Each body obeys

    (m + Ainf) * a = r(t) * Gamma * eta(t) - B_r * v - K_hs * x - C_d * v +/- F_pto

i.e. excitation, constant radiation damping, hydrostatic restoring,
linearized drag and the PTO reaction pair. The radiation convolution is
collapsed to the constant coefficient B_r; the drag force is linear in
velocity. Both choices keep the single-body oracle analytic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .wave import WaveRealization, elevation

__all__ = [
    "BodyHydro",
    "BodyState",
    "SimConfig",
    "SimulationDivergedError",
    "step",
    "relative_velocity",
    "ramp_factor",
]

INTEGRATORS = ("rk4", "semi-implicit-euler")

# Runs whose heave magnitude crosses this are flagged non-physical.
DISPLACEMENT_CAP = 10.0  # m


class SimulationDivergedError(RuntimeError):
    """Raised when integration produces a non-finite state."""

    def __init__(self, t: float, state):
        super().__init__(f"simulation diverged at t={t:.3f} s: state={state}")
        self.t = t
        self.state = state


@dataclass(frozen=True)
class BodyHydro:
    """Hydrodynamic and rigid-body coefficients of a single heaving body.

    mass : dry mass [kg]
    added_mass_inf : added mass at infinite frequency [kg]
    radiation_damping : constant radiation damping coefficient [N s/m]
    hydrostatic_stiffness : restoring stiffness [N/m]
    drag_coeff : linearized drag coefficient [N s/m]
    excitation_coeff : elevation-to-force coefficient [N/m]; defaults to the
        hydrostatic stiffness when not given
    """

    mass: float
    added_mass_inf: float = 0.0
    radiation_damping: float = 0.0
    hydrostatic_stiffness: float = 0.0
    drag_coeff: float = 0.0
    excitation_coeff: float | None = None

    def __post_init__(self):
        if not self.mass > 0.0:
            raise ValueError(f"mass must be > 0, got {self.mass}")
        for name in ("added_mass_inf", "radiation_damping", "hydrostatic_stiffness", "drag_coeff"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.excitation_coeff is None:
            object.__setattr__(self, "excitation_coeff", self.hydrostatic_stiffness)

    @property
    def total_inertia(self) -> float:
        return self.mass + self.added_mass_inf


@dataclass(frozen=True)
class BodyState:
    """Heave position [m] and velocity [m/s] of one body."""

    position: float = 0.0
    velocity: float = 0.0


@dataclass(frozen=True)
class SimConfig:
    """Time-integration settings.

    duration : total simulated time [s]
    ramp_time : excitation ramp window excluded from statistics [s]
    dt : step size [s]
    integrator : 'rk4' or 'semi-implicit-euler'
    """

    duration: float = 400.0
    ramp_time: float = 100.0
    dt: float = 0.01
    integrator: str = "rk4"

    def __post_init__(self):
        if not 0.0 < self.dt <= 0.1:
            raise ValueError(f"dt must satisfy 0 < dt <= 0.1, got {self.dt}")
        if not 0.0 <= self.ramp_time < self.duration:
            raise ValueError(
                f"need 0 <= ramp_time < duration, got ({self.ramp_time}, {self.duration})"
            )
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


def ramp_factor(t: float, ramp_time: float) -> float:
    """Excitation ramp multiplier r(t) = min(t / ramp_time, 1)."""
    if ramp_time <= 0.0:
        return 1.0
    return min(t / ramp_time, 1.0)


def relative_velocity(states: tuple[BodyState, BodyState]) -> float:
    """Piston velocity: float heave velocity minus spar heave velocity."""
    return states[0].velocity - states[1].velocity


def _eta_at(wave, t: float) -> float:
    if callable(wave):
        return wave(t)
    return elevation(wave, t)


def step(
    states: tuple[BodyState, BodyState],
    wave,
    bodies,
    f_pto: float,
    t: float,
    dt: float,
    ramp_time: float = 0.0,
    integrator: str = "rk4",
) -> tuple[BodyState, BodyState]:
    """Advance both bodies by one step with the PTO force held constant.

    The PTO force acts as a reaction pair: +f_pto on the float, -f_pto on
    the spar. `wave` is a WaveRealization or a callable t -> elevation.
    Raises SimulationDivergedError if the new state is not finite.
    """
    if integrator not in INTEGRATORS:
        raise ValueError(f"unknown integrator {integrator!r}")

    signs = (1.0, -1.0)

    def accel(body, x, v, t_sub, sign):
        fe = body.excitation_coeff * _eta_at(wave, t_sub) * ramp_factor(t_sub, ramp_time)
        f = fe - body.radiation_damping * v - body.hydrostatic_stiffness * x \
            - body.drag_coeff * v + sign * f_pto
        return f / body.total_inertia

    new_states = []
    for body, st, sign in zip(bodies, states, signs):
        x, v = st.position, st.velocity
        if integrator == "rk4":
            k1x = v
            k1v = accel(body, x, v, t, sign)
            k2x = v + 0.5 * dt * k1v
            k2v = accel(body, x + 0.5 * dt * k1x, v + 0.5 * dt * k1v, t + 0.5 * dt, sign)
            k3x = v + 0.5 * dt * k2v
            k3v = accel(body, x + 0.5 * dt * k2x, v + 0.5 * dt * k2v, t + 0.5 * dt, sign)
            k4x = v + dt * k3v
            k4v = accel(body, x + dt * k3x, v + dt * k3v, t + dt, sign)
            x_new = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            v_new = v + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        else:
            v_new = v + dt * accel(body, x, v, t, sign)
            x_new = x + dt * v_new
        if not (np.isfinite(x_new) and np.isfinite(v_new)):
            raise SimulationDivergedError(t + dt, (x_new, v_new))
        new_states.append(BodyState(position=x_new, velocity=v_new))
    return tuple(new_states)
