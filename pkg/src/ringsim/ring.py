"""Ring-road fleet assembly.

The fleet state is a flat vector [x1, v1, x2, v2, ..., xN, vN]. Vehicle i
follows vehicle i-1 (vehicle 0 follows vehicle N-1); gaps are circular
forward distances on a ring of length L. Positions are integrated
unwrapped (monotone) and reduced modulo L wherever geometry or output
needs them.

IDM vehicles receive their inputs (gap, own speed, approach rate) from the
state at t - tau when a reaction delay is configured; their approach rate
is passed to the IDM law as v_follower - v_leader. The FollowerStopper
vehicle always acts on the current state and uses v_leader - v_follower,
matching each controller's documented convention. Kinematics dx/dt = v is
never delayed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import integrators
from .models import (
    CollisionError,
    FsParams,
    IdmParams,
    fs_accel,
    fs_command,
    idm_accel,
    idm_equilibrium_speed,
)

__all__ = [
    "Collision",
    "Stop",
    "VehicleState",
    "vehicle_states",
    "RingScenario",
    "RingSeries",
    "PRESET_NAMES",
    "build_uniform_scenario",
    "gap",
    "initial_state",
    "apply_perturbation",
    "rhs",
    "detect_events",
    "simulate",
    "sample",
    "equilibrium_scenario",
]

PRESET_NAMES = ("idm", "idm_delayed", "mixed", "mixed_delayed")


class VehicleState(NamedTuple):
    """Position on the ring (m, wrapped to [0, L)) and speed (m/s, >= 0)."""

    x: float
    v: float


def vehicle_states(z, length: float) -> list[VehicleState]:
    """Per-vehicle view of a flat [x1, v1, ..., xN, vN] state vector."""
    z = np.asarray(z, dtype=float)
    return [
        VehicleState(float(x % length), float(max(v, 0.0)))
        for x, v in zip(z[0::2], z[1::2])
    ]


@dataclass(frozen=True)
class Collision:
    """Two vehicles touched: the named vehicle's gap reached zero."""

    vehicle: int


@dataclass(frozen=True)
class Stop:
    """The named vehicle's speed fell below the stop threshold."""

    vehicle: int


@dataclass(frozen=True)
class RingScenario:
    """Full description of one ring-road run.

    controllers : per-vehicle controller parameters, IdmParams or FsParams,
        ordered so that vehicle i follows vehicle i-1
    tau : reaction delay applied to IDM inputs only (s, 0 disables)
    v_init : nominal initial speed of every vehicle (m/s)
    perturb_amp : half-width of the uniform velocity perturbation (m/s)
    seed : perturbation RNG seed
    t_end : simulated duration (s)
    sample_hz : uniform output sampling rate (Hz)
    """

    ring_length: float
    controllers: tuple[IdmParams | FsParams, ...]
    tau: float = 0.0
    v_init: float = 5.0
    perturb_amp: float = 1e-3
    seed: int = 1
    t_end: float = 1500.0
    sample_hz: float = 30.0

    def __post_init__(self):
        object.__setattr__(self, "controllers", tuple(self.controllers))
        n = len(self.controllers)
        if n < 2:
            raise ValueError("a ring needs at least 2 vehicles")
        if not self.ring_length > 0:
            raise ValueError("ring_length must be positive")
        s0_max = max(
            (p.s0 for p in self.controllers if isinstance(p, IdmParams)), default=0.0
        )
        if self.ring_length / n <= s0_max:
            raise ValueError(
                "ring too crowded: average spacing must exceed every standstill gap"
            )
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        if self.v_init < 0:
            raise ValueError("v_init must be nonnegative")
        if self.perturb_amp < 0:
            raise ValueError("perturb_amp must be nonnegative")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if not self.sample_hz > 0:
            raise ValueError("sample_hz must be positive")

    @property
    def n_vehicles(self) -> int:
        return len(self.controllers)


def build_uniform_scenario(preset: str, seed: int = 1) -> RingScenario:
    """One of the four stock scenarios: 10 vehicles, 100 m ring, 1500 s.

    Vehicles start equally spaced at 5 m/s with a 1e-3 m/s random
    perturbation, sampled at 30 Hz. The delayed presets use a 0.5 s
    reaction delay on the IDM vehicles; the mixed presets replace vehicle 0
    with a FollowerStopper controller (which is never delayed).
    """
    if preset not in PRESET_NAMES:
        raise ValueError(f"unknown preset {preset!r}; expected one of {PRESET_NAMES}")
    idm = IdmParams()
    controllers: list[IdmParams | FsParams] = [idm] * 10
    if preset.startswith("mixed"):
        controllers[0] = FsParams()
    tau = 0.5 if preset.endswith("_delayed") else 0.0
    return RingScenario(
        ring_length=100.0,
        controllers=tuple(controllers),
        tau=tau,
        v_init=5.0,
        perturb_amp=1e-3,
        seed=seed,
        t_end=1500.0,
        sample_hz=30.0,
    )


def gap(x_follower: float, x_leader: float, length: float) -> float:
    """Circular forward distance from follower to leader, in [0, length).

    A result of 0 means coincident positions, i.e. a collision state; the
    degenerate reading "leader exactly one full lap ahead" cannot occur
    with two or more vehicles on the ring.
    """
    return (x_leader - x_follower) % length


def initial_state(scenario: RingScenario) -> np.ndarray:
    """Equally spaced fleet at the nominal speed, vehicle 0 at x=0.

    Positions decrease with the vehicle index (modulo L) so that each
    vehicle's leader sits one spacing ahead of it.
    """
    n = scenario.n_vehicles
    spacing = scenario.ring_length / n
    z = np.empty(2 * n)
    z[0::2] = (-np.arange(n) * spacing) % scenario.ring_length
    z[1::2] = scenario.v_init
    return z


def apply_perturbation(z: np.ndarray, amp: float, seed: int) -> np.ndarray:
    """Add i.i.d. uniform[-amp, amp] offsets to the velocity slots.

    Positions are untouched, resulting velocities are clamped at zero, and
    the result is a deterministic function of (z, amp, seed).
    """
    if amp < 0:
        raise ValueError("perturbation amplitude must be nonnegative")
    out = z.copy()
    rng = np.random.default_rng(seed)
    offsets = rng.uniform(-amp, amp, z.size // 2)
    out[1::2] = np.maximum(out[1::2] + offsets, 0.0)
    return out


@lru_cache(maxsize=32)
def _prepared(scenario: RingScenario):
    leaders = (np.arange(scenario.n_vehicles) - 1) % scenario.n_vehicles
    fleet = tuple(
        (i, int(leaders[i]), p, isinstance(p, FsParams))
        for i, p in enumerate(scenario.controllers)
    )
    return leaders, fleet


def _deriv(z: np.ndarray, z_delayed: np.ndarray, scenario: RingScenario) -> np.ndarray:
    length = scenario.ring_length
    leaders, fleet = _prepared(scenario)
    x = z[0::2]
    v = z[1::2]
    gaps_now = (x[leaders] - x) % length
    if np.any(gaps_now <= 0.0):
        i = int(np.argmax(gaps_now <= 0.0))
        raise CollisionError(f"vehicle {i} has zero gap to its leader", vehicle=i)
    if z_delayed is z:
        xd, vd = x, np.maximum(v, 0.0)
        gaps_d = gaps_now
    else:
        xd = z_delayed[0::2]
        vd = np.maximum(z_delayed[1::2], 0.0)
        gaps_d = (xd[leaders] - xd) % length

    out = np.empty_like(z)
    out[0::2] = v
    acc = out[1::2]
    for i, ldr, p, is_fs in fleet:
        if is_fs:
            v_lead = v[ldr]
            cmd = fs_command(gaps_now[i], v_lead - v[i], v_lead, p)
            acc[i] = fs_accel(v[i], cmd, p)
        else:
            acc[i] = idm_accel(gaps_d[i], vd[i], vd[i] - vd[ldr], p)
        if v[i] <= 0.0 and acc[i] < 0.0:
            acc[i] = 0.0  # standstill: never integrate backwards
    return out


def rhs(t, z, delayed_accessor, scenario: RingScenario) -> np.ndarray:
    """Time derivative of the fleet state.

    delayed_accessor maps a lag to the state at t minus that lag; it is
    queried once with scenario.tau (an identity accessor is fine when
    tau is 0). Position derivatives always equal the current velocity
    slots. IDM accelerations are evaluated entirely from the delayed
    state; the FollowerStopper vehicle from the current one. Speeds fed to
    the controllers are clamped at zero, and a vehicle at standstill is
    never given a negative acceleration.

    Raises CollisionError as soon as any gap is nonpositive.
    """
    z = np.asarray(z, dtype=float)
    zd = np.asarray(delayed_accessor(scenario.tau), dtype=float) if scenario.tau > 0 else z
    return _deriv(z, zd, scenario)


def detect_events(z, scenario: RingScenario, gap_min: float = 0.0,
                  v_stop: float = 0.1) -> list[Collision | Stop]:
    """Instantaneous collision and standstill checks on one state."""
    z = np.asarray(z, dtype=float)
    leaders, _ = _prepared(scenario)
    x = z[0::2]
    v = z[1::2]
    gaps = (x[leaders] - x) % scenario.ring_length
    events: list[Collision | Stop] = []
    for i in np.nonzero(gaps <= gap_min)[0]:
        events.append(Collision(int(i)))
    for i in np.nonzero(v < v_stop)[0]:
        events.append(Stop(int(i)))
    return events


def _collision_terminal(scenario: RingScenario):
    leaders, _ = _prepared(scenario)
    length = scenario.ring_length

    def terminal(t, z):
        x = z[0::2]
        gaps = (x[leaders] - x) % length
        hit = np.nonzero(gaps <= 0.0)[0]
        if hit.size:
            return Collision(int(hit[0]))
        return None

    return terminal


def simulate(scenario: RingScenario,
             cfg: integrators.IntegratorConfig | None = None,
             z0: np.ndarray | None = None) -> integrators.Trajectory:
    """Integrate a scenario and return the raw adaptive-step trajectory.

    The initial state is the equally spaced fleet with the scenario's
    perturbation applied (or the explicit z0 override). The delay path is
    taken exactly when tau > 0, with the perturbed initial state held
    constant as history. Collisions terminate the run and are recorded as
    trajectory events.
    """
    if z0 is None:
        z0 = apply_perturbation(
            initial_state(scenario), scenario.perturb_amp, scenario.seed
        )
    else:
        z0 = np.asarray(z0, dtype=float).copy()
    terminal = _collision_terminal(scenario)
    if scenario.tau > 0:
        return integrators.integrate_dde(
            lambda t, z, zlag: _deriv(np.asarray(z), np.asarray(zlag), scenario),
            history=lambda t: z0,
            tau=scenario.tau,
            t_span=(0.0, scenario.t_end),
            cfg=cfg,
            terminal=terminal,
            domain_error=CollisionError,
        )
    return integrators.integrate_ode(
        lambda t, z: _deriv(np.asarray(z), np.asarray(z), scenario),
        z0,
        (0.0, scenario.t_end),
        cfg=cfg,
        terminal=terminal,
        domain_error=CollisionError,
    )


@dataclass
class RingSeries:
    """Uniformly sampled fleet series on the ring.

    positions are wrapped into [0, L); velocities are clamped at zero
    (braking to standstill can undershoot zero by roughly the solver
    tolerance in the raw trajectory). Arrays are (n_samples, n_vehicles).
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    ring_length: float

    @property
    def n_vehicles(self) -> int:
        return self.positions.shape[1]

    def leader_index(self) -> np.ndarray:
        n = self.n_vehicles
        return (np.arange(n) - 1) % n

    def gaps(self) -> np.ndarray:
        """Per-sample circular gap to each vehicle's leader."""
        pos = self.positions
        return (pos[:, self.leader_index()] - pos) % self.ring_length

    def window(self, t_from: float = -np.inf, t_to: float = np.inf) -> "RingSeries":
        """Sub-series with t_from <= t <= t_to."""
        m = (self.times >= t_from) & (self.times <= t_to)
        return RingSeries(
            self.times[m], self.positions[m], self.velocities[m], self.ring_length
        )


def sample(traj: integrators.Trajectory, scenario: RingScenario) -> RingSeries:
    """Resample a trajectory at the scenario rate into a RingSeries."""
    times, states = integrators.resample(traj, scenario.sample_hz)
    return RingSeries(
        times=times,
        positions=states[:, 0::2] % scenario.ring_length,
        velocities=np.maximum(states[:, 1::2], 0.0),
        ring_length=scenario.ring_length,
    )


def equilibrium_scenario(preset: str = "idm", seed: int = 1) -> RingScenario:
    """Preset variant started exactly on the uniform flow manifold.

    The nominal speed is set to the IDM equilibrium speed for the uniform
    spacing and the perturbation is disabled.
    """
    base = build_uniform_scenario(preset, seed=seed)
    idm = next(p for p in base.controllers if isinstance(p, IdmParams))
    v_eq = idm_equilibrium_speed(base.ring_length / base.n_vehicles, idm)
    return replace(base, v_init=v_eq, perturb_amp=0.0)
