"""Car-following control laws.

Two controllers are implemented as pure, stateless functions: the
Intelligent Driver Model (IDM), which maps (gap, speed, approach rate) to
an acceleration, and the FollowerStopper speed-command law together with
the first-order tracking rule that turns a commanded speed into an
acceleration.

Sign conventions differ between the two laws and are documented on each
function; mapping a fleet's leader/follower speeds onto these arguments is
the job of :mod:`ringsim.ring`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

__all__ = [
    "CollisionError",
    "IdmParams",
    "FsParams",
    "FsRegion",
    "idm_desired_gap",
    "idm_accel",
    "idm_equilibrium_speed",
    "fs_boundary",
    "fs_region",
    "fs_command",
    "fs_accel",
]


class CollisionError(ValueError):
    """A controller was evaluated at a nonpositive gap (touching vehicles)."""

    def __init__(self, message: str, vehicle: int | None = None):
        super().__init__(message)
        self.vehicle = vehicle


@dataclass(frozen=True)
class IdmParams:
    """IDM coefficients.

    a : maximum acceleration (m/s^2)
    v0 : desired free-road speed (m/s)
    delta : free-road exponent (dimensionless)
    s0 : standstill gap (m)
    T : desired time gap (s)
    b : comfortable deceleration, given as a positive number (m/s^2)
    """

    a: float = 0.73
    v0: float = 33.33
    delta: float = 4.0
    s0: float = 2.0
    T: float = 1.6
    b: float = 1.67

    def __post_init__(self):
        for name in ("a", "v0", "delta", "s0", "b"):
            if not getattr(self, name) > 0:
                raise ValueError(f"IdmParams.{name} must be positive")
        if self.T < 0:
            raise ValueError("IdmParams.T must be nonnegative")


# Range of approach rates over which switching-boundary ordering is checked
# at construction time. Covers closing speeds beyond any reachable state of
# the simulated fleets.
_FS_DV_CHECK_GRID = np.linspace(-40.0, 0.0, 1000)


@dataclass(frozen=True)
class FsParams:
    """FollowerStopper coefficients.

    r : desired free-road speed commanded in the outermost region (m/s)
    omega : quiescent offsets of the three safety envelopes, strictly
        increasing (m)
    alpha : decelerations shaping the quadratic part of each envelope,
        all positive (m/s^2)
    k_track : gain of the first-order speed tracking law (1/s)

    Construction verifies not only omega ordering but that the full
    switching boundaries satisfy d1 < d2 < d3 across the closing-speed
    operating range; the quadratic terms scale with 1/(2*alpha_j), so omega
    ordering alone does not guarantee it.
    """

    r: float = 4.75
    omega: tuple[float, float, float] = (2.25, 3.0, 4.5)
    alpha: tuple[float, float, float] = (1.0, 0.7, 0.5)
    k_track: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(float(w) for w in self.omega))
        object.__setattr__(self, "alpha", tuple(float(g) for g in self.alpha))
        if len(self.omega) != 3 or len(self.alpha) != 3:
            raise ValueError("FsParams.omega and FsParams.alpha need exactly 3 entries")
        if not self.r > 0:
            raise ValueError("FsParams.r must be positive")
        if not self.k_track > 0:
            raise ValueError("FsParams.k_track must be positive")
        if not (0 < self.omega[0] < self.omega[1] < self.omega[2]):
            raise ValueError("FsParams.omega must be strictly increasing and positive")
        if any(g <= 0 for g in self.alpha):
            raise ValueError("FsParams.alpha must all be positive")
        q = np.minimum(0.0, _FS_DV_CHECK_GRID) ** 2 / 2.0
        d1 = self.omega[0] + q / self.alpha[0]
        d2 = self.omega[1] + q / self.alpha[1]
        d3 = self.omega[2] + q / self.alpha[2]
        bad = np.nonzero(~((d1 < d2) & (d2 < d3)))[0]
        if bad.size:
            dv = _FS_DV_CHECK_GRID[bad[0]]
            raise ValueError(
                f"FsParams switching boundaries lose their ordering at dv={dv:.3f} m/s"
            )


def idm_desired_gap(v: float, dv: float, p: IdmParams) -> float:
    """Dynamically desired gap s* = s0 + v*T + v*dv / (2*sqrt(a*b)).

    ``dv`` is the approach rate with the convention dv = v_follower -
    v_leader, so closing in on the leader enlarges the desired gap. The
    value is returned unclamped and may fall below s0 (or 0) when the gap
    is opening fast.
    """
    return p.s0 + v * p.T + v * dv / (2.0 * math.sqrt(p.a * p.b))


def idm_accel(s: float, v: float, dv: float, p: IdmParams) -> float:
    """IDM acceleration a*[1 - (v/v0)^delta - (s*/s)^2].

    s : gap to the leader (m), must be positive
    v : own speed (m/s)
    dv : approach rate, v_follower - v_leader (m/s)

    Unbounded below; strong braking is allowed. Raises CollisionError for a
    nonpositive gap, which is a collision state rather than a model input.
    """
    if s <= 0:
        raise CollisionError(f"nonpositive gap s={s!r} in IDM evaluation")
    sstar = idm_desired_gap(v, dv, p)
    return p.a * (1.0 - (v / p.v0) ** p.delta - (sstar / s) ** 2)


def idm_equilibrium_speed(s: float, p: IdmParams, tol: float = 1e-12) -> float:
    """Speed at which idm_accel(s, v, 0) vanishes, by bisection.

    For s > s0 there is exactly one such speed in (0, v0) because the
    acceleration is strictly decreasing in v at dv=0. For s <= s0 no
    positive equilibrium exists and 0 is returned.
    """
    if s <= p.s0:
        return 0.0
    lo, hi = 0.0, p.v0
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f = idm_accel(s, mid, 0.0, p)
        if abs(f) < tol:
            break
        if f > 0:
            lo = mid
        else:
            hi = mid
    return mid


def fs_boundary(j: int, dv: float, p: FsParams) -> float:
    """Switching boundary d_j = omega_j + min(0, dv)^2 / (2*alpha_j).

    ``dv`` here is the approach rate with the convention dv = v_leader -
    v_follower, so closing is negative and inflates the boundary; opening
    (dv >= 0) leaves it at omega_j.
    """
    if j not in (1, 2, 3):
        raise ValueError(f"boundary index must be 1, 2 or 3, got {j}")
    closing = min(0.0, dv)
    return p.omega[j - 1] + closing * closing / (2.0 * p.alpha[j - 1])


class FsRegion(IntEnum):
    """Gap regions of the FollowerStopper law, nearest first."""

    STOP = 1    # command zero speed
    FOLLOW = 2  # ramp from zero up to the (clamped) leader speed
    BLEND = 3   # ramp from leader speed up to the free-road speed
    FREE = 4    # command the free-road speed r


def fs_region(dx: float, dv: float, p: FsParams) -> FsRegion:
    """Classify a (gap, approach rate) pair into one of the four regions.

    Bands are half-open exactly as defined by the switching boundaries:
    STOP for dx <= d1, FOLLOW for d1 < dx <= d2, BLEND for d2 < dx <= d3,
    FREE beyond d3.
    """
    if dx <= 0:
        raise CollisionError(f"nonpositive gap dx={dx!r} in FollowerStopper evaluation")
    if dx <= fs_boundary(1, dv, p):
        return FsRegion.STOP
    if dx <= fs_boundary(2, dv, p):
        return FsRegion.FOLLOW
    if dx <= fs_boundary(3, dv, p):
        return FsRegion.BLEND
    return FsRegion.FREE


def fs_command(dx: float, dv: float, v_lead: float, p: FsParams) -> float:
    """Commanded speed of the FollowerStopper law; always within [0, r].

    The leader speed enters clamped to [0, r]. The command is continuous
    in dx: zero up to d1, ramping to the clamped leader speed at d2,
    ramping on to r at d3, and r beyond.
    """
    region = fs_region(dx, dv, p)
    v_hat = min(max(v_lead, 0.0), p.r)
    if region is FsRegion.STOP:
        return 0.0
    if region is FsRegion.FOLLOW:
        d1 = fs_boundary(1, dv, p)
        d2 = fs_boundary(2, dv, p)
        return v_hat * (dx - d1) / (d2 - d1)
    if region is FsRegion.BLEND:
        d2 = fs_boundary(2, dv, p)
        d3 = fs_boundary(3, dv, p)
        return v_hat + (p.r - v_hat) * (dx - d2) / (d3 - d2)
    return p.r


def fs_accel(v: float, v_cmd: float, p: FsParams) -> float:
    """First-order speed tracking: dv/dt = k_track * (v_cmd - v)."""
    return p.k_track * (v_cmd - v)
