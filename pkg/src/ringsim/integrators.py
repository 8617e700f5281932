"""Adaptive numerical integration engines.

An embedded Dormand-Prince 5(4) Runge-Kutta stepper with PI step-size
control and a 4th-order dense-output interpolant drives both entry points:
:func:`integrate_ode` for plain initial-value problems and
:func:`integrate_dde` for systems with a single constant lag, solved by the
method of steps (each lag-length interval is integrated with delayed
lookups served from the history function or from the dense interpolant of
already-completed steps).

:func:`resample` converts an adaptive-step trajectory to a uniform-rate
series by linear interpolation between stored samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "IntegratorConfig",
    "IntegrationError",
    "Trajectory",
    "integrate_ode",
    "integrate_dde",
    "resample",
]

# Dormand-Prince 5(4) tableau. B propagates the 5th-order solution (FSAL:
# the last stage equals the derivative at the accepted point), E = B - Bhat
# gives the embedded error weights.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
# Continuous-extension coefficients: y(t0 + theta*h) = y0 + h * (K^T P) @
# [theta, theta^2, theta^3, theta^4]; rows sum to B so the interpolant hits
# the accepted endpoint.
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_BETA = 0.04        # PI controller: h' = h * safety * err^-(0.2-0.75b) * err_prev^-b
_ORDER_EXP = 0.2 - 0.75 * _BETA


@dataclass(frozen=True)
class IntegratorConfig:
    """Solver controls.

    rel_tol, abs_tol : per-step error bound, enforced componentwise as
        |err_i| <= abs_tol + rel_tol * |y_i|
    h_init : initial step size; None selects one automatically
    h_max : step-size cap (also capped at the lag for delay runs)
    max_steps : budget of attempted (accepted plus rejected) steps
    """

    rel_tol: float = 1e-3
    abs_tol: float = 1e-6
    h_init: float | None = None
    h_max: float = 0.1
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.h_max > 0:
            raise ValueError("h_max must be positive")
        if self.h_init is not None and not self.h_init > 0:
            raise ValueError("h_init must be positive when given")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


class IntegrationError(RuntimeError):
    """Integration could not be completed; carries the time reached."""

    def __init__(self, message: str, t_reached: float):
        super().__init__(f"{message} (at t={t_reached:.6g})")
        self.t_reached = t_reached


class Trajectory:
    """Accepted-step samples plus dense interpolation coefficients.

    times, states hold every accepted step endpoint (including the initial
    state). ``evaluate`` interpolates anywhere in the covered span and
    returns stored states exactly at stored instants. ``events`` is a list
    of (time, payload) pairs recorded by terminal conditions; ``status`` is
    "completed" for a full span or "terminated" when an event stopped it.
    """

    def __init__(self, times, states, step_coeffs, step_sizes, events, status):
        self.times = times
        self.states = states
        self._coeffs = step_coeffs      # (n_steps, dim, 4)
        self._h = step_sizes            # (n_steps,)
        self.events = events
        self.status = status

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def evaluate(self, t: float) -> np.ndarray:
        """Dense-output state at time t within the covered span."""
        times = self.times
        if not times[0] <= t <= times[-1]:
            raise ValueError(
                f"t={t!r} outside the trajectory span [{times[0]!r}, {times[-1]!r}]"
            )
        idx = int(np.searchsorted(times, t, side="left"))
        if idx < len(times) and times[idx] == t:
            return self.states[idx].copy()
        step = idx - 1
        h = self._h[step]
        theta = (t - times[step]) / h
        powers = np.array([theta, theta**2, theta**3, theta**4])
        return self.states[step] + h * (self._coeffs[step] @ powers)

    __call__ = evaluate


class _Builder:
    """Growing storage for accepted steps, readable while integrating.

    Delay integration reads completed steps through ``evaluate`` while new
    ones are still being appended, so lookups are served from the same
    arrays the final Trajectory will own.
    """

    def __init__(self, t0: float, y0: np.ndarray, max_steps: int):
        dim = y0.size
        cap = 512
        self.times = np.empty(cap)
        self.states = np.empty((cap, dim))
        self.coeffs = np.empty((cap, dim, 4))
        self.hs = np.empty(cap)
        self.n = 1
        self.times[0] = t0
        self.states[0] = y0
        self.events: list[tuple[float, object]] = []
        self.attempts = 0
        self.max_steps = max_steps

    def _grow(self):
        self.times = np.concatenate([self.times, np.empty(self.times.size)])
        self.states = np.vstack([self.states, np.empty_like(self.states)])
        self.coeffs = np.concatenate([self.coeffs, np.empty_like(self.coeffs)])
        self.hs = np.concatenate([self.hs, np.empty_like(self.hs)])

    def append(self, t: float, y: np.ndarray, coeff: np.ndarray, h: float):
        if self.n == self.times.size:
            self._grow()
        self.times[self.n] = t
        self.states[self.n] = y
        self.coeffs[self.n - 1] = coeff
        self.hs[self.n - 1] = h
        self.n += 1

    @property
    def t_last(self) -> float:
        return float(self.times[self.n - 1])

    @property
    def y_last(self) -> np.ndarray:
        return self.states[self.n - 1]

    def evaluate(self, t: float) -> np.ndarray:
        # Causality guard: delayed lookups must never target uncomputed
        # solution. The method-of-steps interval layout makes this
        # impossible; failing here is an internal logic error.
        if t > self.t_last:
            raise AssertionError(f"lookup at t={t!r} beyond computed solution")
        times = self.times[: self.n]
        idx = int(np.searchsorted(times, t, side="left"))
        if idx < self.n and times[idx] == t:
            return self.states[idx].copy()
        step = idx - 1
        h = self.hs[step]
        theta = (t - times[step]) / h
        powers = np.array([theta, theta**2, theta**3, theta**4])
        return self.states[step] + h * (self.coeffs[step] @ powers)

    def finish(self, status: str) -> Trajectory:
        return Trajectory(
            self.times[: self.n].copy(),
            self.states[: self.n].copy(),
            self.coeffs[: self.n - 1].copy(),
            self.hs[: self.n - 1].copy(),
            self.events,
            status,
        )


def _error_norm(err, y0, y1, rel_tol, abs_tol):
    scale = abs_tol + rel_tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.max(np.abs(err) / scale))


def _initial_step(f, t0, y0, f0, rel_tol, abs_tol, h_cap, dom=()):
    """Automatic initial step size from local derivative magnitudes."""
    scale = abs_tol + rel_tol * np.abs(y0)
    d0 = float(np.max(np.abs(y0) / scale))
    d1 = float(np.max(np.abs(f0) / scale))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, h_cap)
    try:
        f1 = f(t0 + h0, y0 + h0 * f0)
        d2 = float(np.max(np.abs(f1 - f0) / scale)) / h0
    except dom:
        d2 = 0.0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, h_cap)


def _advance(f, builder, t_end, cfg, h_cap, terminal, domain_error, h_start):
    """Step from the builder's last state up to t_end.

    Returns (status, h_next): status "reached" when t_end was hit,
    "terminated" when the terminal condition fired or the right-hand side
    kept signalling a domain violation down to a vanishing step.
    """
    dom = domain_error if domain_error is not None else ()
    t = builder.t_last
    y = builder.y_last.copy()
    k = np.empty((7, y.size))
    k[0] = f(t, y)
    h = h_start if h_start is not None else _initial_step(
        f, t, y, k[0], cfg.rel_tol, cfg.abs_tol, h_cap, dom
    )
    h = min(h, h_cap, t_end - t)
    err_prev = 1e-4
    just_rejected = False
    domain_retries = 0

    while t < t_end:
        h = min(h, h_cap, t_end - t)
        h_floor = 16 * np.finfo(float).eps * max(abs(t), abs(t_end))
        if h < h_floor:
            if domain_retries:
                builder.events.append((t, _DomainStop(t)))
                return "terminated", h
            raise IntegrationError(
                "step size underflow; right-hand side too stiff or discontinuous", t
            )
        builder.attempts += 1
        if builder.attempts > builder.max_steps:
            raise IntegrationError("step budget exhausted", t)
        try:
            for i in range(1, 7):
                k[i] = f(t + _C[i] * h, y + h * (_A[i] @ k[:i]))
        except dom as exc:
            h *= 0.5
            domain_retries += 1
            just_rejected = True
            if domain_retries > 200:
                builder.events.append((t, exc))
                return "terminated", h
            continue
        domain_retries = 0
        y1 = y + h * (_B @ k)
        err = _error_norm(h * (_E @ k), y, y1, cfg.rel_tol, cfg.abs_tol)
        if not np.isfinite(err):
            # Overflow or NaN in a stage: treat as a hard rejection.
            h *= _MIN_FACTOR
            just_rejected = True
            continue
        if err > 1.0:
            h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            just_rejected = True
            continue
        # accepted
        coeff = k.T @ _P
        t_new = t + h
        if t_end - t_new < h_floor:
            t_new = t_end
        builder.append(t_new, y1, coeff, h)
        if terminal is not None:
            event = terminal(t_new, y1)
            if event is not None:
                builder.events.append((t_new, event))
                return "terminated", h
        if err == 0.0:
            factor = _MAX_FACTOR
        else:
            factor = _SAFETY * err ** -_ORDER_EXP * err_prev ** _BETA
            factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
        if just_rejected:
            factor = min(1.0, factor)
            just_rejected = False
        err_prev = max(err, 1e-4)
        t = t_new
        y = y1
        k[0] = k[6]  # FSAL
        h *= factor
    return "reached", h


class _DomainStop:
    """Event payload recorded when domain violations force termination."""

    def __init__(self, t: float):
        self.t = t

    def __repr__(self):
        return f"_DomainStop(t={self.t!r})"


def integrate_ode(f, y0, t_span, cfg: IntegratorConfig | None = None,
                  terminal=None, domain_error=None) -> Trajectory:
    """Integrate dy/dt = f(t, y) over t_span with adaptive RK 5(4).

    terminal : optional callable (t, y) -> event payload or None, checked
        at the initial state and after every accepted step; a non-None
        result stops the run with status "terminated".
    domain_error : optional exception type (or tuple) that f may raise for
        states outside its domain; such steps are retried with smaller h
        and, if the violation persists down to a vanishing step, the run
        terminates with the exception recorded as an event.
    """
    cfg = cfg or IntegratorConfig()
    t0, t_end = float(t_span[0]), float(t_span[1])
    if t_end < t0:
        raise ValueError("backward integration is not supported")
    y0 = np.asarray(y0, dtype=float).copy()
    builder = _Builder(t0, y0, cfg.max_steps)
    if terminal is not None:
        event = terminal(t0, y0)
        if event is not None:
            builder.events.append((t0, event))
            return builder.finish("terminated")
    if t_end == t0:
        return builder.finish("completed")
    status, _ = _advance(
        f, builder, t_end, cfg, cfg.h_max, terminal, domain_error, cfg.h_init
    )
    return builder.finish("completed" if status == "reached" else "terminated")


def integrate_dde(f, history, tau: float, t_span,
                  cfg: IntegratorConfig | None = None,
                  terminal=None, domain_error=None) -> Trajectory:
    """Integrate dy/dt = f(t, y, y(t - tau)) by the method of steps.

    history : callable t -> state for t <= t0; the initial state is
        history(t0). The lag tau must be positive.

    Integration proceeds one lag-length interval at a time, hard-stopping
    at every breakpoint t0 + k*tau (where the solution's derivative may be
    discontinuous). Steps never cross the current interval boundary, so a
    delayed lookup always lands in history or in already-completed steps.
    """
    if not tau > 0:
        raise ValueError("tau must be positive; use integrate_ode when there is no lag")
    cfg = cfg or IntegratorConfig()
    t0, t_end = float(t_span[0]), float(t_span[1])
    if t_end < t0:
        raise ValueError("backward integration is not supported")
    y0 = np.asarray(history(t0), dtype=float).copy()
    builder = _Builder(t0, y0, cfg.max_steps)
    if terminal is not None:
        event = terminal(t0, y0)
        if event is not None:
            builder.events.append((t0, event))
            return builder.finish("terminated")
    if t_end == t0:
        return builder.finish("completed")

    def past(s):
        if s <= t0:
            return np.asarray(history(s), dtype=float)
        return builder.evaluate(s)

    def g(t, y):
        return f(t, y, past(t - tau))

    h_cap = min(cfg.h_max, tau)
    h_next = cfg.h_init
    k = 1
    while builder.t_last < t_end:
        stop = min(t0 + k * tau, t_end)
        if stop > builder.t_last:
            status, h_next = _advance(
                g, builder, stop, cfg, h_cap, terminal, domain_error, h_next
            )
            if status == "terminated":
                return builder.finish("terminated")
        k += 1
    return builder.finish("completed")


def resample(traj: Trajectory, hz: float) -> tuple[np.ndarray, np.ndarray]:
    """Uniform-rate series by linear interpolation between stored samples.

    The grid starts at the trajectory's first instant and steps by 1/hz;
    the final grid point never exceeds the trajectory end. Returns
    (times, states) with states of shape (n_samples, dim).
    """
    if not hz > 0:
        raise ValueError("sampling rate must be positive")
    times = traj.times
    if times.size == 0:
        raise ValueError("cannot resample an empty trajectory")
    t0, t1 = float(times[0]), float(times[-1])
    n = int(math.floor((t1 - t0) * hz + 1e-9)) + 1
    grid = t0 + np.arange(n) / hz
    if n > 1:
        grid[-1] = min(grid[-1], t1)
    dim = traj.states.shape[1]
    out = np.empty((n, dim))
    for j in range(dim):
        out[:, j] = np.interp(grid, times, traj.states[:, j])
    return grid, out
