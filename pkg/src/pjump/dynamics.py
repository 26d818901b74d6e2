"""The perturbed jumping oscillator in normalized Hamiltonian form.

State ``(x, y)`` with ``y = -phi_p(x'/omega)``:

    x' = -omega phi_q(y)
    y' = omega [a1 phi_p(x+) - b1 phi_p(x-)] + omega^(1-p) [f(x) - e(t)]

Action-angle coordinates scale the auxiliary orbit,
``x = (d r)^(1/p) v(theta)``, ``y = (d r)^(1/q) u(theta)``, and the unperturbed
Hamiltonian becomes ``omega r``.  Note the orientation: the map
``(theta, r) -> (x, y)`` has Jacobian +1, and the flow above runs the
auxiliary orbit backwards, so along solutions ``theta`` *decreases* at rate
``omega`` when ``f = e = 0``.  Angular advances elsewhere in the package are
measured along the motion, i.e. as decreases of ``theta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import _integrator
from .errors import DomainError, IntegrationError, InversionError, ParameterError
from .forcing import ForcingSpec
from .jumping import JumpingParams, aux_orbit, aux_v
from .ptrig import _out, quarter_phase

__all__ = [
    "PhaseState",
    "ActionAngle",
    "Orbit",
    "PoincareSection",
    "vector_field",
    "integrate",
    "poincare_map",
    "to_action_angle",
    "from_action_angle",
    "unperturbed_energy",
    "hamiltonian_H",
    "hamiltonian_h",
    "solve_r_of_h",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-12
_MAX_STEPS = 50_000_000


@dataclass(frozen=True)
class PhaseState:
    x: float
    y: float
    t: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.t)):
            raise DomainError("phase state must be finite")


@dataclass(frozen=True)
class ActionAngle:
    """Action ``r > 0`` and angle ``theta`` in ``[0, 2 pi_p)``; fields may be arrays."""

    r: float
    theta: float


@dataclass(frozen=True)
class Orbit:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    peaks: np.ndarray  # max of |x| + |x'| over accepted steps in (t[i-1], t[i]]
    n_steps: int


@dataclass(frozen=True)
class PoincareSection:
    """Iterates of the period-``2 pi_p`` stroboscopic map, index 0 is the start."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    peaks: np.ndarray

    def __len__(self):
        return len(self.t)


def _pack(params: JumpingParams, forcing: ForcingSpec):
    p = params.p
    par = np.array([params.omega, params.a1, params.b1, p, params.q,
                    forcing.beta, forcing.gamma, params.omega ** (1.0 - p),
                    math.pi / params.pi_p])
    return (par,) + forcing.arrays()


def vector_field(params: JumpingParams, forcing: ForcingSpec, state: PhaseState):
    """Right-hand side ``(dx/dt, dy/dt)`` at ``state``."""
    par, ks, cs, phs = _pack(params, forcing)
    dx, dy = _integrator.field(float(state.t), float(state.x), float(state.y), par, ks, cs, phs)
    return float(dx), float(dy)


def integrate(params: JumpingParams, forcing: ForcingSpec, state0: PhaseState, t1: float,
              tol: float = DEFAULT_TOL, samples=None, max_steps: int = _MAX_STEPS) -> Orbit:
    """Adaptive 8th-order integration from ``state0`` to ``t1``.

    ``samples`` are output times in ``(state0.t, t1]``; ``t1`` is always
    included.  Raises :class:`IntegrationError` on step-size underflow.
    """
    if not tol > 0:
        raise ParameterError("tol must be positive")
    t0 = float(state0.t)
    if not t1 > t0:
        raise ParameterError("t1 must be after the initial time")
    ts = np.array([t1], dtype=float) if samples is None else np.asarray(samples, dtype=float)
    if ts.size and (np.any(np.diff(ts) <= 0) or ts[0] <= t0 or ts[-1] > t1):
        raise ParameterError("samples must be strictly increasing inside (t0, t1]")
    if ts.size == 0 or ts[-1] < t1:
        ts = np.append(ts, float(t1))
    par, ks, cs, phs = _pack(params, forcing)
    xs, ys, peaks, n_steps, status, t_fail = _integrator.drive(
        float(state0.x), float(state0.y), t0, ts, par, ks, cs, phs, float(tol), float(tol), int(max_steps))
    if status == _integrator.STATUS_UNDERFLOW:
        raise IntegrationError("step size underflow", t_fail)
    if status == _integrator.STATUS_BUDGET:
        raise IntegrationError("step budget exhausted", t_fail)
    return Orbit(t=ts, x=xs, y=ys, peaks=peaks, n_steps=int(n_steps))


def poincare_map(params: JumpingParams, forcing: ForcingSpec, state0: PhaseState, n: int,
                 tol: float = DEFAULT_TOL) -> PoincareSection:
    """``n`` iterates of the time-``2 pi_p`` map, recorded in ``(x, y)`` and ``(r, theta)``."""
    if int(n) != n or n < 1:
        raise ParameterError("need at least one iterate")
    T = params.period
    t0 = float(state0.t)
    times = t0 + T * np.arange(1, int(n) + 1)
    orb = integrate(params, forcing, state0, float(times[-1]), tol=tol, samples=times)
    x = np.concatenate([[state0.x], orb.x])
    y = np.concatenate([[state0.y], orb.y])
    aa = to_action_angle(params, x, y)
    peaks = np.concatenate([[np.abs(state0.x) + params.omega * np.abs(state0.y) ** (params.q - 1.0)], orb.peaks])
    return PoincareSection(t=np.concatenate([[t0], times]), x=x, y=y,
                           r=np.asarray(aa.r), theta=np.asarray(aa.theta), peaks=peaks)


def unperturbed_energy(params: JumpingParams, x, y):
    """``|y|^q/q + (a1|x+|^p + b1|x-|^p)/p``; equals the action ``r`` of the chart."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p, q = params.p, params.q
    stiff = np.where(x >= 0, params.a1, params.b1)
    return _out(np.abs(y) ** q / q + stiff * np.abs(x) ** p / p)


def to_action_angle(params: JumpingParams, x, y) -> ActionAngle:
    """Inverse chart ``(x, y) -> (r, theta)``, closed form (no root finding)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("non-finite phase point")
    r = np.asarray(unperturbed_energy(params, x, y))
    if np.any(r <= 0):
        raise DomainError("the action-angle chart excludes the origin")
    p, q = params.p, params.q
    P = params.pi_p
    A = params.a1 ** (1.0 / p)
    B = params.b1 ** (1.0 / p)
    X = x / (params.d * r) ** (1.0 / p)
    U = y / (params.d * r) ** (1.0 / q)
    dv = np.abs(U) ** (q - 1.0)  # |v'|
    first = X >= 0
    c = np.where(first, X, -X * B / A)
    s, cs = quarter_phase(p, c, dv / A)
    s = np.asarray(s)
    cs = np.asarray(cs)
    t1 = 0.5 * P / A
    theta_neg = np.where(s <= cs, t1 + s / B, P - cs / B)
    theta = np.where(first, cs / A, theta_neg)
    theta = np.where(U > 0, 2.0 * P - theta, theta)
    theta = np.where(theta >= 2.0 * P, theta - 2.0 * P, theta)
    return ActionAngle(r=_out(r), theta=_out(theta))


def from_action_angle(params: JumpingParams, aa: ActionAngle):
    """Chart ``(r, theta) -> (x, y)``."""
    r = np.asarray(aa.r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("action must be positive")
    v, u = aux_orbit(params, aa.theta)
    dr = params.d * r
    return _out(dr ** (1.0 / params.p) * v), _out(dr ** (1.0 / params.q) * u)


def hamiltonian_H(params: JumpingParams, forcing: ForcingSpec, x, y, t):
    """``omega r0(x, y) + omega^(1-p) [F(x) - e(t) x]`` with ``r0`` the unperturbed energy."""
    w = params.omega
    e = forcing.e(t, params.pi_p)
    return _out(w * np.asarray(unperturbed_energy(params, x, y))
                + w ** (1.0 - params.p) * (np.asarray(forcing.big_f(x)) - e * np.asarray(x)))


def _h_given_v(params, forcing, r, v, e):
    x = (params.d * r) ** (1.0 / params.p) * v
    w = params.omega
    return w * r + w ** (1.0 - params.p) * (forcing.big_f(x) - x * e)


def hamiltonian_h(params: JumpingParams, forcing: ForcingSpec, aa: ActionAngle, t):
    """Hamiltonian in action-angle variables, ``omega r + h1(r, theta, t)``."""
    r = np.asarray(aa.r, dtype=float)
    v = np.asarray(aux_v(params, aa.theta))
    return _out(_h_given_v(params, forcing, r, v, forcing.e(t, params.pi_p)))


def solve_r_of_h(params: JumpingParams, forcing: ForcingSpec, h: float, t: float, theta: float) -> float:
    """Solve ``hamiltonian_h(r, theta, t) = h`` for ``r``.

    Starts from the bracket ``[h/(2 omega), 2h/omega]`` and widens it
    geometrically.  Raises :class:`InversionError` if no sign change is found
    or ``dh/dr`` is not positive at the root.
    """
    h = float(h)
    if not (math.isfinite(h) and h > 0):
        raise InversionError("h must be positive and finite")
    w = params.omega
    v = float(aux_v(params, theta))
    e = float(forcing.e(t, params.pi_p))

    def resid(r):
        return _h_given_v(params, forcing, r, v, e) - h

    lo, hi = h / (2.0 * w), 2.0 * h / w
    for _ in range(60):
        if resid(lo) < 0:
            break
        lo *= 0.5
    else:
        raise InversionError(f"no lower bracket for h={h!r}")
    for _ in range(60):
        if resid(hi) > 0:
            break
        hi *= 2.0
    else:
        raise InversionError(f"no upper bracket for h={h!r}")
    r = optimize.brentq(resid, lo, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=200)
    dr = 1e-7 * r
    slope = (resid(r + dr) - resid(r - dr)) / (2 * dr)
    if not slope > 0:
        raise InversionError(f"h is not increasing in r at the root (h={h!r}); h too small")
    return float(r)
