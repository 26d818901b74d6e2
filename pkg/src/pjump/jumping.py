"""Jumping-nonlinearity coefficients and the distinguished auxiliary orbit.

The orbit ``(v, u)`` solves ``v' = phi_q(u), u' = -a1 phi_p(v+) + b1 phi_p(v-)``
through ``((p-1)^(1/p), 0)``.  It spends ``pi_p / a1^(1/p)`` in ``v > 0`` and
``pi_p / b1^(1/p)`` in ``v < 0``; the normalization ``a1^(-1/p) + b1^(-1/p) = 2``
makes the period exactly ``2 pi_p``.  On ``[0, pi_p]`` the orbit descends
(``u <= 0``) and ``[pi_p, 2 pi_p]`` is its mirror image.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import ptrig
from .errors import ParameterError

__all__ = [
    "JumpingParams",
    "derive_params",
    "aux_orbit",
    "aux_v",
    "aux_u",
    "aux_energy",
    "aux_integrals",
    "aux_integrals_quad",
    "aux_zeros",
]


@dataclass(frozen=True)
class JumpingParams:
    a: float
    b: float
    p: float
    q: float
    omega: float
    a1: float
    b1: float
    d: float

    @property
    def pi_p(self) -> float:
        return ptrig.pi_p(self.p)

    @property
    def period(self) -> float:
        return 2.0 * ptrig.pi_p(self.p)

    @property
    def t_junction(self) -> float:
        """First zero of ``v``: ``pi_p / (2 a1^(1/p))``."""
        return 0.5 * ptrig.pi_p(self.p) / self.a1 ** (1.0 / self.p)


def derive_params(a: float, b: float, p: float) -> JumpingParams:
    """Normalize ``(a, b)`` into ``omega, a1, b1, d``.

    ``omega = 2 / (a^(-1/p) + b^(-1/p))``, ``a = omega^p a1``, ``b = omega^p b1``
    and ``d = q / a1``.
    """
    a, b, p = float(a), float(b), float(p)
    if not (math.isfinite(a) and math.isfinite(b)) or a <= 0 or b <= 0:
        raise ParameterError(f"a and b must be positive, got a={a!r}, b={b!r}")
    if a == b:
        raise ParameterError("a == b is excluded (no jump in stiffness)")
    ex = ptrig.PLaplaceExponents.from_p(p)
    omega = 2.0 / (a ** (-1.0 / p) + b ** (-1.0 / p))
    a1 = a / omega ** p
    b1 = b / omega ** p
    return JumpingParams(a=a, b=b, p=p, q=ex.q, omega=omega, a1=a1, b1=b1, d=ex.q / a1)


def _orbit_phase(params, t):
    """Fold ``t`` onto the descending half; return quarter data plus signs."""
    p = params.p
    P = params.pi_p
    half = 0.5 * P
    A = params.a1 ** (1.0 / p)
    B = params.b1 ** (1.0 / p)
    t1 = half / A
    tau = np.mod(np.asarray(t, dtype=float), 2.0 * P)
    mirror = tau > P
    tau = np.where(mirror, 2.0 * P - tau, tau)
    first = tau <= t1
    # first branch: time from the crest sigma = A*tau, v = C(half - sigma)
    # second branch: v = -(A/B) C(B*(tau - t1)), with B*(P - t1) = half
    s = np.where(first, half - A * tau, B * (tau - t1))
    cs = np.where(first, A * tau, B * (P - tau))
    return np.maximum(s, 0.0), np.maximum(cs, 0.0), first, mirror, A, B


def aux_orbit(params: JumpingParams, t):
    """Return ``(v(t), u(t))`` with ``u = phi_p(v')``."""
    p = params.p
    s, cs, first, mirror, A, B = _orbit_phase(params, t)
    C, D = ptrig._quarter(p, s, cs)
    v = np.where(first, C, -(A / B) * C)
    dv = -A * D
    u = np.sign(dv) * np.abs(dv) ** (p - 1.0)
    u = np.where(mirror, -u, u)
    return ptrig._out(v), ptrig._out(u)


def aux_v(params: JumpingParams, t):
    return aux_orbit(params, t)[0]


def aux_u(params: JumpingParams, t):
    return aux_orbit(params, t)[1]


def aux_energy(params: JumpingParams, t):
    """``|u|^q/q + (a1|v+|^p + b1|v-|^p)/p`` along the orbit; identically ``a1/q``."""
    v, u = aux_orbit(params, t)
    v = np.asarray(v)
    u = np.asarray(u)
    p, q = params.p, params.q
    pot = np.where(v >= 0, params.a1, params.b1) * np.abs(v) ** p
    return ptrig._out(np.abs(u) ** q / q + pot / p)


def aux_zeros(params: JumpingParams):
    """The zeros of ``v`` in ``[0, 2 pi_p)``: the singular angles of the action-angle chart."""
    t1 = params.t_junction
    return (t1, params.period - t1)


def aux_integrals(params: JumpingParams):
    """Closed forms of the integrals of ``v`` over its positive quarter and its negative half-lobe.

    ``int_0^{t1} v = I_p / a1^(1/p)`` and ``int_{t1}^{pi_p} v = -a1^(1/p) I_p / b1^(2/p)``.
    """
    p = params.p
    ip = ptrig.ip_constant(p)
    return ip / params.a1 ** (1.0 / p), -params.a1 ** (1.0 / p) * ip / params.b1 ** (2.0 / p)


def aux_integrals_quad(params: JumpingParams):
    """The same two integrals by adaptive Gauss-Kronrod quadrature of :func:`aux_v`."""
    t1 = params.t_junction
    kw = dict(epsabs=1e-13, epsrel=1e-12, limit=200)
    first, _ = integrate.quad(lambda t: aux_v(params, t), 0.0, t1, **kw)
    second, _ = integrate.quad(lambda t: aux_v(params, t), t1, params.pi_p, **kw)
    return first, second
