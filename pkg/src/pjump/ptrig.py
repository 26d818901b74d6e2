"""Generalized p-trigonometric functions.

``sin_p`` solves ``(phi_p(C'))' + phi_p(C) = 0`` with ``C(0) = 0, C'(0) = 1``.
On the first quarter ``[0, pi_p/2]`` it is the inverse of

    A(C) = int_0^C (1 - s^p/(p-1))^(-1/p) ds,

and the substitution ``s^p = (p-1) z`` turns ``A`` into an incomplete beta
integral.  We evaluate ``sin_p`` by Newton iteration on that integral.  Close
to the crest ``C' -> 0`` and the inversion in ``C`` degenerates, so there the
unknown is switched to the conjugate variable ``phi_p(C')``, whose elapsed-time
integral is again an incomplete beta integral with the parameters swapped.
Both ``C`` and ``C'`` are therefore recovered with full relative accuracy on
the whole period.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError

__all__ = [
    "PLaplaceExponents",
    "SinpTable",
    "phi",
    "phi_inv",
    "pi_p",
    "sinp",
    "sinp_deriv",
    "sinp_pair",
    "arcsin_p",
    "quarter_phase",
    "ip_constant",
    "sinp_moment",
    "half_period_quad",
    "arcsin_p_quad",
    "ip_quad",
]

_NEWTON_MAXITER = 8


def _check_exponent(p):
    p = float(p)
    if not math.isfinite(p) or p <= 1.0:
        raise DomainError(f"exponent p must be finite and > 1, got {p!r}")
    return p


def _as_finite(x, name="argument"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


@dataclass(frozen=True)
class PLaplaceExponents:
    """Exponent ``p >= 2`` and its conjugate ``q = p/(p-1)``."""

    p: float
    q: float

    def __post_init__(self):
        if not math.isfinite(self.p) or self.p < 2.0:
            raise DomainError(f"p must be >= 2, got {self.p!r}")
        if abs(1.0 / self.p + 1.0 / self.q - 1.0) > 1e-14:
            raise DomainError("q is not the conjugate exponent of p")

    @classmethod
    def from_p(cls, p: float) -> "PLaplaceExponents":
        p = float(p)
        if not math.isfinite(p) or p < 2.0:
            raise DomainError(f"p must be >= 2, got {p!r}")
        return cls(p, p / (p - 1.0))


def phi(p, s):
    """The odd power map ``|s|^(p-2) s``."""
    p = _check_exponent(p)
    s = _as_finite(s, "s")
    return _out(np.sign(s) * np.abs(s) ** (p - 1.0))


def phi_inv(p, s):
    """Inverse of :func:`phi`; coincides with ``phi`` of the conjugate exponent."""
    p = _check_exponent(p)
    s = _as_finite(s, "s")
    return _out(np.sign(s) * np.abs(s) ** (1.0 / (p - 1.0)))


def pi_p(p) -> float:
    """Half period of ``sin_p``: ``2 pi (p-1)^(1/p) / (p sin(pi/p))``."""
    p = _check_exponent(p)
    return 2.0 * math.pi * (p - 1.0) ** (1.0 / p) / (p * math.sin(math.pi / p))


def _quarter(p, s, cs):
    """``(C(s), C'(s))`` for ``s`` in ``[0, pi_p/2]``; ``cs = pi_p/2 - s`` given separately."""
    s = np.asarray(s, dtype=float)
    cs = np.asarray(cs, dtype=float)
    a = 1.0 / p
    b = 1.0 - a
    q = 1.0 / b
    half = 0.5 * pi_p(p)
    cmax = (p - 1.0) ** a
    C = np.empty(np.broadcast(s, cs).shape)
    D = np.empty_like(C)
    s, cs = np.broadcast_arrays(s, cs)
    low = s <= cs

    if np.any(low):
        # unknown C, target A(C) = s
        tgt = s[low]
        c = ((p - 1.0) * special.betaincinv(a, b, np.clip(tgt / half, 0.0, 1.0))) ** a
        for _ in range(_NEWTON_MAXITER):
            x = np.minimum(c ** p / (p - 1.0), 1.0)
            step = (half * special.betainc(a, b, x) - tgt) * (1.0 - x) ** a
            c = np.clip(c - step, 0.0, cmax)
            if np.all(np.abs(step) <= 1e-16 * cmax):
                break
        C[low] = c
        D[low] = (1.0 - np.minimum(c ** p / (p - 1.0), 1.0)) ** a

    high = ~low
    if np.any(high):
        # unknown z = phi_p(C'), target elapsed time from the crest = cs
        tgt = cs[high]
        m = special.betaincinv(b, a, np.clip(tgt / half, 0.0, 1.0))
        z = np.clip(m, 0.0, 1.0) ** b
        for _ in range(_NEWTON_MAXITER):
            zq = np.minimum(z ** q, 1.0)
            step = (half * special.betainc(b, a, zq) - tgt) * ((p - 1.0) * (1.0 - zq)) ** b
            z = np.clip(z - step, 0.0, 1.0)
            if np.all(np.abs(step) <= 1e-16):
                break
        zq = np.minimum(z ** q, 1.0)
        C[high] = ((p - 1.0) * (1.0 - zq)) ** a
        D[high] = z ** (1.0 / (p - 1.0))
    return C, D


def _reduce(p, t):
    """Fold ``t`` onto the first quarter.

    Returns ``(s, cs, sign_C, sign_D)`` with ``sin_p(t) = sign_C * C(s)`` and
    ``sin_p'(t) = sign_D * C'(s)``.
    """
    P = pi_p(p)
    half = 0.5 * P
    tau = np.mod(t, 2.0 * P)
    k = np.clip(np.floor(tau / half), 0, 3).astype(int)
    s = np.select([k == 0, k == 1, k == 2], [tau, P - tau, tau - P], 2.0 * P - tau)
    cs = np.select([k == 0, k == 1, k == 2], [half - tau, tau - half, 3.0 * half - tau], tau - 3.0 * half)
    sign_c = np.where(k <= 1, 1.0, -1.0)
    sign_d = np.where((k == 0) | (k == 3), 1.0, -1.0)
    return np.maximum(s, 0.0), np.maximum(cs, 0.0), sign_c, sign_d


def sinp_pair(p, t):
    """Return ``(sin_p(t), sin_p'(t))`` on the full 2*pi_p-periodic extension."""
    p = _check_exponent(p)
    t = _as_finite(t, "t")
    s, cs, sc, sd = _reduce(p, t)
    C, D = _quarter(p, s, cs)
    return _out(sc * C), _out(sd * D)


def sinp(p, t):
    """Generalized sine ``sin_p(t)``."""
    return sinp_pair(p, t)[0]


def sinp_deriv(p, t):
    """Derivative ``sin_p'(t)``; satisfies ``(p-1)|C'|^p + |C|^p = p-1``."""
    return sinp_pair(p, t)[1]


def arcsin_p(p, x):
    """Inverse of ``sin_p`` on ``[0, pi_p/2]`` for ``x`` in ``[0, (p-1)^(1/p)]``."""
    p = _check_exponent(p)
    x = _as_finite(x, "x")
    cmax = (p - 1.0) ** (1.0 / p)
    if np.any(x < 0) or np.any(x > cmax * (1 + 1e-15)):
        raise DomainError("arcsin_p argument outside [0, (p-1)^(1/p)]")
    xs = np.minimum(np.abs(x) ** p / (p - 1.0), 1.0)
    return _out(0.5 * pi_p(p) * special.betainc(1.0 / p, 1.0 - 1.0 / p, xs))


def quarter_phase(p, c, dc):
    """Phase ``s`` in ``[0, pi_p/2]`` of a point ``(C, C') = (c, dc)``, both >= 0.

    Uses whichever coordinate is better conditioned and returns ``(s, pi_p/2 - s)``.
    The point is not required to lie exactly on the first-integral curve.
    """
    p = float(p)
    a = 1.0 / p
    b = 1.0 - a
    half = 0.5 * pi_p(p)
    c = np.asarray(c, dtype=float)
    dc = np.asarray(dc, dtype=float)
    xa = np.minimum(np.abs(c) ** p / (p - 1.0), 1.0)
    xb = np.minimum(np.abs(dc) ** p, 1.0)
    use_a = xa <= xb
    s_a = half * special.betainc(a, b, xa)
    cs_b = half * special.betainc(b, a, xb)
    s = np.where(use_a, s_a, half - cs_b)
    cs = np.where(use_a, half - s_a, cs_b)
    return _out(s), _out(cs)


def ip_constant(p) -> float:
    """``int_0^{pi_p/2} sin_p`` in closed form, ``(p-1)^(2/p)/p * B(2/p, 1-1/p)``."""
    p = _check_exponent(p)
    return (p - 1.0) ** (2.0 / p) / p * special.beta(2.0 / p, 1.0 - 1.0 / p)


def sinp_moment(p, m) -> float:
    """``int_0^{pi_p/2} sin_p(t)^m dt = (p-1)^((m+1)/p)/p * B((m+1)/p, 1-1/p)``, m > -1."""
    p = _check_exponent(p)
    m = float(m)
    if m <= -1.0:
        raise DomainError("moment order must exceed -1")
    return (p - 1.0) ** ((m + 1.0) / p) / p * special.beta((m + 1.0) / p, 1.0 - 1.0 / p)


# --- quadrature routes (independent of the incomplete-beta evaluation) ---

def _regular_factor(p, u):
    # ((1 - u^p)/(1 - u))^(-1/p): bounded and smooth on [0, 1]
    if u <= 0.0:
        return 1.0
    if u >= 1.0:
        return p ** (-1.0 / p)
    return (-math.expm1(p * math.log(u)) / (1.0 - u)) ** (-1.0 / p)


def half_period_quad(p) -> float:
    """``pi_p`` as ``2 int_0^{(p-1)^(1/p)} (1 - s^p/(p-1))^(-1/p) ds`` by adaptive quadrature.

    The algebraic endpoint singularity ``(1-u)^(-1/p)`` is integrated exactly
    by a Jacobi-weighted rule (QUADPACK QAWS).
    """
    p = _check_exponent(p)
    val, _ = integrate.quad(lambda u: _regular_factor(p, u), 0.0, 1.0,
                            weight="alg", wvar=(0.0, -1.0 / p),
                            epsabs=1e-15, epsrel=1e-14, limit=200)
    return 2.0 * (p - 1.0) ** (1.0 / p) * val


def arcsin_p_quad(p, x) -> float:
    """Implicit integral ``int_0^x (1 - s^p/(p-1))^(-1/p) ds`` by adaptive quadrature."""
    p = _check_exponent(p)
    cmax = (p - 1.0) ** (1.0 / p)
    u1 = min(float(x) / cmax, 1.0)
    if u1 <= 0.0:
        return 0.0
    if u1 <= 0.5:
        val, _ = integrate.quad(lambda u: _regular_factor(p, u) * (1.0 - u) ** (-1.0 / p), 0.0, u1,
                                epsabs=1e-14, epsrel=1e-13, limit=200)
        return cmax * val
    if u1 >= 1.0:
        return 0.5 * half_period_quad(p)
    tail, _ = integrate.quad(lambda u: _regular_factor(p, u), u1, 1.0,
                             weight="alg", wvar=(0.0, -1.0 / p),
                             epsabs=1e-15, epsrel=1e-14, limit=200)
    return 0.5 * half_period_quad(p) - cmax * tail


def ip_quad(p) -> float:
    """``int_0^{pi_p/2} sin_p(t) dt`` by adaptive Gauss-Kronrod quadrature of :func:`sinp`."""
    p = _check_exponent(p)
    val, _ = integrate.quad(lambda t: sinp(p, t), 0.0, 0.5 * pi_p(p),
                            epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


@dataclass(frozen=True)
class SinpTable:
    """Precomputed quarter-period samples of ``sin_p`` for fast approximate evaluation.

    Nodes are Chebyshev-spaced on ``[0, pi_p/2]``; interpolation is cubic
    Hermite using the exact derivatives at the nodes.
    """

    p: float
    nodes: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    _spline: CubicHermiteSpline = field(repr=False, compare=False, default=None)

    @classmethod
    def build(cls, p, n: int = 1024) -> "SinpTable":
        p = _check_exponent(p)
        if n < 4:
            raise DomainError("table needs at least 4 nodes")
        half = 0.5 * pi_p(p)
        j = np.arange(n)
        w = 0.5 * (1.0 - np.cos(np.pi * j / (n - 1)))
        nodes = half * w
        nodes[0], nodes[-1] = 0.0, half
        C, D = _quarter(p, nodes, half * (1.0 - w))
        for arr in (nodes, C, D):
            arr.setflags(write=False)
        spline = CubicHermiteSpline(nodes, C, D)
        return cls(p, nodes, C, D, spline)

    def __call__(self, t):
        t = _as_finite(t, "t")
        s, _, sc, _ = _reduce(self.p, t)
        return _out(sc * self._spline(s))

    def first_integral_defect(self) -> float:
        """Max over nodes of ``|(p-1)|C'|^p + |C|^p - (p-1)|``."""
        p = self.p
        return float(np.max(np.abs((p - 1.0) * self.derivs ** p + self.values ** p - (p - 1.0))))
