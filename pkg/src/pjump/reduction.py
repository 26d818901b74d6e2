"""Potential, scaled perturbation, averaged potential and empirical growth-rate scans.

The large-amplitude estimates used to reduce the oscillator to a small-twist
map are asymptotic statements with unspecified constants.  Here they are
*measured*: each scan evaluates a quantity on a dyadic grid of actions (or
energies), fits a log-log slope and compares it with the claimed exponent.
Constants are fitted, never assumed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import ptrig
from .dynamics import solve_r_of_h
from .errors import HypothesisError, ParameterError
from .forcing import ForcingSpec
from .jumping import JumpingParams, aux_v, aux_zeros

__all__ = [
    "big_f",
    "big_f_quad",
    "h1",
    "g_scaled",
    "orbit_moment",
    "orbit_moment_quad",
    "mean_potential",
    "mean_potential_closed",
    "mean_potential_derivs",
    "mean_potential_fd",
    "generating_s",
    "HypothesisReport",
    "hypothesis_check",
    "EstimateReport",
    "ESTIMATES",
    "dyadic_grid",
    "loglog_fit",
    "estimate_scan",
    "remainder",
]

_QUAD = dict(epsabs=0.0, epsrel=1e-12, limit=400)


def big_f(forcing: ForcingSpec, x):
    """``F(x) = int_0^x f``, closed form for the power-law family."""
    return forcing.big_f(x)


def big_f_quad(forcing: ForcingSpec, x: float) -> float:
    """``F(x)`` by adaptive quadrature of ``f``."""
    val, _ = integrate.quad(forcing.f, 0.0, float(x), epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def _x_of(params, r, v):
    return (params.d * r) ** (1.0 / params.p) * v


def h1(params: JumpingParams, forcing: ForcingSpec, r, theta, t):
    """Perturbation part of the action-angle Hamiltonian, ``h - omega r``."""
    x = _x_of(params, np.asarray(r, dtype=float), np.asarray(aux_v(params, theta)))
    e = forcing.e(t, params.pi_p)
    return ptrig._out(params.omega ** (1.0 - params.p) * (np.asarray(forcing.big_f(x)) - x * e))


def g_scaled(params: JumpingParams, forcing: ForcingSpec, r, theta, t):
    """``g = r^(-1/p) h1``, so that ``h = omega r + r^(1/p) g``."""
    r = np.asarray(r, dtype=float)
    return ptrig._out(r ** (-1.0 / params.p) * np.asarray(h1(params, forcing, r, theta, t)))


def orbit_moment(params: JumpingParams, m: float) -> float:
    """``int_0^{2 pi_p} |v(theta)|^m dtheta`` in closed form.

    Each positive quarter contributes ``K_m / a1^(1/p)`` and each negative one
    ``(a1/b1)^(m/p) K_m / b1^(1/p)``, with ``K_m`` the quarter moment of ``sin_p``.
    """
    p = params.p
    A = params.a1 ** (1.0 / p)
    B = params.b1 ** (1.0 / p)
    km = ptrig.sinp_moment(p, m)
    return 2.0 * km * (1.0 / A + (A / B) ** m / B)


def orbit_moment_quad(params: JumpingParams, m: float) -> float:
    t1 = params.t_junction
    P = params.pi_p
    fn = lambda th: abs(aux_v(params, th)) ** m
    a, _ = integrate.quad(fn, 0.0, t1, **_QUAD)
    b, _ = integrate.quad(fn, t1, P, **_QUAD)
    return 2.0 * (a + b)


def _potential_along(params, forcing, h):
    scale = (params.d * h / params.omega) ** (1.0 / params.p)
    return lambda th: forcing.big_f(scale * aux_v(params, th))


def mean_potential(params: JumpingParams, forcing: ForcingSpec, h: float) -> float:
    """theta-average of ``F(d^(1/p) (h/omega)^(1/p) v(theta))`` over one period.

    Adaptive quadrature split at the zeros of ``v``; the mirror symmetry of
    ``v`` halves the work.
    """
    if not h > 0:
        raise ParameterError("h must be positive")
    if forcing.beta == 0.0:
        return 0.0
    fn = _potential_along(params, forcing, float(h))
    t1 = params.t_junction
    P = params.pi_p
    a, _ = integrate.quad(fn, 0.0, t1, **_QUAD)
    b, _ = integrate.quad(fn, t1, P, **_QUAD)
    return (a + b) / P


def mean_potential_closed(params: JumpingParams, forcing: ForcingSpec, h: float) -> float:
    """Power-law closed form ``beta/(gamma+1) (d h/omega)^((gamma+1)/p) J / (2 pi_p)``."""
    g1 = forcing.gamma + 1.0
    J = orbit_moment(params, g1)
    return forcing.beta / g1 * (params.d * h / params.omega) ** (g1 / params.p) * J / params.period


def mean_potential_derivs(params: JumpingParams, forcing: ForcingSpec, h: float, k: int) -> float:
    """k-th derivative (k = 0, 1, 2) of the averaged potential, from the homogeneous form."""
    if k not in (0, 1, 2):
        raise ParameterError("derivative order must be 0, 1 or 2")
    if not h > 0:
        raise ParameterError("h must be positive")
    alpha = (forcing.gamma + 1.0) / params.p
    base = mean_potential_closed(params, forcing, h)
    coef = 1.0
    for j in range(k):
        coef *= alpha - j
    return coef * base / float(h) ** k


def _fd(fn, x, k, rel=1e-4):
    dx = rel * x
    f = [fn(x + j * dx) for j in (-2, -1, 0, 1, 2)]
    if k == 0:
        return f[2]
    if k == 1:
        return (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * dx)
    if k == 2:
        return (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * dx * dx)
    raise ParameterError("finite differences only up to order 2")


def mean_potential_fd(params: JumpingParams, forcing: ForcingSpec, h: float, k: int) -> float:
    """Five-point central difference (relative step 1e-4) of :func:`mean_potential`."""
    return _fd(lambda s: mean_potential(params, forcing, s), float(h), k)


def generating_s(params: JumpingParams, forcing: ForcingSpec, h: float, theta: float) -> float:
    """``omega^(-p) int_0^theta (F(...) - Fbar(h)) dtheta'`` for theta in ``[0, 2 pi_p]``."""
    theta = float(theta)
    T = params.period
    if not 0.0 <= theta <= T * (1 + 1e-15):
        raise ParameterError("theta must lie in [0, 2 pi_p]")
    if forcing.beta == 0.0 or theta == 0.0:
        return 0.0
    fn = _potential_along(params, forcing, float(h))
    fbar = mean_potential(params, forcing, h)
    cuts = [0.0] + [z for z in (*aux_zeros(params), params.pi_p) if z < theta] + [theta]
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        val, _ = integrate.quad(fn, lo, hi, **_QUAD)
        total += val
    return params.omega ** (-params.p) * (total - fbar * theta)


# --- growth/sign hypotheses on f ---

@dataclass(frozen=True)
class HypothesisReport:
    passed: bool
    failures: tuple
    c: float
    beta1: float
    beta2: float
    gamma: float
    p: float
    q: float
    sampled_points: int

    def raise_if_failed(self):
        if not self.passed:
            raise HypothesisError(self.failures)


def _falling(g, k):
    out = 1.0
    for j in range(k):
        out *= g - j
    return out


def hypothesis_check(forcing: ForcingSpec, p: float, samples: int = 401) -> HypothesisReport:
    """Check the growth and sign hypotheses for the power-law ``f``.

    Constants: ``beta1 = beta``, ``beta2 = beta*gamma`` and ``c = beta *
    max_k |gamma (gamma-1) ... (gamma-k+1)|`` over ``k <= 6``.  The
    inequalities are then also sampled on a signed logarithmic grid.
    """
    p = float(p)
    q = p / (p - 1.0)
    beta, gamma = forcing.beta, forcing.gamma
    failures = []
    if not 0.0 < gamma < 1.0 / (p - 1.0):
        failures.append("H1: need 0 < gamma < 1/(p-1)")
    beta1 = beta
    beta2 = beta * gamma
    c = beta * max(abs(_falling(gamma, k)) for k in range(7))
    if not beta1 > 0:
        failures.append("H2: x f(x) >= beta1 |x|^(gamma+1) needs beta1 > 0")
    if not beta2 > 0:
        failures.append("H2: x^2 f'(x) <= beta2 |x|^(gamma+1) needs beta2 > 0")
    if not p * beta1 > q * beta2:
        failures.append("H2: need p*beta1 > q*beta2")

    mags = np.logspace(-6, 6, samples)
    xs = np.concatenate([-mags[::-1], mags])
    ax = np.abs(xs)
    slack = 1e-12
    fx = beta * np.sign(xs) * ax ** gamma
    env = ax ** gamma
    if c > 0:
        for k in range(7):
            dk = beta * _falling(gamma, k) * np.sign(xs) ** (k + 1) * ax ** (gamma - k)
            if np.any(np.abs(xs ** k * dk) > c * env * (1 + slack)):
                failures.append(f"H1: |x^{k} f^({k})(x)| <= c |x|^gamma violated on samples")
                break
    if beta1 > 0 and np.any(xs * fx < beta1 * ax ** (gamma + 1) * (1 - slack)):
        failures.append("H2: x f(x) >= beta1 |x|^(gamma+1) violated on samples")
    if beta2 > 0:
        fprime = beta * gamma * ax ** (gamma - 1)
        if np.any(xs ** 2 * fprime > beta2 * ax ** (gamma + 1) * (1 + slack)):
            failures.append("H2: x^2 f'(x) <= beta2 |x|^(gamma+1) violated on samples")
    failures = tuple(dict.fromkeys(failures))
    return HypothesisReport(passed=not failures, failures=failures, c=c, beta1=beta1,
                            beta2=beta2, gamma=gamma, p=p, q=q, sampled_points=len(xs))


# --- empirical scans ---

@dataclass(frozen=True)
class EstimateReport:
    """Outcome of a log-log growth-rate scan.

    ``bound`` is ``"equal"`` when the slope itself is claimed and ``"upper"``
    when only an upper envelope is; ``passed`` compares the fitted slope with
    ``claimed_slope`` at ``tolerance`` accordingly.
    """

    quantity: str
    order: int
    grid: np.ndarray
    observed: np.ndarray
    fitted_slope: float
    claimed_slope: float
    bound: str
    tolerance: float
    passed: bool
    constant: float
    extra: dict = field(default_factory=dict)


def dyadic_grid(lo: float, hi: float) -> np.ndarray:
    """``lo * 2^k`` for ``k = 0, 1, ...`` up to and including the first point >= ``hi``."""
    if not (0 < lo < hi):
        raise ParameterError("need 0 < lo < hi")
    n = int(math.ceil(math.log2(hi / lo) - 1e-12))
    return lo * 2.0 ** np.arange(n + 1)


def loglog_fit(grid, values):
    """Least-squares slope and prefactor of ``values ~ C grid^slope``."""
    lx = np.log(np.asarray(grid, dtype=float))
    ly = np.log(np.abs(np.asarray(values, dtype=float)))
    slope, icpt = np.polyfit(lx, ly, 1)
    return float(slope), float(math.exp(icpt))


def _check_grid(grid, min_decades):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ParameterError("grid must be a strictly increasing positive sequence of >= 3 points")
    if math.log10(grid[-1] / grid[0]) < min_decades - 1e-9:
        raise ParameterError(f"grid must span at least {min_decades} decades")
    return grid


def _sample_angles(params, n_theta, margin):
    T = params.period
    th = (np.arange(n_theta) + 0.5) * T / n_theta
    zeros = np.array(aux_zeros(params))
    dist = np.min(np.abs(((th[:, None] - zeros[None, :]) + T / 2) % T - T / 2), axis=1)
    return th[dist > margin]


def remainder(params: JumpingParams, forcing: ForcingSpec, h: float, t: float, theta: float) -> float:
    """``r(h, t, theta) - h/omega + omega^(-p) F(d^(1/p) (h/omega)^(1/p) v(theta))``."""
    w = params.omega
    r = solve_r_of_h(params, forcing, h, t, theta)
    x0 = _x_of(params, h / w, aux_v(params, theta))
    return r - h / w + w ** (-params.p) * forcing.big_f(x0)


# quantity tag -> (bound kind, claimed exponent as function of (p, gamma, k), description)
ESTIMATES = {
    "F": ("equal", lambda p, g, k: (g + 1) / p - k, "d^k/dr^k F(d^(1/p) r^(1/p) v(theta))"),
    "f": ("upper", lambda p, g, k: (g + 1) / p - k, "d^k/dr^k f(d^(1/p) r^(1/p) v(theta))"),
    "h1": ("upper", lambda p, g, k: (g + 1) / p - k, "d^k/dr^k h1(r, theta, t)"),
    "g": ("upper", lambda p, g, k: g / p - k, "d^k/dr^k g(r, theta, t)"),
    "h-linearity": ("equal", lambda p, g, k: 0.0, "h(r, theta, t) / r"),
    "r-of-h": ("upper", lambda p, g, k: 1.0 - k, "d^k/dh^k r(h, t, theta)"),
    "remainder": ("upper", lambda p, g, k: max(g, 1.0 / p), "r(h,t,theta) - h/omega + omega^-p F(...)"),
    "mean-potential": ("equal", lambda p, g, k: (g + 1) / p - k, "d^k/dh^k Fbar(h)"),
}


def estimate_scan(params: JumpingParams, forcing: ForcingSpec, which: str, grid, k: int = 0,
                  n_theta: int = 8, n_t: int = 4, xi_margin: float = 1e-3,
                  tolerance: float | None = None, min_decades: float = 3.0) -> EstimateReport:
    """Measure a named quantity over ``grid`` and compare its log-log slope with the claim.

    The observed value at each grid point is the maximum of ``|quantity|``
    over ``n_theta`` angles (kept ``xi_margin`` away from the zeros of ``v``)
    and ``n_t`` times.  Derivatives use five-point central differences with
    relative step 1e-4 and are limited to order 2.
    """
    if which not in ESTIMATES:
        raise ParameterError(f"unknown estimate {which!r}; choose from {sorted(ESTIMATES)}")
    if k not in (0, 1, 2):
        raise ParameterError("derivative order must be 0, 1 or 2")
    if which in ("h-linearity", "remainder") and k != 0:
        raise ParameterError(f"{which} is only defined for k = 0")
    grid = _check_grid(grid, min_decades)
    bound, claim_fn, _ = ESTIMATES[which]
    p, gam = params.p, forcing.gamma
    claimed = float(claim_fn(p, gam, k))
    if tolerance is None:
        tolerance = 0.2 if k == 2 else 0.1
    thetas = _sample_angles(params, n_theta, xi_margin)
    ts = np.arange(n_t) * params.period / n_t
    w = params.omega
    vs = {th: float(aux_v(params, th)) for th in thetas}

    def at(s, th, t):
        v = vs[th]
        if which == "F":
            return forcing.big_f(_x_of(params, s, v))
        if which == "f":
            return forcing.f(_x_of(params, s, v))
        if which == "h1":
            return float(h1(params, forcing, s, th, t))
        if which == "g":
            return float(g_scaled(params, forcing, s, th, t))
        if which == "h-linearity":
            return (w * s + float(h1(params, forcing, s, th, t))) / s
        if which == "r-of-h":
            return solve_r_of_h(params, forcing, s, t, th)
        if which == "remainder":
            return remainder(params, forcing, s, t, th)
        raise AssertionError(which)

    observed = np.empty(grid.size)
    extra = {}
    if which == "mean-potential":
        for i, s in enumerate(grid):
            observed[i] = abs(mean_potential_fd(params, forcing, s, k))
    else:
        time_dependent = which in ("h1", "g", "h-linearity", "r-of-h", "remainder")
        t_list = ts if time_dependent else ts[:1]
        lo_ratio = np.inf
        for i, s in enumerate(grid):
            best = 0.0
            for th in thetas:
                for t in t_list:
                    val = _fd(lambda z: at(z, th, t), s, k)
                    if which == "h-linearity":
                        lo_ratio = min(lo_ratio, val)
                    best = max(best, abs(val))
            observed[i] = best
        if which == "h-linearity":
            extra = {"c1": float(lo_ratio), "c2": float(observed.max())}
    slope, const = loglog_fit(grid, observed)
    if bound == "equal":
        ok = abs(slope - claimed) <= tolerance
    else:
        ok = slope <= claimed + tolerance
    return EstimateReport(quantity=which, order=int(k), grid=grid, observed=observed,
                          fitted_slope=slope, claimed_slope=claimed, bound=bound,
                          tolerance=float(tolerance), passed=bool(ok), constant=const, extra=extra)
