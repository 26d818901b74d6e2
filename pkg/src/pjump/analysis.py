"""Rotation numbers, twist, invariant-curve detection and boundedness experiments.

All angles are measured along the motion: in the action-angle chart the flow
decreases ``theta``, so an *advance* is ``-(theta_after - theta_before)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (DEFAULT_TOL, ActionAngle, PhaseState, from_action_angle,
                       integrate, poincare_map, to_action_angle)
from .errors import AnalysisError, ParameterError
from .forcing import ForcingSpec
from .jumping import JumpingParams, aux_orbit
from .reduction import EstimateReport, loglog_fit

__all__ = [
    "RotationEstimate",
    "rotation_number",
    "lifted_advances",
    "twist_diagnostic",
    "CurveVerdict",
    "detect_invariant_curve",
    "BoundednessRecord",
    "boundedness_experiment",
    "amplitude_to_action",
    "sample_initial_conditions",
    "parallel_map",
]

_AMBIGUOUS = 0.75  # fraction of pi_p above which a sub-step increment is not trusted


def _wrap(d, P):
    """Map angle differences into ``[-pi_p, pi_p)``."""
    return (d + P) % (2.0 * P) - P


def lifted_advances(params: JumpingParams, forcing: ForcingSpec, state0: PhaseState, n: int,
                    tol: float = DEFAULT_TOL, max_refine: int = 4):
    """Per-iterate angular advances of ``n`` Poincare iterates, lifted to the real line.

    Each period is cut into ``m >= 4 omega`` sub-steps so that a sub-step moves
    ``theta`` by well under ``pi_p``; if any sub-step increment still exceeds
    ``0.75 pi_p`` in magnitude, ``m`` is doubled (at most ``max_refine`` times).
    Returns ``(advances, section_r, section_theta)``.
    """
    P = params.pi_p
    T = params.period
    m = max(4, int(math.ceil(4.0 * params.omega)))
    for _ in range(max_refine + 1):
        times = state0.t + T * np.arange(1, n * m + 1) / m
        orb = integrate(params, forcing, state0, float(times[-1]), tol=tol, samples=times)
        aa = to_action_angle(params, np.concatenate([[state0.x], orb.x]),
                             np.concatenate([[state0.y], orb.y]))
        theta = np.asarray(aa.theta)
        inc = -_wrap(np.diff(theta), P)
        if np.all(np.abs(inc) < _AMBIGUOUS * P):
            adv = inc.reshape(n, m).sum(axis=1)
            return adv, np.asarray(aa.r)[::m], theta[::m]
        m *= 2
    raise AnalysisError(f"angle lift ambiguous after refinement to {m // 2} sub-steps per period")


@dataclass(frozen=True)
class RotationEstimate:
    """Birkhoff average of the lifted advance, in revolutions per iterate (mod 1)."""

    value: float
    iterates: int
    residual: float
    converged: bool
    mean_advance: float  # radians per iterate, unreduced


def rotation_number(params: JumpingParams, forcing: ForcingSpec, state0: PhaseState, n: int,
                    tol: float = DEFAULT_TOL, threshold: float = 1e-3) -> RotationEstimate:
    """Rotation number of the Poincare map along the orbit of ``state0``.

    ``residual`` is ``max |rho_k - rho_n|`` over ``n/2 <= k <= n`` for the
    running averages ``rho_k`` (in revolutions).
    """
    if int(n) != n or n < 100:
        raise ParameterError("rotation_number needs n >= 100 iterates")
    n = int(n)
    adv, _, _ = lifted_advances(params, forcing, state0, n, tol=tol)
    T = params.period
    running = np.cumsum(adv) / np.arange(1, n + 1) / T
    rho = running[-1]
    residual = float(np.max(np.abs(running[n // 2 - 1:] - rho)))
    value = float(rho - math.floor(rho))
    if value >= 1.0:
        value = 0.0
    return RotationEstimate(value=value, iterates=n, residual=residual,
                            converged=residual < threshold, mean_advance=float(rho * T))


def twist_diagnostic(params: JumpingParams, forcing: ForcingSpec, r_grid, n_theta: int = 8,
                     window: int = 64, tol: float = DEFAULT_TOL, tolerance: float = 0.2,
                     threads: int = 1) -> EstimateReport:
    """Mean angular advance per iterate as a function of the action.

    For each ``r`` the advance is averaged over ``n_theta`` starting angles
    (at ``t = 0``) and a window of ``window`` iterates.  The report's
    ``observed`` holds ``|d advance / dr|`` from successive differences,
    ``grid`` their geometric midpoints, and the claimed slope is
    ``(gamma+1)/p - 2``.  ``extra`` carries the raw advances, monotonicity and
    direction; ``passed`` requires a strictly decreasing advance (the sign
    forced by a concave averaged potential) and the slope within ``tolerance``.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.ndim != 1 or r_grid.size < 3 or np.any(r_grid <= 0) or np.any(np.diff(r_grid) <= 0):
        raise ParameterError("r_grid must be a strictly increasing positive sequence of >= 3 points")
    if math.log10(r_grid[-1] / r_grid[0]) < 2 - 1e-9:
        raise ParameterError("r_grid must span at least 2 decades")
    thetas = (np.arange(n_theta) + 0.5) * params.period / n_theta

    def one(job):
        r, th = job
        x, y = from_action_angle(params, ActionAngle(r, th))
        adv, _, _ = lifted_advances(params, forcing, PhaseState(float(x), float(y), 0.0), window, tol=tol)
        return float(np.mean(adv))

    jobs = [(r, th) for r in r_grid for th in thetas]
    vals = parallel_map(one, jobs, threads)
    advance = np.array(vals).reshape(r_grid.size, n_theta).mean(axis=1)
    diffs = np.diff(advance)
    noise = 1e-9 * np.max(np.abs(advance))
    if np.all(diffs < -noise):
        direction = "decreasing"
    elif np.all(diffs > noise):
        direction = "increasing"
    elif np.all(np.abs(diffs) <= noise):
        direction = "flat"
    else:
        direction = "mixed"
    monotone = direction in ("decreasing", "increasing")
    mid = np.sqrt(r_grid[1:] * r_grid[:-1])
    deriv = np.abs(diffs / np.diff(r_grid))
    claimed = (forcing.gamma + 1.0) / params.p - 2.0
    if monotone:
        slope, const = loglog_fit(mid, deriv)
    else:
        slope, const = float("nan"), float("nan")
    ok = direction == "decreasing" and abs(slope - claimed) <= tolerance
    return EstimateReport(quantity="twist", order=1, grid=mid, observed=deriv, fitted_slope=slope,
                          claimed_slope=claimed, bound="equal", tolerance=float(tolerance),
                          passed=bool(ok), constant=const,
                          extra={"r_grid": r_grid, "advance": advance, "monotone": monotone,
                                 "direction": direction})


@dataclass(frozen=True)
class CurveVerdict:
    verdict: str  # "curve" or "no-curve"
    residual: float  # max |r - rho(theta)| / mean r
    max_gap: float  # largest theta gap, in units of 2 pi_p / n
    coefficients: np.ndarray
    mean_r: float
    confined: bool | None = None  # subsequent iterates stay in the widened band
    reasons: tuple = field(default_factory=tuple)

    @property
    def is_curve(self) -> bool:
        return self.verdict == "curve"


def _trig_design(theta, degree, period):
    w = 2.0 * math.pi / period
    cols = [np.ones_like(theta)]
    for k in range(1, degree + 1):
        cols.append(np.cos(k * w * theta))
        cols.append(np.sin(k * w * theta))
    return np.column_stack(cols)


def detect_invariant_curve(params: JumpingParams, forcing: ForcingSpec, state0: PhaseState, n: int,
                           degree: int = 16, threshold: float = 1e-3, gap_factor: float = 10.0,
                           tol: float = DEFAULT_TOL, check_confinement: bool = False,
                           band_floor: float = 1e-6) -> CurveVerdict:
    """Classify the Poincare orbit of ``state0`` as lying on an invariant curve or not.

    Fits ``r = rho(theta)`` by trigonometric least squares of ``degree`` on
    ``n`` iterates.  "curve" requires the max relative fit residual below
    ``threshold`` and the largest circular gap between sorted angles below
    ``gap_factor * 2 pi_p / n``.  With ``check_confinement`` the next ``n``
    iterates are also tested against the band ``rho +- 3 * residual * mean r``;
    the band's relative half-width is floored at ``band_floor`` so that slow
    integration drift on an exactly circular orbit does not count as escape.
    """
    if int(n) != n or n < 1000:
        raise ParameterError("detect_invariant_curve needs n >= 1000 iterates")
    n = int(n)
    T = params.period
    total = 2 * n if check_confinement else n
    sec = poincare_map(params, forcing, state0, total, tol=tol)
    r = sec.r[1:n + 1]
    th = sec.theta[1:n + 1]
    A = _trig_design(th, degree, T)
    coef, *_ = np.linalg.lstsq(A, r, rcond=None)
    mean_r = float(np.mean(r))
    resid = float(np.max(np.abs(A @ coef - r)) / mean_r)
    srt = np.sort(th)
    gaps = np.diff(np.concatenate([srt, [srt[0] + T]]))
    max_gap = float(np.max(gaps) / (T / n))
    reasons = []
    if not resid < threshold:
        reasons.append("fit residual above threshold")
    if not max_gap < gap_factor:
        reasons.append("angles do not fill the circle")
    confined = None
    if check_confinement:
        r2 = sec.r[n + 1:]
        th2 = sec.theta[n + 1:]
        band = max(3.0 * resid, band_floor) * mean_r
        confined = bool(np.all(np.abs(_trig_design(th2, degree, T) @ coef - r2) <= band))
    return CurveVerdict(verdict="no-curve" if reasons else "curve", residual=resid,
                        max_gap=max_gap, coefficients=coef, mean_r=mean_r,
                        confined=confined, reasons=tuple(reasons))


@dataclass(frozen=True)
class BoundednessRecord:
    ic: PhaseState
    horizon: int
    sup_norm: float
    first_half_max: float
    second_half_max: float

    @property
    def ratio(self) -> float:
        return self.second_half_max / self.first_half_max


def parallel_map(fn, items, threads):
    """``[fn(x) for x in items]`` on up to ``threads`` threads, results in input order."""
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=int(threads)) as ex:
        return list(ex.map(fn, items))


def boundedness_experiment(params: JumpingParams, forcing: ForcingSpec, ics, horizon: int,
                           tol: float = DEFAULT_TOL, threads: int = 1) -> list:
    """Windowed maxima of ``|x| + |x'|`` over ``horizon`` periods for each initial state.

    The first window covers periods ``1 .. horizon//2`` (plus the initial
    point), the second the rest.  Results follow the order of ``ics``.
    """
    if int(horizon) != horizon or horizon < 200:
        raise ParameterError("horizon must be at least 200 periods")
    horizon = int(horizon)
    T = params.period
    half = horizon // 2

    def one(ic):
        times = ic.t + T * np.arange(1, horizon + 1)
        orb = integrate(params, forcing, ic, float(times[-1]), tol=tol, samples=times)
        amp0 = abs(ic.x) + params.omega * abs(ic.y) ** (params.q - 1.0)
        first = max(amp0, float(np.max(orb.peaks[:half])))
        second = float(np.max(orb.peaks[half:]))
        return BoundednessRecord(ic=ic, horizon=horizon, sup_norm=max(first, second),
                                 first_half_max=first, second_half_max=second)

    return parallel_map(one, list(ics), threads)


def amplitude_to_action(params: JumpingParams, amplitude, theta):
    """Action ``r`` at which the chart point at ``theta`` has ``|x| + |x'| = amplitude``.

    ``|x| + |x'| = (d r)^(1/p) (|v| + omega |v'|)`` is homogeneous in ``r``.
    """
    v, u = aux_orbit(params, theta)
    shape = np.abs(v) + params.omega * np.abs(u) ** (params.q - 1.0)
    return (np.asarray(amplitude, dtype=float) / shape) ** params.p / params.d


def sample_initial_conditions(params: JumpingParams, n: int, seed: int,
                              amplitude_range=(1e2, 1e3), t0: float = 0.0) -> list:
    """``n`` states with log-uniform ``|x| + |x'|`` in ``amplitude_range`` and uniform angle."""
    lo, hi = amplitude_range
    if not 0 < lo < hi:
        raise ParameterError("amplitude range must satisfy 0 < lo < hi")
    rng = np.random.default_rng(seed)
    amp = np.exp(rng.uniform(math.log(lo), math.log(hi), size=n))
    theta = rng.uniform(0.0, params.period, size=n)
    r = amplitude_to_action(params, amp, theta)
    x, y = from_action_angle(params, ActionAngle(r, theta))
    x = np.atleast_1d(x)
    y = np.atleast_1d(y)
    return [PhaseState(float(a), float(b), float(t0)) for a, b in zip(x, y)]
