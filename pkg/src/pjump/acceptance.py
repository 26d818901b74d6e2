"""Acceptance suite: numbered checks with fixed tolerances and runtime budgets.

Each check returns a :class:`CriterionResult`.  ``value`` is the worst-case
metric, ``threshold`` the bound it is compared against and ``passed`` the
outcome.  Runtimes are recorded but kept out of the CSV rows so that repeated
runs with the same seed produce identical files.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import ptrig
from .analysis import (boundedness_experiment, detect_invariant_curve, rotation_number,
                       sample_initial_conditions, twist_diagnostic)
from .dynamics import (DEFAULT_TOL, ActionAngle, PhaseState, from_action_angle, hamiltonian_h,
                       poincare_map, solve_r_of_h, to_action_angle)
from .forcing import ForcingSpec
from .jumping import aux_energy, aux_integrals, aux_integrals_quad, aux_zeros, derive_params
from .reduction import (dyadic_grid, estimate_scan, loglog_fit, mean_potential,
                        mean_potential_derivs, mean_potential_fd)

__all__ = ["CriterionResult", "AcceptanceConfig", "CRITERIA", "run_acceptance", "CSV_HEADER"]

P_SET = (2.0, 2.5, 3.0, 4.0)
AUX_CASES = ((4.0, 1.0, 2.0), (8.0, 1.0, 3.0), (5.0, 2.0, 2.5))
CSV_HEADER = ("criterion", "name", "metric", "value", "threshold", "passed")


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    metric: str
    value: float
    threshold: float
    passed: bool
    budget: float  # seconds
    runtime: float = 0.0
    notes: tuple = ()

    @property
    def within_budget(self) -> bool:
        return self.runtime <= self.budget

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] criterion {self.number:2d} {self.name}: {self.metric} = {self.value:.6g} "
                f"(threshold {self.threshold:.6g}; {self.runtime:.1f}s of {self.budget:.0f}s)")


@dataclass(frozen=True)
class AcceptanceConfig:
    """Scenario data the suite needs.  Defaults are the reference scenario."""

    p: float = 3.0
    a: float = 8.0
    b: float = 1.0
    forcing: ForcingSpec = ForcingSpec(1.0, 0.4, ((1, 0.5, 0.0),))
    tol: float = DEFAULT_TOL
    seed: int = 0
    threads: int = 1
    # boundedness/curve experiment; a, b may differ from the main scenario
    bounded_a: float | None = 8.0
    bounded_b: float | None = 2.0
    n_ics: int = 20
    horizon: int = 500
    curve_iterates: int = 1000
    amplitude_range: tuple = (1e2, 1e3)
    # informational: also report the curve fraction for the main (a, b)
    report_main_curves: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def params(self):
        return derive_params(self.a, self.b, self.p)

    @property
    def bounded_params(self):
        a = self.a if self.bounded_a is None else self.bounded_a
        b = self.b if self.bounded_b is None else self.bounded_b
        return derive_params(a, b, self.p)


def _result(num, name, metric, value, threshold, passed, budget, notes=()):
    return CriterionResult(num, name, metric, float(value), float(threshold), bool(passed),
                           float(budget), notes=tuple(notes))


def c1_ptrig(cfg):
    worst_pi = worst_fi = 0.0
    for p in P_SET:
        worst_pi = max(worst_pi, abs(ptrig.pi_p(p) - ptrig.half_period_quad(p)) / ptrig.pi_p(p))
        t = np.linspace(0.0, 2.0 * ptrig.pi_p(p), 1000)
        C, D = ptrig.sinp_pair(p, t)
        worst_fi = max(worst_fi, float(np.max(np.abs((p - 1) * np.abs(D) ** p + np.abs(C) ** p - (p - 1)))))
    t = np.linspace(0.0, 2.0 * math.pi, 1000)
    red = float(np.max(np.abs(ptrig.sinp(2.0, t) - np.sin(t))))
    ok = worst_pi <= 1e-9 and worst_fi <= 1e-10 and red <= 1e-9
    # report the tightest margin: worst error relative to its own tolerance
    margin = max(worst_pi / 1e-9, worst_fi / 1e-10, red / 1e-9)
    return _result(1, "p-trig identities", "max(err/tol)", margin, 1.0, ok, 10,
                   (f"pi_p rel {worst_pi:.3g}", f"first integral {worst_fi:.3g}", f"p=2 {red:.3g}"))


def c2_ip(cfg):
    worst = max(abs(ptrig.ip_constant(p) - ptrig.ip_quad(p)) / ptrig.ip_constant(p) for p in P_SET)
    return _result(2, "I_p Beta formula", "max rel err", worst, 1e-8, worst <= 1e-8, 5)


def c3_aux(cfg):
    worst_e = worst_i = 0.0
    for a, b, p in AUX_CASES:
        par = derive_params(a, b, p)
        t = np.linspace(0.0, par.period, 1000)
        worst_e = max(worst_e, float(np.max(np.abs(np.asarray(aux_energy(par, t)) - par.a1 / par.q))))
        cf = aux_integrals(par)
        qd = aux_integrals_quad(par)
        worst_i = max(worst_i, *(abs(x - y) for x, y in zip(cf, qd)))
    worst = max(worst_e, worst_i)
    return _result(3, "auxiliary orbit identities", "max abs err", worst, 1e-8, worst <= 1e-8, 10,
                   (f"energy {worst_e:.3g}", f"integrals {worst_i:.3g}"))


def c4_chart(cfg):
    par = cfg.params
    rng = np.random.default_rng(cfg.seed)
    T = par.period
    r = np.exp(rng.uniform(0.0, math.log(1e6), 1000))
    th = rng.uniform(0.0, T, 1000)
    x, y = from_action_angle(par, ActionAngle(r, th))
    aa = to_action_angle(par, x, y)
    err_r = np.abs(np.asarray(aa.r) - r) / r
    dth = np.abs((np.asarray(aa.theta) - th + T / 2) % T - T / 2)
    rt = float(max(err_r.max(), dth.max()))
    # Jacobian of (theta, r) -> (x, y) by central differences, away from the zeros of v
    zeros = np.array(aux_zeros(par))
    pts = []
    while len(pts) < 100:
        tt = rng.uniform(0.0, T)
        if np.min(np.abs((tt - zeros + T / 2) % T - T / 2)) > 0.05:
            pts.append((math.exp(rng.uniform(0.0, math.log(1e3))), tt))
    worst_j = 0.0
    for rr, tt in pts:
        ht, hr = 1e-6, 1e-6 * rr
        xp, yp = from_action_angle(par, ActionAngle(rr, tt + ht))
        xm, ym = from_action_angle(par, ActionAngle(rr, tt - ht))
        xr, yr = from_action_angle(par, ActionAngle(rr + hr, tt))
        xl, yl = from_action_angle(par, ActionAngle(rr - hr, tt))
        det = ((xp - xm) * (yr - yl) - (yp - ym) * (xr - xl)) / (4 * ht * hr)
        worst_j = max(worst_j, abs(det - 1.0))
    ok = rt < 1e-9 and worst_j <= 1e-5
    margin = max(rt / 1e-9, worst_j / 1e-5)
    return _result(4, "action-angle chart", "max(err/tol)", margin, 1.0, ok, 30,
                   (f"round trip {rt:.3g}", f"|det J - 1| {worst_j:.3g}"))


def c5_baseline(cfg):
    par = cfg.params
    free = ForcingSpec.unperturbed()
    x, y = from_action_angle(par, ActionAngle(500.0, 1.0))
    st = PhaseState(float(x), float(y))
    sec = poincare_map(par, free, st, 1000, tol=cfg.tol)
    drift = float(np.max(np.abs(sec.r - sec.r[0])) / sec.r[0])
    rot = rotation_number(par, free, st, 1000, tol=cfg.tol)
    target = par.omega - math.floor(par.omega)
    d = abs(rot.value - target)
    d = min(d, 1.0 - d)
    ok = drift < 1e-7 and d <= 1e-6
    margin = max(drift / 1e-7, d / 1e-6)
    return _result(5, "integrable baseline", "max(err/tol)", margin, 1.0, ok, 120,
                   (f"relative r-drift {drift:.3g}", f"|rho - frac(omega)| {d:.3g}"))


def _angles_off_xi(par, n):
    return (np.arange(n) + 0.5) * par.period / n


def c6_inversion(cfg):
    par = cfg.params
    fs = cfg.forcing
    worst = 0.0
    for h in (1e2, 1e3, 1e4, 1e5):
        for th in _angles_off_xi(par, 8):
            for t in np.arange(4) * par.period / 4:
                r = solve_r_of_h(par, fs, h, t, th)
                worst = max(worst, abs(hamiltonian_h(par, fs, ActionAngle(r, th), t) - h) / h)
    return _result(6, "implicit inversion", "max |h(r(h)) - h|/h", worst, 1e-9, worst < 1e-9, 30)


def c7_mean_potential(cfg):
    par = cfg.params
    fs = cfg.forcing
    hs = np.logspace(2, 5, 13)
    d1 = [mean_potential_derivs(par, fs, h, 1) for h in hs] + [mean_potential_fd(par, fs, h, 1) for h in hs[::4]]
    d2 = [mean_potential_derivs(par, fs, h, 2) for h in hs] + [mean_potential_fd(par, fs, h, 2) for h in hs[::4]]
    signs = min(d1) > 0 and max(d2) < 0
    grid = dyadic_grid(1e2, 1e5)
    slope, _ = loglog_fit(grid, [mean_potential(par, fs, h) for h in grid])
    claimed = (fs.gamma + 1.0) / par.p
    dev = abs(slope - claimed)
    return _result(7, "averaged potential signs and scaling", "|slope - (gamma+1)/p|", dev, 0.05,
                   signs and dev <= 0.05, 30,
                   (f"min Fbar' {min(d1):.3g}", f"max Fbar'' {max(d2):.3g}", f"slope {slope:.4f}"))


def c8_remainder(cfg):
    par = cfg.params
    rep = estimate_scan(par, cfg.forcing, "remainder", dyadic_grid(1e2, 1e5))
    bound = rep.claimed_slope + 0.1
    return _result(8, "remainder decay", "fitted slope", rep.fitted_slope, bound,
                   rep.fitted_slope <= bound, 60)


def c9_twist(cfg):
    par = cfg.params
    grid = dyadic_grid(1e2, 1e4)
    rep = twist_diagnostic(par, cfg.forcing.without_e(), grid, tol=cfg.tol, threads=cfg.threads)
    diffs = np.diff(rep.extra["advance"])
    ok = rep.extra["direction"] == "decreasing"
    # metric: largest successive difference (must be < 0 for strict decrease)
    return _result(9, "twist", "max successive advance difference", float(diffs.max()), 0.0, ok, 300,
                   (f"direction {rep.extra['direction']}", f"slope {rep.fitted_slope:.4f} "
                    f"(claimed {rep.claimed_slope:.4f})"))


def _curve_fraction(par, cfg, ics):
    verdicts = [detect_invariant_curve(par, cfg.forcing, ic, cfg.curve_iterates, tol=cfg.tol) for ic in ics]
    good = [v for v in verdicts if v.is_curve and v.residual < 1e-3]
    return len(good) / len(verdicts), verdicts


def c10_bounded(cfg):
    par = cfg.bounded_params
    ics = sample_initial_conditions(par, cfg.n_ics, cfg.seed, cfg.amplitude_range)
    recs = boundedness_experiment(par, cfg.forcing, ics, cfg.horizon, tol=cfg.tol, threads=cfg.threads)
    frac_bounded = float(np.mean([r.second_half_max <= 1.5 * r.first_half_max for r in recs]))
    frac_curve, _ = _curve_fraction(par, cfg, ics)
    ok = frac_bounded >= 0.9 and frac_curve >= 0.6
    notes = [f"a={par.a:g} b={par.b:g} omega={par.omega:.6g}",
             f"bounded fraction {frac_bounded:.2f}", f"curve fraction {frac_curve:.2f}"]
    if cfg.report_main_curves and (par.a, par.b) != (cfg.a, cfg.b):
        main = cfg.params
        ics_m = sample_initial_conditions(main, cfg.n_ics, cfg.seed, cfg.amplitude_range)
        fm, _ = _curve_fraction(main, cfg, ics_m)
        notes.append(f"info: curve fraction at a={main.a:g} b={main.b:g} (omega={main.omega:.6g}) {fm:.2f}")
    return _result(10, "boundedness and invariant curves", "min(bounded/0.9, curve/0.6)",
                   min(frac_bounded / 0.9, frac_curve / 0.6), 1.0, ok, 1200, notes)


CRITERIA = {1: c1_ptrig, 2: c2_ip, 3: c3_aux, 4: c4_chart, 5: c5_baseline, 6: c6_inversion,
            7: c7_mean_potential, 8: c8_remainder, 9: c9_twist, 10: c10_bounded}


def run_acceptance(cfg: AcceptanceConfig | None = None, only=None, log=None) -> list:
    """Run the numbered checks (all by default) and return their results in order."""
    cfg = cfg or AcceptanceConfig()
    out = []
    for num in sorted(CRITERIA if only is None else only):
        t0 = time.perf_counter()
        res = CRITERIA[num](cfg)
        res = CriterionResult(**{**res.__dict__, "runtime": time.perf_counter() - t0})
        if log is not None:
            log(res.line())
        out.append(res)
    return out
