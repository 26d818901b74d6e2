"""Command-line front end: ``pjump <subcommand> --scenario FILE --out DIR``.

Every subcommand validates the scenario first, computes everything in
memory, then writes its CSV files and ``manifest.json`` atomically.  Exit
codes: 0 ok, 2 invalid input, 3 numerical failure, 4 acceptance failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
import tempfile
from importlib import metadata
from pathlib import Path

import numpy as np

from . import ptrig
from .acceptance import CSV_HEADER, AcceptanceConfig, run_acceptance
from .analysis import (boundedness_experiment, detect_invariant_curve, parallel_map,
                       rotation_number, sample_initial_conditions, twist_diagnostic)
from .dynamics import (ActionAngle, PhaseState, from_action_angle, hamiltonian_H, integrate,
                       poincare_map, to_action_angle)
from .errors import (AnalysisError, DomainError, HypothesisError, IntegrationError, InversionError,
                     ParameterError)
from .jumping import aux_energy, aux_integrals, aux_integrals_quad, aux_orbit
from .reduction import ESTIMATES, dyadic_grid, estimate_scan
from .scenario import REFERENCE_SCENARIO, Scenario, ScenarioError, load_scenario, parse_scenario

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_ACCEPT = 0, 2, 3, 4

# subcommands that need a forcing satisfying the growth/sign hypotheses
_NEEDS_HYPOTHESES = {"twist", "scan", "accept"}


class Output:
    """CSV files accumulated in memory and flushed atomically at the end."""

    def __init__(self):
        self.files = {}

    def table(self, name, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        self.files[name] = buf.getvalue()

    def write(self, out_dir: Path, manifest: dict):
        out_dir.mkdir(parents=True, exist_ok=True)
        manifest = dict(manifest)
        manifest["files"] = {k: hashlib.sha256(v.encode()).hexdigest() for k, v in sorted(self.files.items())}
        payload = dict(self.files)
        payload["manifest.json"] = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        for name, text in payload.items():
            fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.", suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, out_dir / name)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _versions():
    out = {"python": platform.python_version()}
    for dist in ("artifact", "numpy", "scipy", "numba"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            out[dist] = "unknown"
    return out


def _initial_state(sc: Scenario) -> PhaseState:
    ini = sc.section("initial")
    if ini["x"] is not None:
        return PhaseState(float(ini["x"]), float(ini["y"]), float(ini["t"]))
    r = 1e3 if ini["r"] is None else float(ini["r"])
    th = 0.5 if ini["theta"] is None else float(ini["theta"])
    x, y = from_action_angle(sc.params, ActionAngle(r, th))
    return PhaseState(float(x), float(y), float(ini["t"]))


# --- subcommands ---

def cmd_ptrig_check(sc, args, out):
    ps = sorted({2.0, 2.5, 3.0, 4.0} | ({sc.p} if sc is not None else set()))
    rows = []
    for p in ps:
        t = np.linspace(0.0, 2.0 * ptrig.pi_p(p), 1000)
        C, D = ptrig.sinp_pair(p, t)
        fi = float(np.max(np.abs((p - 1) * np.abs(D) ** p + np.abs(C) ** p - (p - 1))))
        pq, ip, ipq = ptrig.half_period_quad(p), ptrig.ip_constant(p), ptrig.ip_quad(p)
        rows.append((p, ptrig.pi_p(p), pq, abs(ptrig.pi_p(p) - pq) / pq, ip, ipq, abs(ip - ipq) / ip, fi))
    out.table("ptrig_check.csv", ("p", "pi_p", "pi_p_quad", "pi_p_rel_err", "I_p", "I_p_quad",
                                  "I_p_rel_err", "first_integral_max_err"), rows)
    rows = []
    for p in ps:
        t = np.linspace(0.0, 2.0 * ptrig.pi_p(p), 257)
        rows.extend((p, ti, c, d) for ti, c, d in zip(t, *ptrig.sinp_pair(p, t)))
    out.table("sinp.csv", ("p", "t", "sinp", "sinp_deriv"), rows)
    return EXIT_OK


def cmd_aux_check(sc, args, out):
    par = sc.params
    t = np.linspace(0.0, par.period, 1001)
    v, u = aux_orbit(par, t)
    e = aux_energy(par, t)
    out.table("aux_orbit.csv", ("theta", "v", "u", "energy_defect"),
              zip(t, v, u, np.asarray(e) - par.a1 / par.q))
    cf, qd = aux_integrals(par), aux_integrals_quad(par)
    out.table("aux_check.csv", ("quantity", "closed_form", "quadrature", "abs_err"),
              [("int_v_positive_quarter", cf[0], qd[0], abs(cf[0] - qd[0])),
               ("int_v_negative_lobe", cf[1], qd[1], abs(cf[1] - qd[1])),
               ("energy_max_defect", par.a1 / par.q, par.a1 / par.q,
                float(np.max(np.abs(np.asarray(e) - par.a1 / par.q))))])
    out.table("params.csv", ("a", "b", "p", "q", "omega", "a1", "b1", "d", "pi_p"),
              [(par.a, par.b, par.p, par.q, par.omega, par.a1, par.b1, par.d, par.pi_p)])
    return EXIT_OK


def cmd_simulate(sc, args, out):
    par = sc.params
    cfg = sc.section("simulate")
    st = _initial_state(sc)
    n = cfg["periods"] * cfg["samples_per_period"]
    if n < 1:
        raise ParameterError("[simulate]: periods and samples_per_period must be positive")
    times = st.t + par.period * np.arange(1, n + 1) / cfg["samples_per_period"]
    orb = integrate(par, sc.forcing, st, float(times[-1]), tol=args.tol, samples=times)
    t = np.concatenate([[st.t], orb.t])
    x = np.concatenate([[st.x], orb.x])
    y = np.concatenate([[st.y], orb.y])
    aa = to_action_angle(par, x, y)
    xdot = -par.omega * np.sign(y) * np.abs(y) ** (par.q - 1.0)
    H = hamiltonian_H(par, sc.forcing, x, y, t)
    out.table("orbit.csv", ("t", "x", "y", "xdot", "r", "theta", "H"),
              zip(t, x, y, xdot, np.atleast_1d(aa.r), np.atleast_1d(aa.theta), np.atleast_1d(H)))
    return EXIT_OK


def cmd_poincare(sc, args, out):
    par = sc.params
    sec = poincare_map(par, sc.forcing, _initial_state(sc), sc.section("poincare")["iterates"], tol=args.tol)
    out.table("poincare.csv", ("n", "t", "x", "y", "r", "theta", "peak"),
              zip(range(len(sec)), sec.t, sec.x, sec.y, sec.r, sec.theta, sec.peaks))
    return EXIT_OK


def cmd_rotation(sc, args, out):
    cfg = sc.section("rotation")
    est = rotation_number(sc.params, sc.forcing, _initial_state(sc), cfg["iterates"], tol=args.tol,
                          threshold=cfg["threshold"])
    omega = sc.params.omega
    out.table("rotation.csv", ("value", "iterates", "residual", "converged", "mean_advance", "frac_omega"),
              [(est.value, est.iterates, est.residual, est.converged, est.mean_advance,
                omega - math.floor(omega))])
    return EXIT_OK


def cmd_twist(sc, args, out):
    cfg = sc.section("twist")
    grid = dyadic_grid(cfg["r_min"], cfg["r_max"])
    rep = twist_diagnostic(sc.params, sc.forcing.without_e(), grid, n_theta=cfg["n_theta"], window=cfg["window"],
                           tol=args.tol, threads=args.threads)
    out.table("twist.csv", ("r", "advance"), zip(rep.extra["r_grid"], rep.extra["advance"]))
    out.table("twist_fit.csv", ("r_mid", "abs_dadvance_dr"), zip(rep.grid, rep.observed))
    out.table("twist_summary.csv", ("direction", "monotone", "fitted_slope", "claimed_slope",
                                    "tolerance", "passed"),
              [(rep.extra["direction"], rep.extra["monotone"], rep.fitted_slope, rep.claimed_slope,
                rep.tolerance, rep.passed)])
    return EXIT_OK


def cmd_curves(sc, args, out):
    cfg = sc.section("curves")
    par = sc.params
    ics = sample_initial_conditions(par, cfg["n_ics"], args.seed, (cfg["amplitude_min"], cfg["amplitude_max"]))

    def one(ic):
        return detect_invariant_curve(par, sc.forcing, ic, cfg["iterates"], degree=cfg["degree"],
                                      threshold=cfg["threshold"], gap_factor=cfg["gap_factor"],
                                      tol=args.tol, check_confinement=True)

    verdicts = parallel_map(one, ics, args.threads)
    out.table("curves.csv", ("ic", "x0", "y0", "verdict", "residual", "max_gap", "mean_r", "confined"),
              [(i, ic.x, ic.y, v.verdict, v.residual, v.max_gap, v.mean_r, v.confined)
               for i, (ic, v) in enumerate(zip(ics, verdicts))])
    return EXIT_OK


def cmd_bounded(sc, args, out):
    cfg = sc.section("bounded")
    par = sc.params
    ics = sample_initial_conditions(par, cfg["n_ics"], args.seed, (cfg["amplitude_min"], cfg["amplitude_max"]))
    recs = boundedness_experiment(par, sc.forcing, ics, cfg["horizon"], tol=args.tol, threads=args.threads)
    out.table("bounded.csv", ("ic", "x0", "y0", "horizon", "sup_norm", "first_half_max",
                              "second_half_max", "ratio"),
              [(i, r.ic.x, r.ic.y, r.horizon, r.sup_norm, r.first_half_max, r.second_half_max, r.ratio)
               for i, r in enumerate(recs)])
    return EXIT_OK


def cmd_scan(sc, args, out):
    cfg = sc.section("scan")
    for q in cfg["quantities"]:
        if q not in ESTIMATES:
            raise ScenarioError(f"[scan].quantities: unknown quantity {q!r}; choose from {sorted(ESTIMATES)}")
    for k in cfg["orders"]:
        if k not in (0, 1, 2):
            raise ScenarioError("[scan].orders: derivative orders must be 0, 1 or 2")
    grid = dyadic_grid(cfg["h_min"], cfg["h_max"])
    jobs = [(q, k) for q in cfg["quantities"] for k in cfg["orders"]
            if not (q in ("h-linearity", "remainder") and k != 0)]
    reps = parallel_map(lambda j: estimate_scan(sc.params, sc.forcing, j[0], grid, k=j[1]), jobs, args.threads)
    out.table("scan.csv", ("quantity", "order", "grid", "observed"),
              [(r.quantity, r.order, g, o) for r in reps for g, o in zip(r.grid, r.observed)])
    out.table("scan_fit.csv", ("quantity", "order", "fitted_slope", "claimed_slope", "bound",
                               "tolerance", "constant", "passed"),
              [(r.quantity, r.order, r.fitted_slope, r.claimed_slope, r.bound, r.tolerance,
                r.constant, r.passed) for r in reps])
    return EXIT_OK


def cmd_accept(sc, args, out):
    acc = sc.section("accept")
    cfg = AcceptanceConfig(p=sc.p, a=sc.a, b=sc.b, forcing=sc.forcing, tol=args.tol, seed=args.seed,
                           threads=args.threads, bounded_a=acc["bounded_a"], bounded_b=acc["bounded_b"],
                           n_ics=acc["n_ics"], horizon=acc["horizon"], curve_iterates=acc["curve_iterates"])
    results = run_acceptance(cfg, log=print)
    out.table("acceptance.csv", CSV_HEADER + ("notes",),
              [(r.number, r.name, r.metric, r.value, r.threshold, r.passed, "; ".join(r.notes))
               for r in results])
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed")
    return EXIT_OK if n_pass == len(results) else EXIT_ACCEPT


COMMANDS = {
    "ptrig-check": (cmd_ptrig_check, "p-trig identities and constants"),
    "aux-check": (cmd_aux_check, "auxiliary-orbit identities"),
    "simulate": (cmd_simulate, "dense orbit dump with action, angle and Hamiltonian"),
    "poincare": (cmd_poincare, "Poincare-section iterates"),
    "rotation": (cmd_rotation, "rotation number of one orbit"),
    "twist": (cmd_twist, "angular advance versus action (forcing e dropped)"),
    "curves": (cmd_curves, "invariant-curve classification of sampled orbits"),
    "bounded": (cmd_bounded, "windowed amplitude maxima of sampled orbits"),
    "scan": (cmd_scan, "log-log growth-rate scans"),
    "accept": (cmd_accept, "full acceptance suite"),
}


def build_parser():
    ap = argparse.ArgumentParser(prog="pjump", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--scenario", type=Path,
                        required=name not in ("ptrig-check", "accept"),
                        help="scenario TOML file" + (" (default: built-in reference)" if name == "accept" else ""))
        sp.add_argument("--out", type=Path, required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="overrides [run].seed")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for independent orbits")
        sp.add_argument("--tol", type=float, default=None, help="overrides [integrator].tol")
    return ap


def _load(args):
    if args.scenario is not None:
        return load_scenario(args.scenario)
    if args.command == "accept":
        return parse_scenario(REFERENCE_SCENARIO, "<reference>")
    return None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fn = COMMANDS[args.command][0]
    try:
        sc = _load(args)
        if args.threads < 1:
            raise ParameterError("--threads must be >= 1")
        if args.seed is not None and args.seed < 0:
            raise ParameterError("--seed must be non-negative")
        if args.tol is not None and not (math.isfinite(args.tol) and args.tol > 0):
            raise ParameterError("--tol must be positive")
        if sc is not None:
            needs = args.command in _NEEDS_HYPOTHESES or not sc.is_baseline
            if needs:
                sc.hypothesis.raise_if_failed()
            args.seed = sc.seed if args.seed is None else args.seed
            args.tol = sc.tol if args.tol is None else args.tol
        else:
            args.seed = 0 if args.seed is None else args.seed
        out = Output()
        status = fn(sc, args, out)
    except HypothesisError as exc:
        print(f"pjump: hypothesis check failed: {'; '.join(exc.failures)}", file=sys.stderr)
        return EXIT_INVALID
    except (ParameterError, DomainError) as exc:
        print(f"pjump: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (IntegrationError, InversionError, AnalysisError) as exc:
        print(f"pjump: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    manifest = {
        "command": args.command,
        "scenario_sha256": None if sc is None else sc.sha256,
        "seed": args.seed,
        "tol": args.tol,
        "threads": args.threads,
        "versions": _versions(),
    }
    out.write(args.out, manifest)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
