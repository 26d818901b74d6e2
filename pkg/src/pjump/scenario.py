"""TOML scenario files: schema, defaults and validation.

A scenario names the equation (``p, a, b``), the forcing and the integrator
tolerance, plus optional per-experiment tables.  Every key is checked against
the schema below; unknown keys and wrong types are rejected with the table and
key name (and, for syntax errors, the line) in the message.
"""
from __future__ import annotations

import hashlib
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .dynamics import DEFAULT_TOL
from .errors import DomainError, ParameterError
from .forcing import ForcingSpec, Harmonic
from .jumping import derive_params
from .reduction import hypothesis_check

__all__ = ["Scenario", "ScenarioError", "load_scenario", "parse_scenario", "SCHEMA",
           "REFERENCE_SCENARIO"]

REFERENCE_SCENARIO = """\
# Reference scenario: p = 3, a = 8, b = 1, f(x) = sign(x)|x|^0.4, e(t) = 0.5 cos(pi t / pi_p).

[equation]
p = 3.0
a = 8.0
b = 1.0

[forcing]
beta = 1.0
gamma = 0.4
harmonics = [{ k = 1, amplitude = 0.5, phase = 0.0 }]

[integrator]
tol = 1e-12

[run]
seed = 0

[accept]
# omega = 4/3 here is rational, which makes large-amplitude Poincare orbits
# nearly periodic; the curve/boundedness check runs at a generic omega instead.
bounded_a = 8.0
bounded_b = 2.0
n_ics = 20
horizon = 500
curve_iterates = 1000
"""


class ScenarioError(ParameterError):
    """Invalid scenario file; the message names the offending table/key."""


_NUM = (int, float)

# table -> key -> (type, default); a default of ... marks a required key
SCHEMA = {
    "equation": {"p": (_NUM, ...), "a": (_NUM, ...), "b": (_NUM, ...)},
    "forcing": {"beta": (_NUM, 0.0), "gamma": (_NUM, 0.5), "harmonics": (list, [])},
    "integrator": {"tol": (_NUM, DEFAULT_TOL)},
    "run": {"seed": (int, 0)},
    "initial": {"x": (_NUM, None), "y": (_NUM, None), "r": (_NUM, None),
                "theta": (_NUM, None), "t": (_NUM, 0.0)},
    "simulate": {"periods": (int, 10), "samples_per_period": (int, 64)},
    "poincare": {"iterates": (int, 1000)},
    "rotation": {"iterates": (int, 1000), "threshold": (_NUM, 1e-3)},
    "twist": {"r_min": (_NUM, 1e2), "r_max": (_NUM, 1e4), "n_theta": (int, 8), "window": (int, 64)},
    "curves": {"n_ics": (int, 20), "iterates": (int, 1000), "degree": (int, 16),
               "threshold": (_NUM, 1e-3), "gap_factor": (_NUM, 10.0),
               "amplitude_min": (_NUM, 1e2), "amplitude_max": (_NUM, 1e3)},
    "bounded": {"n_ics": (int, 20), "horizon": (int, 500),
                "amplitude_min": (_NUM, 1e2), "amplitude_max": (_NUM, 1e3)},
    "scan": {"quantities": (list, ["F", "g", "h-linearity", "r-of-h", "remainder", "mean-potential"]),
             "orders": (list, [0, 1]), "h_min": (_NUM, 1e2), "h_max": (_NUM, 1e5)},
    "accept": {"bounded_a": (_NUM, None), "bounded_b": (_NUM, None), "n_ics": (int, 20),
               "horizon": (int, 500), "curve_iterates": (int, 1000)},
}
_HARMONIC_KEYS = {"k": int, "amplitude": _NUM, "phase": _NUM}


@dataclass(frozen=True)
class Scenario:
    p: float
    a: float
    b: float
    forcing: ForcingSpec
    tol: float
    seed: int
    tables: dict
    sha256: str
    source: str = "<string>"
    hypothesis: object = field(default=None, compare=False)

    @property
    def params(self):
        return derive_params(self.a, self.b, self.p)

    def section(self, name: str) -> dict:
        return self.tables[name]

    @property
    def is_baseline(self) -> bool:
        """Unperturbed ``f = e = 0``: allowed for orbit dumps and sanity runs."""
        return self.forcing.is_zero


def _typecheck(where, value, kind):
    if kind is _NUM:
        ok = isinstance(value, _NUM) and not isinstance(value, bool)
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        name = "number" if kind is _NUM else kind.__name__
        raise ScenarioError(f"{where}: expected {name}, got {type(value).__name__}")
    if kind is _NUM and not math.isfinite(value):
        raise ScenarioError(f"{where}: must be finite")


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    """Parse and validate scenario TOML text.

    The hypothesis report is attached but not enforced; the CLI decides per
    subcommand whether a failure is fatal.
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{source}: TOML syntax error: {exc}") from None
    for table in raw:
        if table not in SCHEMA:
            raise ScenarioError(f"{source}: unknown table [{table}]")
        if not isinstance(raw[table], dict):
            raise ScenarioError(f"{source}: [{table}] must be a table")
    tables = {}
    for table, keys in SCHEMA.items():
        given = raw.get(table, {})
        for key in given:
            if key not in keys:
                raise ScenarioError(f"{source}: [{table}].{key}: unknown key")
        out = {}
        for key, (kind, default) in keys.items():
            if key in given:
                _typecheck(f"{source}: [{table}].{key}", given[key], kind)
                out[key] = given[key]
            elif default is ...:
                raise ScenarioError(f"{source}: [{table}].{key}: required key missing")
            else:
                out[key] = default
        tables[table] = out

    harmonics = []
    for i, h in enumerate(tables["forcing"]["harmonics"]):
        where = f"{source}: [forcing].harmonics[{i}]"
        if not isinstance(h, dict):
            raise ScenarioError(f"{where}: expected an inline table {{k, amplitude, phase}}")
        for key in h:
            if key not in _HARMONIC_KEYS:
                raise ScenarioError(f"{where}.{key}: unknown key")
        for key in ("k", "amplitude"):
            if key not in h:
                raise ScenarioError(f"{where}.{key}: required key missing")
        for key, kind in _HARMONIC_KEYS.items():
            if key in h:
                _typecheck(f"{where}.{key}", h[key], kind)
        harmonics.append(Harmonic(h["k"], float(h["amplitude"]), float(h.get("phase", 0.0))))

    eq = tables["equation"]
    try:
        forcing = ForcingSpec(float(tables["forcing"]["beta"]), float(tables["forcing"]["gamma"]),
                              tuple(harmonics))
        derive_params(eq["a"], eq["b"], eq["p"])
    except (ParameterError, DomainError) as exc:
        raise ScenarioError(f"{source}: {exc}") from None
    tol = float(tables["integrator"]["tol"])
    if not tol > 0:
        raise ScenarioError(f"{source}: [integrator].tol: must be positive")
    seed = tables["run"]["seed"]
    if seed < 0:
        raise ScenarioError(f"{source}: [run].seed: must be non-negative")
    ini = tables["initial"]
    has_xy = ini["x"] is not None or ini["y"] is not None
    has_rt = ini["r"] is not None or ini["theta"] is not None
    if has_xy and has_rt:
        raise ScenarioError(f"{source}: [initial]: give either x, y or r, theta, not both")
    if has_xy and (ini["x"] is None or ini["y"] is None):
        raise ScenarioError(f"{source}: [initial]: x and y must be given together")
    if has_rt and (ini["r"] is None or ini["theta"] is None):
        raise ScenarioError(f"{source}: [initial]: r and theta must be given together")
    if ini["r"] is not None and not ini["r"] > 0:
        raise ScenarioError(f"{source}: [initial].r: must be positive")
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return Scenario(p=float(eq["p"]), a=float(eq["a"]), b=float(eq["b"]), forcing=forcing, tol=tol,
                    seed=int(seed), tables=tables, sha256=digest, source=source,
                    hypothesis=hypothesis_check(forcing, float(eq["p"])))


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ScenarioError(f"{path}: scenario file not found") from None
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read scenario file: {exc.strerror}") from None
    return parse_scenario(text, str(path))
