"""Perturbation ``f`` (power-law family) and periodic forcing ``e(t)``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = ["ForcingSpec", "Harmonic"]


@dataclass(frozen=True)
class Harmonic:
    k: int
    amplitude: float
    phase: float = 0.0


@dataclass(frozen=True)
class ForcingSpec:
    """``f(x) = beta sign(x) |x|^gamma`` and ``e(t) = sum c_k cos(k pi t / pi_p + phase_k)``.

    ``beta = 0`` gives the unperturbed baseline ``f = 0``; an empty harmonic
    list gives ``e = 0``.  ``gamma`` is not range-checked here, that is the job
    of :func:`pjump.reduction.hypothesis_check`.
    """

    beta: float = 0.0
    gamma: float = 0.5
    harmonics: tuple = ()

    def __post_init__(self):
        if not math.isfinite(self.beta) or self.beta < 0:
            raise ParameterError("beta must be finite and >= 0")
        if not math.isfinite(self.gamma) or self.gamma <= 0:
            raise ParameterError("gamma must be finite and > 0")
        hs = tuple(h if isinstance(h, Harmonic) else Harmonic(*h) for h in self.harmonics)
        for h in hs:
            if int(h.k) != h.k or h.k < 0:
                raise ParameterError(f"harmonic index must be a non-negative integer, got {h.k!r}")
            if not (math.isfinite(h.amplitude) and math.isfinite(h.phase)):
                raise ParameterError("harmonic amplitude and phase must be finite")
        object.__setattr__(self, "harmonics", hs)

    @classmethod
    def unperturbed(cls) -> "ForcingSpec":
        return cls(0.0, 0.5, ())

    @property
    def is_zero(self) -> bool:
        return self.beta == 0.0 and not self.harmonics

    def without_e(self) -> "ForcingSpec":
        return ForcingSpec(self.beta, self.gamma, ())

    def f(self, x):
        x = np.asarray(x, dtype=float)
        out = self.beta * np.sign(x) * np.abs(x) ** self.gamma
        return float(out) if out.ndim == 0 else out

    def big_f(self, x):
        """Antiderivative ``F(x) = beta |x|^(gamma+1) / (gamma+1)``, ``F(0) = 0``."""
        x = np.asarray(x, dtype=float)
        g1 = self.gamma + 1.0
        out = self.beta * np.abs(x) ** g1 / g1
        return float(out) if out.ndim == 0 else out

    def e(self, t, pi_p: float):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        w = math.pi / pi_p
        for h in self.harmonics:
            out = out + h.amplitude * np.cos(h.k * w * t + h.phase)
        return float(out) if out.ndim == 0 else out

    def arrays(self):
        """Harmonic data as three float arrays, for the compiled integrator."""
        ks = np.array([float(h.k) for h in self.harmonics], dtype=float)
        cs = np.array([h.amplitude for h in self.harmonics], dtype=float)
        phs = np.array([h.phase for h in self.harmonics], dtype=float)
        return ks, cs, phs
