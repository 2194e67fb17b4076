"""Passive velocity field control with fractional-power energy compensation.

The torque is ``(G + R) qda - S [qda]^(r1/r2)``.  ``G`` and ``R`` are
skew-symmetric, so they steer the velocity toward the field without doing
work; only the ``S`` term moves energy in or out, pushing the augmented
kinetic energy toward ``kd_a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .field import FieldSample


@dataclass(frozen=True)
class PvfcGains:
    Ea: float = 3000.0
    kd_a: float = 30.0
    r1: int = 3
    r2: int = 5
    kappa: float = 2.0
    K2: np.ndarray = field(default_factory=lambda: 5.0 * np.eye(3))
    delta1: float = -0.01
    delta2: float = 0.01
    eta_min: float = -1.0
    eta_max: float = 1.0

    def __post_init__(self):
        for name in ("r1", "r2"):
            r = getattr(self, name)
            if int(r) != r or r <= 0 or int(r) % 2 == 0:
                raise ValueError(f"{name} must be a positive odd integer, got {r!r}")
        if not self.r1 < self.r2:
            raise ValueError(f"r1 must be smaller than r2, got r1={self.r1}, r2={self.r2}")
        K2 = np.asarray(self.K2, dtype=float)
        if K2.ndim != 2 or K2.shape[0] != K2.shape[1] or np.any(K2 != np.diag(np.diag(K2))):
            raise ValueError("K2 must be a square diagonal matrix")
        if np.any(np.diag(K2) <= 0):
            raise ValueError("K2 diagonal entries must be positive")
        if not (self.delta1 < 0 < self.delta2):
            raise ValueError("deadband edges must satisfy delta1 < 0 < delta2")
        if not (self.eta_min < 0 < self.eta_max):
            raise ValueError("saturation plateaus must satisfy eta_min < 0 < eta_max")
        if not (self.Ea > 0 and self.kd_a >= 0):
            raise ValueError("Ea must be > 0 and kd_a >= 0")
        object.__setattr__(self, "r1", int(self.r1))
        object.__setattr__(self, "r2", int(self.r2))
        object.__setattr__(self, "K2", K2)

    @property
    def exponent(self) -> float:
        return self.r1 / self.r2


@dataclass(frozen=True)
class PvfcIntermediates:
    w: np.ndarray
    P: np.ndarray
    p: np.ndarray
    G: np.ndarray
    R: np.ndarray
    S: np.ndarray


def momenta(Ma, Ca, fs: FieldSample, qda):
    """Field inverse-dynamics force ``w`` with the desired and actual momenta ``P`` and ``p``."""
    w = Ma @ fs.Vadot + Ca @ fs.Va
    return w, Ma @ fs.Va, Ma @ qda


def coupling_matrices(w, P, p, g: PvfcGains):
    G = (np.outer(w, P) - np.outer(P, w)) / (2.0 * g.Ea)
    R = g.kappa * (np.outer(P, p) - np.outer(p, P))
    return G, R


def saturation(e: float, g: PvfcGains) -> float:
    """Cosine-smoothed step: ``eta_min`` below ``delta1``, ``eta_max`` above ``delta2``."""
    if e < g.delta1:
        return g.eta_min
    if e < 0:
        return 0.5 * g.eta_min * (1.0 - math.cos(math.pi * e / g.delta1))
    if e == 0:
        return 0.0
    if e <= g.delta2:
        return 0.5 * g.eta_max * (1.0 - math.cos(math.pi * e / g.delta2))
    return g.eta_max


def saturation_slope(e: float, g: PvfcGains) -> float:
    """Derivative of :func:`saturation` with respect to ``e`` (zero on the plateaus)."""
    if e < g.delta1 or e > g.delta2:
        return 0.0
    if e < 0:
        return 0.5 * g.eta_min * math.pi / g.delta1 * math.sin(math.pi * e / g.delta1)
    return 0.5 * g.eta_max * math.pi / g.delta2 * math.sin(math.pi * e / g.delta2)


def frac_pow(v, r1: int, r2: int) -> np.ndarray:
    """Signed power ``sgn(v) |v|^(r1/r2)`` element-wise, with 0 -> 0."""
    v = np.asarray(v, dtype=float)
    mag = np.abs(v)
    out = np.zeros_like(v)
    nz = mag > 0
    out[nz] = np.sign(v[nz]) * np.exp((r1 / r2) * np.log(mag[nz]))
    return out


def energy_matrix(ka: float, g: PvfcGains) -> np.ndarray:
    return saturation(ka - g.kd_a, g) * g.K2


def control_torque(G, R, S, qda, g: PvfcGains) -> np.ndarray:
    return (G + R) @ qda - S @ frac_pow(qda, g.r1, g.r2)


def alpha(ka: float, Ea: float) -> float:
    """Ratio of actual to field speed, ``sqrt(ka / Ea)``."""
    if ka < 0:
        raise ValueError("kinetic energy must be non-negative")
    return math.sqrt(ka / Ea)


def pvfc_torque(Ma, Ca, fs: FieldSample, qda, g: PvfcGains, compensate: bool = True):
    """Full torque law; ``compensate=False`` drops the ``S`` term (plain PVFC).

    Returns ``(tau_a, intermediates)``.
    """
    qda = np.asarray(qda, dtype=float)
    w, P, p = momenta(Ma, Ca, fs, qda)
    G, R = coupling_matrices(w, P, p, g)
    if compensate:
        ka = 0.5 * qda @ Ma @ qda
        S = energy_matrix(ka, g)
    else:
        S = np.zeros_like(g.K2)
    return control_torque(G, R, S, qda, g), PvfcIntermediates(w, P, p, G, R, S)
