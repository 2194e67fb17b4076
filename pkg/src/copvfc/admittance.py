"""Task-space reference generators driven by the interaction force."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .human import IntentSample


@dataclass(frozen=True)
class AdmittanceParams:
    Md: np.ndarray = field(default_factory=lambda: np.eye(2))
    Dd: np.ndarray = field(default_factory=lambda: 14.0 * np.eye(2))
    Kd: np.ndarray = field(default_factory=lambda: 100.0 * np.eye(2))

    def __post_init__(self):
        Md, Dd, Kd = (np.asarray(m, dtype=float) for m in (self.Md, self.Dd, self.Kd))
        for name, mat in (("Md", Md), ("Dd", Dd), ("Kd", Kd)):
            if mat.shape != (2, 2):
                raise ValueError(f"{name} must be 2x2")
        sym = lambda m: (m + m.T) / 2  # noqa: E731
        if np.linalg.eigvalsh(sym(Md)).min() <= 0:
            raise ValueError("Md must be positive definite")
        if np.linalg.eigvalsh(sym(Dd)).min() <= 0:
            raise ValueError("Dd must be positive definite")
        if np.linalg.eigvalsh(sym(Kd)).min() < 0:
            raise ValueError("Kd must be positive semi-definite")
        object.__setattr__(self, "Md", Md)
        object.__setattr__(self, "Dd", Dd)
        object.__setattr__(self, "Kd", Kd)


@dataclass(frozen=True)
class AdmittanceState:
    xa: np.ndarray
    xda: np.ndarray


def md_accel(s: AdmittanceState, intent: IntentSample, f_ext, p: AdmittanceParams) -> np.ndarray:
    """Mass-damper reference: ``Md (xdd_a - xdd_h) + Dd (xd_a - xd_h) = f_ext``."""
    rhs = f_ext - p.Dd @ (s.xda - intent.vel)
    return intent.acc + np.linalg.solve(p.Md, rhs)


def mdk_accel(s: AdmittanceState, intent: IntentSample, f_ext, p: AdmittanceParams) -> np.ndarray:
    """Mass-damper-spring reference; the spring pulls ``x_a`` toward the estimate."""
    rhs = f_ext - p.Dd @ (s.xda - intent.vel) - p.Kd @ (s.xa - intent.pos)
    return intent.acc + np.linalg.solve(p.Md, rhs)


def trigger_accel(s: AdmittanceState, f_ext, p: AdmittanceParams) -> np.ndarray:
    """Force-triggered model: motion only while the human pushes."""
    return np.linalg.solve(p.Md, f_ext - p.Dd @ s.xda)
