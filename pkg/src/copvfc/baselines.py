"""Comparison controllers: admittance + task-space PID, and plain PVFC."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .admittance import AdmittanceState
from .field import FieldSample
from .pvfc import PvfcGains, pvfc_torque


@dataclass(frozen=True)
class PidGains:
    Kp: np.ndarray = field(default_factory=lambda: 300.0 * np.eye(2))
    Ki: np.ndarray = field(default_factory=lambda: 10.0 * np.eye(2))
    Kd_pid: np.ndarray = field(default_factory=lambda: 400.0 * np.eye(2))

    def __post_init__(self):
        for name in ("Kp", "Ki", "Kd_pid"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.shape != (2, 2):
                raise ValueError(f"{name} must be 2x2")
            if np.linalg.eigvalsh((m + m.T) / 2).min() < 0:
                raise ValueError(f"{name} must be positive semi-definite")
            object.__setattr__(self, name, m)


def pid_task_force(x, xd, s: AdmittanceState, integral, g: PidGains) -> np.ndarray:
    """PID on the task-space tracking error ``x_a - x``.

    ``integral`` is the accumulated error; the caller owns it (the simulator
    integrates ``x_a - x`` as part of the closed-loop state).
    """
    err = s.xa - np.asarray(x)
    return g.Kp @ err + g.Ki @ np.asarray(integral) + g.Kd_pid @ (s.xda - np.asarray(xd))


def pid_integral_update(integral, x, s: AdmittanceState, dt: float) -> np.ndarray:
    """Rectangle-rule accumulation of the tracking error for stand-alone use."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    return np.asarray(integral) + (s.xa - np.asarray(x)) * dt


def torque_from_task_force(J, f) -> np.ndarray:
    return np.asarray(J).T @ np.asarray(f)


def opvfc_torque(Ma, Ca, fs: FieldSample, qda, g: PvfcGains) -> np.ndarray:
    """Plain PVFC: skew-symmetric coupling only, no energy compensation."""
    tau, _ = pvfc_torque(Ma, Ca, fs, qda, g, compensate=False)
    return tau
