"""Time-varying desired velocity field with a flywheel energy reservoir.

The manipulator part is a sliding surface around the reference joint path
``Q(t)``; the flywheel part absorbs whatever is left of the energy budget
``Ea`` so the augmented field always carries exactly ``Ea`` of kinetic
energy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import RobotParams, jacobian, mass_matrix, pseudoinverse
from .human import IntentSample


class FieldEnergyExceeded(ArithmeticError):
    """The manipulator field alone needs more than the energy budget."""

    def __init__(self, energy: float, Ea: float):
        super().__init__(f"manipulator field energy {energy:.6g} J exceeds budget Ea={Ea:.6g} J")
        self.energy = energy
        self.Ea = Ea


@dataclass(frozen=True)
class FieldParams:
    K1: np.ndarray = field(default_factory=lambda: 100.0 * np.eye(2))
    Ea: float = 3000.0
    h_fd: float = 1e-5

    def __post_init__(self):
        K1 = np.asarray(self.K1, dtype=float)
        if K1.shape != (2, 2) or np.linalg.eigvalsh((K1 + K1.T) / 2).min() <= 0:
            raise ValueError("K1 must be a 2x2 positive definite matrix")
        if not self.Ea > 0:
            raise ValueError("Ea must be > 0")
        if not self.h_fd > 0:
            raise ValueError("h_fd must be > 0")
        object.__setattr__(self, "K1", K1)


@dataclass(frozen=True)
class ReferenceState:
    Q: np.ndarray
    Qd: np.ndarray


@dataclass(frozen=True)
class FieldSample:
    V: np.ndarray
    Vf: float
    Va: np.ndarray
    Vadot: np.ndarray | None = None
    singular: bool = False
    manip_energy: float = 0.0


def reference_rate(q, xda, p: RobotParams):
    """Joint-space reference rate ``J+(q) xd_a``; returns ``(Qd, singular)``."""
    Jp, singular = pseudoinverse(jacobian(q, p))
    return np.einsum("...ij,...j->...i", Jp, xda), singular


def manipulator_field(q, ref: ReferenceState, K1) -> np.ndarray:
    return np.asarray(ref.Qd) - np.einsum("ij,...j->...i", K1, np.asarray(q) - ref.Q)


def _flywheel_from_energy(manip_energy, fp: FieldParams, p: RobotParams):
    radicand = (2.0 / p.mf) * (fp.Ea - manip_energy)
    if np.any(radicand < 0):
        raise FieldEnergyExceeded(float(np.max(manip_energy)), fp.Ea)
    return np.sqrt(radicand)


def flywheel_field(V, q, fp: FieldParams, p: RobotParams) -> float:
    """Flywheel speed that tops the field energy up to ``Ea`` (positive root).

    Raises :class:`FieldEnergyExceeded` when ``V^T M V / 2 > Ea``.
    """
    V = np.asarray(V, dtype=float)
    manip = 0.5 * np.einsum("...i,...ij,...j->...", V, mass_matrix(q, p), V)
    return _flywheel_from_energy(manip, fp, p)


def augmented_field(q, ref: ReferenceState, fp: FieldParams, p: RobotParams) -> FieldSample:
    V = manipulator_field(q, ref, fp.K1)
    manip = 0.5 * V @ mass_matrix(q, p) @ V
    Vf = float(_flywheel_from_energy(manip, fp, p))
    return FieldSample(V, Vf, np.append(V, Vf), manip_energy=float(manip))


def _field_batch(q, Q, xda, fp: FieldParams, p: RobotParams):
    """Augmented field for stacked inputs; the pseudoinverse is taken at each ``q``."""
    Qd, singular = reference_rate(q, xda, p)
    V = Qd - (q - Q) @ fp.K1.T
    manip = 0.5 * np.einsum("...i,...ij,...j->...", V, mass_matrix(q, p), V)
    Vf = _flywheel_from_energy(manip, fp, p)
    return np.concatenate([V, Vf[..., None]], axis=-1), Qd, manip, singular


def tracking_field(q, qd, Q, xda, xdda, fp: FieldParams, p: RobotParams) -> FieldSample:
    """Field driven by a task-space reference velocity, with its total time derivative.

    The time derivative is a central difference: in each joint coordinate
    (weighted by ``qd``) and in time, advancing ``Q`` along ``Qd`` and the task
    reference velocity along ``xdda``.  All seven evaluations run as one batch.
    """
    q = np.asarray(q, dtype=float)
    Q = np.asarray(Q, dtype=float)
    xda = np.asarray(xda, dtype=float)
    h = fp.h_fd
    Qd0, _ = reference_rate(q, xda, p)
    dq = h * np.eye(2)
    qs = np.stack([q, q + dq[0], q - dq[0], q + dq[1], q - dq[1], q, q])
    Qs = np.stack([Q, Q, Q, Q, Q, Q + h * Qd0, Q - h * Qd0])
    xs = np.stack([xda] * 5 + [xda + h * np.asarray(xdda), xda - h * np.asarray(xdda)])
    Va_all, _, manip, singular = _field_batch(qs, Qs, xs, fp, p)
    Va = Va_all[0]
    d_dq = np.stack([Va_all[1] - Va_all[2], Va_all[3] - Va_all[4]], axis=-1) / (2 * h)
    d_dt = (Va_all[5] - Va_all[6]) / (2 * h)
    Vadot = d_dq @ np.asarray(qd, dtype=float)[:2] + d_dt
    return FieldSample(Va[:2], float(Va[2]), Va, Vadot, bool(singular[0]), manip_energy=float(manip[0]))


def field_time_derivative(q, qd, Q, xda, xdda, fp: FieldParams, p: RobotParams) -> np.ndarray:
    """Total time derivative of the augmented field along the motion ``qd``."""
    return tracking_field(q, qd, Q, xda, xdda, fp, p).Vadot


def opvfc_field(q, qd, Q, estimate: IntentSample, fp: FieldParams, p: RobotParams) -> FieldSample:
    """Field driven straight by the estimated human velocity (no admittance stage)."""
    return tracking_field(q, qd, Q, estimate.vel, estimate.acc, fp, p)
