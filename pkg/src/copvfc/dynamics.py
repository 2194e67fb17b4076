"""Planar two-link arm kinematics/dynamics and the flywheel-augmented plant.

Kinematic and inertia functions broadcast over leading axes, so ``q`` may be
a single ``(2,)`` configuration or a stack ``(..., 2)``.  The augmented
helpers (:func:`augment`, :func:`forward_dynamics`) work for any ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DLS_DET_THRESHOLD = 1e-6
DLS_DAMPING = 1e-6


@dataclass(frozen=True)
class RobotParams:
    m1: float = 3.05
    m2: float = 3.05
    l1: float = 0.4
    l2: float = 0.4
    I1: float = 0.0414
    I2: float = 0.0414
    mf: float = 10.0

    def __post_init__(self):
        for name in ("m1", "m2", "l1", "l2", "I1", "I2", "mf"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"RobotParams.{name} must be strictly positive, got {value!r}")

    @property
    def inertia_terms(self) -> tuple[float, float, float]:
        """Lumped constants (M1, M2, R) of the inertia matrix."""
        M1 = self.l1**2 * (self.m1 / 4 + self.m2) + self.I1
        M2 = self.m2 * self.l2**2 / 4 + self.I2
        R = self.m2 * self.l1 * self.l2 / 2
        return M1, M2, R


@dataclass(frozen=True)
class AugmentedState:
    q: np.ndarray
    qf: float
    qd: np.ndarray
    qdf: float

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        qd = np.asarray(self.qd, dtype=float)
        if q.shape != qd.shape or q.ndim != 1:
            raise ValueError("q and qd must be 1-D vectors of equal length")
        values = np.concatenate([q, qd, [self.qf, self.qdf]])
        if not np.all(np.isfinite(values)):
            raise ValueError("AugmentedState entries must be finite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qd", qd)
        object.__setattr__(self, "qf", float(self.qf))
        object.__setattr__(self, "qdf", float(self.qdf))

    @property
    def qa(self) -> np.ndarray:
        return np.append(self.q, self.qf)

    @property
    def qda(self) -> np.ndarray:
        return np.append(self.qd, self.qdf)

    @classmethod
    def from_vectors(cls, qa, qda) -> "AugmentedState":
        qa = np.asarray(qa, dtype=float)
        qda = np.asarray(qda, dtype=float)
        return cls(qa[:-1], qa[-1], qda[:-1], qda[-1])


@dataclass(frozen=True)
class DynMatrices:
    M: np.ndarray
    C: np.ndarray
    Ma: np.ndarray
    Ca: np.ndarray


def forward_kinematics(q, p: RobotParams) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    q1, q2 = q[..., 0], q[..., 1]
    c1, s1 = np.cos(q1), np.sin(q1)
    c12, s12 = np.cos(q1 + q2), np.sin(q1 + q2)
    return np.stack([p.l1 * c1 + p.l2 * c12, p.l1 * s1 + p.l2 * s12], axis=-1)


def jacobian(q, p: RobotParams) -> np.ndarray:
    """Analytic end-effector Jacobian dx/dq, shape ``(..., 2, 2)``."""
    q = np.asarray(q, dtype=float)
    q1, q2 = q[..., 0], q[..., 1]
    s1, c1 = np.sin(q1), np.cos(q1)
    s12, c12 = np.sin(q1 + q2), np.cos(q1 + q2)
    J = np.empty(q.shape[:-1] + (2, 2))
    J[..., 0, 0] = -p.l1 * s1 - p.l2 * s12
    J[..., 0, 1] = -p.l2 * s12
    J[..., 1, 0] = p.l1 * c1 + p.l2 * c12
    J[..., 1, 1] = p.l2 * c12
    return J


def pseudoinverse(J, det_threshold: float = DLS_DET_THRESHOLD, damping: float = DLS_DAMPING):
    """Left pseudoinverse ``(J^T J)^-1 J^T`` with a damped fallback.

    Returns ``(J_pinv, singular)``.  Where ``|det J|`` drops below
    ``det_threshold`` the damped least-squares form
    ``(J^T J + damping I)^-1 J^T`` is used instead and ``singular`` is set.
    Works on stacks of square matrices; ``singular`` then has the stack shape.
    """
    J = np.asarray(J, dtype=float)
    n = J.shape[-1]
    JT = np.swapaxes(J, -1, -2)
    JTJ = JT @ J
    singular = np.abs(np.linalg.det(J)) < det_threshold
    reg = np.where(singular[..., None, None], damping, 0.0) * np.eye(n)
    Jp = np.linalg.solve(JTJ + reg, JT)
    if J.ndim == 2:
        return Jp, bool(singular)
    return Jp, singular


def mass_matrix(q, p: RobotParams) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    M1, M2, R = p.inertia_terms
    c2 = np.cos(q[..., 1])
    M = np.empty(q.shape[:-1] + (2, 2))
    M[..., 0, 0] = M1 + M2 + 2 * R * c2
    M[..., 0, 1] = M[..., 1, 0] = M2 + R * c2
    M[..., 1, 1] = M2
    return M


def coriolis_matrix(q, qd, p: RobotParams) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    _, _, R = p.inertia_terms
    rs2 = R * np.sin(q[..., 1])
    C = np.zeros(np.broadcast_shapes(q.shape, qd.shape)[:-1] + (2, 2))
    C[..., 0, 0] = -rs2 * qd[..., 1]
    C[..., 0, 1] = -rs2 * (qd[..., 0] + qd[..., 1])
    C[..., 1, 0] = rs2 * qd[..., 0]
    return C


def augment(M, C, mf: float) -> tuple[np.ndarray, np.ndarray]:
    """Block-append the flywheel: ``Ma = diag(M, mf)``, ``Ca = diag(C, 0)``."""
    M = np.asarray(M, dtype=float)
    C = np.asarray(C, dtype=float)
    n = M.shape[-1]
    Ma = np.zeros(M.shape[:-2] + (n + 1, n + 1))
    Ca = np.zeros(C.shape[:-2] + (n + 1, n + 1))
    Ma[..., :n, :n] = M
    Ma[..., n, n] = mf
    Ca[..., :n, :n] = C
    return Ma, Ca


def dyn_matrices(q, qd, p: RobotParams) -> DynMatrices:
    M = mass_matrix(q, p)
    C = coriolis_matrix(q, qd, p)
    Ma, Ca = augment(M, C, p.mf)
    return DynMatrices(M, C, Ma, Ca)


def forward_dynamics(s: AugmentedState, tau_a, tau_ext_a, p: RobotParams) -> np.ndarray:
    """Solve ``Ma qdda + Ca qda = tau_a + tau_ext_a`` for the augmented accelerations."""
    m = dyn_matrices(s.q, s.qd, p)
    return augmented_accel(m.Ma, m.Ca, s.qda, tau_a, tau_ext_a)


def augmented_accel(Ma, Ca, qda, tau_a, tau_ext_a) -> np.ndarray:
    rhs = np.asarray(tau_a, dtype=float) + np.asarray(tau_ext_a, dtype=float) - Ca @ qda
    return np.linalg.solve(Ma, rhs)


def max_inertia_eigenvalue(p: RobotParams, n_grid: int = 721) -> float:
    """Largest eigenvalue of ``Ma`` over a grid of elbow angles (``M`` depends on q2 only)."""
    q2 = np.linspace(-np.pi, np.pi, n_grid)
    q = np.stack([np.zeros_like(q2), q2], axis=-1)
    Ma, _ = augment(mass_matrix(q, p), np.zeros((n_grid, 2, 2)), p.mf)
    return float(np.linalg.eigvalsh(Ma).max())
