"""Structural property sweep that needs no scenario run.

Each check draws seeded random states, measures the worst violation and
compares it with a fixed tolerance.  ``run_all`` backs the ``verify``
subcommand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import RobotParams, augment, coriolis_matrix, forward_kinematics, jacobian, mass_matrix
from .field import FieldParams, ReferenceState, augmented_field
from .pvfc import PvfcGains, coupling_matrices, frac_pow, saturation
from .sim import rk4_step


@dataclass(frozen=True)
class CheckResult:
    name: str
    worst: float
    tol: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: worst={self.worst:.3e} tol={self.tol:.1e}"


def _result(name, worst, tol):
    return CheckResult(name, float(worst), tol, bool(worst <= tol))


def _random_q(rng, n):
    return rng.uniform(-math.pi, math.pi, size=(n, 2))


def check_skew(n=1000, seed=0, p=RobotParams(), g=PvfcGains()) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for q in _random_q(rng, n):
        Ma, _ = augment(mass_matrix(q, p), np.zeros((2, 2)), p.mf)
        w, P, pm = (rng.normal(scale=50.0, size=3) for _ in range(3))
        G, R = coupling_matrices(w, P, pm, g)
        worst = max(worst, np.max(np.abs(G + G.T)), np.max(np.abs(R + R.T)))
    return _result("G and R skew-symmetric", worst, 1e-12)


def check_field_energy(n=1000, seed=1, p=RobotParams(), fp=FieldParams()) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for q in _random_q(rng, n):
        ref = ReferenceState(q + rng.normal(scale=0.05, size=2), rng.normal(scale=0.5, size=2))
        fs = augmented_field(q, ref, fp, p)
        Ma, _ = augment(mass_matrix(q, p), np.zeros((2, 2)), p.mf)
        energy = 0.5 * fs.Va @ Ma @ fs.Va
        worst = max(worst, abs(energy - fp.Ea) / fp.Ea)
    return _result("augmented field energy equals Ea (relative)", worst, 1e-9)


def check_frac_pow_odd(n=1000, seed=2, g=PvfcGains()) -> CheckResult:
    rng = np.random.default_rng(seed)
    v = rng.normal(scale=10.0, size=(n, 3)) * 10.0 ** rng.uniform(-6, 2, size=(n, 3))
    worst = np.max(np.abs(frac_pow(-v, g.r1, g.r2) + frac_pow(v, g.r1, g.r2)))
    return _result("frac_pow odd (exact)", worst, 0.0)


def check_saturation_continuity(g=PvfcGains()) -> CheckResult:
    worst = 0.0
    for e in (g.delta1, 0.0, g.delta2):
        left = saturation(np.nextafter(e, -np.inf), g)
        right = saturation(np.nextafter(e, np.inf), g)
        mid = saturation(e, g)
        worst = max(worst, abs(left - mid), abs(right - mid))
    return _result("saturation continuous at delta1, 0, delta2", worst, 1e-12)


def check_passivity_structure(n=1000, seed=3, p=RobotParams(), h=1e-6) -> CheckResult:
    """``qd^T (Mdot - 2C) qd`` with ``Mdot`` from central differences along ``qd``."""
    rng = np.random.default_rng(seed)
    q = _random_q(rng, n)
    qd = rng.normal(scale=2.0, size=(n, 2))
    Mdot = (mass_matrix(q + h * qd, p) - mass_matrix(q - h * qd, p)) / (2 * h)
    N = Mdot - 2 * coriolis_matrix(q, qd, p)
    worst = np.max(np.abs(np.einsum("ni,nij,nj->n", qd, N, qd)))
    return _result("qd^T (Mdot - 2C) qd = 0", worst, 1e-8)


def check_jacobian(n=1000, seed=4, p=RobotParams(), h=1e-6) -> CheckResult:
    rng = np.random.default_rng(seed)
    q = _random_q(rng, n)
    J = jacobian(q, p)
    worst = 0.0
    for j in range(2):
        dq = np.zeros(2)
        dq[j] = h
        col = (forward_kinematics(q + dq, p) - forward_kinematics(q - dq, p)) / (2 * h)
        worst = max(worst, np.max(np.abs(col - J[:, :, j])))
    return _result("Jacobian matches finite differences", worst, 1e-6)


def rk4_global_error(dt: float, t_end: float = 1.0) -> float:
    """Global error of RK4 on ``y' = -y, y(0) = 1`` at ``t_end``."""
    y = np.array([1.0])
    n = int(round(t_end / dt))
    for i in range(n):
        y = rk4_step(lambda t, v: -v, i * dt, y, dt)
    return abs(y[0] - math.exp(-t_end))


def check_rk4_order() -> CheckResult:
    """Observed order from halving the step; deviation from 4 is reported."""
    e1, e2 = rk4_global_error(0.1), rk4_global_error(0.05)
    order = math.log2(e1 / e2)
    return _result("RK4 convergence order 4 (|order - 4|)", abs(order - 4.0), 0.1)


def check_rk4_local() -> CheckResult:
    y = rk4_step(lambda t, v: -v, 0.0, np.array([1.0]), 0.1)
    return _result("RK4 one-step error on y' = -y, dt = 0.1", abs(y[0] - math.exp(-0.1)), 1e-7)


CHECKS = (
    check_skew, check_field_energy, check_frac_pow_odd, check_saturation_continuity,
    check_passivity_structure, check_jacobian, check_rk4_order, check_rk4_local,
)


def run_all() -> list[CheckResult]:
    return [check() for check in CHECKS]
