"""Kinetic energy bookkeeping with power flow and Lyapunov monitors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import FieldSample
from .pvfc import PvfcGains, frac_pow


class DomainError(ValueError):
    """An analytic bound is not defined for the given inputs."""


@dataclass(frozen=True)
class EnergyReport:
    ka: float
    k_robot: float
    k_flywheel: float
    alpha: float
    p_r2h: float
    v1: float
    v2: float
    passivity_residual: float


@dataclass(frozen=True)
class SettlingBound:
    t1_bound: float
    t2_bound: float
    t_bound: float
    psi: float


def kinetic_energy(Ma, qda) -> tuple[float, float, float]:
    """Augmented kinetic energy and its (robot, flywheel) split."""
    qda = np.asarray(qda, dtype=float)
    k_robot = 0.5 * float(qda[:-1] @ Ma[:-1, :-1] @ qda[:-1])
    k_flywheel = 0.5 * float(Ma[-1, -1]) * float(qda[-1]) ** 2
    return k_robot + k_flywheel, k_robot, k_flywheel


def power_flow(qda, tau_ext_a) -> float:
    """Power flowing from the robot into the human (negative when the human drives)."""
    return -float(np.asarray(qda) @ np.asarray(tau_ext_a))


def compensation_power(qda, s_val: float, K2, r1: int, r2: int) -> float:
    """Power removed by the energy-compensation term, ``s qda^T K2 [qda]^(r1/r2)``."""
    qda = np.asarray(qda, dtype=float)
    return s_val * float(qda @ K2 @ frac_pow(qda, r1, r2))


def energy_rate(qda, tau_ext_a, s_val: float, K2, r1: int, r2: int) -> float:
    """Predicted ``dka/dt``: port power in minus compensation power."""
    return float(np.asarray(tau_ext_a) @ np.asarray(qda)) - compensation_power(qda, s_val, K2, r1, r2)


def settling_bounds(g: PvfcGains, Ma_max_eig: float, v1_0: float) -> SettlingBound:
    """Finite-time bounds on the energy settling time with no external force.

    ``T1`` covers energy approaching ``kd_a`` from above, ``T2`` from below.
    The saturation gain is taken at its plateau, ``min(|eta_min|, eta_max)``,
    which is what applies while ``|e|`` is outside the deadband.
    """
    if v1_0 < 0:
        raise ValueError("v1_0 must be non-negative")
    if Ma_max_eig <= 0:
        raise ValueError("Ma_max_eig must be positive")
    r1, r2 = g.r1, g.r2
    rise = (r1 + r2) / (2 * r2)
    fall = (r2 - r1) / (2 * r2)
    s_min = min(abs(g.eta_min), g.eta_max)
    k2_min = float(np.min(np.diag(g.K2)))
    psi = 2**rise * s_min * k2_min / Ma_max_eig**rise
    pre = 2 * r2 / (psi * (r2 - r1))
    de = math.sqrt(2 * v1_0)
    t1 = pre * ((de + g.kd_a) ** fall - g.kd_a**fall)
    if g.kd_a - de < 0:
        raise DomainError(
            f"below-target bound needs kd_a >= sqrt(2 V1(0)); got kd_a={g.kd_a}, sqrt(2 V1(0))={de:.6g}"
        )
    t2 = pre * (g.kd_a**fall - (g.kd_a - de) ** fall)
    return SettlingBound(t1, t2, max(t1, t2), psi)


def lyapunov_v1(ka: float, kd_a: float) -> float:
    return 0.5 * (ka - kd_a) ** 2


def lyapunov_v2(q, Q, qda, fs: FieldSample, Ma, alpha_val: float) -> float:
    """Tracking Lyapunov value from the joint error and the scaled-field velocity error."""
    e_q = np.asarray(q, dtype=float) - np.asarray(Q, dtype=float)
    e_v = np.asarray(qda, dtype=float) - alpha_val * fs.Va
    return 0.5 * float(e_q @ e_q) + 0.5 * float(e_v @ Ma @ e_v)


def passivity_residual(ka_prev: float, ka_curr: float, dt: float, qda, tau_ext_a, s_val: float, K2, r1: int, r2: int) -> float:
    """Finite-difference energy rate minus the balance-law rate at the step start.

    First-order in ``dt``; the simulator's per-step residual instead
    integrates both power terms alongside the state (see ``run_scenario``).
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    return (ka_curr - ka_prev) / dt - energy_rate(qda, tau_ext_a, s_val, K2, r1, r2)
