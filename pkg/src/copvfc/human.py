"""Scripted human operator for the co-carrying scenario.

The true intention is a diagonal ramp that stops at ``t2``.  The robot's
estimate of it goes through four phases: a sinusoidal direction error plus
white noise, an exact copy, a stale ramp that ignores the stop, and finally
the exact parking point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

START = np.array([0.5657, 0.0])
RAMP_VEL = np.array([0.01, 0.01])
ESTIMATE_ERROR_AMPLITUDE = 0.1


@dataclass(frozen=True)
class HumanParams:
    k1h: np.ndarray = field(default_factory=lambda: 500.0 * np.eye(2))
    k2h: np.ndarray = field(default_factory=lambda: 100.0 * np.eye(2))
    noise_std: float = 0.005
    seed: int = 0

    def __post_init__(self):
        k1h = np.asarray(self.k1h, dtype=float)
        k2h = np.asarray(self.k2h, dtype=float)
        if k1h.shape != (2, 2) or k2h.shape != (2, 2):
            raise ValueError("k1h and k2h must be 2x2")
        if np.any(k1h < 0) or np.any(k2h < 0):
            raise ValueError("human stiffness/damping entries must be >= 0")
        if not self.noise_std >= 0:
            raise ValueError("noise_std must be >= 0")
        object.__setattr__(self, "k1h", k1h)
        object.__setattr__(self, "k2h", k2h)


@dataclass(frozen=True)
class PhaseSchedule:
    t1: float = 5.0
    t2: float = 10.0
    t3: float = 15.0

    def __post_init__(self):
        if not 0 < self.t1 < self.t2 < self.t3:
            raise ValueError(f"phase times must satisfy 0 < t1 < t2 < t3, got {self}")

    def phase(self, t: float) -> int:
        """Phase number 1..4; boundaries belong to the later phase."""
        if t < self.t1:
            return 1
        if t < self.t2:
            return 2
        if t < self.t3:
            return 3
        return 4


@dataclass(frozen=True)
class IntentSample:
    pos: np.ndarray
    vel: np.ndarray
    acc: np.ndarray


def _ramp(t: float) -> IntentSample:
    return IntentSample(START + RAMP_VEL * t, RAMP_VEL.copy(), np.zeros(2))


def _parked(sched: PhaseSchedule) -> IntentSample:
    return IntentSample(START + RAMP_VEL * sched.t2, np.zeros(2), np.zeros(2))


def true_intention(t: float, sched: PhaseSchedule = PhaseSchedule(), moving: bool | None = None) -> IntentSample:
    """Human target: ramp until ``sched.t2``, then parked at the ramp end point.

    ``moving`` pins the branch (used by the integrator to keep every RK stage
    of one step on the same side of the stop).
    """
    if moving is None:
        moving = t < sched.t2
    return _ramp(t) if moving else _parked(sched)


def estimated_intention(
    t: float,
    sched: PhaseSchedule = PhaseSchedule(),
    noise=None,
    phase: int | None = None,
) -> IntentSample:
    """Robot-side estimate of the human intention.

    ``noise`` is the disturbance sample added to the Phase-1 position (held
    constant by the caller between samples).  Velocity and acceleration are
    the analytic derivatives of the noiseless part.  ``phase`` overrides the
    phase lookup so all stages of one integration step use one branch.
    """
    if phase is None:
        phase = sched.phase(t)
    if phase == 1:
        a = ESTIMATE_ERROR_AMPLITUDE
        s, c = np.sin(t), np.cos(t)
        d = np.zeros(2) if noise is None else np.asarray(noise, dtype=float)
        pos = START + RAMP_VEL * t + np.array([a * s, a * c]) + d
        vel = RAMP_VEL + np.array([a * c, -a * s])
        acc = np.array([-a * s, -a * c])
        return IntentSample(pos, vel, acc)
    if phase in (2, 3):
        return _ramp(t)
    return _parked(sched)


def human_force(x, xd, target: IntentSample, hp: HumanParams) -> np.ndarray:
    """Spring-damper pull of the hand toward the human's intended motion."""
    return -hp.k1h @ (np.asarray(x) - target.pos) - hp.k2h @ (np.asarray(xd) - target.vel)


def joint_external_torque(J, f_ext) -> np.ndarray:
    """Map a hand force to augmented joint torque (zero on the flywheel row)."""
    return np.append(np.asarray(J).T @ f_ext, 0.0)


class NoiseStream:
    """Seeded zero-order-hold Gaussian disturbance on the estimated position.

    One 2-vector is drawn per ``period`` seconds; the whole sequence is
    generated up front so lookups are deterministic for any access order.
    """

    def __init__(self, std: float, seed: int, period: float, t_end: float):
        self.period = period
        n = int(np.ceil(t_end / period + 1e-9)) + 2
        rng = np.random.default_rng(seed)
        self.samples = std * rng.standard_normal((n, 2))

    def at(self, t: float) -> np.ndarray:
        k = int(np.floor(t / self.period + 1e-9))
        return self.samples[min(max(k, 0), len(self.samples) - 1)]
