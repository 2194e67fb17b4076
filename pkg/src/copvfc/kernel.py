"""Scalar closed-loop derivative used by the integrator's inner loop.

The composed numpy path in :mod:`copvfc.sim` is the reference; this module
evaluates the same right-hand side with plain floats because the state is
tiny and per-call array overhead dominates otherwise.  The test-suite
checks the two agree at random states for every strategy.
"""

from __future__ import annotations

import math

import numpy as np

from .dynamics import DLS_DAMPING, DLS_DET_THRESHOLD
from .field import FieldEnergyExceeded
from .human import ESTIMATE_ERROR_AMPLITUDE, RAMP_VEL, START


def _mat(m) -> tuple[float, float, float, float]:
    m = np.asarray(m, dtype=float)
    return float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1])


class ScalarLoop:
    """Float-only right-hand side for one :class:`~copvfc.sim.ScenarioConfig`."""

    def __init__(self, cfg):
        p = cfg.robot
        self.strategy = cfg.strategy
        self.l1, self.l2, self.mf = p.l1, p.l2, p.mf
        self.M1, self.M2, self.R = p.inertia_terms
        self.k1h = _mat(cfg.human.k1h)
        self.k2h = _mat(cfg.human.k2h)
        Md_inv = np.linalg.inv(cfg.admittance.Md)
        self.Md_inv = _mat(Md_inv)
        self.Dd = _mat(cfg.admittance.Dd)
        self.Kd = _mat(cfg.admittance.Kd)
        self.K1 = _mat(cfg.field.K1)
        self.Ea = cfg.field.Ea
        self.h = cfg.field.h_fd
        g = cfg.pvfc
        self.kd_a, self.kappa = g.kd_a, g.kappa
        self.K2 = tuple(float(v) for v in np.diag(g.K2))
        self.expo = g.r1 / g.r2
        self.delta1, self.delta2 = g.delta1, g.delta2
        self.eta_min, self.eta_max = g.eta_min, g.eta_max
        self.Kp = _mat(cfg.pid.Kp)
        self.Ki = _mat(cfg.pid.Ki)
        self.Kdp = _mat(cfg.pid.Kd_pid)
        self.t2 = cfg.schedule.t2
        self.x0, self.y0 = float(START[0]), float(START[1])
        self.vx, self.vy = float(RAMP_VEL[0]), float(RAMP_VEL[1])

    # -- pieces -------------------------------------------------------------

    def _jac(self, q1, q2):
        s1, c1 = math.sin(q1), math.cos(q1)
        s12, c12 = math.sin(q1 + q2), math.cos(q1 + q2)
        l1, l2 = self.l1, self.l2
        return -l1 * s1 - l2 * s12, -l2 * s12, l1 * c1 + l2 * c12, l2 * c12

    def _field(self, q1, q2, Q1, Q2, u1, u2):
        """Manipulator field ``J+(q) u - K1 (q - Q)``, flywheel speed and manipulator energy."""
        a, b, c, d = self._jac(q1, q2)
        # (J^T J + reg)^-1 J^T
        n11, n12, n22 = a * a + c * c, a * b + c * d, b * b + d * d
        if abs(a * d - b * c) < DLS_DET_THRESHOLD:
            n11 += DLS_DAMPING
            n22 += DLS_DAMPING
        det = n11 * n22 - n12 * n12
        w1, w2 = a * u1 + c * u2, b * u1 + d * u2
        Qd1 = (n22 * w1 - n12 * w2) / det
        Qd2 = (n11 * w2 - n12 * w1) / det
        k = self.K1
        e1, e2 = q1 - Q1, q2 - Q2
        V1 = Qd1 - (k[0] * e1 + k[1] * e2)
        V2 = Qd2 - (k[2] * e1 + k[3] * e2)
        c2 = math.cos(q2)
        m11 = self.M1 + self.M2 + 2 * self.R * c2
        m12 = self.M2 + self.R * c2
        manip = 0.5 * (m11 * V1 * V1 + 2 * m12 * V1 * V2 + self.M2 * V2 * V2)
        radicand = (2.0 / self.mf) * (self.Ea - manip)
        if radicand < 0:
            raise FieldEnergyExceeded(manip, self.Ea)
        return V1, V2, math.sqrt(radicand), manip, Qd1, Qd2

    def _sat(self, e):
        if e < self.delta1:
            return self.eta_min
        if e < 0:
            return 0.5 * self.eta_min * (1.0 - math.cos(math.pi * e / self.delta1))
        if e == 0:
            return 0.0
        if e <= self.delta2:
            return 0.5 * self.eta_max * (1.0 - math.cos(math.pi * e / self.delta2))
        return self.eta_max

    def _fpow(self, v):
        if v == 0.0:
            return 0.0
        return math.copysign(math.exp(self.expo * math.log(abs(v))), v)

    def _estimate(self, t, phase, noise):
        if phase == 1:
            a = ESTIMATE_ERROR_AMPLITUDE
            s, c = math.sin(t), math.cos(t)
            pos = (self.x0 + self.vx * t + a * s + noise[0], self.y0 + self.vy * t + a * c + noise[1])
            return pos, (self.vx + a * c, self.vy - a * s), (-a * s, -a * c)
        if phase in (2, 3):
            return (self.x0 + self.vx * t, self.y0 + self.vy * t), (self.vx, self.vy), (0.0, 0.0)
        return (self.x0 + self.vx * self.t2, self.y0 + self.vy * self.t2), (0.0, 0.0), (0.0, 0.0)

    # -- right-hand side ----------------------------------------------------

    def derivs(self, t, y, ctx):
        (q1, q2, _qf, qd1, qd2, qdf, xa1, xa2, xda1, xda2, Q1, Q2, i1, i2, _we, _wc) = y.tolist()
        l1, l2 = self.l1, self.l2
        s1, c1 = math.sin(q1), math.cos(q1)
        s12, c12 = math.sin(q1 + q2), math.cos(q1 + q2)
        x1 = l1 * c1 + l2 * c12
        x2 = l1 * s1 + l2 * s12
        ja, jb, jc, jd = -l1 * s1 - l2 * s12, -l2 * s12, l1 * c1 + l2 * c12, l2 * c12
        xd1 = ja * qd1 + jb * qd2
        xd2 = jc * qd1 + jd * qd2

        if ctx.moving:
            h1, h2, hv1, hv2 = self.x0 + self.vx * t, self.y0 + self.vy * t, self.vx, self.vy
        else:
            h1, h2, hv1, hv2 = self.x0 + self.vx * self.t2, self.y0 + self.vy * self.t2, 0.0, 0.0
        k, kk = self.k1h, self.k2h
        r1, r2, v1, v2 = x1 - h1, x2 - h2, xd1 - hv1, xd2 - hv2
        f1 = -(k[0] * r1 + k[1] * r2) - (kk[0] * v1 + kk[1] * v2)
        f2 = -(k[2] * r1 + k[3] * r2) - (kk[2] * v1 + kk[3] * v2)
        te1 = ja * f1 + jc * f2
        te2 = jb * f1 + jd * f2

        epos, evel, eacc = self._estimate(t, ctx.phase, ctx.noise)

        c2, s2 = math.cos(q2), math.sin(q2)
        m11 = self.M1 + self.M2 + 2 * self.R * c2
        m12 = self.M2 + self.R * c2
        m22 = self.M2
        rs2 = self.R * s2
        C11, C12, C21 = -rs2 * qd2, -rs2 * (qd1 + qd2), rs2 * qd1

        strat = self.strategy
        dQ1 = dQ2 = 0.0
        w_comp = 0.0
        if strat in ("proposed", "opvfc"):
            if strat == "proposed":
                u1, u2 = xda1, xda2
                a1, a2 = self._md(xda1, xda2, evel, eacc, f1, f2)
                dxa1, dxa2, dxda1, dxda2 = xda1, xda2, a1, a2
            else:
                u1, u2 = evel
                a1, a2 = eacc
                dxa1, dxa2, dxda1, dxda2 = u1, u2, a1, a2
            t1, t2, t3, dQ1, dQ2, w_comp = self._pvfc(
                q1, q2, qd1, qd2, qdf, Q1, Q2, u1, u2, a1, a2,
                m11, m12, m22, C11, C12, C21, compensate=(strat == "proposed"),
            )
        else:
            if strat == "mdk_pid":
                a1, a2 = self._mdk(xa1, xa2, xda1, xda2, epos, evel, eacc, f1, f2)
            else:
                a1, a2 = self._md(xda1, xda2, evel, eacc, f1, f2)
            dxa1, dxa2, dxda1, dxda2 = xda1, xda2, a1, a2
            e1, e2 = xa1 - x1, xa2 - x2
            ed1, ed2 = xda1 - xd1, xda2 - xd2
            kp, ki, kd = self.Kp, self.Ki, self.Kdp
            g1 = kp[0] * e1 + kp[1] * e2 + ki[0] * i1 + ki[1] * i2 + kd[0] * ed1 + kd[1] * ed2
            g2 = kp[2] * e1 + kp[3] * e2 + ki[2] * i1 + ki[3] * i2 + kd[2] * ed1 + kd[3] * ed2
            t1 = ja * g1 + jc * g2
            t2 = jb * g1 + jd * g2
            t3 = 0.0

        # Ma qdda = tau + tau_ext - Ca qda (flywheel row decoupled)
        b1 = t1 + te1 - (C11 * qd1 + C12 * qd2)
        b2 = t2 + te2 - C21 * qd1
        det = m11 * m22 - m12 * m12
        qdd1 = (m22 * b1 - m12 * b2) / det
        qdd2 = (m11 * b2 - m12 * b1) / det
        qddf = t3 / self.mf

        return np.array([
            qd1, qd2, qdf, qdd1, qdd2, qddf,
            dxa1, dxa2, dxda1, dxda2, dQ1, dQ2,
            xa1 - x1, xa2 - x2,
            te1 * qd1 + te2 * qd2, w_comp,
        ])

    def _md(self, xda1, xda2, evel, eacc, f1, f2):
        D, Mi = self.Dd, self.Md_inv
        u1, u2 = xda1 - evel[0], xda2 - evel[1]
        r1 = f1 - (D[0] * u1 + D[1] * u2)
        r2 = f2 - (D[2] * u1 + D[3] * u2)
        return eacc[0] + Mi[0] * r1 + Mi[1] * r2, eacc[1] + Mi[2] * r1 + Mi[3] * r2

    def _mdk(self, xa1, xa2, xda1, xda2, epos, evel, eacc, f1, f2):
        D, K, Mi = self.Dd, self.Kd, self.Md_inv
        u1, u2 = xda1 - evel[0], xda2 - evel[1]
        p1, p2 = xa1 - epos[0], xa2 - epos[1]
        r1 = f1 - (D[0] * u1 + D[1] * u2) - (K[0] * p1 + K[1] * p2)
        r2 = f2 - (D[2] * u1 + D[3] * u2) - (K[2] * p1 + K[3] * p2)
        return eacc[0] + Mi[0] * r1 + Mi[1] * r2, eacc[1] + Mi[2] * r1 + Mi[3] * r2

    def _pvfc(self, q1, q2, qd1, qd2, qdf, Q1, Q2, u1, u2, a1, a2, m11, m12, m22, C11, C12, C21, compensate):
        h = self.h
        fld = self._field
        V1, V2, Vf, _, Qd1, Qd2 = fld(q1, q2, Q1, Q2, u1, u2)
        A = fld(q1 + h, q2, Q1, Q2, u1, u2)
        B = fld(q1 - h, q2, Q1, Q2, u1, u2)
        Cc = fld(q1, q2 + h, Q1, Q2, u1, u2)
        D = fld(q1, q2 - h, Q1, Q2, u1, u2)
        E = fld(q1, q2, Q1 + h * Qd1, Q2 + h * Qd2, u1 + h * a1, u2 + h * a2)
        F = fld(q1, q2, Q1 - h * Qd1, Q2 - h * Qd2, u1 - h * a1, u2 - h * a2)
        inv = 1.0 / (2 * h)
        Vd = [
            (A[i] - B[i]) * inv * qd1 + (Cc[i] - D[i]) * inv * qd2 + (E[i] - F[i]) * inv
            for i in range(3)
        ]
        # momenta: w = Ma Vdot + Ca Va, P = Ma Va, p = Ma qda
        w1 = m11 * Vd[0] + m12 * Vd[1] + C11 * V1 + C12 * V2
        w2 = m12 * Vd[0] + m22 * Vd[1] + C21 * V1
        w3 = self.mf * Vd[2]
        P1, P2, P3 = m11 * V1 + m12 * V2, m12 * V1 + m22 * V2, self.mf * Vf
        p1, p2, p3 = m11 * qd1 + m12 * qd2, m12 * qd1 + m22 * qd2, self.mf * qdf
        Pq = P1 * qd1 + P2 * qd2 + P3 * qdf
        wq = w1 * qd1 + w2 * qd2 + w3 * qdf
        pq = p1 * qd1 + p2 * qd2 + p3 * qdf
        g = 1.0 / (2.0 * self.Ea)
        kap = self.kappa
        tau = [
            g * (w1 * Pq - P1 * wq) + kap * (P1 * pq - p1 * Pq),
            g * (w2 * Pq - P2 * wq) + kap * (P2 * pq - p2 * Pq),
            g * (w3 * Pq - P3 * wq) + kap * (P3 * pq - p3 * Pq),
        ]
        w_comp = 0.0
        if compensate:
            s = self._sat(0.5 * pq - self.kd_a)
            if s != 0.0:
                fp = (self._fpow(qd1), self._fpow(qd2), self._fpow(qdf))
                K2 = self.K2
                tau = [tau[i] - s * K2[i] * fp[i] for i in range(3)]
                w_comp = s * (K2[0] * qd1 * fp[0] + K2[1] * qd2 * fp[1] + K2[2] * qdf * fp[2])
        k = self.K1
        e1, e2 = q1 - Q1, q2 - Q2
        dQ1 = V1 + k[0] * e1 + k[1] * e2
        dQ2 = V2 + k[2] * e1 + k[3] * e2
        return tau[0], tau[1], tau[2], dQ1, dQ2, w_comp
