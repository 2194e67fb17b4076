"""Fixed-step closed-loop simulation of the four-phase co-carrying scenario.

One scenario couples the arm (plus flywheel), the scripted human, the
admittance reference and one of four controllers, and integrates them
together with classic RK4.  Results are sampled at ``dt_out`` into a
:class:`Trace`; Table-style averages come from :func:`average_metric`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from dataclasses import field as dc_field
from typing import Callable

import numpy as np

from .admittance import AdmittanceParams, AdmittanceState, md_accel, mdk_accel
from .baselines import PidGains, pid_task_force, torque_from_task_force
from .dynamics import RobotParams, augment, augmented_accel, coriolis_matrix, forward_kinematics, jacobian, mass_matrix
from .energy import EnergyReport, compensation_power, kinetic_energy, lyapunov_v1, lyapunov_v2, power_flow
from .field import FieldEnergyExceeded, FieldParams, tracking_field
from .kernel import ScalarLoop
from .human import HumanParams, NoiseStream, PhaseSchedule, estimated_intention, human_force, true_intention
from .pvfc import PvfcGains, alpha, pvfc_torque, saturation_slope

STRATEGIES = ("proposed", "mdk_pid", "md_pid", "opvfc")
PVFC_STRATEGIES = ("proposed", "opvfc")

# state vector layout
_Q, _QF, _QD, _QDF = slice(0, 2), 2, slice(3, 5), 5
_QDA = slice(3, 6)
_XA, _XDA, _REF, _INT = slice(6, 8), slice(8, 10), slice(10, 12), slice(12, 14)
_W_EXT, _W_COMP = 14, 15
STATE_SIZE = 16


@dataclass(frozen=True)
class ScenarioConfig:
    strategy: str = "proposed"
    dt_sim: float = 1e-3
    dt_out: float = 0.01
    t_end: float = 20.0
    robot: RobotParams = dc_field(default_factory=RobotParams)
    human: HumanParams = dc_field(default_factory=HumanParams)
    schedule: PhaseSchedule = dc_field(default_factory=PhaseSchedule)
    admittance: AdmittanceParams = dc_field(default_factory=AdmittanceParams)
    field: FieldParams = dc_field(default_factory=FieldParams)
    pvfc: PvfcGains = dc_field(default_factory=PvfcGains)
    pid: PidGains = dc_field(default_factory=PidGains)
    q0: tuple = (-0.785, 1.57, 0.0)
    qd0: tuple = (0.01, 0.01, 1.0)
    label: str = ""

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if not (self.dt_sim > 0 and self.dt_out > 0 and self.t_end > 0):
            raise ValueError("dt_sim, dt_out and t_end must be positive")
        if self.dt_sim > self.dt_out:
            raise ValueError(f"dt_sim ({self.dt_sim}) must not exceed dt_out ({self.dt_out})")
        ratio = self.dt_out / self.dt_sim
        if abs(ratio - round(ratio)) > 1e-6 * ratio:
            raise ValueError("dt_out must be an integer multiple of dt_sim")
        n_out = self.t_end / self.dt_out
        if abs(n_out - round(n_out)) > 1e-6 * max(n_out, 1.0):
            raise ValueError("dt_out must divide t_end")
        if self.field.Ea != self.pvfc.Ea:
            raise ValueError("field and controller energy budgets Ea must match")
        if len(self.q0) != 3 or len(self.qd0) != 3:
            raise ValueError("q0 and qd0 must have three entries (two joints + flywheel)")
        if not np.all(np.isfinite(np.concatenate([self.q0, self.qd0]))):
            raise ValueError("initial conditions must be finite")

    @property
    def seed(self) -> int:
        return self.human.seed

    @property
    def name(self) -> str:
        return self.label or self.strategy

    @property
    def n_out(self) -> int:
        return int(round(self.t_end / self.dt_out))

    @property
    def substeps(self) -> int:
        return int(round(self.dt_out / self.dt_sim))

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, human=replace(self.human, seed=int(seed)))


@dataclass(frozen=True)
class TraceRow:
    t: float
    qa: np.ndarray
    qda: np.ndarray
    x: np.ndarray
    x_h: np.ndarray
    x_hat: np.ndarray
    x_a: np.ndarray
    f_ext: np.ndarray
    tau_a: np.ndarray
    energy: EnergyReport
    field_energy: float = math.nan
    abort_flag: int = 0
    # integrated port power and compensation power since t = 0 (J)
    w_ext: float = 0.0
    w_comp: float = 0.0


@dataclass
class Trace:
    rows: list[TraceRow]
    step_residuals: np.ndarray
    step_times: np.ndarray

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def t(self) -> np.ndarray:
        return np.array([r.t for r in self.rows])

    def column(self, name: str) -> np.ndarray:
        """Time series of a row attribute or :class:`EnergyReport` field."""
        if hasattr(self.rows[0].energy, name):
            return np.array([getattr(r.energy, name) for r in self.rows])
        return np.array([getattr(r, name) for r in self.rows])


@dataclass(frozen=True)
class SummaryMetrics:
    avg_fx: float
    avg_fy: float
    avg_power: float
    aborted_at: float | None = None
    abort_field_energy: float | None = None
    max_passivity_residual: float | None = None


@dataclass(frozen=True)
class _StepContext:
    phase: int
    moving: bool
    noise: np.ndarray


def rk4_step(derivs: Callable, t: float, y: np.ndarray, dt: float, *args) -> np.ndarray:
    """Classic fourth-order Runge-Kutta step for ``y' = derivs(t, y, *args)``."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    k1 = derivs(t, y, *args)
    k2 = derivs(t + 0.5 * dt, y + 0.5 * dt * k1, *args)
    k3 = derivs(t + 0.5 * dt, y + 0.5 * dt * k2, *args)
    k4 = derivs(t + dt, y + dt * k3, *args)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def average_metric(series) -> float:
    """Mean absolute value of a sampled series."""
    series = np.asarray(series, dtype=float)
    if series.size == 0:
        raise ValueError("cannot average an empty series")
    return float(np.mean(np.abs(series)))


class ClosedLoop:
    """Composed derivative of the closed loop, human included."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.noise = NoiseStream(cfg.human.noise_std, cfg.seed, cfg.dt_out, cfg.t_end)
        self.fast = ScalarLoop(cfg)

    def initial_state(self) -> np.ndarray:
        cfg = self.cfg
        y = np.zeros(STATE_SIZE)
        y[0:3] = cfg.q0
        y[3:6] = cfg.qd0
        if cfg.strategy not in PVFC_STRATEGIES:
            # the PID baselines act on the bare arm; the flywheel stays inert
            y[_QDF] = 0.0
        # the admittance reference starts on the noiseless estimate
        est = estimated_intention(0.0, cfg.schedule, None, cfg.schedule.phase(0.0))
        y[_XA] = est.pos
        y[_XDA] = est.vel
        y[_REF] = y[_Q]
        return y

    def context(self, t: float, dt: float = 0.0) -> _StepContext:
        """Phase and noise for a step starting at ``t`` (``dt=0`` for a sample at ``t``)."""
        tm = t + 0.5 * dt
        sched = self.cfg.schedule
        return _StepContext(sched.phase(tm), tm < sched.t2, self.noise.at(tm))

    def derivs(self, t: float, y: np.ndarray, ctx: _StepContext) -> np.ndarray:
        return self.fast.derivs(t, y, ctx)

    def reference_derivs(self, t: float, y: np.ndarray, ctx: _StepContext) -> np.ndarray:
        """Same right-hand side assembled from the public module functions."""
        return self.evaluate(t, y, ctx)[0]

    def evaluate(self, t: float, y: np.ndarray, ctx: _StepContext, diagnostics: bool = False):
        cfg = self.cfg
        p = cfg.robot
        q, qd, qda = y[_Q], y[_QD], y[_QDA]
        xa, xda, Q, integral = y[_XA], y[_XDA], y[_REF], y[_INT]

        x = forward_kinematics(q, p)
        J = jacobian(q, p)
        xd = J @ qd
        target = true_intention(t, cfg.schedule, moving=ctx.moving)
        f_ext = human_force(x, xd, target, cfg.human)
        tau_ext_a = np.append(J.T @ f_ext, 0.0)
        est = estimated_intention(t, cfg.schedule, ctx.noise, ctx.phase)

        M = mass_matrix(q, p)
        C = coriolis_matrix(q, qd, p)
        Ma, Ca = augment(M, C, p.mf)
        adm = AdmittanceState(xa, xda)

        fs = None
        s_val = 0.0
        if cfg.strategy == "proposed":
            xdda = md_accel(adm, est, f_ext, cfg.admittance)
            fs = tracking_field(q, qd, Q, xda, xdda, cfg.field, p)
            tau_a, inter = pvfc_torque(Ma, Ca, fs, qda, cfg.pvfc, compensate=True)
            s_val = inter.S[0, 0] / cfg.pvfc.K2[0, 0]
            dxa, dQ = xda, fs.V + cfg.field.K1 @ (q - Q)
        elif cfg.strategy == "opvfc":
            xdda = est.acc
            fs = tracking_field(q, qd, Q, est.vel, est.acc, cfg.field, p)
            tau_a, _ = pvfc_torque(Ma, Ca, fs, qda, cfg.pvfc, compensate=False)
            dxa, dQ = est.vel, fs.V + cfg.field.K1 @ (q - Q)
            xda = est.vel
        else:
            accel = mdk_accel if cfg.strategy == "mdk_pid" else md_accel
            xdda = accel(adm, est, f_ext, cfg.admittance)
            f_ctrl = pid_task_force(x, xd, adm, integral, cfg.pid)
            tau_a = np.append(torque_from_task_force(J, f_ctrl), 0.0)
            dxa, dQ = xda, np.zeros(2)

        qdda = augmented_accel(Ma, Ca, qda, tau_a, tau_ext_a)
        dy = np.empty(STATE_SIZE)
        dy[0:3] = qda
        dy[3:6] = qdda
        dy[_XA] = dxa
        dy[_XDA] = xdda
        dy[_REF] = dQ
        dy[_INT] = xa - x
        dy[_W_EXT] = float(tau_ext_a @ qda)
        dy[_W_COMP] = compensation_power(qda, s_val, cfg.pvfc.K2, cfg.pvfc.r1, cfg.pvfc.r2) if fs is not None else 0.0
        if not diagnostics:
            return dy, None

        ka, k_robot, k_fly = kinetic_energy(Ma, qda)
        a = alpha(ka, cfg.pvfc.Ea)
        v2 = lyapunov_v2(q, Q, qda, fs, Ma, a) if fs is not None else math.nan
        diag = dict(
            x=x, x_h=target.pos, x_hat=est.pos, f_ext=f_ext, tau_a=tau_a,
            ka=ka, k_robot=k_robot, k_flywheel=k_fly, alpha=a,
            p_r2h=power_flow(qda, tau_ext_a), v1=lyapunov_v1(ka, cfg.pvfc.kd_a), v2=v2,
            field_energy=fs.manip_energy if fs is not None else math.nan,
        )
        return dy, diag

    def row(self, t: float, y: np.ndarray, residual: float, abort_flag: int = 0, field_energy: float | None = None) -> TraceRow:
        _, d = self.evaluate(t, y, self.context(t), diagnostics=True)
        return self._row_from(t, y, d, residual, abort_flag, field_energy)

    def _row_from(self, t, y, d, residual, abort_flag, field_energy):
        report = EnergyReport(d["ka"], d["k_robot"], d["k_flywheel"], d["alpha"], d["p_r2h"], d["v1"], d["v2"], residual)
        return TraceRow(
            t=t, qa=y[0:3].copy(), qda=y[3:6].copy(), x=d["x"], x_h=d["x_h"], x_hat=d["x_hat"],
            x_a=y[_XA].copy(),
            f_ext=d["f_ext"], tau_a=d["tau_a"], energy=report,
            field_energy=d["field_energy"] if field_energy is None else field_energy,
            abort_flag=abort_flag, w_ext=float(y[_W_EXT]), w_comp=float(y[_W_COMP]),
        )

    def aborted_row(self, t: float, y: np.ndarray, residual: float, field_energy: float) -> TraceRow:
        """Row for the abort instant; controller terms are undefined there and left NaN."""
        cfg = self.cfg
        p = cfg.robot
        q, qd, qda = y[_Q], y[_QD], y[_QDA]
        ctx = self.context(t)
        x = forward_kinematics(q, p)
        J = jacobian(q, p)
        target = true_intention(t, cfg.schedule, moving=ctx.moving)
        f_ext = human_force(x, J @ qd, target, cfg.human)
        Ma, _ = augment(mass_matrix(q, p), np.zeros((2, 2)), p.mf)
        ka, k_robot, k_fly = kinetic_energy(Ma, qda)
        d = dict(
            x=x, x_h=target.pos, x_hat=estimated_intention(t, cfg.schedule, ctx.noise, ctx.phase).pos,
            f_ext=f_ext, tau_a=np.full(3, math.nan), ka=ka, k_robot=k_robot, k_flywheel=k_fly,
            alpha=alpha(ka, cfg.pvfc.Ea), p_r2h=power_flow(qda, np.append(J.T @ f_ext, 0.0)),
            v1=lyapunov_v1(ka, cfg.pvfc.kd_a), v2=math.nan, field_energy=field_energy,
        )
        return self._row_from(t, y, d, residual, 1, field_energy)


def _step_residual(y0: np.ndarray, y1: np.ndarray, dt: float, p: RobotParams) -> float:
    """Energy change over one step minus the integrated balance-law supply."""
    k0 = _kinetic(y0, p)
    k1 = _kinetic(y1, p)
    supplied = (y1[_W_EXT] - y0[_W_EXT]) - (y1[_W_COMP] - y0[_W_COMP])
    return (k1 - k0 - supplied) / dt


def _kinetic(y: np.ndarray, p: RobotParams) -> float:
    M = mass_matrix(y[_Q], p)
    qd = y[_QD]
    return 0.5 * float(qd @ M @ qd) + 0.5 * p.mf * y[_QDF] ** 2


# sub-stepping policy for the energy-compensation deadband
STIFF_STEP_LIMIT = 0.25
CORNER_SUBSTEPS = 20
MAX_SUBSTEPS = 400


def _corner_band(e: float, g: PvfcGains) -> int:
    """Which smooth piece of the saturation curve ``e`` falls on."""
    return (e >= g.delta1) + (e >= 0.0) + (e > g.delta2)


def compensation_stiffness(y: np.ndarray, cfg: ScenarioConfig) -> float:
    """Local rate ``|ds/de| * q^T K2 [q]^(r1/r2)`` of the energy error inside the deadband.

    Inside ``[delta1, delta2]`` the compensation term pulls ``e = ka - kd_a``
    toward zero with this rate; for the default gains it can exceed
    ``1/dt_sim``, where a single RK4 step becomes inaccurate.
    """
    g = cfg.pvfc
    e = _kinetic(y, cfg.robot) - g.kd_a
    slope = saturation_slope(e, g)
    if slope == 0.0:
        return 0.0
    return abs(slope) * compensation_power(y[_QDA], 1.0, g.K2, g.r1, g.r2)


def _advance(loop: ClosedLoop, t: float, y: np.ndarray, dt: float, refine: bool) -> np.ndarray:
    """One RK4 step of length ``dt``, internally sub-stepped where the deadband is stiff.

    Two triggers: the step crosses a corner of the saturation curve (only
    once differentiable there), or the local deadband rate times ``dt``
    exceeds ``STIFF_STEP_LIMIT``.  The output grid is unaffected.
    """
    ctx = loop.context(t, dt)
    y_new = rk4_step(loop.derivs, t, y, dt, ctx)
    if not refine:
        return y_new
    cfg = loop.cfg
    g = cfg.pvfc
    n = 1
    if _corner_band(_kinetic(y, cfg.robot) - g.kd_a, g) != _corner_band(_kinetic(y_new, cfg.robot) - g.kd_a, g):
        n = CORNER_SUBSTEPS
    rate = max(compensation_stiffness(y, cfg), compensation_stiffness(y_new, cfg))
    n = max(n, math.ceil(rate * dt / STIFF_STEP_LIMIT))
    if n == 1:
        return y_new
    n = min(n, MAX_SUBSTEPS)
    h = dt / n
    y_new = y
    for j in range(n):
        y_new = rk4_step(loop.derivs, t + j * h, y_new, h, ctx)
    return y_new


def run_scenario(cfg: ScenarioConfig) -> tuple[Trace, SummaryMetrics]:
    """Simulate one scenario over its full horizon, stopping early on a field-energy abort.

    On abort the sample at (or the row appended at) the start of the failing
    step carries ``abort_flag = 1`` and the offending field energy.
    """
    loop = ClosedLoop(cfg)
    y = loop.initial_state()
    dt, sub = cfg.dt_sim, cfg.substeps
    pvfc = cfg.strategy in PVFC_STRATEGIES
    refine = cfg.strategy == "proposed"
    n_steps = cfg.n_out * sub
    residuals = np.full(n_steps, math.nan)
    rows = [loop.row(0.0, y, math.nan)]
    aborted_at = abort_energy = None
    n_done = 0

    for i in range(n_steps):
        t = i * dt
        try:
            y_new = _advance(loop, t, y, dt, refine)
        except FieldEnergyExceeded as exc:
            aborted_at, abort_energy = t, exc.energy
            if i % sub == 0:
                rows[-1] = replace(rows[-1], abort_flag=1, field_energy=exc.energy)
            else:
                last = residuals[i - 1] if i > 0 else math.nan
                rows.append(loop.aborted_row(t, y, last, exc.energy))
            break
        if pvfc:
            residuals[i] = _step_residual(y, y_new, dt, cfg.robot)
        y = y_new
        n_done = i + 1
        if n_done % sub == 0:
            t_out = n_done * dt
            try:
                rows.append(loop.row(t_out, y, residuals[i]))
            except FieldEnergyExceeded as exc:
                aborted_at, abort_energy = t_out, exc.energy
                rows.append(loop.aborted_row(t_out, y, residuals[i], exc.energy))
                break

    trace = Trace(rows, residuals[:n_done], np.arange(n_done) * dt)
    return trace, summarize(trace, aborted_at, abort_energy)


def summarize(trace: Trace, aborted_at: float | None = None, abort_energy: float | None = None) -> SummaryMetrics:
    """Average |f_x|, |f_y| and |P_r2h| over the output samples after ``t = 0``."""
    rows = trace.rows[1:]
    if not rows:
        raise ValueError("trace holds no samples after t = 0")
    f = np.array([r.f_ext for r in rows])
    power = np.array([r.energy.p_r2h for r in rows])
    res = trace.step_residuals
    max_res = float(np.nanmax(np.abs(res))) if res.size and np.any(np.isfinite(res)) else None
    return SummaryMetrics(
        avg_fx=average_metric(f[:, 0]),
        avg_fy=average_metric(f[:, 1]),
        avg_power=average_metric(power),
        aborted_at=aborted_at,
        abort_field_energy=abort_energy,
        max_passivity_residual=max_res,
    )


def table_configs(base: ScenarioConfig | None = None) -> list[ScenarioConfig]:
    """The five comparison rows, PID baselines first and the proposed controller last."""
    base = base or ScenarioConfig()
    soft = replace(base.field, K1=10.0 * np.eye(2))
    return [
        replace(base, strategy="mdk_pid", label="MDK-PID"),
        replace(base, strategy="md_pid", label="MD-PID"),
        replace(base, strategy="opvfc", label="O-PVFC K1=100", field=replace(base.field, K1=100.0 * np.eye(2))),
        replace(base, strategy="opvfc", label="O-PVFC K1=10", field=soft),
        replace(base, strategy="proposed", label="Proposed"),
    ]


def compare_table(cfgs: list[ScenarioConfig]) -> list[tuple[str, SummaryMetrics]]:
    if not cfgs:
        raise ValueError("compare_table needs at least one scenario")
    return [(cfg.name, run_scenario(cfg)[1]) for cfg in cfgs]
