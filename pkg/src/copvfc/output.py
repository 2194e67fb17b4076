"""CSV and manifest writers for simulation results."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .sim import SummaryMetrics, Trace, TraceRow

TRACE_COLUMNS = (
    "t", "q1", "q2", "qf", "qd1", "qd2", "qdf", "x", "y", "xh_x", "xh_y", "xhat_x", "xhat_y",
    "xa_x", "xa_y", "fext_x", "fext_y", "tau1", "tau2", "tauf", "ka", "k_robot", "k_flywheel",
    "alpha", "p_r2h", "v1", "v2", "passivity_residual", "abort_flag",
)
SUMMARY_COLUMNS = ("strategy", "avg_fx", "avg_fy", "avg_power", "aborted_at")


@dataclass
class RunManifest:
    config_path: str | None
    out_dir: str
    version: str
    seed: int
    command: str
    files: list[str] = field(default_factory=list)

    def write(self, path) -> Path:
        """Written last, after every listed file exists."""
        path = Path(path)
        missing = [f for f in self.files if not (Path(self.out_dir) / f).is_file()]
        if missing:
            raise FileNotFoundError(f"manifest lists files that were not written: {missing}")
        payload = {
            "command": self.command, "config": self.config_path, "out_dir": self.out_dir,
            "files": sorted(self.files), "version": self.version, "seed": self.seed,
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def fmt(value) -> str:
    value = float(value)
    if math.isnan(value):
        return "nan"
    return format(value, ".9g")


def row_values(r: TraceRow) -> list:
    e = r.energy
    nums = [
        r.t, *r.qa, *r.qda, *r.x, *r.x_h, *r.x_hat, *r.x_a, *r.f_ext, *r.tau_a,
        e.ka, e.k_robot, e.k_flywheel, e.alpha, e.p_r2h, e.v1, e.v2, e.passivity_residual,
    ]
    return [fmt(v) for v in nums] + [str(int(r.abort_flag))]


def _open_for_write(path: Path):
    try:
        return path.open("w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_csv(trace: Trace, path) -> Path:
    path = Path(path)
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in trace.rows:
            w.writerow(row_values(r))
    return path


def read_trace_csv(path) -> dict[str, np.ndarray]:
    """Columns of an emitted trace file as float arrays."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader], dtype=float).reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def emit_summary(table: list[tuple[str, SummaryMetrics]], path) -> Path:
    """One row per scenario; aborted scenarios leave the metric cells empty."""
    path = Path(path)
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for name, m in table:
            if m.aborted_at is not None:
                w.writerow([name, "", "", "", fmt(m.aborted_at)])
            else:
                w.writerow([name, fmt(m.avg_fx), fmt(m.avg_fy), fmt(m.avg_power), ""])
    return path


def slug(name: str) -> str:
    keep = [c.lower() if c.isalnum() else "_" for c in name]
    return "_".join(filter(None, "".join(keep).split("_")))
