"""Command-line entry point: ``copvfc run | table | verify``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, apply_overrides, parse_config
from .output import RunManifest, emit_csv, emit_summary, slug
from .sim import STRATEGIES, ScenarioConfig, table_configs, run_scenario

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="copvfc", description="Co-carrying PVFC simulator.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI scenario file (defaults when omitted)")
    common.add_argument("--out", type=Path, help="output directory (falls back to $COPVFC_OUT, then ./out)")
    common.add_argument("--strategy", choices=STRATEGIES, help="override [sim] strategy")
    common.add_argument("--seed", type=int, help="override [sim] seed")
    common.add_argument("--dt", type=float, help="override [sim] dt_sim (s)")
    sub.add_parser("run", parents=[common], help="simulate one scenario")
    sub.add_parser("table", parents=[common], help="five-row strategy comparison")
    sub.add_parser("verify", help="structural property sweep")
    return ap


def _load(args) -> ScenarioConfig:
    cfg = parse_config(args.config) if args.config else ScenarioConfig()
    return apply_overrides(cfg, args.strategy, args.seed, args.dt)


def _out_dir(args) -> Path:
    out = args.out or Path(os.environ.get("COPVFC_OUT", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    trace, metrics = run_scenario(cfg)
    files = [emit_csv(trace, out / "trace.csv").name, emit_summary([(cfg.name, metrics)], out / "summary.csv").name]
    _manifest(args, out, cfg, "run", files)
    _print_table([(cfg.name, metrics)])
    return EXIT_OK


def cmd_table(args) -> int:
    base = _load(args)
    out = _out_dir(args)
    table, files = [], []
    for cfg in table_configs(base):
        trace, metrics = run_scenario(cfg)
        files.append(emit_csv(trace, out / f"trace_{slug(cfg.name)}.csv").name)
        table.append((cfg.name, metrics))
    files.append(emit_summary(table, out / "summary.csv").name)
    _manifest(args, out, base, "table", files)
    _print_table(table)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_all

    results = run_all()
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


def _manifest(args, out, cfg, command, files):
    RunManifest(
        config_path=str(args.config) if args.config else None, out_dir=str(out),
        version=__version__, seed=cfg.seed, command=command, files=files,
    ).write(out / "manifest.json")


def _print_table(table):
    print(f"{'strategy':<16} {'avg|fx| N':>11} {'avg|fy| N':>11} {'avg|P| W':>11}  aborted_at")
    for name, m in table:
        if m.aborted_at is not None:
            print(f"{name:<16} {'-':>11} {'-':>11} {'-':>11}  {m.aborted_at:.3f}")
        else:
            print(f"{name:<16} {m.avg_fx:11.4f} {m.avg_fy:11.4f} {m.avg_power:11.5f}")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handlers = {"run": cmd_run, "table": cmd_table, "verify": cmd_verify}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
