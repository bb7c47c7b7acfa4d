"""Command-line entry point: validate configs, run scenarios, launch the steering bridge.

Exit codes: 0 clean completion, 1 configuration or I/O error, 2 solver halt
(the filter went infeasible or failed mid-run; partial outputs are written).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .config import load_config, from_dict
from .errors import ConfigError, PortInUse, SolverHalt
from .sim import metrics, run, write_summary

log = logging.getLogger("mcbf.cli")


def _setup_logging():
    level = os.environ.get("MCBF_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_with_overrides(args) -> "RunConfig":
    path = Path(args.config)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if getattr(args, "filter", None):
        raw["filter"] = args.filter
    sim = dict(raw.get("sim", {}))
    if getattr(args, "duration", None) is not None:
        sim["duration"] = args.duration
    if getattr(args, "dt", None) is not None:
        sim["dt"] = args.dt
    if sim:
        raw["sim"] = sim
    if getattr(args, "out", None):
        raw["output"] = args.out
    return from_dict(raw)


def _write_outputs(trace, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    trace.to_csv(out_dir / "trace.csv")
    trace.eigenvalues_to_csv(out_dir / "eigenvalues.csv")
    write_summary(trace, out_dir / "summary.json")


def cmd_run(args) -> int:
    cfg = _load_with_overrides(args)
    if cfg.output is None:
        raise ConfigError("no output directory: set 'output' in the config or pass --out")
    try:
        trace = run(cfg)
    except SolverHalt as halt:
        _write_outputs(halt.trace, cfg.output)
        print(f"solver halt at step {halt.step}: {halt.reason}; "
              f"partial trace written to {cfg.output}", file=sys.stderr)
        return 2
    _write_outputs(trace, cfg.output)
    summary = metrics(trace)
    log.info("run complete: %s", summary)
    print(f"wrote {len(trace)} records to {cfg.output}")
    return 0


def cmd_validate(args) -> int:
    load_config(args.config)
    print("config OK")
    return 0


def cmd_steer(args) -> int:
    from .bridge import run_bridge  # imported lazily: pulls in the websocket stack

    cfg = _load_with_overrides(args)
    return run_bridge(cfg, host=args.host, port=args.port)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mcbf", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write trace/summary files")
    p_run.add_argument("--config", required=True, help="path to a JSON run config")
    p_run.add_argument("--out", help="output directory (overrides the config)")
    p_run.add_argument("--filter", help="filter variant (overrides the config)")
    p_run.add_argument("--duration", type=float, help="simulation horizon in seconds")
    p_run.add_argument("--dt", type=float, help="simulation step in seconds")
    p_run.set_defaults(fn=cmd_run)

    p_val = sub.add_parser("validate", help="schema-check a config and exit")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(fn=cmd_validate)

    p_steer = sub.add_parser("steer", help="serve the interactive steering session")
    p_steer.add_argument("--config", required=True)
    p_steer.add_argument("--port", type=int, default=8799)
    p_steer.add_argument("--host", default="127.0.0.1")
    p_steer.add_argument("--out", help="output directory for the session trace")
    p_steer.add_argument("--filter", help="filter variant (overrides the config)")
    p_steer.add_argument("--duration", type=float, help=argparse.SUPPRESS)
    p_steer.add_argument("--dt", type=float, help=argparse.SUPPRESS)
    p_steer.set_defaults(fn=cmd_steer)
    return ap


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except PortInUse as exc:
        print(f"port in use: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
