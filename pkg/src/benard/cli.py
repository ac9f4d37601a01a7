"""Command line entry point.

    benard run --config FILE [--out DIR]
    benard sweep --config FILE --key KEY --values V1,V2,... [--out DIR]
    benard probe-stokes --config FILE [--out DIR]

Exit status is 0 when every verdict holds, 1 when one fails, 2 for
configuration errors and 3 for solver or stability failures.
"""
from __future__ import annotations

import argparse
import os
import sys

from .config import load_config, render_config
from .errors import BenardError, ConfigurationError
from .io import atomic_write, table_csv, verdicts_text
from .scenarios import STOKES_HEADER, run_scenario, stokes_probe_table, sweep


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="benard", description="Instrumented variable-density Bénard simulator")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the scenario named in the config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default=None)
    sw = sub.add_parser("sweep", help="repeat a run over values of one key")
    sw.add_argument("--config", required=True)
    sw.add_argument("--key", required=True)
    sw.add_argument("--values", required=True, help="comma separated values")
    sw.add_argument("--out", default=None)
    pr = sub.add_parser("probe-stokes", help="manufactured Stokes convergence and regularity probes")
    pr.add_argument("--config", required=True)
    pr.add_argument("--out", default=None)
    return p


def _report(verdicts) -> int:
    for v in verdicts:
        print(v.line())
    return 0 if all(v.holds for v in verdicts) else 1


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = args.out or cfg.out_dir
        if args.command == "run":
            outcome = run_scenario(cfg, out)
            return _report(outcome.verdicts)
        if args.command == "sweep":
            values = [v.strip() for v in args.values.split(",") if v.strip()]
            os.makedirs(out, exist_ok=True)
            table, verdicts = sweep(cfg, args.key, values, out)
            atomic_write(os.path.join(out, "verdicts.txt"), verdicts_text(verdicts))
            atomic_write(os.path.join(out, "resolved_config.txt"), render_config(cfg))
            return _report(verdicts)
        rows, verdicts = stokes_probe_table(cfg)
        os.makedirs(out, exist_ok=True)
        atomic_write(os.path.join(out, "probe.csv"), table_csv(STOKES_HEADER, rows))
        atomic_write(os.path.join(out, "verdicts.txt"), verdicts_text(verdicts))
        return _report(verdicts)
    except ConfigurationError as exc:
        key = f" (key: {exc.key})" if exc.key else ""
        print(f"configuration error: {exc}{key}", file=sys.stderr)
        return 2
    except BenardError as exc:
        stage = getattr(exc, "stage", None)
        print(f"{type(exc).__name__}{f' in {stage}' if stage else ''}: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
