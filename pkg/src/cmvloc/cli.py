"""Command-line experiment runner.

    cmvloc run CONFIG [--output-dir DIR] [--threads N] [--seed S]
    cmvloc validate CONFIG

Exit status: 0 success, 1 validation error, 2 experiment assertion failure.
"""
import argparse
import json
import os
import sys

from . import config as cfgmod
from . import lab
from .errors import CmvError
from .experiments import run as run_experiment

OUTPUT_ENV = "CMVLOC_OUTPUT_DIR"


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def cmd_run(args):
    try:
        with open(args.config) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        print(f"error: {args.config}: line {exc.lineno} column {exc.colno}: {exc.msg}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {args.config}: {exc.strerror}", file=sys.stderr)
        return 1
    if args.seed is not None:
        data["seed"] = args.seed
    try:
        cfg = cfgmod.from_dict(data)
    except CmvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out_dir = args.output_dir or os.environ.get(OUTPUT_ENV) or "."
    os.makedirs(out_dir, exist_ok=True)
    try:
        report, (header, rows), failed = run_experiment(cfg, args.threads)
    except CmvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report["assertions_failed"] = failed
    report["table"] = {"header": header, "rows": rows}
    base = os.path.join(out_dir, cfg.output_path)
    _write(base + ".json", lab.dumps(report) + "\n")
    _write(base + ".csv", lab.to_csv(header, rows))
    for f in failed:
        print(f"assertion failed: {f}", file=sys.stderr)
    print(f"wrote {base}.json and {base}.csv")
    return 2 if failed else 0


def cmd_validate(args):
    try:
        with open(args.config) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        print(f"error: {args.config}: line {exc.lineno} column {exc.colno}: {exc.msg}")
        return 1
    except OSError as exc:
        print(f"error: {args.config}: {exc.strerror}")
        return 1
    errors, warnings = cfgmod.validate_dict(data)
    for w in warnings:
        print(f"warning: {w}")
    for e in errors:
        print(f"error: {e}")
    if errors:
        return 1
    print("ok")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="cmvloc", description="Quasi-periodic CMV localization experiments")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--output-dir", default=None, help=f"output directory (default ${OUTPUT_ENV} or .)")
    r.add_argument("--threads", type=int, default=0, help="worker threads, 0 = auto")
    r.add_argument("--seed", type=int, default=None, help="override the config seed")
    r.set_defaults(func=cmd_run)
    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 0) == 0 and args.command == "run":
        args.threads = os.cpu_count() or 1
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
