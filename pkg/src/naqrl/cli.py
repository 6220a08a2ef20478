"""Command line entry point: ``naqrl run|selftest|schema``.

Exit codes: 0 success, 1 pipeline/runtime failure, 2 config/schema violation.
Errors are printed to stdout as a single JSON object.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import config, pipelines, selftest


def _error(payload: dict, code: int) -> int:
    print(json.dumps(payload, sort_keys=True))
    return code


def cmd_run(args) -> int:
    try:
        cfg = config.load(args.config, seed=args.seed, out_dir=args.out)
        pipelines.build_env(cfg)  # matrix-level checks (Hermitian, unitary) count as config errors
    except config.ConfigError as exc:
        return _error(exc.to_json(), 2)
    except (ValueError, IndexError, KeyError) as exc:
        return _error({"error": "config", "path": "env", "message": str(exc)}, 2)
    try:
        files = pipelines.run(cfg, jobs=args.jobs)
    except Exception as exc:
        return _error({"error": "runtime", "type": type(exc).__name__, "message": str(exc)}, 1)
    for f in files:
        print(f)
    return 0


def cmd_selftest(args) -> int:
    results = selftest.selftest(args.seed if args.seed is not None else 0)
    print(selftest.format_table(results))
    return 0 if all(c.passed for c in results) else 1


def cmd_schema(_args) -> int:
    print(json.dumps(config.SCHEMA, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="naqrl", description="Quantum RL in non-abelian environments")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--seed", type=int, help="override the config seed")
    r.add_argument("--out", help="override the output directory")
    r.add_argument("--jobs", type=int, default=1, help="parallel replicates (outputs do not depend on it)")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("selftest", help="run the bundled invariant checks")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_selftest)
    sc = sub.add_parser("schema", help="print the config JSON schema")
    sc.set_defaults(func=cmd_schema)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
