"""Command-line entry point.

    stokeslp <command> [--config PATH] [--set key=value]... [check-name]

Commands: verify-jumps, verify-green, verify-lateral, spectrum, solve, dtn,
all (the six preceding), check <ac1..ac11|acceptance>.
Exit status: 0 all rows pass, 1 some row fails, 2 configuration error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import checks
from .config import COMMANDS, ConfigError, load_config
from .io import write_check_csv, write_summary

RUN_ALL = ("verify-jumps", "verify-green", "verify-lateral", "spectrum", "solve", "dtn")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stokeslp", description="Layer-potential verification runs on the flat torus.")
    p.add_argument("command", nargs="?", choices=COMMANDS)
    p.add_argument("name", nargs="?", help="acceptance check name for 'check' (ac1..ac11 or 'acceptance')")
    p.add_argument("--config", help="line-based key = value file (must define n and N)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--outdir", help="output directory (overrides the config)")
    return p


def _selected(cfg, command, name):
    if command == "check":
        if name == "acceptance":
            return [(k, fn) for k, (_, fn) in checks.ACCEPTANCE.items()]
        if name not in checks.ACCEPTANCE:
            raise ConfigError(f"unknown check {name!r}; expected one of {', '.join(checks.ACCEPTANCE)} or acceptance")
        return [(name, checks.ACCEPTANCE[name][1])]
    if name is not None:
        raise ConfigError(f"unexpected argument {name!r}")
    names = RUN_ALL if command == "all" else (command,)
    return [(k, checks.COMMAND_CHECKS[k]) for k in names]


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args.config, args.set)
        if args.outdir:
            cfg = replace(cfg, outdir=args.outdir)
        command = args.command or cfg.command
        selected = _selected(cfg, command, args.name)
    except ConfigError as e:
        print(f"stokeslp: config error: {e}", file=sys.stderr)
        return 2
    results = {}
    for name, fn in selected:
        rows = fn(cfg)
        results[name] = rows
        write_check_csv(cfg.outdir, name, rows)
        bad = sum(not r.passed for r in rows)
        print(f"{name}: {'PASS' if not bad else 'FAIL'} ({len(rows) - bad}/{len(rows)} rows)")
        for r in rows:
            if not r.passed:
                print(f"  fail {r.case} {r.param}: {r.residual:.3e} vs {r.tolerance:.1e}")
    write_summary(cfg.outdir, cfg.to_dict(), results)
    return 0 if all(r.passed for v in results.values() for r in v) else 1


if __name__ == "__main__":
    sys.exit(main())
