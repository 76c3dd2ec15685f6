"""Run acceptance checks ac1..ac11 and write one CSV per check plus a summary.

    python3 scripts/run_acceptance.py [--outdir out/acceptance] [ac3 ac6 ...]
"""
import argparse
import sys
import time

from stokeslp import checks
from stokeslp.io import write_check_csv, write_summary


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", default=list(checks.ACCEPTANCE))
    ap.add_argument("--outdir", default="out/acceptance")
    args = ap.parse_args(argv)
    results = {}
    for name in args.names:
        title, fn = checks.ACCEPTANCE[name]
        t0 = time.perf_counter()
        rows = fn(None)
        results[name] = rows
        write_check_csv(args.outdir, name, rows)
        bad = sum(not r.passed for r in rows)
        print(f"{name:>4} {'PASS' if not bad else 'FAIL'}  {title:<28} {len(rows) - bad}/{len(rows)} rows "
              f"{time.perf_counter() - t0:6.1f}s", flush=True)
    write_summary(args.outdir, {"checks": args.names}, results)
    return 0 if all(r.passed for v in results.values() for r in v) else 1


if __name__ == "__main__":
    sys.exit(main())
