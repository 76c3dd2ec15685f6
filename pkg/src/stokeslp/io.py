"""Atomic CSV/JSON output for check runs."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

CSV_HEADER = ("check", "n", "N", "case", "param", "residual", "tolerance", "pass")


def atomic_write(path: str | Path, text: str) -> Path:
    """Write via a temporary file in the same directory and rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.csv_fields())
    return buf.getvalue()


def write_check_csv(outdir: str | Path, name: str, rows) -> Path:
    return atomic_write(Path(outdir) / f"{name}.csv", rows_to_csv(rows))


def failure_list(rows) -> list:
    return [{"check": r.check, "n": r.n, "N": r.N, "case": r.case, "param": r.param,
             "residual": r.residual, "tolerance": r.tolerance} for r in rows if not r.passed]


def write_summary(outdir: str | Path, config: dict, results: dict) -> Path:
    """results maps check name to its rows; the timestamp lives only here."""
    body = {
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": config,
        "checks": {k: {"rows": len(v), "failed": sum(not r.passed for r in v)} for k, v in results.items()},
        "failures": [f for v in results.values() for f in failure_list(v)],
    }
    body["passed"] = not body["failures"]
    return atomic_write(Path(outdir) / "summary.json", json.dumps(body, indent=2, default=str) + "\n")
