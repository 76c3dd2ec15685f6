import csv
import json

import pytest

from stokeslp.cli import main
from stokeslp.io import CSV_HEADER


def _cfg(tmp_path, text="n = 2\nN = 64\nV = 1\nV0 = 1\n"):
    p = tmp_path / "run.cfg"
    p.write_text(text)
    return str(p)


def _rows(path):
    rows = list(csv.reader(path.read_text().splitlines()))
    assert tuple(rows[0]) == CSV_HEADER
    return rows[1:]


def test_verify_jumps_defaults(tmp_path):
    out = tmp_path / "out"
    assert main(["verify-jumps", "--config", _cfg(tmp_path), "--outdir", str(out)]) == 0
    rows = _rows(out / "verify-jumps.csv")
    assert {r[4] for r in rows} >= {"W", "V", "P", "TS"}
    assert all(r[-1] == "pass" for r in rows)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["passed"] and summary["failures"] == []


def test_spectrum_bump(tmp_path):
    out = tmp_path / "out"
    cfg = _cfg(tmp_path, "n = 2\nN = 32\nV = 1\nV0 = bump(1)\n")
    assert main(["spectrum", "--config", cfg, "--outdir", str(out)]) == 0
    rows = {r[4]: float(r[5]) for r in _rows(out / "spectrum.csv")}
    assert rows["S:|kernel_dim-1|"] == 0.0
    assert rows["S:nu_correlation[min]"] >= 0.999


def test_missing_N_is_config_error(tmp_path, capsys):
    assert main(["verify-jumps", "--config", _cfg(tmp_path, "n = 2\n")]) == 2
    err = capsys.readouterr().err.strip()
    assert len(err.splitlines()) == 1 and "N" in err


def test_bad_command_and_check_name(tmp_path, capsys):
    assert main(["frobnicate", "--config", _cfg(tmp_path)]) == 2
    assert main(["check", "ac42", "--config", _cfg(tmp_path)]) == 2


def test_failure_exit_code(tmp_path):
    out = tmp_path / "out"
    cfg = _cfg(tmp_path, "n = 2\nN = 32\ntol.green = 1e-30\ntol.green_weak = 1e-30\n")
    assert main(["verify-green", "--config", cfg, "--outdir", str(out), "--set", "V0=bump(1)"]) == 1
    summary = json.loads((out / "summary.json").read_text())
    assert not summary["passed"] and summary["failures"]


def test_deterministic_csv(tmp_path):
    cfg = _cfg(tmp_path, "n = 2\nN = 32\nseed = 3\n")
    bodies = []
    for k in range(2):
        out = tmp_path / f"out{k}"
        assert main(["verify-green", "--config", cfg, "--outdir", str(out)]) == 0
        bodies.append((out / "verify-green.csv").read_bytes())
    assert bodies[0] == bodies[1]


@pytest.mark.parametrize("name", ["ac1", "ac2", "ac5"])
def test_named_acceptance_check(tmp_path, name):
    out = tmp_path / "out"
    assert main(["check", name, "--config", _cfg(tmp_path), "--outdir", str(out)]) == 0
    assert (out / f"{name}.csv").exists()
