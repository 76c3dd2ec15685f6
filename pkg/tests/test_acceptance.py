"""Acceptance criteria 1-11 at their stated tolerances, one line per criterion."""
import time

import pytest

from stokeslp import checks

RESULTS = {}


@pytest.fixture(scope="module", autouse=True)
def _shared_engines():
    yield
    checks.clear_cache()


@pytest.mark.slow
@pytest.mark.parametrize("name", list(checks.ACCEPTANCE))
def test_criterion(name):
    title, fn = checks.ACCEPTANCE[name]
    t0 = time.perf_counter()
    rows = fn(None)
    bad = [r for r in rows if not r.passed]
    line = (f"criterion {name[2:]:>2} {'PASS' if not bad else 'FAIL'}  {title:<28} "
            f"{len(rows) - len(bad)}/{len(rows)} rows  {time.perf_counter() - t0:6.1f}s")
    RESULTS[name] = line
    print(line)
    assert rows, f"{name} produced no rows"
    assert not bad, "\n".join(f"{r.case} {r.param}: {r.residual:.3e} vs {r.tolerance:.1e}" for r in bad)
