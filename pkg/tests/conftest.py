import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from windcorr.windgrid import GridSpec, synth_field  # noqa: E402


@pytest.fixture(scope="session")
def grid7():
    return GridSpec.centered(7)


@pytest.fixture(scope="session")
def small_series(grid7):
    return synth_field("advective", grid7, 240, seed=3)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, title, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
