import numpy as np
import pytest

from supercell.antenna import make_uniform_plan
from supercell.coverage import ElevationGrid, Site
from supercell.propagation import tuned_spm


def flat_grid(n=40, cell=100.0, z=0.0, nodata=-9999.0):
    return ElevationGrid(n, n, cell, 0.0, 0.0, nodata, np.full((n, n), z))


def centre_site(grid, *, tower=30.0, n_sectors=1, gain=0.0, tx=0.0, spm=None, kind="rectangular"):
    x0, y0, x1, y1 = grid.extent
    return Site(
        (x0 + x1) / 2,
        (y0 + y1) / 2,
        tower,
        make_uniform_plan(n_sectors, gain, kind),
        tx,
        2500.0,
        2.0,
        spm or tuned_spm(2500),
    )


@pytest.fixture
def spm2500():
    return tuned_spm(2500)


@pytest.fixture
def spm728():
    return tuned_spm(728)


# -- acceptance reporting --------------------------------------------------

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or (rep.when != "call" and not rep.failed):
        return
    number, title = marker.args
    prev = _ACCEPTANCE.get(number, (title, True))
    _ACCEPTANCE[number] = (title, prev[1] and rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}")
