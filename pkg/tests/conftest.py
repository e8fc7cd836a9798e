import numpy as np
import pytest

from kraichnan.grid import Grid
from kraichnan.operators import ScalarField


@pytest.fixture
def grid32():
    return Grid(32)


def random_field(grid, seed=0, kmax=None, zero_mean=True):
    """Random real field with modes up to kmax (default: dealiasing band)."""
    rng = np.random.default_rng(seed)
    K = grid.dealias_band if kmax is None else kmax
    sel = grid.band_mask(K)
    hat = np.zeros(grid.rshape, dtype=complex)
    hat[sel] = rng.standard_normal(sel.sum()) + 1j * rng.standard_normal(sel.sum())
    w = ScalarField(grid, grid.from_hat(hat))
    hat = np.array(w.hat) * sel
    if zero_mean:
        hat[0, 0] = 0.0
    return ScalarField(grid, hat=hat)


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}")
