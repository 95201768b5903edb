import numpy as np
import pytest
from hypothesis import settings

from varidescent import BoxDomain, GridFunction, Placement, build_grid

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def unit2():
    return build_grid(BoxDomain.unit(2), [16, 16])


def random_cells(grid, rng, d=1):
    return GridFunction(grid, Placement.CELLS, rng.standard_normal((d, *grid.cell_shape)))


def random_box(rng, n, max_cells=17):
    lo = rng.uniform(-2.0, 1.0, n)
    hi = lo + rng.uniform(0.3, 3.0, n)
    cells = rng.integers(2, max_cells + 1, size=n)
    return build_grid(BoxDomain(lo, hi), cells)


@pytest.fixture(scope="session", autouse=True)
def _audit_bundles():
    from . import bundle_audit

    bundle_audit.install()
    yield
    bundle_audit.uninstall()


def pytest_collection_modifyitems(session, config, items):
    # the gradient-norm audit covers bundles from every other test, so it runs last
    last = [it for it in items if it.name == "test_criterion_05_gradient_norm_identity"]
    rest = [it for it in items if it not in last]
    items[:] = rest + last


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number])
