import warnings

import numpy as np
import pytest

from pinned_gl.core import DomainSpec, Grid, InclusionShape, PinningConfig

# criterion number -> (passed, detail), filled by test_acceptance
CRITERIA = {}

DESK_CENTERS = {
    1: [(0.0, 0.0)],
    2: [(-0.4, 0.0), (0.4, 0.0)],
    3: [(-0.5, 0.0), (0.0, 0.0), (0.5, 0.0)],
}


def desk_pinning(M, eps=0.02, delta=0.2, b=0.5):
    return PinningConfig(DESK_CENTERS[M], InclusionShape("disc", 0.5), b, delta, eps)


def disc_grid(n, R=1.0):
    return Grid.from_domain(DomainSpec("disc", (R,), n))


@pytest.fixture(autouse=True)
def _quiet_resolution_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*under-resolved.*")
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        ok, msg = CRITERIA[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {k:2d}: {msg}")
