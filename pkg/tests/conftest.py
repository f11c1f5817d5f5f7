import pytest

from unimodal_lab.config import RunConfig
from unimodal_lab.mapcore import UnimodalMap
from unimodal_lab.returns import nice_candidates
from unimodal_lab.wmp import anchor_points, closest_approach

import frozen

# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def cheb():
    return UnimodalMap(2, 1)


@pytest.fixture(scope="session")
def m975():
    return UnimodalMap(2, frozen.A)


@pytest.fixture(scope="session")
def table975(m975):
    return closest_approach(m975, 10_000)


@pytest.fixture(scope="session")
def anchors975(m975, table975):
    return anchor_points(m975, table975, nice_candidates(m975, 8), depth=32, node_budget=20_000)


SMALL = dict(
    orbit_horizon=200,
    entry_horizon=200,
    niceness_horizon=200,
    max_time=40,
    min_width="1e-6",
    anchor_depth=12,
    base_depth=6,
    node_budget=2000,
    geometry_samples=8,
    wmp_samples=12,
    density_samples=100,
    density_horizon=100,
)


@pytest.fixture
def small_config(tmp_path):
    """A run small enough for unit tests (seconds, not minutes)."""
    return RunConfig(output_dir=str(tmp_path / "out"), **SMALL)


@pytest.fixture(scope="session")
def small_bundle():
    from unimodal_lab.pipeline import run_pipeline

    return run_pipeline(RunConfig(**SMALL))
