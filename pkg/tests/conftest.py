import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rsuplan import _kernels_py, geometry  # noqa: E402
from rsuplan.candidates import assemble_candidates  # noqa: E402
from rsuplan.coverage import build_grid, build_visibility  # noqa: E402
from rsuplan.ingest import generate_irregular_grid, generate_synthetic_grid, plus_sign_scene  # noqa: E402
from rsuplan.radio import TABLE_I  # noqa: E402

try:
    from rsuplan import _kernels as _kernels_c
except ImportError:  # pragma: no cover
    _kernels_c = None

BACKENDS = {"python": _kernels_py}
if _kernels_c is not None:
    BACKENDS["cython"] = _kernels_c

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(params=sorted(BACKENDS))
def backend(request, monkeypatch):
    """Run the test once per kernel implementation."""
    monkeypatch.setattr(geometry, "kernels", BACKENDS[request.param])
    return BACKENDS[request.param]


@pytest.fixture(scope="session")
def plus_scene():
    return plus_sign_scene()


@pytest.fixture(scope="session")
def grid_scene():
    return generate_synthetic_grid(5, 5, 90.0, 10.0)


@pytest.fixture(scope="session")
def irregular_scene():
    return generate_irregular_grid(5, 5, seed=0)


def _table(scene, margin):
    cands = assemble_candidates(scene)
    grid = build_grid(scene, 4.0, margin)
    return build_visibility(scene, grid, cands, TABLE_I)


@pytest.fixture(scope="session")
def plus_table(plus_scene):
    return _table(plus_scene, 0.0)


@pytest.fixture(scope="session")
def grid_table(grid_scene):
    return _table(grid_scene, 50.0)


@pytest.fixture(scope="session")
def irregular_table(irregular_scene):
    return _table(irregular_scene, 50.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
