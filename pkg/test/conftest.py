import pytest
import sys
import os

import numpy as np
from dotenv import load_dotenv

# Add the project root to sys.path for imports and change working directory
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, project_root)

# Change working directory to project root before loading .env
original_cwd = os.getcwd()
os.chdir(project_root)

# Load .env files from project root
load_dotenv()

# Restore original working directory
os.chdir(original_cwd)

from config.settings import settings  # noqa: E402
from dynamics.ifs import IFSSpec  # noqa: E402
from dynamics.maps import Affine1D, Moebius, PiecewiseQuad, Projective3  # noqa: E402
from geometry.grid import Grid  # noqa: E402
from geometry.space import Space  # noqa: E402
from relation.transition import PADDED, SAMPLED, build_relation  # noqa: E402


@pytest.fixture(autouse=True)
def reset_settings():
    """Reset settings to their values before the test"""
    original = settings.model_dump()
    yield
    for key, value in original.items():
        setattr(settings, key, value)


# ── small systems ────────────────────────────────────────────
@pytest.fixture
def half_map_ifs():
    """f(x) = x/2 on [0, 1]"""
    return IFSSpec(Space.interval(0.0, 1.0), (Affine1D(0.5),), "half")


@pytest.fixture
def halves_ifs():
    """{x/2, x/2 + 1/2} on [0, 1]"""
    return IFSSpec(Space.interval(0.0, 1.0), (Affine1D(0.5, 0.0), Affine1D(0.5, 0.5)), "halves")


@pytest.fixture
def rotation_ifs():
    """z -> iz on the circle"""
    return IFSSpec(Space.circle(), (Moebius(1j, 0, 0, 1),), "rotation")


@pytest.fixture
def half_rel(half_map_ifs):
    """x/2 on 8 cells of [0, 1], cell centers only: cell k -> cell floor((k + 1/2) / 2)"""
    grid = Grid(half_map_ifs.space, (8,))
    return build_relation(grid, half_map_ifs, SAMPLED, samples_per_cell=1)


@pytest.fixture
def rotation_rel(rotation_ifs):
    """quarter turn on 8 arcs: arc k -> arc k + 2"""
    grid = Grid(rotation_ifs.space, (8,))
    return build_relation(grid, rotation_ifs, SAMPLED, samples_per_cell=1)


# ── preset-sized systems (built once) ───────────────────────
@pytest.fixture(scope="session")
def multiple_system():
    """Piecewise quadratic map on [-2.6, 3.6], 2000 cells, padded relation."""
    ifs = IFSSpec(Space.interval(-2.6, 3.6), (PiecewiseQuad(),), "ex-multiple")
    grid = Grid(ifs.space, (2000,))
    rel = build_relation(grid, ifs, PADDED)
    return ifs, grid, rel


@pytest.fixture(scope="session")
def proj_line_system():
    """diag(1,2,2) on a 64x64 projective grid: three samples per axis and center relations."""
    ifs = IFSSpec(Space.projective_plane(), (Projective3(np.diag([1.0, 2.0, 2.0])),), "ex-proj-line")
    grid = Grid(ifs.space, (64, 64))
    rel = build_relation(grid, ifs, SAMPLED, samples_per_cell=3)
    center = build_relation(grid, ifs, SAMPLED, samples_per_cell=1)
    return ifs, grid, rel, center
