"""
tests/conftest.py

Shared fixtures and a scanline reference for even-odd areas.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from pipelines.geometry import Polygon, PolygonSet  # noqa: E402
from pipelines.shapes import box, sampled_rectangle  # noqa: E402

DATA_DIR = ROOT / "data"


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow matching tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def scanline_area(*shapes, rows: int = 2048) -> float:
    """
    Even-odd area of all rings of all shapes taken together.

    For two regions this is the area of their symmetric difference. Each
    scanline is integrated exactly in x; rows are sampled at their centres.
    """
    rings = []
    for s in shapes:
        if isinstance(s, Polygon):
            rings.append(s.vertices)
        else:
            rings.extend(r.polygon.vertices for r in s.rings)
    starts = np.vstack(rings)
    ends = np.vstack([np.roll(r, -1, axis=0) for r in rings])
    ylo, yhi = starts[:, 1].min(), starts[:, 1].max()
    dy = (yhi - ylo) / rows
    total = 0.0
    for y in ylo + (np.arange(rows) + 0.5) * dy:
        crosses = (starts[:, 1] <= y) != (ends[:, 1] <= y)
        s, e = starts[crosses], ends[crosses]
        xs = np.sort(s[:, 0] + (y - s[:, 1]) / (e[:, 1] - s[:, 1]) * (e[:, 0] - s[:, 0]))
        total += float((xs[1::2] - xs[0::2]).sum())
    return total * dy


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def unit_square():
    return box(0.0, 0.0, 1.0, 1.0)


@pytest.fixture
def sampled_square():
    """Unit square centred at the origin, 4 samples per side (K = 16)."""
    return sampled_rectangle(1.0, 1.0, 4, 4)


@pytest.fixture
def big_box():
    return PolygonSet.from_polygon(box(-1.0, -1.0, 1.0, 1.0))


@pytest.fixture
def data_dir():
    return DATA_DIR
