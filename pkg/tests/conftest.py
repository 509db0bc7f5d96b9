from __future__ import annotations

import numpy as np
import pytest

from fedosov_bt.bergman import GridPipeline, grid_for
from fedosov_bt.fedosov import assemble_I_BT, required_m_cut
from fedosov_bt.geometry import geometry_at

SAMPLE_POINTS = np.array([0.31 + 0.22j, -0.54 + 0.13j, 0.07 - 0.81j, 1.3 + 0.4j, -0.9 - 1.1j])


@pytest.fixture(scope="session")
def cp1():
    """Floating CP^1 jets of order 14 at a handful of chart points."""
    return geometry_at("cp1", SAMPLE_POINTS[None, :], 14)


@pytest.fixture(scope="session")
def flat1():
    return geometry_at("flat", SAMPLE_POINTS[None, :], 14)


@pytest.fixture(scope="session")
def cp1_data(cp1):
    """Fedosov data on CP^1 good for weight 3 at y-degree 3."""
    return assemble_I_BT(cp1, required_m_cut(3, 3), w_max=3)


@pytest.fixture(scope="session")
def flat1_data(flat1):
    return assemble_I_BT(flat1, required_m_cut(3, 3), w_max=3)


@pytest.fixture(scope="session")
def small_pipe():
    """Grid pipeline resolving levels up to 20 at weight 2."""
    return GridPipeline.build(grid_for(20, 2), 2)
