from __future__ import annotations

import numpy as np
import pytest

from asprl.gridworld_env import GridMap, load_map
from asprl.map_sources import builtin_map


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def map1() -> GridMap:
    return builtin_map("map1")


@pytest.fixture
def map4() -> GridMap:
    return builtin_map("map4")


@pytest.fixture
def tiny_grid() -> GridMap:
    """3x3: стена в центре, яма справа внизу, старт слева внизу, цель справа вверху."""
    return load_map("..G\n.W.\nS.H\n")


@pytest.fixture
def open_2x2() -> GridMap:
    return load_map(".G\nS.\n")
