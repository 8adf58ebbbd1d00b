from __future__ import annotations

import numpy as np
import pytest

from asprl.gridworld_env import GridMap, SlipModel, as_action_description, cell_of, full_reduced, load_map
from asprl.mdp_bridge import build_reduced, enumerate_trajectories
from asprl.verification import DETERMINISTIC, check_map, format_cases, random_map, shortest_path_length, verify

SLIP = SlipModel()


# ---- кратчайший путь и случайные карты ----

def test_shortest_path_length(tiny_grid, open_2x2):
    assert shortest_path_length(tiny_grid) == 4
    assert shortest_path_length(tiny_grid, max_steps=3) is None
    assert shortest_path_length(open_2x2) == 2
    assert shortest_path_length(load_map("..G\nWWW\nS..\n")) is None
    assert shortest_path_length(GridMap(2, 2, start=(0, 0), goal=(0, 0))) is None


def test_random_maps_are_small_and_solvable():
    rng = np.random.default_rng(5)
    for _ in range(20):
        grid = random_map(rng, max_size=3)
        assert 2 <= grid.width <= 3 and 2 <= grid.height <= 3
        assert grid.start != grid.goal
        assert shortest_path_length(grid) is not None


# ---- детерминированная динамика ----

def test_deterministic_check_passes_on_random_maps():
    cases = verify(n_maps=8, seed=2, max_size=3)
    assert all(c.passed for c in cases), format_cases(cases)
    assert all(c.slip == DETERMINISTIC for c in cases)


def test_format_cases_reports_totals(tiny_grid):
    text = format_cases([check_map(tiny_grid)])
    assert text.startswith("[PASS] map 0: 3x3")
    assert text.endswith("1/1 passed")


# ---- проскальзывание ----

def test_slip_check_passes_when_detours_are_in_reduction(tiny_grid):
    # с запасом 2 в H есть R,L,U,U,R,R: из (1,0) разрешено вернуться влево
    case = check_map(tiny_grid, slack=2, slip=SLIP)
    assert case.slip == SLIP
    assert case.policy_contained
    assert case.passed
    assert case.v_reduced == pytest.approx(case.v_full, abs=1e-9)


def test_slip_check_without_slack_falls_back_outside_reduction(tiny_grid):
    case = check_map(tiny_grid, slack=0, slip=SLIP)
    # (1,0) вне S~: агент там выбирает из всех действий, значение не теряется
    assert case.policy_contained
    assert case.v_reduced == pytest.approx(case.v_full, abs=1e-9)


def test_slack_two_covers_every_pair_of_two_by_two(open_2x2):
    d = as_action_description(open_2x2, open_2x2.walls, open_2x2.holes)
    h = enumerate_trajectories(d, max_horizon=6, slack=2)
    reduced = build_reduced(h, d).relabel(cell_of)
    assert set(reduced.allowed) == set(full_reduced(open_2x2, SLIP).allowed)
    assert len(reduced.allowed) == 12
    assert check_map(open_2x2, slack=2, slip=SLIP).passed


def test_slip_reduction_is_sound_on_random_maps():
    cases = verify(n_maps=10, seed=4, max_size=3, slip=SLIP, slack=2)
    for case in cases:
        assert case.dual_agrees
        assert case.v_reduced <= case.v_full + 1e-6
        if case.policy_contained:
            assert case.v_reduced == pytest.approx(case.v_full, abs=1e-6)
