from __future__ import annotations

from collections import Counter

import numpy as np
import pytest

from asprl.errors import (
    DimensionMismatch,
    DuplicateStartOrGoal,
    InvalidAction,
    InvalidChar,
    InvalidState,
    MapError,
    MapOverlap,
    MissingStartOrGoal,
    NonRectangular,
)
from asprl.gridworld_env import (
    ACTIONS,
    REWARD_GOAL,
    REWARD_HOLE,
    REWARD_STEP,
    GridMap,
    GridWorld,
    SlipModel,
    explicit_mdp,
    full_reduced,
    load_map,
    outcome_distribution,
    resolve,
    serialize_map,
    step,
    switch_map,
)
from asprl.map_sources import BUILTIN_MAPS, SITUATIONS, BuiltinMapSource, FileMapSource, builtin_map
from asprl.rl_core import STEP_LIMIT
from asprl.verification import shortest_path_length


# ---- карты ----

def test_load_map_coordinates(tiny_grid):
    assert (tiny_grid.width, tiny_grid.height) == (3, 3)
    assert tiny_grid.start == (0, 0)
    assert tiny_grid.goal == (2, 2)
    assert tiny_grid.walls == {(1, 1)}
    assert tiny_grid.holes == {(2, 0)}
    assert serialize_map(tiny_grid) == "..G\n.W.\nS.H\n"


@pytest.mark.parametrize(
    "text, error",
    [
        ("S.\n.\n", NonRectangular),
        ("", NonRectangular),
        ("S.X\n..G\n", InvalidChar),
        ("...\n..G\n", MissingStartOrGoal),
        ("S..\n...\n", MissingStartOrGoal),
        ("S.S\n..G\n", DuplicateStartOrGoal),
        ("SGG\n...\n", DuplicateStartOrGoal),
    ],
)
def test_load_map_errors(text, error):
    with pytest.raises(error):
        load_map(text)
    with pytest.raises(MapError):
        load_map(text)


def test_grid_map_validation():
    with pytest.raises(MapOverlap):
        GridMap(3, 3, walls=frozenset({(1, 1)}), holes=frozenset({(1, 1)}), start=(0, 0), goal=(2, 2))
    with pytest.raises(MapOverlap):
        GridMap(3, 3, walls=frozenset({(2, 2)}), start=(0, 0), goal=(2, 2))
    with pytest.raises(MapOverlap):
        GridMap(3, 3, start=(0, 0), goal=(3, 0))
    with pytest.raises(NonRectangular):
        GridMap(0, 3)


def test_free_cells_exclude_walls_and_holes(tiny_grid):
    free = tiny_grid.free_cells()
    assert len(free) == 7
    assert (1, 1) not in free and (2, 0) not in free


# ---- динамика ----

def test_resolve_causes(tiny_grid):
    assert resolve(tiny_grid, (0, 0), "left") == resolve(tiny_grid, (0, 0), "down")
    bump = resolve(tiny_grid, (0, 0), "left")
    assert (bump.next_state, bump.reward, bump.terminal, bump.cause) == ((0, 0), REWARD_STEP, False, "wall_bump")
    inner = resolve(tiny_grid, (1, 0), "up")
    assert (inner.next_state, inner.cause) == ((1, 0), "wall_bump")
    hole = resolve(tiny_grid, (1, 0), "right")
    assert (hole.next_state, hole.reward, hole.terminal, hole.cause) == ((2, 0), REWARD_HOLE, True, "hole")
    goal = resolve(tiny_grid, (1, 2), "right")
    assert (goal.reward, goal.terminal, goal.cause) == (REWARD_GOAL, True, "goal")
    move = resolve(tiny_grid, (0, 0), "up")
    assert (move.next_state, move.reward, move.terminal, move.cause) == ((0, 1), REWARD_STEP, False, "move")


def test_step_rejects_bad_input(tiny_grid, rng):
    slip = SlipModel()
    with pytest.raises(InvalidAction):
        step(tiny_grid, slip, (0, 0), "jump", rng)
    with pytest.raises(InvalidState):
        step(tiny_grid, slip, (1, 1), "up", rng)
    with pytest.raises(InvalidState):
        step(tiny_grid, slip, (5, 5), "up", rng)


def test_slip_model():
    slip = SlipModel.from_intended(0.8)
    assert slip.p_intended == 0.8
    assert slip.p_orthogonal_each == pytest.approx(0.1)
    with pytest.raises(ValueError):
        SlipModel(0.8, 0.2)
    with pytest.raises(ValueError):
        SlipModel.from_intended(1.2)


def test_deterministic_slip_always_moves_as_intended(map1, rng):
    slip = SlipModel(1.0, 0.0)
    for _ in range(100):
        assert step(map1, slip, (4, 4), "up", rng).next_state == (4, 5)


def test_slip_frequencies_match_the_distribution(map1):
    n = 20_000
    rng = np.random.default_rng(2024)
    slip = SlipModel()
    cells = [(4, 4), (0, 0), (9, 5), (3, 8), (7, 1)]
    for s in cells:
        for a in ACTIONS:
            counts = Counter(step(map1, slip, s, a, rng).next_state for _ in range(n))
            for cell, p, _ in outcome_distribution(map1, slip, s, a):
                sigma = np.sqrt(n * p * (1 - p))
                assert abs(counts[cell] - n * p) <= 4 * sigma + 1


@pytest.mark.slow
def test_slip_frequencies_at_three_sigma(map1):
    n = 100_000
    rng = np.random.default_rng(7)
    slip = SlipModel()
    pairs = [(s, a) for s in [(4, 4), (0, 0), (9, 5), (3, 8), (7, 1)] for a in ACTIONS]
    assert len(pairs) == 20
    for s, a in pairs:
        cell, p, _ = max(outcome_distribution(map1, slip, s, a), key=lambda o: o[1])
        hits = sum(step(map1, slip, s, a, rng).next_state == cell for _ in range(n))
        assert abs(hits - n * p) <= 3 * np.sqrt(n * p * (1 - p)), (s, a)


def test_outcome_distribution_merges_same_cell(tiny_grid):
    dist = outcome_distribution(tiny_grid, SlipModel(), (0, 0), "down")
    # вниз и влево упираются в край: агент остаётся в (0, 0)
    assert dist == (((0, 0), pytest.approx(0.9), REWARD_STEP), ((1, 0), pytest.approx(0.1), REWARD_STEP))


def test_outcome_distributions_sum_to_one(tiny_grid):
    slip = SlipModel(0.7, 0.15)
    for s in tiny_grid.free_cells():
        for a in ACTIONS:
            assert sum(p for _, p, _ in outcome_distribution(tiny_grid, slip, s, a)) == pytest.approx(1.0)


def test_explicit_mdp(tiny_grid):
    mdp = explicit_mdp(tiny_grid, SlipModel())
    assert (1, 1) not in mdp.states
    assert mdp.terminal == {(2, 0), (2, 2)}
    assert mdp.actions_at((2, 2)) == ()
    assert mdp.actions_at((0, 0)) == ACTIONS
    assert len(mdp.transitions) == 6 * 4


def test_explicit_mdp_with_partial_knowledge(tiny_grid):
    mdp = explicit_mdp(tiny_grid, SlipModel(), known_walls=(), known_holes=())
    assert (1, 1) in mdp.states
    assert mdp.terminal == {(2, 2)}
    with pytest.raises(ValueError):
        explicit_mdp(tiny_grid, SlipModel(), known_walls=[(0, 2)])


def test_full_reduced_covers_free_cells(tiny_grid):
    mdp = full_reduced(tiny_grid)
    assert len(mdp.allowed) == 6 * 4
    assert mdp.actions_at((0, 0)) == tuple(sorted(ACTIONS))
    assert mdp.allowed[((1, 0), "right")] == {(2, 0), (1, 0)}


# ---- среда ----

def test_gridworld_episode_bookkeeping(tiny_grid, rng):
    env = GridWorld(tiny_grid, SlipModel(1.0, 0.0))
    assert env.reset() == (0, 0)
    assert env.step("up", rng).next_state == (0, 1)
    assert env.state == (0, 1)
    assert env.actions == ACTIONS


def test_switch_map_interrupts_running_episode(map1, rng):
    env = GridWorld(map1, SlipModel(1.0, 0.0))
    env.reset()
    env.step("up", rng)
    env.step("up", rng)
    interrupted = env.switch_map(builtin_map("map2"))
    assert interrupted is not None
    assert (interrupted.steps, interrupted.return_, interrupted.terminal) == (2, -2.0, STEP_LIMIT)
    assert env.grid == builtin_map("map2")
    assert env.state == env.grid.start


def test_switch_map_between_episodes(map1):
    env = GridWorld(map1)
    assert env.switch_map(builtin_map("map3")) is None
    assert switch_map(env, builtin_map("map4")) is env
    assert env.grid.walls == builtin_map("map4").walls


def test_switch_map_rejects_other_dimensions(map1, tiny_grid):
    with pytest.raises(DimensionMismatch):
        GridWorld(map1).switch_map(tiny_grid)


@pytest.mark.parametrize("layout", ["S.G\n...\n...\n", "...\n..G\nS..\n"])
def test_switch_map_rejects_other_start_or_goal(tiny_grid, layout):
    env = GridWorld(tiny_grid)
    with pytest.raises(DimensionMismatch):
        env.switch_map(load_map(layout))
    assert env.grid == tiny_grid


# ---- встроенные карты ----

@pytest.mark.parametrize("name", BUILTIN_MAPS)
def test_builtin_maps_are_ten_by_ten(name):
    grid = builtin_map(name)
    assert (grid.width, grid.height) == (10, 10)
    assert grid.start == (0, 0)
    assert grid.goal == (9, 9)
    assert shortest_path_length(grid) == 18


def test_builtin_map_contents(map1, map4):
    assert not map1.walls and not map1.holes
    m2 = builtin_map("map2")
    assert m2.walls == {(3, 3), (6, 6)}
    assert m2.holes == {(5, 2), (2, 7)}
    # единственный проход в стене нижнего ряда
    assert [x for x in range(10) if (x, 1) not in map4.walls | map4.holes] == [9]


def test_situations_use_builtin_maps():
    for first, second in SITUATIONS.values():
        assert first == "map1"
        assert second in BUILTIN_MAPS


def test_map_sources(tmp_path, tiny_grid):
    path = tmp_path / "tiny.txt"
    path.write_text(serialize_map(tiny_grid), encoding="utf-8")
    source = FileMapSource(path)
    assert source.label == "tiny"
    assert source.get_map() == tiny_grid
    assert BuiltinMapSource("map3").label == "map3"
    with pytest.raises(ValueError):
        BuiltinMapSource("map9")
