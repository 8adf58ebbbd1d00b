from __future__ import annotations

from collections import Counter

import numpy as np
import pytest

from asprl.errors import NoAvailableActions
from asprl.gridworld_env import (
    ACTIONS,
    REWARD_GOAL,
    REWARD_HOLE,
    GridWorld,
    SlipModel,
    explicit_mdp,
    full_reduced,
    load_map,
    resolve,
)
from asprl.mdp_bridge import ReducedMdp, merge_q, q_values, value_iteration
from asprl.qtable import QInit, QTable
from asprl.rl_core import (
    GOAL,
    HOLE,
    STEP_LIMIT,
    LearningParams,
    QLearner,
    SarsaLearner,
    available_actions,
    build_learner,
    epsilon_greedy,
    greedy_policy,
    q_learning_update,
    run_episode,
    sarsa_update,
)
from asprl.verification import DETERMINISTIC

PARAMS = LearningParams(alpha=0.2, gamma=0.9, epsilon=0.1, init=QInit.constant(0.0))


def table(entries=None) -> QTable:
    return QTable(QInit.constant(0.0), np.random.default_rng(0), entries)


# ---- параметры ----

@pytest.mark.parametrize(
    "kwargs",
    [dict(alpha=0.0), dict(alpha=1.5), dict(gamma=1.0), dict(gamma=-0.1), dict(epsilon=1.1), dict(epsilon=-0.01)],
)
def test_learning_params_validation(kwargs):
    with pytest.raises(ValueError):
        LearningParams(**kwargs)


def test_learning_params_defaults():
    p = LearningParams()
    assert (p.alpha, p.gamma, p.epsilon) == (0.2, 0.9, 0.1)
    assert p.init == QInit.uniform(0.0, 0.1)


# ---- правила обновления ----

def test_q_learning_update_by_hand():
    q = table({("s1", "b1"): 2.0, ("s1", "b2"): 5.0})
    q_learning_update(q, "s0", "a", -1.0, "s1", ("b1", "b2"), PARAMS)
    # 0 + 0.2 * (-1 + 0.9 * 5 - 0)
    assert q[("s0", "a")] == pytest.approx(0.7)


def test_q_learning_terminal_update_has_no_bootstrap():
    q = table({("g", "b"): 50.0})
    q_learning_update(q, "s0", "a", 100.0, "g", (), PARAMS, terminal=True)
    assert q[("s0", "a")] == pytest.approx(20.0)


def test_q_learning_needs_next_actions():
    with pytest.raises(NoAvailableActions):
        q_learning_update(table(), "s0", "a", -1.0, "s1", (), PARAMS)


def test_sarsa_update_by_hand():
    q = table({("s1", "b1"): 2.0, ("s1", "b2"): 5.0})
    sarsa_update(q, "s0", "a", -1.0, "s1", "b1", PARAMS)
    # on-policy: берётся Q(s', a'), а не максимум
    assert q[("s0", "a")] == pytest.approx(0.2 * (-1.0 + 0.9 * 2.0))

    q = table()
    sarsa_update(q, "s0", "a", -100.0, "h", None, PARAMS)
    assert q[("s0", "a")] == pytest.approx(-20.0)


def test_build_learner():
    assert isinstance(build_learner("q_learning"), QLearner)
    assert isinstance(build_learner("sarsa"), SarsaLearner)
    with pytest.raises(ValueError):
        build_learner("asp_q")


# ---- выбор действия ----

def test_greedy_choice_without_exploration(rng):
    q = table({("s", "a"): 1.0, ("s", "b"): 3.0, ("s", "c"): 2.0})
    for _ in range(20):
        assert epsilon_greedy(q, "s", ("a", "b", "c"), 0.0, rng) == "b"


def test_greedy_ties_are_broken_among_best(rng):
    q = table({("s", "a"): 1.0, ("s", "b"): 1.0, ("s", "c"): 0.0})
    picks = Counter(epsilon_greedy(q, "s", ("a", "b", "c"), 0.0, rng) for _ in range(400))
    assert set(picks) == {"a", "b"}


def test_full_exploration_is_uniform_over_available(rng):
    q = table({("s", "a"): 10.0})
    picks = Counter(epsilon_greedy(q, "s", ("a", "b"), 1.0, rng) for _ in range(2000))
    assert set(picks) == {"a", "b"}
    assert 850 <= picks["b"] <= 1150


def test_exploration_stays_inside_available(rng):
    q = table()
    for _ in range(200):
        assert epsilon_greedy(q, "s", ("up", "right"), 0.5, rng) in ("up", "right")
    assert set(q.keys()) <= {("s", "up"), ("s", "right")}


def test_no_available_actions(rng):
    with pytest.raises(NoAvailableActions):
        epsilon_greedy(table(), "s", (), 0.1, rng)


def test_available_actions_falls_back_outside_reduced_states():
    mdp = ReducedMdp(frozenset({"s", "g"}), frozenset({"up"}), {("s", "up"): frozenset({"g"})})
    every = ("up", "down", "left", "right")
    assert available_actions(mdp, "s", every) == ("up",)
    assert available_actions(mdp, "elsewhere", every) == every
    assert available_actions(None, "s", every) == every


# ---- эпизоды ----

def test_episode_reaches_goal_on_open_grid(open_2x2, rng):
    env = GridWorld(open_2x2, DETERMINISTIC)
    mdp = full_reduced(open_2x2, DETERMINISTIC)
    q = merge_q(None, mdp)
    params = LearningParams(epsilon=0.0, init=QInit.constant(0.0))
    q, result = run_episode(env, q, mdp, params, "q_learning", 2000, rng)
    assert result.terminal == GOAL
    assert result.steps >= 2
    assert result.return_ == pytest.approx(100.0 - (result.steps - 1))


def test_episode_ends_in_hole():
    grid = load_map("SHG\n")
    env = GridWorld(grid, DETERMINISTIC)
    mdp = full_reduced(grid, DETERMINISTIC)
    q = merge_q(None, mdp)
    q[((0, 0), "right")] = 10.0
    params = LearningParams(epsilon=0.0, init=QInit.constant(0.0))
    q, result = run_episode(env, q, mdp, params, "q_learning", 100, np.random.default_rng(0))
    assert (result.steps, result.return_, result.terminal) == (1, -100.0, HOLE)
    assert q[((0, 0), "right")] == pytest.approx(10.0 + 0.2 * (-100.0 - 10.0))


def test_episode_hits_step_limit():
    grid = load_map("SWG\n")
    env = GridWorld(grid, DETERMINISTIC)
    q, result = run_episode(env, table(), None, PARAMS, "sarsa", 5, np.random.default_rng(0))
    assert result.terminal == STEP_LIMIT
    assert result.steps == 5
    assert result.return_ == pytest.approx(-5.0)


def test_episode_rejects_bad_step_limit(open_2x2):
    with pytest.raises(ValueError):
        run_episode(GridWorld(open_2x2), table(), None, PARAMS, "q_learning", 0)


def test_episode_is_reproducible_for_a_seed(tiny_grid):
    def once(algo):
        env = GridWorld(tiny_grid)
        q = merge_q(None, full_reduced(tiny_grid), QInit.uniform(0.0, 0.1), np.random.default_rng(5))
        rng = np.random.default_rng(11)
        results = []
        for _ in range(20):
            q, result = run_episode(env, q, None, PARAMS, algo, 200, rng)
            results.append(result)
        return results, q.entries

    for algo in ("q_learning", "sarsa"):
        assert once(algo) == once(algo)


def test_lazy_pairs_appear_only_for_visited_states(open_2x2, rng):
    env = GridWorld(open_2x2, DETERMINISTIC)
    q = table()
    params = LearningParams(epsilon=1.0, init=QInit.constant(0.0))
    q, _ = run_episode(env, q, None, params, "q_learning", 2000, rng)
    assert {s for s, _ in q.keys()} <= {(0, 0), (0, 1), (1, 0)}


def test_greedy_policy():
    q = table({("s", "a"): 1.0, ("s", "b"): 2.0, ("t", "a"): 0.5})
    assert greedy_policy(q, None, ("a", "b")) == {"s": "b", "t": "a"}


# ---- сходимость ----

def train(env, q, params, algo, episodes, seed, step_limit=200):
    rng = np.random.default_rng(seed)
    results = []
    for _ in range(episodes):
        q, result = run_episode(env, q, None, params, algo, step_limit, rng)
        results.append(result)
    return results


def test_without_exploration_q_learning_and_sarsa_coincide(tiny_grid):
    params = LearningParams(alpha=0.3, gamma=0.9, epsilon=0.0, init=QInit.uniform(0.0, 0.1))
    runs = {}
    for algo in ("q_learning", "sarsa"):
        q = QTable(params.init, np.random.default_rng(1))
        results = train(GridWorld(tiny_grid, SlipModel()), q, params, algo, 100, seed=4)
        runs[algo] = (q.entries, results)
    assert runs["q_learning"] == runs["sarsa"]


@pytest.mark.parametrize("algo", ["q_learning", "sarsa"])
def test_q_values_stay_within_reward_bounds(tiny_grid, algo):
    params = LearningParams()
    q = QTable(params.init, np.random.default_rng(2))
    train(GridWorld(tiny_grid, SlipModel()), q, params, algo, 300, seed=5)
    values = np.array(list(q.entries.values()))
    assert REWARD_HOLE / (1 - params.gamma) <= values.min()
    assert values.max() <= REWARD_GOAL / (1 - params.gamma)
    # начальные значения из [0, 0.1]: каждая цель обновления лежит в [-100, 100]
    assert REWARD_HOLE <= values.min() and values.max() <= REWARD_GOAL


def test_q_learning_converges_on_deterministic_three_by_three():
    grid = load_map("..G\n...\nS..\n")
    params = LearningParams(alpha=0.5, gamma=0.9, epsilon=0.3, init=QInit.constant(0.0))
    q = QTable(params.init, np.random.default_rng(0))
    train(GridWorld(grid, DETERMINISTIC), q, params, "q_learning", 3000, seed=6, step_limit=100)

    oracle = explicit_mdp(grid, DETERMINISTIC)
    v, _ = value_iteration(oracle, params.gamma)
    q_star = q_values(oracle, v, params.gamma)
    policy = greedy_policy(q, None, ACTIONS)

    s, path = grid.start, []
    while s != grid.goal and len(path) < 10:
        path.append((s, policy[s]))
        s = resolve(grid, s, policy[s]).next_state
    assert len(path) == 4
    for key in path:
        assert q[key] == pytest.approx(q_star[key], abs=0.5)
    assert max(q[(grid.start, a)] for a in ACTIONS) == pytest.approx(v[grid.start], rel=0.01)


@pytest.mark.slow
def test_q_learning_on_open_ten_by_ten_approaches_oracle_steps(map1):
    slip = SlipModel()
    params = LearningParams()
    q = QTable(params.init, np.random.default_rng(0))
    results = train(GridWorld(map1, slip), q, params, "q_learning", 5000, seed=1, step_limit=2000)
    learned = np.mean([r.steps for r in results[-100:]])

    _, oracle_policy = value_iteration(explicit_mdp(map1, slip), params.gamma)
    env = GridWorld(map1, slip)
    rng = np.random.default_rng(2)
    oracle_steps = []
    for _ in range(500):
        s = env.reset()
        n = 0
        while True:
            out = env.step(oracle_policy[s], rng)
            n += 1
            if out.terminal:
                break
            s = out.next_state
        oracle_steps.append(n)
    assert learned <= 1.5 * np.mean(oracle_steps)


# ---- Q-таблица ----

def test_qtable_lazy_init_and_copy():
    q = QTable(QInit.constant(1.5))
    assert q.ensure((0, 0), "up") == 1.5
    snapshot = q.copy()
    q[((0, 0), "up")] = 7.0
    assert snapshot[((0, 0), "up")] == 1.5
    assert len(q) == 1


def test_qtable_csv_checkpoint(tmp_path):
    q = table({((0, 1), "up"): 1.25, ((3, 4), "left"): -2.0})
    path = tmp_path / "q.csv"
    q.to_csv(path)
    assert path.read_text(encoding="utf-8").splitlines()[0] == "state,action,value"
    assert QTable.from_csv(path).entries == q.entries


def test_qtable_csv_missing_columns(tmp_path):
    path = tmp_path / "q.csv"
    path.write_text("state,value\n\"(0, 0)\",1.0\n", encoding="utf-8")
    with pytest.raises(ValueError):
        QTable.from_csv(path)


def test_qinit():
    assert QInit.constant(2.0).fill_value == 2.0
    assert QInit.uniform(0.0, 0.1).fill_value == pytest.approx(0.05)
    with pytest.raises(ValueError):
        QInit(kind="gaussian")
    with pytest.raises(ValueError):
        QInit.uniform(1.0, 0.0)
