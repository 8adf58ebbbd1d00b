"""
asprl.mdp_bridge

Мост ASP -> RL:
- перебор множества траекторий H (по возрастанию горизонта, как инкрементальный решатель);
- редуцированный MDP M~ = <S~, A~, T~> (две эквивалентные конструкции);
- перенос Q-таблицы между изменениями среды (merge_q);
- явный MDP и value iteration — оракул для проверки эквивалентности оптимальных политик.
"""

from __future__ import annotations

import ast
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, FrozenSet, Hashable, List, Mapping, Optional, Set, Tuple, Union

import numpy as np

from .action_lang import ActionDescription, TrajectoryDecoder, all_states, successors, translate
from .asp_core import solve
from .core_types import ActionName, State, Trajectory, TrajectorySet
from .errors import BadDistribution, EmptyTrajectorySet, HorizonInvalid, NoFeasiblePolicy
from .qtable import QInit, QTable

logger = logging.getLogger(__name__)

DEFAULT_MAX_MODELS = 100_000
REDUCED_FORMAT_HEADER = "asprl-reduced-mdp v1"

PairKey = Tuple[Hashable, ActionName]


# ============================
# ПЕРЕБОР ТРАЕКТОРИЙ
# ============================

def enumerate_trajectories(
    d: ActionDescription,
    max_horizon: int,
    slack: Optional[int] = None,
    max_models: int = DEFAULT_MAX_MODELS,
    simplify: bool = True,
) -> TrajectorySet:
    """
    H для описания d.

    1) m* — минимальный горизонт 1..max_horizon, при котором PF_m(D) имеет answer set;
    2) все траектории горизонтов m*..min(m* + slack, max_horizon), без повторов,
       не больше max_models (slack=None -> 2*m*).

    Траектория, прошедшая через цель раньше последнего шага, отбрасывается:
    эпизод закончился бы в цели, и её префикс уже найден на меньшем горизонте.
    При срабатывании лимита берутся первые модели в порядке solve, флаг truncated=True.

    Если начальное условие уже влечёт цель, годятся только петли длины 1
    (s, a, s); нет петли -> NoFeasiblePolicy, большие горизонты не перебираются.
    """
    if max_horizon < 1:
        raise HorizonInvalid(f"max_horizon must be >= 1, got {max_horizon}")
    if slack is not None and slack < 0:
        raise ValueError("slack must be >= 0")
    if max_models < 1:
        raise ValueError("max_models must be >= 1")

    if d.goal and set(d.goal) <= set(d.initial):
        return _self_loops(d, max_models, simplify)

    m_star: Optional[int] = None
    for m in range(1, max_horizon + 1):
        found = solve(translate(d, m, simplify=simplify), max_models=1)
        logger.debug("horizon %d: %s", m, "feasible" if found else "no answer set")
        if found:
            m_star = m
            break
    if m_star is None:
        raise NoFeasiblePolicy(f"no trajectory reaches the goal within {max_horizon} steps")

    top = min(m_star + (2 * m_star if slack is None else slack), max_horizon)
    goal_index = _condition_index(d, d.goal)

    out: List[Trajectory] = []
    seen: Set[Trajectory] = set()
    truncated = False
    last = m_star
    for m in range(m_star, top + 1):
        remaining = max_models - len(out)
        if remaining <= 0:
            truncated = True
            break
        last = m
        program = translate(d, m, simplify=simplify)
        decoder = TrajectoryDecoder(program, d, m)
        models = solve(program, max_models=remaining + 1)
        if len(models) > remaining:
            truncated = True
            models = models[:remaining]
        before = len(out)
        for model in models:
            t = decoder.decode(model)
            if any(_satisfies(s, goal_index) for s in t.states()[:-1]):
                continue
            if t not in seen:
                seen.add(t)
                out.append(t)
        logger.debug("horizon %d: %d trajectories", m, len(out) - before)
        if truncated:
            break

    logger.info(
        "H: %d trajectories, horizons %d..%d%s",
        len(out), m_star, last, " (truncated)" if truncated else "",
    )
    return TrajectorySet(tuple(out), m_star, last, truncated)


def _self_loops(d: ActionDescription, max_models: int, simplify: bool) -> TrajectorySet:
    program = translate(d, 1, simplify=simplify)
    decoder = TrajectoryDecoder(program, d, 1)
    models = solve(program, max_models=max_models + 1)
    truncated = len(models) > max_models
    loops = [t for t in (decoder.decode(m) for m in models[:max_models]) if t.final_state == t.initial_state]
    if not loops:
        raise NoFeasiblePolicy("start already satisfies the goal and no action keeps the agent there")
    logger.info("H: %d self-loop trajectories at horizon 1", len(loops))
    return TrajectorySet(tuple(dict.fromkeys(loops)), 1, 1, truncated)


def _condition_index(d: ActionDescription, conj) -> List[Tuple[int, object]]:
    pos = {c.name: k for k, c in enumerate(d.fluents)}
    return [(pos[e.fluent], e.value) for e in conj]


def _satisfies(state: State, index: List[Tuple[int, object]]) -> bool:
    return bool(index) and all(state[k] == v for k, v in index)


# ============================
# РЕДУЦИРОВАННЫЙ MDP
# ============================

@dataclass(frozen=True)
class ReducedMdp:
    """
    M~ без функции наград (награда приходит из среды).

    Контракт:
    - allowed: (s, a) -> непустое множество возможных s';
    - все s, a, s' из allowed лежат в states / actions.
    """
    states: FrozenSet[Hashable]
    actions: FrozenSet[ActionName]
    allowed: Mapping[PairKey, FrozenSet[Hashable]]
    initial_states: FrozenSet[Hashable] = frozenset()
    goal_states: FrozenSet[Hashable] = frozenset()
    _by_state: Dict[Hashable, Tuple[ActionName, ...]] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        by_state: Dict[Hashable, List[ActionName]] = {}
        for (s, a), nxt in self.allowed.items():
            if s not in self.states or a not in self.actions:
                raise ValueError(f"allowed pair ({s!r}, {a!r}) is outside S~ x A~")
            if not nxt or not nxt <= self.states:
                raise ValueError(f"allowed pair ({s!r}, {a!r}) has next states outside S~")
            by_state.setdefault(s, []).append(a)
        object.__setattr__(self, "_by_state", {s: tuple(sorted(a)) for s, a in by_state.items()})

    def actions_at(self, state: Hashable) -> Tuple[ActionName, ...]:
        """Разрешённые действия в s; пусто, если s вне S~ или s — только конец траекторий."""
        return self._by_state.get(state, ())

    def pairs(self) -> FrozenSet[PairKey]:
        return frozenset(self.allowed)

    def triples(self) -> FrozenSet[Tuple[Hashable, ActionName, Hashable]]:
        return frozenset((s, a, n) for (s, a), nxt in self.allowed.items() for n in nxt)

    def relabel(self, fn: Callable[[Hashable], Hashable]) -> "ReducedMdp":
        """Переименование состояний (например, кортеж значений -> клетка)."""
        allowed: Dict[PairKey, Set[Hashable]] = {}
        for (s, a), nxt in self.allowed.items():
            allowed.setdefault((fn(s), a), set()).update(fn(n) for n in nxt)
        return ReducedMdp(
            states=frozenset(fn(s) for s in self.states),
            actions=self.actions,
            allowed={k: frozenset(v) for k, v in allowed.items()},
            initial_states=frozenset(fn(s) for s in self.initial_states),
            goal_states=frozenset(fn(s) for s in self.goal_states),
        )


def build_reduced(h: TrajectorySet, d: Optional[ActionDescription] = None) -> ReducedMdp:
    """M~ как объединение троек траекторий H."""
    if not len(h):
        raise EmptyTrajectorySet("trajectory set is empty")
    states: Set[Hashable] = set()
    actions: Set[ActionName] = set()
    allowed: Dict[PairKey, Set[Hashable]] = {}
    for t in h:
        for tr in t.triples:
            states.add(tr.state)
            states.add(tr.next_state)
            actions.add(tr.action)
            allowed.setdefault((tr.state, tr.action), set()).add(tr.next_state)
    if d is not None:
        unknown = actions - set(d.action_names)
        if unknown:
            raise ValueError(f"trajectory actions not in description: {sorted(unknown)}")
    mdp = ReducedMdp(
        states=frozenset(states),
        actions=frozenset(actions),
        allowed={k: frozenset(v) for k, v in allowed.items()},
        initial_states=frozenset(t.initial_state for t in h),
        goal_states=frozenset(t.final_state for t in h),
    )
    logger.info("reduced MDP: |S~|=%d |A~|=%d |T~|=%d", len(mdp.states), len(mdp.actions), len(mdp.triples()))
    return mdp


def build_reduced_subtractive(h: TrajectorySet, d: ActionDescription, simplify: bool = True) -> ReducedMdp:
    """
    M~ вычитанием из S x A x S:
    запрещённые состояния S^ = S - S~ (и как s, и как s'), запрещённые действия A^,
    переходы с нулевой вероятностью (s' не следует из (s, a) по законам d)
    и парные запреты T^(s, a) — возможные, но не встретившиеся в H тройки.
    """
    if not len(h):
        raise EmptyTrajectorySet("trajectory set is empty")
    seen_states: Set[State] = set()
    seen_actions: Set[ActionName] = set()
    in_h: Set[Tuple[State, ActionName, State]] = set()
    for t in h:
        seen_states.update(t.states())
        for tr in t.triples:
            seen_actions.add(tr.action)
            in_h.add((tr.state, tr.action, tr.next_state))

    source_states = all_states(d)
    forbidden_states = set(source_states) - seen_states
    forbidden_actions = set(d.action_names) - seen_actions
    logger.debug("|S^|=%d |A^|=%d", len(forbidden_states), len(forbidden_actions))

    allowed: Dict[PairKey, FrozenSet[Hashable]] = {}
    zero_probability = 0
    pair_forbidden = 0
    for s in source_states:
        if s in forbidden_states:
            continue
        for a in d.action_names:
            if a in forbidden_actions:
                continue
            possible = successors(d, s, a, simplify=simplify)
            kept = set()
            for n in possible:
                if n in forbidden_states:
                    continue
                if (s, a, n) not in in_h:
                    pair_forbidden += 1
                    continue
                kept.add(n)
            zero_probability += sum(1 for n in seen_states if n not in possible)
            if kept:
                allowed[(s, a)] = frozenset(kept)
    logger.debug("zero-probability triples: %d, pair-forbidden: %d", zero_probability, pair_forbidden)

    return ReducedMdp(
        states=frozenset(seen_states),
        actions=frozenset(seen_actions),
        allowed=allowed,
        initial_states=frozenset(t.initial_state for t in h),
        goal_states=frozenset(t.final_state for t in h),
    )


def merge_q(
    old_q: Optional[QTable],
    new_mdp: ReducedMdp,
    init: Optional[QInit] = None,
    rng: Optional[np.random.Generator] = None,
) -> QTable:
    """
    Q-таблица ровно на парах new_mdp.allowed:
    старые значения сохраняются, новые пары — из init, остальное удаляется.
    """
    if init is None:
        init = old_q.init if old_q is not None else QInit.constant(0.0)
    if rng is None and old_q is not None:
        rng = old_q.rng
    result = QTable(init, rng)
    kept = 0
    for key in sorted(new_mdp.allowed, key=lambda k: (repr(k[0]), k[1])):
        if old_q is not None and key in old_q:
            result[key] = old_q[key]
            kept += 1
        else:
            result.ensure(*key)
    dropped = (len(old_q) if old_q is not None else 0) - kept
    logger.info("merge_q: kept %d, added %d, dropped %d", kept, len(result) - kept, dropped)
    return result


# ============================
# СЕРИАЛИЗАЦИЯ
# ============================

def dump_reduced(mdp: ReducedMdp, path: Union[str, Path]) -> None:
    lines = [REDUCED_FORMAT_HEADER]

    def section(name: str, items: List[str]) -> None:
        lines.append(f"{name} {len(items)}")
        lines.extend(items)

    section("states", sorted(repr(s) for s in mdp.states))
    section("actions", sorted(mdp.actions))
    section("initial", sorted(repr(s) for s in mdp.initial_states))
    section("goal", sorted(repr(s) for s in mdp.goal_states))
    section("allowed", sorted(f"{s!r}\t{a}\t{n!r}" for s, a, n in mdp.triples()))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_reduced(path: Union[str, Path]) -> ReducedMdp:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != REDUCED_FORMAT_HEADER:
        raise ValueError(f"not a reduced MDP file (expected header {REDUCED_FORMAT_HEADER!r})")
    pos = 1

    def section(name: str) -> List[str]:
        nonlocal pos
        head = lines[pos].split()
        if len(head) != 2 or head[0] != name:
            raise ValueError(f"expected section {name!r} at line {pos + 1}")
        n = int(head[1])
        items = lines[pos + 1: pos + 1 + n]
        pos += 1 + n
        return items

    states = frozenset(ast.literal_eval(x) for x in section("states"))
    actions = frozenset(section("actions"))
    initial = frozenset(ast.literal_eval(x) for x in section("initial"))
    goal = frozenset(ast.literal_eval(x) for x in section("goal"))
    allowed: Dict[PairKey, Set[Hashable]] = {}
    for row in section("allowed"):
        s, a, n = row.split("\t")
        allowed.setdefault((ast.literal_eval(s), a), set()).add(ast.literal_eval(n))
    return ReducedMdp(states, actions, {k: frozenset(v) for k, v in allowed.items()}, initial, goal)


# ============================
# ЯВНЫЙ MDP И VALUE ITERATION
# ============================

Outcome = Tuple[Hashable, float, float]  # (s', p, r)


@dataclass(frozen=True)
class ExplicitMdp:
    """
    Полный MDP с вероятностями и наградами (только для проверок).

    transitions: (s, a) -> исходы (s', p, r). Терминальные состояния действий не имеют.
    """
    states: Tuple[Hashable, ...]
    actions: Tuple[ActionName, ...]
    transitions: Mapping[PairKey, Tuple[Outcome, ...]]
    terminal: FrozenSet[Hashable] = frozenset()

    def actions_at(self, s: Hashable) -> Tuple[ActionName, ...]:
        return tuple(a for a in self.actions if (s, a) in self.transitions)

    def restrict(self, reduced: ReducedMdp, fallback: bool = False) -> "ExplicitMdp":
        """
        M, ограниченный разрешёнными парами M~. Состояния вне S~ остаются:
        без действий (V = 0, как у терминальных) или, при fallback=True,
        со всеми действиями M (так выбирает действия агент, занесённый за пределы S~).
        """
        kept = {
            k: v
            for k, v in self.transitions.items()
            if k in reduced.allowed or (fallback and k[0] not in reduced.states)
        }
        return ExplicitMdp(self.states, self.actions, kept, self.terminal)


def value_iteration(
    mdp: ExplicitMdp,
    gamma: float,
    tolerance: float = 1e-10,
    max_iterations: int = 100_000,
) -> Tuple[Dict[Hashable, float], Dict[Hashable, ActionName]]:
    """
    V* и жадная политика. Ничья в argmax — первое действие в порядке mdp.actions.
    Состояния без действий (терминальные и т.п.) имеют V = 0 и в политику не входят.
    """
    if not (0.0 <= gamma < 1.0):
        raise ValueError("gamma must be in [0, 1)")

    index = {s: i for i, s in enumerate(mdp.states)}
    rows: List[Tuple[int, ActionName]] = []
    probs: List[Tuple[int, int, float]] = []
    rewards: List[float] = []
    for s in mdp.states:
        if s in mdp.terminal:
            continue
        for a in mdp.actions_at(s):
            outcomes = mdp.transitions[(s, a)]
            total = sum(p for _, p, _ in outcomes)
            if abs(total - 1.0) > 1e-9:
                raise BadDistribution(f"P(.|{s!r},{a}) sums to {total}")
            r = len(rows)
            rows.append((index[s], a))
            rewards.append(sum(p * rew for _, p, rew in outcomes))
            for n, p, _ in outcomes:
                probs.append((r, index[n], p))

    n_states = len(mdp.states)
    if not rows:
        return {s: 0.0 for s in mdp.states}, {}

    P = np.zeros((len(rows), n_states))
    for r, j, p in probs:
        P[r, j] += p
    R = np.asarray(rewards)
    owner = np.asarray([i for i, _ in rows])

    V = np.zeros(n_states)
    for _ in range(max_iterations):
        Q = R + gamma * (P @ V)
        V_new = np.full(n_states, -np.inf)
        np.maximum.at(V_new, owner, Q)
        V_new[np.isneginf(V_new)] = 0.0
        residual = float(np.max(np.abs(V_new - V)))
        V = V_new
        if residual < tolerance:
            break

    Q = R + gamma * (P @ V)
    policy: Dict[Hashable, ActionName] = {}
    best: Dict[int, float] = {}
    for r, (i, a) in enumerate(rows):
        if i not in best or Q[r] > best[i] + 1e-12:
            best[i] = float(Q[r])
            policy[mdp.states[i]] = a
    return {s: float(V[i]) for s, i in index.items()}, policy


def q_values(mdp: ExplicitMdp, values: Mapping[Hashable, float], gamma: float) -> Dict[PairKey, float]:
    """Q*(s, a) по уже посчитанному V*."""
    return {
        key: sum(p * (r + gamma * values[n]) for n, p, r in outcomes)
        for key, outcomes in mdp.transitions.items()
    }
