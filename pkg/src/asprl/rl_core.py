from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, Hashable, Optional, Sequence, Tuple, Union

import numpy as np

from .core_types import ActionName, StepOutcome
from .errors import NoAvailableActions
from .mdp_bridge import ReducedMdp
from .qtable import QInit, QTable

logger = logging.getLogger(__name__)

GOAL = "goal"
HOLE = "hole"
STEP_LIMIT = "step_limit"

DEFAULT_STEP_LIMIT = 2000


@dataclass(frozen=True)
class LearningParams:
    """
    Гиперпараметры TD-обучения (одинаковые для всех алгоритмов).

    Контракт: alpha in (0, 1], gamma in [0, 1), epsilon in [0, 1].
    """
    alpha: float = 0.2
    gamma: float = 0.9
    epsilon: float = 0.1
    init: QInit = field(default_factory=lambda: QInit.uniform(0.0, 0.1))

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must be in (0, 1]")
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError("gamma must be in [0, 1)")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError("epsilon must be in [0, 1]")


@dataclass(frozen=True)
class EpisodeResult:
    steps: int
    return_: float
    terminal: str  # goal | hole | step_limit


class EpisodicEnv(ABC):
    """
    Интерфейс среды для run_episode.

    Среда НЕ:
    - знает про Q-таблицу;
    - владеет генератором случайных чисел (rng передаётся в step).
    """

    @property
    @abstractmethod
    def actions(self) -> Tuple[ActionName, ...]:
        raise NotImplementedError

    @abstractmethod
    def reset(self) -> Hashable:
        raise NotImplementedError

    @abstractmethod
    def step(self, action: ActionName, rng: np.random.Generator) -> StepOutcome:
        raise NotImplementedError


def available_actions(
    mdp: Optional[ReducedMdp],
    state: Hashable,
    all_actions: Sequence[ActionName],
) -> Tuple[ActionName, ...]:
    """
    Действия, разрешённые M~ в s. Если s вне S~ (занесло проскальзыванием) —
    все действия домена; их пары добавятся в Q лениво.
    """
    if mdp is not None:
        acts = mdp.actions_at(state)
        if acts:
            return acts
    return tuple(all_actions)


def epsilon_greedy(
    q: QTable,
    s: Hashable,
    available: Sequence[ActionName],
    epsilon: float,
    rng: np.random.Generator,
) -> ActionName:
    if not available:
        raise NoAvailableActions(f"no available actions in state {s!r}")
    if rng.random() < epsilon:
        return available[int(rng.integers(len(available)))]
    values = [q.ensure(s, a) for a in available]
    best = max(values)
    ties = [a for a, v in zip(available, values) if v == best]
    if len(ties) == 1:
        return ties[0]
    return ties[int(rng.integers(len(ties)))]


def q_learning_update(
    q: QTable,
    s: Hashable,
    a: ActionName,
    r: float,
    s_next: Hashable,
    available_next: Sequence[ActionName],
    params: LearningParams,
    terminal: bool = False,
) -> QTable:
    """Q(s,a) += alpha * (r + gamma * max_b Q(s',b) - Q(s,a)); в терминальном s' бутстрапа нет."""
    current = q.ensure(s, a)
    target = r
    if not terminal:
        if not available_next:
            raise NoAvailableActions(f"no available actions in state {s_next!r}")
        target += params.gamma * q.max_value(s_next, available_next)
    q[(s, a)] = current + params.alpha * (target - current)
    return q


def sarsa_update(
    q: QTable,
    s: Hashable,
    a: ActionName,
    r: float,
    s_next: Hashable,
    a_next: Optional[ActionName],
    params: LearningParams,
) -> QTable:
    """Q(s,a) += alpha * (r + gamma * Q(s',a') - Q(s,a)); a_next=None — терминальный переход."""
    current = q.ensure(s, a)
    target = r
    if a_next is not None:
        target += params.gamma * q.ensure(s_next, a_next)
    q[(s, a)] = current + params.alpha * (target - current)
    return q


class Learner(ABC):
    """
    Правило обновления Q (стратегия).

    Контракт: update вызывается после каждого шага среды;
    a_next — действие, уже выбранное для s_next (None в терминальном переходе).
    """
    name: str = ""

    @abstractmethod
    def update(
        self,
        q: QTable,
        s: Hashable,
        a: ActionName,
        r: float,
        s_next: Hashable,
        a_next: Optional[ActionName],
        available_next: Sequence[ActionName],
        params: LearningParams,
    ) -> None:
        raise NotImplementedError


class QLearner(Learner):
    name = "q_learning"

    def update(self, q, s, a, r, s_next, a_next, available_next, params) -> None:
        q_learning_update(q, s, a, r, s_next, available_next, params, terminal=a_next is None)


class SarsaLearner(Learner):
    name = "sarsa"

    def update(self, q, s, a, r, s_next, a_next, available_next, params) -> None:
        sarsa_update(q, s, a, r, s_next, a_next, params)


def build_learner(algo: str) -> Learner:
    if algo == "q_learning":
        return QLearner()
    if algo == "sarsa":
        return SarsaLearner()
    raise ValueError(f"Unknown algorithm: {algo}")


def run_episode(
    env: EpisodicEnv,
    q: QTable,
    mdp: Optional[ReducedMdp],
    params: LearningParams,
    algo: Union[str, Learner],
    step_limit: int = DEFAULT_STEP_LIMIT,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[QTable, EpisodeResult]:
    """
    Один эпизод до цели, ямы или step_limit; обновление после каждого шага.

    Действие для s' выбирается до обновления Q(s,a) — так оба алгоритма
    тратят случайные числа одинаково.
    """
    if step_limit < 1:
        raise ValueError("step_limit must be >= 1")
    learner = algo if isinstance(algo, Learner) else build_learner(algo)
    if rng is None:
        rng = np.random.default_rng()

    s = env.reset()
    a = epsilon_greedy(q, s, available_actions(mdp, s, env.actions), params.epsilon, rng)
    steps = 0
    total = 0.0
    terminal = STEP_LIMIT

    while steps < step_limit:
        out = env.step(a, rng)
        steps += 1
        total += out.reward
        if out.terminal:
            learner.update(q, s, a, out.reward, out.next_state, None, (), params)
            terminal = out.cause
            break
        next_acts = available_actions(mdp, out.next_state, env.actions)
        a_next = epsilon_greedy(q, out.next_state, next_acts, params.epsilon, rng)
        learner.update(q, s, a, out.reward, out.next_state, a_next, next_acts, params)
        s, a = out.next_state, a_next

    return q, EpisodeResult(steps, total, terminal)


def greedy_policy(
    q: QTable,
    mdp: Optional[ReducedMdp],
    actions: Sequence[ActionName],
) -> Dict[Hashable, ActionName]:
    """argmax_a Q(s, a) по состояниям таблицы (ничья — первое действие по порядку)."""
    states = sorted({s for s, _ in q.keys()}, key=repr)
    policy: Dict[Hashable, ActionName] = {}
    for s in states:
        acts = [a for a in available_actions(mdp, s, actions) if (s, a) in q]
        if acts:
            policy[s] = max(acts, key=lambda a: q[(s, a)])
    return policy
