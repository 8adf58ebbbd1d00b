"""
asprl.engine

Оркестрация одной обучающей сессии (цикл ASP(RL)):

1) фаза 1: M~ первой карты (для asp_*) или все свободные клетки (для q/sarsa),
   Q инициализируется на разрешённых парах;
2) эпизоды RL до change_at;
3) смена карты: для asp_* — M~ второй карты (новая карта целиком известна агенту)
   и merge_q со старыми значениями; базовые алгоритмы продолжают с той же таблицей;
4) эпизоды RL до конца.

Engine не читает конфиги и не пишет файлы: он получает готовые объекты.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import NoFeasiblePolicy
from .gridworld_env import GridMap, GridWorld, SlipModel, as_action_description, cell_of, full_reduced
from .mdp_bridge import DEFAULT_MAX_MODELS, ReducedMdp, build_reduced, enumerate_trajectories, merge_q
from .qtable import QTable
from .reporting import MetricsRow, rmsd
from .rl_core import DEFAULT_STEP_LIMIT, LearningParams, run_episode

logger = logging.getLogger(__name__)

ALGORITHMS: Tuple[str, ...] = ("q", "sarsa", "asp_q", "asp_sarsa")
# алгоритм эксперимента -> правило обновления
UPDATE_RULE: Dict[str, str] = {"q": "q_learning", "sarsa": "sarsa", "asp_q": "q_learning", "asp_sarsa": "sarsa"}


def is_asp(algo: str) -> bool:
    return algo.startswith("asp_")


@dataclass(frozen=True)
class AspParams:
    """
    Параметры поиска траекторий.

    slack=None -> 2*m* (с ограничением max_horizon).
    """
    slack: Optional[int] = None
    max_horizon: int = 100
    max_models: int = DEFAULT_MAX_MODELS

    def __post_init__(self) -> None:
        if self.slack is not None and self.slack < 0:
            raise ValueError("slack must be >= 0")
        if self.max_horizon < 1:
            raise ValueError("max_horizon must be >= 1")
        if self.max_models < 1:
            raise ValueError("max_models must be >= 1")


@dataclass(frozen=True)
class SessionSettings:
    situation: str
    episodes: int = 10_000
    change_at: int = 5_000
    params: LearningParams = LearningParams()
    slip: SlipModel = SlipModel()
    step_limit: int = DEFAULT_STEP_LIMIT

    def __post_init__(self) -> None:
        if not (1 <= self.change_at < self.episodes):
            raise ValueError("change_at must satisfy 1 <= change_at < episodes")
        if self.step_limit < 1:
            raise ValueError("step_limit must be >= 1")


@dataclass(frozen=True)
class PhasePlan:
    """
    Всё, что нужно сессиям про одну карту. reduced=None и error — ASP не нашёл траекторий.
    """
    grid: GridMap
    reduced: Optional[ReducedMdp]
    error: Optional[str] = None


@dataclass(frozen=True)
class SessionPlan:
    before: PhasePlan
    after: PhasePlan


def asp_reduced(grid: GridMap, asp: AspParams) -> ReducedMdp:
    """M~ по ожидаемой динамике карты (все стены и ямы известны), состояния — клетки."""
    d = as_action_description(grid, grid.walls, grid.holes)
    h = enumerate_trajectories(d, asp.max_horizon, asp.slack, asp.max_models)
    return build_reduced(h, d).relabel(cell_of)


def plan_phase(grid: GridMap, asp: AspParams, need_asp: bool) -> PhasePlan:
    if not need_asp:
        return PhasePlan(grid, None)
    try:
        return PhasePlan(grid, asp_reduced(grid, asp))
    except NoFeasiblePolicy as e:
        logger.warning("no feasible policy: %s", e)
        return PhasePlan(grid, None, str(e))


def plan_session(before: GridMap, after: GridMap, asp: AspParams, algorithms: Tuple[str, ...]) -> SessionPlan:
    """ASP-часть детерминирована, поэтому считается один раз на эксперимент."""
    need = any(is_asp(a) for a in algorithms)
    first = plan_phase(before, asp, need)
    second = first if after == before else plan_phase(after, asp, need)
    return SessionPlan(first, second)


def _session_rngs(seed: int) -> Tuple[np.random.Generator, np.random.Generator]:
    """Независимые потоки: (выбор действий + проскальзывание, инициализация Q)."""
    act_ss, init_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(act_ss), np.random.default_rng(init_ss)


def run_session(
    settings: SessionSettings,
    plan: SessionPlan,
    algo: str,
    session: int,
    seed: int,
) -> Tuple[List[MetricsRow], bool]:
    """
    Одна сессия одного алгоритма.

    Возвращает (строки метрик, infeasible). При отсутствии допустимой политики
    сессия заканчивается строкой с steps=0 и NaN вместо return/rmsd.
    """
    if algo not in UPDATE_RULE:
        raise ValueError(f"Unknown algorithm: {algo}")
    rng, init_rng = _session_rngs(seed)
    rule = UPDATE_RULE[algo]
    asp = is_asp(algo)
    rows: List[MetricsRow] = []

    def infeasible_row(episode: int) -> Tuple[List[MetricsRow], bool]:
        rows.append(MetricsRow(session, episode, algo, settings.situation, 0, math.nan, math.nan))
        return rows, True

    def phase_mdp(phase: PhasePlan) -> Optional[ReducedMdp]:
        return phase.reduced if asp else full_reduced(phase.grid, settings.slip)

    env = GridWorld(plan.before.grid, settings.slip)
    mdp = phase_mdp(plan.before)
    if mdp is None:
        return infeasible_row(0)
    q: QTable = merge_q(None, mdp, settings.params.init, init_rng)

    for episode in range(settings.episodes):
        prev = q.copy()
        if episode == settings.change_at:
            env.switch_map(plan.after.grid)
            if asp:
                mdp = plan.after.reduced
                if mdp is None:
                    return infeasible_row(episode)
                q = merge_q(q, mdp, settings.params.init, init_rng)
            else:
                mdp = phase_mdp(plan.after)
        q, result = run_episode(env, q, mdp, settings.params, rule, settings.step_limit, rng)
        rows.append(
            MetricsRow(session, episode, algo, settings.situation, result.steps, result.return_, rmsd(q, prev))
        )

    logger.info("session %d %s done: %d episodes", session, algo, len(rows))
    return rows, False
