"""
asprl.verification

Настольная проверка того, что редукция не теряет оптимальную политику:
на случайных маленьких картах value iteration на полном MDP и на M~
(ограниченном парами из H) даёт одно и то же V*(start), а жадная политика
полного MDP не выходит из разрешённых пар M~.

По умолчанию динамика ожидаемая (без проскальзывания), как в описании для ASP;
с slip проверяется тот же M~ на стохастической среде.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from .core_types import Cell
from .gridworld_env import (
    ACTIONS,
    GridMap,
    SlipModel,
    as_action_description,
    cell_of,
    explicit_mdp,
    resolve,
    serialize_map,
)
from .mdp_bridge import build_reduced, build_reduced_subtractive, enumerate_trajectories, value_iteration

logger = logging.getLogger(__name__)

DETERMINISTIC = SlipModel(1.0, 0.0)


@dataclass(frozen=True)
class VerificationCase:
    grid: GridMap
    v_full: float
    v_reduced: float
    policy_contained: bool
    dual_agrees: bool
    tolerance: float = 1e-6
    slip: SlipModel = DETERMINISTIC

    @property
    def passed(self) -> bool:
        return abs(self.v_full - self.v_reduced) <= self.tolerance and self.policy_contained and self.dual_agrees


def shortest_path_length(grid: GridMap, max_steps: Optional[int] = None) -> Optional[int]:
    """BFS по ожидаемой динамике (стены и ямы непроходимы, удар = остаться). None — пути нет."""
    if grid.start == grid.goal:
        return None
    dist: Dict[Cell, int] = {grid.start: 0}
    queue = deque([grid.start])
    while queue:
        s = queue.popleft()
        if max_steps is not None and dist[s] >= max_steps:
            continue
        for a in ACTIONS:
            out = resolve(grid, s, a)
            n = out.next_state
            if out.cause == "hole" or n in dist:
                continue
            dist[n] = dist[s] + 1
            if n == grid.goal:
                return dist[n]
            queue.append(n)
    return None


def random_map(rng: np.random.Generator, max_size: int = 4, density: float = 0.25) -> GridMap:
    """Случайная карта не больше max_size x max_size с достижимой целью."""
    while True:
        w = int(rng.integers(2, max_size + 1))
        h = int(rng.integers(2, max_size + 1))
        cells = [(x, y) for x in range(w) for y in range(h)]
        i, j = rng.choice(len(cells), size=2, replace=False)
        start, goal = cells[int(i)], cells[int(j)]
        walls, holes = set(), set()
        for c in cells:
            if c in (start, goal) or rng.random() >= density:
                continue
            (walls if rng.random() < 0.5 else holes).add(c)
        grid = GridMap(w, h, frozenset(walls), frozenset(holes), start, goal)
        if shortest_path_length(grid) is not None:
            return grid


def check_map(
    grid: GridMap,
    gamma: float = 0.9,
    slack: int = 0,
    slip: SlipModel = DETERMINISTIC,
) -> VerificationCase:
    """
    Одна карта: V*(start) полного MDP против MDP, ограниченного M~.

    Вне S~ ограниченный MDP разрешает все действия, как агент. Политика
    считается вложенной, если во всех состояниях S~, достижимых из start
    при проскальзывании slip, её действие разрешено M~. Вложенность влечёт
    равенство значений; ограничение само по себе даёт только V~ <= V.
    """
    d = as_action_description(grid, grid.walls, grid.holes)
    h = enumerate_trajectories(d, max_horizon=grid.width * grid.height + slack, slack=slack)
    reduced_states = build_reduced(h, d)
    dual = build_reduced_subtractive(h, d)
    reduced = reduced_states.relabel(cell_of)

    full = explicit_mdp(grid, slip)
    v_full, policy = value_iteration(full, gamma)
    v_red, _ = value_iteration(full.restrict(reduced, fallback=True), gamma)

    contained = True
    seen = {grid.start}
    queue = deque([grid.start])
    while queue and contained:
        s = queue.popleft()
        if s in full.terminal:
            continue
        a = policy[s]
        if s in reduced.states and (s, a) not in reduced.allowed:
            contained = False
        for n, p, _ in full.transitions[(s, a)]:
            if p > 0 and n not in seen:
                seen.add(n)
                queue.append(n)

    case = VerificationCase(grid, v_full[grid.start], v_red[grid.start], contained, dual == reduced_states, slip=slip)
    logger.debug("verify %dx%d: V=%.6f V~=%.6f passed=%s", grid.width, grid.height,
                 case.v_full, case.v_reduced, case.passed)
    return case


def verify(
    n_maps: int = 25,
    seed: int = 0,
    max_size: int = 4,
    gamma: float = 0.9,
    slip: SlipModel = DETERMINISTIC,
    slack: int = 0,
) -> List[VerificationCase]:
    rng = np.random.default_rng(seed)
    return [check_map(random_map(rng, max_size), gamma, slack, slip) for _ in range(n_maps)]


def format_cases(cases: List[VerificationCase]) -> str:
    lines = []
    for k, case in enumerate(cases):
        status = "PASS" if case.passed else "FAIL"
        lines.append(
            f"[{status}] map {k}: {case.grid.width}x{case.grid.height} "
            f"V*(start)={case.v_full:.6f} V~(start)={case.v_reduced:.6f} "
            f"policy_in_reduced={case.policy_contained} dual={case.dual_agrees}"
        )
        if not case.passed:
            lines.append(serialize_map(case.grid).rstrip("\n"))
    passed = sum(c.passed for c in cases)
    lines.append(f"{passed}/{len(cases)} passed")
    return "\n".join(lines)
