"""
asprl.gridworld_env

Недетерминированная и нестационарная сетка:
- карты со стенами (W) и ямами (H), старт S, цель G;
- проскальзывание: намеченное направление с p_intended, каждое из боковых — с остатком пополам;
- награды: +100 цель, -100 яма, -1 иначе (в т.ч. удар о стену/край: агент остаётся на месте);
- смена карты между эпизодами (switch_map).

Координаты (x, y), y растёт вверх; строка 0 файла карты — верхняя (y = height-1).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Tuple

import numpy as np

from .action_lang import ActionConstant, ActionDescription, Eq, FluentConstant, FluentDynamicLaw
from .core_types import ActionName, Cell, StepOutcome
from .errors import (
    DimensionMismatch,
    DuplicateStartOrGoal,
    InvalidAction,
    InvalidChar,
    InvalidState,
    MapOverlap,
    MissingStartOrGoal,
    NonRectangular,
)
from .mdp_bridge import ExplicitMdp, ReducedMdp
from .rl_core import STEP_LIMIT, EpisodeResult, EpisodicEnv

logger = logging.getLogger(__name__)

ACTIONS: Tuple[ActionName, ...] = ("up", "down", "left", "right")
DELTA: Dict[ActionName, Cell] = {"up": (0, 1), "down": (0, -1), "left": (-1, 0), "right": (1, 0)}
# боковые направления; порядок фиксирован (первое при меньшем u)
ORTHOGONAL: Dict[ActionName, Tuple[ActionName, ActionName]] = {
    "up": ("left", "right"),
    "down": ("left", "right"),
    "left": ("up", "down"),
    "right": ("up", "down"),
}

REWARD_GOAL = 100.0
REWARD_HOLE = -100.0
REWARD_STEP = -1.0


@dataclass(frozen=True)
class GridMap:
    """
    Карта сетки.

    Контракт:
    - все клетки в пределах поля;
    - walls ∩ holes = ∅; start и goal не на стене/яме.
    """
    width: int
    height: int
    walls: FrozenSet[Cell] = frozenset()
    holes: FrozenSet[Cell] = frozenset()
    start: Cell = (0, 0)
    goal: Cell = (0, 0)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise NonRectangular(f"map must be at least 1x1, got {self.width}x{self.height}")
        for cell in list(self.walls) + list(self.holes) + [self.start, self.goal]:
            if not self.in_bounds(cell):
                raise MapOverlap(f"cell {cell} is outside the {self.width}x{self.height} grid")
        if self.walls & self.holes:
            raise MapOverlap(f"cells are both wall and hole: {sorted(self.walls & self.holes)}")
        for name, cell in (("start", self.start), ("goal", self.goal)):
            if cell in self.walls or cell in self.holes:
                raise MapOverlap(f"{name} {cell} lies on a wall or hole")

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def cells(self) -> List[Cell]:
        return [(x, y) for x in range(self.width) for y in range(self.height)]

    def free_cells(self) -> List[Cell]:
        """Клетки, где агент может стоять и действовать (не стена, не яма)."""
        return [c for c in self.cells() if c not in self.walls and c not in self.holes]


@dataclass(frozen=True)
class SlipModel:
    """Контракт: p_intended + 2 * p_orthogonal_each = 1, обе вероятности >= 0."""
    p_intended: float = 0.8
    p_orthogonal_each: float = 0.1

    def __post_init__(self) -> None:
        if self.p_intended < 0 or self.p_orthogonal_each < 0:
            raise ValueError("slip probabilities must be non-negative")
        if abs(self.p_intended + 2 * self.p_orthogonal_each - 1.0) > 1e-9:
            raise ValueError("p_intended + 2 * p_orthogonal_each must equal 1")

    @classmethod
    def from_intended(cls, p_intended: float) -> "SlipModel":
        return cls(p_intended, (1.0 - p_intended) / 2.0)


# ============================
# ФОРМАТ КАРТ
# ============================

def load_map(text: str) -> GridMap:
    rows = text.splitlines()
    while rows and not rows[-1].strip():
        rows.pop()
    if not rows:
        raise NonRectangular("map is empty")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise NonRectangular(f"row {i} has {len(row)} cells, expected {width}")
    height = len(rows)

    walls, holes, starts, goals = set(), set(), [], []
    for i, row in enumerate(rows):
        y = height - 1 - i
        for x, ch in enumerate(row):
            if ch == "W":
                walls.add((x, y))
            elif ch == "H":
                holes.add((x, y))
            elif ch == "S":
                starts.append((x, y))
            elif ch == "G":
                goals.append((x, y))
            elif ch != ".":
                raise InvalidChar(f"invalid character {ch!r} at row {i}, column {x}")

    for name, found in (("start", starts), ("goal", goals)):
        if not found:
            raise MissingStartOrGoal(f"map has no {name} cell")
        if len(found) > 1:
            raise DuplicateStartOrGoal(f"map has {len(found)} {name} cells")
    return GridMap(width, height, frozenset(walls), frozenset(holes), starts[0], goals[0])


def serialize_map(grid: GridMap) -> str:
    lines = []
    for y in range(grid.height - 1, -1, -1):
        row = []
        for x in range(grid.width):
            c = (x, y)
            if c == grid.start:
                row.append("S")
            elif c == grid.goal:
                row.append("G")
            elif c in grid.walls:
                row.append("W")
            elif c in grid.holes:
                row.append("H")
            else:
                row.append(".")
        lines.append("".join(row))
    return "\n".join(lines) + "\n"


# ============================
# ДИНАМИКА
# ============================

def _move(cell: Cell, direction: ActionName) -> Cell:
    dx, dy = DELTA[direction]
    return (cell[0] + dx, cell[1] + dy)


def resolve(grid: GridMap, s: Cell, direction: ActionName) -> StepOutcome:
    """Исход движения в уже выбранном (фактическом) направлении."""
    target = _move(s, direction)
    if not grid.in_bounds(target) or target in grid.walls:
        return StepOutcome(s, REWARD_STEP, False, "wall_bump")
    if target in grid.holes:
        return StepOutcome(target, REWARD_HOLE, True, "hole")
    if target == grid.goal:
        return StepOutcome(target, REWARD_GOAL, True, "goal")
    return StepOutcome(target, REWARD_STEP, False, "move")


def _check(grid: GridMap, s: Cell, a: ActionName) -> None:
    if a not in DELTA:
        raise InvalidAction(f"unknown action {a!r}")
    if not grid.in_bounds(s) or s in grid.walls or s in grid.holes:
        raise InvalidState(f"agent cannot be at {s}")


def step(grid: GridMap, slip: SlipModel, s: Cell, a: ActionName, rng: np.random.Generator) -> StepOutcome:
    _check(grid, s, a)
    u = rng.random()
    if u < slip.p_intended:
        direction = a
    elif u < slip.p_intended + slip.p_orthogonal_each:
        direction = ORTHOGONAL[a][0]
    else:
        direction = ORTHOGONAL[a][1]
    return resolve(grid, s, direction)


def outcome_distribution(
    grid: GridMap, slip: SlipModel, s: Cell, a: ActionName
) -> Tuple[Tuple[Cell, float, float], ...]:
    """Аналитическое распределение исходов (s', p, r), слитое по s'."""
    _check(grid, s, a)
    merged: Dict[Cell, List[float]] = {}
    side_a, side_b = ORTHOGONAL[a]
    for direction, p in ((a, slip.p_intended), (side_a, slip.p_orthogonal_each), (side_b, slip.p_orthogonal_each)):
        if p == 0.0:
            continue
        out = resolve(grid, s, direction)
        if out.next_state in merged:
            merged[out.next_state][0] += p
        else:
            merged[out.next_state] = [p, out.reward]
    return tuple((cell, p, r) for cell, (p, r) in sorted(merged.items()))


def _known_map(grid: GridMap, known_walls: Optional[Iterable[Cell]], known_holes: Optional[Iterable[Cell]]) -> GridMap:
    walls = frozenset(grid.walls if known_walls is None else known_walls)
    holes = frozenset(grid.holes if known_holes is None else known_holes)
    if not walls <= grid.walls or not holes <= grid.holes:
        raise ValueError("known walls/holes must be a subset of the map's actual ones")
    return replace(grid, walls=walls, holes=holes)


def explicit_mdp(
    grid: GridMap,
    slip: SlipModel,
    known_walls: Optional[Iterable[Cell]] = None,
    known_holes: Optional[Iterable[Cell]] = None,
) -> ExplicitMdp:
    """Полный MDP с наградами среды (None = известны все стены/ямы карты)."""
    model = _known_map(grid, known_walls, known_holes)
    states = tuple(c for c in model.cells() if c not in model.walls)
    terminal = frozenset(model.holes) | {model.goal}
    transitions = {
        (s, a): outcome_distribution(model, slip, s, a)
        for s in states
        if s not in terminal
        for a in ACTIONS
    }
    return ExplicitMdp(states, ACTIONS, transitions, terminal)


def full_reduced(grid: GridMap, slip: SlipModel = SlipModel()) -> ReducedMdp:
    """
    "Редукция" без ASP для базовых алгоритмов: все свободные клетки x все четыре действия.
    Стены в S не входят; ямы и цель — только как следующие состояния.
    """
    states = frozenset(c for c in grid.cells() if c not in grid.walls)
    allowed = {}
    for s in grid.free_cells():
        if s == grid.goal:
            continue
        for a in ACTIONS:
            allowed[(s, a)] = frozenset(n for n, _, _ in outcome_distribution(grid, slip, s, a))
    return ReducedMdp(
        states=states,
        actions=frozenset(ACTIONS),
        allowed=allowed,
        initial_states=frozenset({grid.start}),
        goal_states=frozenset({grid.goal}),
    )


def as_action_description(
    grid: GridMap,
    known_walls: Iterable[Cell] = (),
    known_holes: Iterable[Cell] = (),
) -> ActionDescription:
    """
    Ожидаемая (детерминированная) динамика сетки в виде описания действий:
    флюент `at` по клеткам поля, четыре действия, удар о край или известную стену —
    закон "остаться на месте", известные стены и ямы — `never at=...`.
    Проскальзывание сюда не входит: оно есть только в среде.
    """
    model = _known_map(grid, known_walls, known_holes)
    at = FluentConstant("at", tuple(grid.cells()))
    laws = []
    for c in grid.cells():
        if c in model.walls or c in model.holes:
            continue
        for a in ACTIONS:
            target = _move(c, a)
            if not grid.in_bounds(target) or target in model.walls:
                target = c
            laws.append(FluentDynamicLaw((Eq("at", target),), (), (Eq("at", c),), (a,)))
    never = tuple((Eq("at", cell),) for cell in sorted(model.walls | model.holes))
    return ActionDescription(
        fluents=(at,),
        actions=tuple(ActionConstant(a) for a in ACTIONS),
        dynamic_laws=tuple(laws),
        initial=(Eq("at", grid.start),),
        goal=(Eq("at", grid.goal),),
        never=never,
    )


def cell_of(state: Hashable) -> Cell:
    """Состояние описания сетки (кортеж из одного значения `at`) -> клетка."""
    return state[0]  # type: ignore[index]


# ============================
# СРЕДА
# ============================

class GridWorld(EpisodicEnv):
    """
    Эпизодическая среда над GridMap. Один экземпляр — одна сессия.
    """

    def __init__(self, grid: GridMap, slip: SlipModel = SlipModel()):
        self.grid = grid
        self.slip = slip
        self.state: Cell = grid.start
        self._in_flight = False
        self._steps = 0
        self._return = 0.0

    @property
    def actions(self) -> Tuple[ActionName, ...]:
        return ACTIONS

    def reset(self) -> Cell:
        self.state = self.grid.start
        self._in_flight = True
        self._steps = 0
        self._return = 0.0
        return self.state

    def step(self, action: ActionName, rng: np.random.Generator) -> StepOutcome:
        out = step(self.grid, self.slip, self.state, action, rng)
        self.state = out.next_state
        self._steps += 1
        self._return += out.reward
        if out.terminal:
            self._in_flight = False
        return out

    def switch_map(self, new_map: GridMap) -> Optional[EpisodeResult]:
        """
        Следующие эпизоды идут на new_map. Незавершённый эпизод обрывается
        как step_limit; его результат возвращается (иначе None).

        Контракт: размеры, start и goal новой карты совпадают с текущей,
        иначе DimensionMismatch.
        """
        if (new_map.width, new_map.height) != (self.grid.width, self.grid.height):
            raise DimensionMismatch(
                f"cannot switch {self.grid.width}x{self.grid.height} map to {new_map.width}x{new_map.height}"
            )
        if (new_map.start, new_map.goal) != (self.grid.start, self.grid.goal):
            raise DimensionMismatch(
                f"cannot switch start/goal {self.grid.start}->{self.grid.goal} to {new_map.start}->{new_map.goal}"
            )
        interrupted = None
        if self._in_flight and self._steps > 0:
            interrupted = EpisodeResult(self._steps, self._return, STEP_LIMIT)
        self._in_flight = False
        self.grid = new_map
        self.state = new_map.start
        logger.info("map switched (%d walls, %d holes)", len(new_map.walls), len(new_map.holes))
        return interrupted


def switch_map(env: GridWorld, new_map: GridMap) -> GridWorld:
    env.switch_map(new_map)
    return env
