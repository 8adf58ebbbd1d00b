from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Tuple, TypeAlias, Union

# ---- базовые алиасы ----
# Значение флюента: символ ("on"), целое (3) или клетка-кортеж ((3, 4)).
Value: TypeAlias = Union[str, int, Tuple[int, ...]]
# Состояние = значения всех флюентов в порядке их объявления в домене.
State: TypeAlias = Tuple[Value, ...]
ActionName: TypeAlias = str
Cell: TypeAlias = Tuple[int, int]
# Ключ Q-таблицы (state, action). state: любое hashable (valuation или клетка).
StateActionKey: TypeAlias = Tuple[Hashable, ActionName]


@dataclass(frozen=True)
class Transition:
    """
    Одна тройка траектории <s, a, s'>.
    """
    state: State
    action: ActionName
    next_state: State


@dataclass(frozen=True)
class Trajectory:
    """
    Траектория T = <<s_0, a_0, s_1>, ..., <s_{m-1}, a_{m-1}, s_m>>.

    Контракт:
    - triples непустой;
    - цепочка: next_state тройки i == state тройки i+1.
    """
    triples: Tuple[Transition, ...]

    def __post_init__(self) -> None:
        if not self.triples:
            raise ValueError("trajectory must contain at least one transition")
        for prev, cur in zip(self.triples, self.triples[1:]):
            if prev.next_state != cur.state:
                raise ValueError(
                    f"trajectory is not chained: {prev.next_state!r} != {cur.state!r}"
                )

    def __len__(self) -> int:
        return len(self.triples)

    @property
    def initial_state(self) -> State:
        return self.triples[0].state

    @property
    def final_state(self) -> State:
        return self.triples[-1].next_state

    def states(self) -> Tuple[State, ...]:
        return (self.initial_state,) + tuple(t.next_state for t in self.triples)


@dataclass(frozen=True)
class TrajectorySet:
    """
    Множество H найденных траекторий.

    horizon_used — минимальный горизонт m*, на котором нашлась хоть одна траектория;
    max_horizon_used — последний горизонт, который реально перебирался.
    truncated — True, если перебор упёрся в max_models.
    """
    trajectories: Tuple[Trajectory, ...]
    horizon_used: int
    max_horizon_used: int = 0
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)


@dataclass(frozen=True)
class StepOutcome:
    """
    Результат одного шага среды.

    Контракт: terminal <=> cause in {"goal", "hole"}; reward из {+100, -100, -1}
    для сетки (другие среды могут иметь свои награды).
    """
    next_state: Hashable
    reward: float
    terminal: bool
    cause: str  # goal | hole | move | wall_bump
