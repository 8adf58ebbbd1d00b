"""
asprl.errors

Все исключения проекта в одном месте.

Соглашение (как и раньше в проекте):
- ошибки входных данных/параметров наследуются от ValueError,
  чтобы вызывающий код мог ловить их "по-старому";
- общий корень AspRlError позволяет CLI отличать наши ошибки от чужих.
"""

from __future__ import annotations


class AspRlError(Exception):
    """Корень иерархии исключений asprl."""


# ---- asp_core ----

class ChoiceBoundsInvalid(AspRlError, ValueError):
    """Границы choice-правила нарушают lower <= upper <= |candidates|."""


class NotPositive(AspRlError, ValueError):
    """В программе, которая должна быть positive, остался литерал `not A`."""


class ProgramNotNormalized(AspRlError, ValueError):
    """Операция требует программу без choice-правил (после normalize_choices)."""


class ProgramSyntaxError(AspRlError, ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


# ---- action_lang ----

class DomainSyntaxError(AspRlError, ValueError):
    """Синтаксическая ошибка в файле домена (с позицией)."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UndeclaredConstant(AspRlError, ValueError):
    pass


class ValueOutsideDomain(AspRlError, ValueError):
    pass


class HorizonInvalid(AspRlError, ValueError):
    pass


class MalformedModel(AspRlError, ValueError):
    pass


# ---- mdp_bridge ----

class NoFeasiblePolicy(AspRlError):
    """
    Ни один горизонт <= max_horizon не дал answer set:
    допустимой политики нет, обучение не нужно.
    """


class EmptyTrajectorySet(AspRlError, ValueError):
    pass


class BadDistribution(AspRlError, ValueError):
    pass


# ---- rl_core ----

class NoAvailableActions(AspRlError, ValueError):
    pass


# ---- gridworld_env ----

class MapError(AspRlError, ValueError):
    """Общий предок ошибок карты."""


class NonRectangular(MapError):
    pass


class MissingStartOrGoal(MapError):
    pass


class DuplicateStartOrGoal(MapError):
    pass


class InvalidChar(MapError):
    pass


class MapOverlap(MapError):
    """start/goal на стене или яме, стена и яма в одной клетке, клетка вне поля."""


class InvalidState(AspRlError, ValueError):
    pass


class InvalidAction(AspRlError, ValueError):
    pass


class DimensionMismatch(AspRlError, ValueError):
    pass


# ---- experiment_cli ----

class EmptyTables(AspRlError, ValueError):
    pass


class ConfigError(AspRlError, ValueError):
    pass
