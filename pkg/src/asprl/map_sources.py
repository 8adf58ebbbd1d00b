from __future__ import annotations

from abc import ABC, abstractmethod
from importlib import resources
from pathlib import Path
from typing import Dict, Tuple, Union

from .gridworld_env import GridMap, load_map

BUILTIN_MAPS: Tuple[str, ...] = ("map1", "map2", "map3", "map4")

# ситуация -> (карта до смены, карта после)
SITUATIONS: Dict[int, Tuple[str, str]] = {
    1: ("map1", "map2"),
    2: ("map1", "map3"),
    3: ("map1", "map4"),
}


class MapSource(ABC):
    """
    Интерфейс источника карты.

    Любая реализация возвращает валидированную GridMap; остальной код
    не знает, лежит карта в пакете или в файле пользователя.
    """

    @abstractmethod
    def get_map(self) -> GridMap:
        raise NotImplementedError

    @property
    @abstractmethod
    def label(self) -> str:
        raise NotImplementedError


class BuiltinMapSource(MapSource):
    """Карты из пакета (asprl/maps/*.txt)."""

    def __init__(self, name: str):
        if name not in BUILTIN_MAPS:
            raise ValueError(f"Unknown builtin map: {name}")
        self.name = name

    @property
    def label(self) -> str:
        return self.name

    def get_map(self) -> GridMap:
        text = resources.files("asprl").joinpath("maps").joinpath(f"{self.name}.txt").read_text(encoding="utf-8")
        return load_map(text)


class FileMapSource(MapSource):
    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    @property
    def label(self) -> str:
        return self.path.stem

    def get_map(self) -> GridMap:
        return load_map(self.path.read_text(encoding="utf-8"))


def builtin_map(name: str) -> GridMap:
    return BuiltinMapSource(name).get_map()
