from __future__ import annotations

import ast
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Hashable, Iterable, Iterator, Optional, Union

import numpy as np
import pandas as pd

from .core_types import ActionName, StateActionKey


@dataclass(frozen=True)
class QInit:
    """
    Политика инициализации новых пар (s, a).

    kind:
    - "constant": все новые значения = value;
    - "uniform":  равномерно из [low, high] (генератор — у QTable).
    """
    kind: str = "uniform"
    low: float = 0.0
    high: float = 0.1
    value: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "uniform"):
            raise ValueError(f"Unknown init kind: {self.kind}")
        if self.kind == "uniform" and self.low > self.high:
            raise ValueError("uniform init requires low <= high")

    @classmethod
    def constant(cls, value: float = 0.0) -> "QInit":
        return cls(kind="constant", value=value)

    @classmethod
    def uniform(cls, low: float = 0.0, high: float = 0.1) -> "QInit":
        return cls(kind="uniform", low=low, high=high)

    @property
    def fill_value(self) -> float:
        """Ожидаемое значение новой записи (им читаются отсутствующие ключи в RMSD)."""
        if self.kind == "constant":
            return self.value
        return 0.5 * (self.low + self.high)

    def sample(self, rng: np.random.Generator) -> float:
        if self.kind == "constant":
            return self.value
        return float(rng.uniform(self.low, self.high))


class QTable:
    """
    Q(s, a): словарь (state, action) -> float.

    Новые пары появляются только явно: через ensure() (ленивое добавление)
    или через merge_q. Генератор rng используется только для инициализации,
    поэтому поток выбора действий от него не зависит.
    """

    def __init__(
        self,
        init: QInit = QInit.constant(0.0),
        rng: Optional[np.random.Generator] = None,
        entries: Optional[Dict[StateActionKey, float]] = None,
    ):
        self.init = init
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.entries: Dict[StateActionKey, float] = dict(entries or {})

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key: StateActionKey) -> bool:
        return key in self.entries

    def __getitem__(self, key: StateActionKey) -> float:
        return self.entries[key]

    def __setitem__(self, key: StateActionKey, value: float) -> None:
        self.entries[key] = float(value)

    def __iter__(self) -> Iterator[StateActionKey]:
        return iter(self.entries)

    def keys(self):
        return self.entries.keys()

    def get(self, key: StateActionKey, default: Optional[float] = None) -> Optional[float]:
        return self.entries.get(key, default)

    def ensure(self, state: Hashable, action: ActionName) -> float:
        key = (state, action)
        value = self.entries.get(key)
        if value is None:
            value = self.init.sample(self.rng)
            self.entries[key] = value
        return value

    def max_value(self, state: Hashable, actions: Iterable[ActionName]) -> float:
        return max(self.ensure(state, a) for a in actions)

    def copy(self) -> "QTable":
        """Снимок значений (rng общий: снимок не должен сам инициализировать пары)."""
        return QTable(self.init, self.rng, self.entries)

    # ---- checkpoint ----

    def to_frame(self) -> pd.DataFrame:
        rows = sorted(self.entries.items(), key=lambda kv: (repr(kv[0][0]), kv[0][1]))
        return pd.DataFrame(
            {
                "state": [repr(k[0]) for k, _ in rows],
                "action": [k[1] for k, _ in rows],
                "value": [v for _, v in rows],
            }
        )

    def to_csv(self, path: Union[str, Path]) -> None:
        """Формат `state,action,value`; state — repr (клетка "(0, 1)")."""
        self.to_frame().to_csv(path, index=False)

    @classmethod
    def from_csv(
        cls,
        path: Union[str, Path],
        init: QInit = QInit.constant(0.0),
        rng: Optional[np.random.Generator] = None,
    ) -> "QTable":
        df = pd.read_csv(path, dtype={"state": str, "action": str})
        missing = {"state", "action", "value"} - set(df.columns)
        if missing:
            raise ValueError(f"Q-table CSV is missing columns: {sorted(missing)}")
        entries = {
            (ast.literal_eval(s), a): float(v)
            for s, a, v in zip(df["state"], df["action"], df["value"])
        }
        return cls(init, rng, entries)
