"""
asprl.reporting

Метрики прогона и их сводки:
- RMSD между последовательными Q-таблицами;
- таблица "строка на эпизод" (CSV-схема session,episode,algorithm,situation,steps,return,rmsd);
- сводки по окнам эпизодов (начало, до смены, после смены, конец);
- кривые обучения: среднее и std по сессиям для каждого эпизода.

Модуль НЕ запускает обучение, он только анализирует output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Union

import numpy as np
import pandas as pd

from .errors import EmptyTables
from .qtable import QTable

CSV_COLUMNS = ["session", "episode", "algorithm", "situation", "steps", "return", "rmsd"]
SUMMARY_WINDOW = 100


@dataclass(frozen=True)
class MetricsRow:
    session: int
    episode: int
    algorithm: str
    situation: str
    steps: int
    return_: float
    rmsd: float


def rmsd(q_t: QTable, q_prev: QTable) -> float:
    """
    sqrt( sum_m (q_t[m] - q_prev[m])^2 / n ) по объединению ключей.
    Ключ, которого нет в одной из таблиц, читается как её значение инициализации.
    """
    keys = set(q_t.keys()) | set(q_prev.keys())
    if not keys:
        raise EmptyTables("both Q-tables are empty")
    fill_t = q_t.init.fill_value
    fill_prev = q_prev.init.fill_value
    diffs = np.fromiter(
        (q_t.entries.get(k, fill_t) - q_prev.entries.get(k, fill_prev) for k in keys),
        dtype=float,
        count=len(keys),
    )
    return float(np.sqrt(np.mean(diffs * diffs)))


def metrics_frame(rows: Iterable[MetricsRow]) -> pd.DataFrame:
    df = pd.DataFrame(
        [(r.session, r.episode, r.algorithm, r.situation, r.steps, r.return_, r.rmsd) for r in rows],
        columns=CSV_COLUMNS,
    )
    return df.astype({"session": int, "episode": int, "steps": int, "return": float, "rmsd": float})


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, columns=CSV_COLUMNS)


def read_csv(path: Union[str, Path]) -> pd.DataFrame:
    df = pd.read_csv(path, dtype={"algorithm": str, "situation": str})
    missing = set(CSV_COLUMNS) - set(df.columns)
    if missing:
        raise ValueError(f"metrics CSV is missing columns: {sorted(missing)}")
    return df


def summary_windows(episodes: int, change_at: int, window: int = SUMMARY_WINDOW) -> List[tuple]:
    """(имя, начало, конец) окон сводки; окна обрезаются границами прогона."""
    return [
        ("first", 0, min(window, episodes)),
        ("pre_change", max(0, change_at - window), change_at),
        ("post_change", change_at, min(episodes, change_at + window)),
        ("last", max(0, episodes - window), episodes),
    ]


def summarize(frame: pd.DataFrame, change_at: int, window: int = SUMMARY_WINDOW) -> pd.DataFrame:
    """
    Среднее и std шагов, возврата и RMSD по (situation, algorithm, окно).

    Сначала усредняем по эпизодам внутри сессии, затем по сессиям.
    """
    if frame.empty:
        return pd.DataFrame(columns=["situation", "algorithm", "window", "episodes",
                                     "steps_mean", "steps_std", "return_mean", "return_std",
                                     "rmsd_mean", "rmsd_std"])
    episodes = int(frame["episode"].max()) + 1
    parts = []
    for name, lo, hi in summary_windows(episodes, change_at, window):
        sub = frame[(frame["episode"] >= lo) & (frame["episode"] < hi)]
        if sub.empty:
            continue
        per_session = sub.groupby(["situation", "algorithm", "session"], sort=False)[["steps", "return", "rmsd"]].mean()
        agg = per_session.groupby(level=["situation", "algorithm"], sort=False).agg(["mean", "std"])
        agg.columns = [f"{col}_{stat}" for col, stat in agg.columns]
        agg = agg.reset_index()
        agg.insert(2, "window", name)
        agg.insert(3, "episodes", f"[{lo},{hi})")
        parts.append(agg)
    return pd.concat(parts, ignore_index=True)


def learning_curves(frame: pd.DataFrame) -> pd.DataFrame:
    """Кривые обучения: mean/std по сессиям для каждого (situation, algorithm, episode)."""
    agg = frame.groupby(["situation", "algorithm", "episode"], sort=False)[["steps", "return", "rmsd"]].agg(
        ["mean", "std"]
    )
    agg.columns = [f"{col}_{stat}" for col, stat in agg.columns]
    return agg.reset_index()


def format_summary(summary: pd.DataFrame) -> str:
    if summary.empty:
        return "(no episodes)"
    lines = []
    for _, row in summary.iterrows():
        lines.append(
            f"situation={row['situation']:<6} {row['algorithm']:<10} {row['window']:<11} {row['episodes']:<13} "
            f"steps={_pm(row['steps_mean'], row['steps_std'])}  "
            f"return={_pm(row['return_mean'], row['return_std'])}  "
            f"rmsd={_pm(row['rmsd_mean'], row['rmsd_std'], 4)}"
        )
    return "\n".join(lines)


def _pm(mean: float, std: Optional[float], digits: int = 1) -> str:
    if std is None or (isinstance(std, float) and math.isnan(std)):
        return f"{mean:.{digits}f}"
    return f"{mean:.{digits}f}±{std:.{digits}f}"
