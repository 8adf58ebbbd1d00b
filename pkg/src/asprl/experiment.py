"""
asprl.experiment

Конфигурация и запуск эксперимента "ситуация x алгоритмы x сессии".

- YAML -> ExperimentConfig (load_config), флаги CLI поверх (with_overrides);
- build_* собирают компоненты из секций конфига;
- run_experiment прогоняет все сессии (параллельно при jobs > 1) и пишет CSV.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd
import yaml

from .engine import ALGORITHMS, AspParams, SessionPlan, SessionSettings, plan_session, run_session
from .errors import ConfigError
from .gridworld_env import GridMap, SlipModel
from .map_sources import SITUATIONS, BuiltinMapSource, FileMapSource, MapSource
from .qtable import QInit
from .reporting import MetricsRow, learning_curves, metrics_frame, summarize, write_csv
from .rl_core import DEFAULT_STEP_LIMIT, LearningParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Нормализованный конфиг эксперимента.

    Секции learning / asp / env / maps остаются словарями (как в YAML),
    их превращают в объекты build_* функции.
    """
    situation: str = "1"
    algorithms: Tuple[str, ...] = ALGORITHMS
    episodes: int = 10_000
    change_at: int = 5_000
    sessions: int = 30
    seed: int = 0
    maps: Dict[str, Any] = field(default_factory=dict)
    learning: Dict[str, Any] = field(default_factory=dict)
    asp: Dict[str, Any] = field(default_factory=dict)
    env: Dict[str, Any] = field(default_factory=dict)
    jobs: int = 1
    out: Optional[str] = None
    curves_out: Optional[str] = None

    def __post_init__(self) -> None:
        if self.situation not in ("1", "2", "3", "custom"):
            raise ConfigError(f"Unknown situation: {self.situation}")
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ConfigError(f"Unknown algorithms: {', '.join(unknown)}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("algorithms are listed twice")
        if not (1 <= self.change_at < self.episodes):
            raise ConfigError(f"need 1 <= change_at < episodes, got change_at={self.change_at}, episodes={self.episodes}")
        if self.sessions < 1:
            raise ConfigError("sessions must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")


_SECTIONS = ("maps", "learning", "asp", "env")
_SCALARS = {"situation": str, "episodes": int, "change_at": int, "sessions": int, "seed": int, "jobs": int}


def config_from_dict(raw: Dict[str, Any]) -> ExperimentConfig:
    kwargs: Dict[str, Any] = {}
    try:
        for key, cast in _SCALARS.items():
            if raw.get(key) is not None:
                kwargs[key] = cast(raw[key])
        if raw.get("algorithms") is not None:
            kwargs["algorithms"] = parse_algorithms(raw["algorithms"])
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e
    for section in _SECTIONS:
        value = raw.get(section) or {}
        if not isinstance(value, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        kwargs[section] = value
    for key in ("out", "curves_out"):
        if raw.get(key) is not None:
            kwargs[key] = str(raw[key])
    return ExperimentConfig(**kwargs)


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as f:
        raw = yaml.safe_load(f) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(raw)


def parse_algorithms(value: Any) -> Tuple[str, ...]:
    if isinstance(value, str):
        items = [x.strip() for x in value.split(",")]
    else:
        items = [str(x).strip() for x in value]
    return tuple(x for x in items if x)


def with_overrides(cfg: ExperimentConfig, **overrides: Any) -> ExperimentConfig:
    """
    Флаги CLI поверх конфига. None = флаг не задан.
    Ключи секций пишутся как "learning.alpha", "asp.slack", "env.step_limit", "maps.before".
    """
    top: Dict[str, Any] = {}
    sections: Dict[str, Dict[str, Any]] = {}
    names = {f.name for f in fields(ExperimentConfig)}
    for key, value in overrides.items():
        if value is None:
            continue
        if "." in key:
            section, sub = key.split(".", 1)
            if section not in _SECTIONS:
                raise ConfigError(f"Unknown override: {key}")
            sections.setdefault(section, dict(getattr(cfg, section)))[sub] = value
        elif key in names:
            top[key] = value
        else:
            raise ConfigError(f"Unknown override: {key}")
    return replace(cfg, **top, **sections)


# ============================
# СБОРКА КОМПОНЕНТОВ
# ============================

def build_map_source(entry: Dict[str, Any]) -> MapSource:
    kind = entry.get("kind", "builtin")
    if kind == "builtin":
        if "name" not in entry:
            raise ConfigError("builtin map needs 'name'")
        try:
            return BuiltinMapSource(str(entry["name"]))
        except ValueError as e:
            raise ConfigError(str(e)) from e
    if kind == "file":
        if "path" not in entry:
            raise ConfigError("file map needs 'path'")
        return FileMapSource(entry["path"])
    raise ConfigError(f"Unknown maps.kind: {kind}")


def build_maps(cfg: ExperimentConfig) -> Tuple[GridMap, GridMap]:
    if cfg.situation == "custom":
        entries = []
        for key in ("before", "after"):
            entry = cfg.maps.get(key)
            if entry is None:
                raise ConfigError(f"custom situation needs maps.{key}")
            if isinstance(entry, str):
                entry = {"kind": "file", "path": entry}
            entries.append(entry)
        before, after = (build_map_source(s) for s in entries)
    else:
        first, second = SITUATIONS[int(cfg.situation)]
        before, after = BuiltinMapSource(first), BuiltinMapSource(second)
    first_map, second_map = before.get_map(), after.get_map()
    if _layout(first_map) != _layout(second_map):
        raise ConfigError(
            f"maps must share size, start and goal: {_layout(first_map)} vs {_layout(second_map)}"
        )
    return first_map, second_map


def _layout(grid: GridMap) -> Tuple[int, int, Tuple[int, int], Tuple[int, int]]:
    return grid.width, grid.height, grid.start, grid.goal


def build_learning_params(cfg: ExperimentConfig) -> LearningParams:
    learning = cfg.learning
    init_cfg = learning.get("init", {}) or {}
    try:
        kind = init_cfg.get("kind", "uniform")
        if kind == "uniform":
            init = QInit.uniform(float(init_cfg.get("low", 0.0)), float(init_cfg.get("high", 0.1)))
        elif kind == "constant":
            init = QInit.constant(float(init_cfg.get("value", 0.0)))
        else:
            raise ConfigError(f"Unknown learning.init.kind: {kind}")
        return LearningParams(
            alpha=float(learning.get("alpha", 0.2)),
            gamma=float(learning.get("gamma", 0.9)),
            epsilon=float(learning.get("epsilon", 0.1)),
            init=init,
        )
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from e


def build_slip_model(cfg: ExperimentConfig) -> SlipModel:
    try:
        return SlipModel.from_intended(float(cfg.env.get("p_intended", 0.8)))
    except ValueError as e:
        raise ConfigError(str(e)) from e


def build_asp_params(cfg: ExperimentConfig) -> AspParams:
    slack = cfg.asp.get("slack")
    try:
        return AspParams(
            slack=None if slack is None else int(slack),
            max_horizon=int(cfg.asp.get("max_horizon", 100)),
            max_models=int(cfg.asp.get("max_models", 100_000)),
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e


def build_settings(cfg: ExperimentConfig) -> SessionSettings:
    try:
        return SessionSettings(
            situation=cfg.situation,
            episodes=cfg.episodes,
            change_at=cfg.change_at,
            params=build_learning_params(cfg),
            slip=build_slip_model(cfg),
            step_limit=int(cfg.env.get("step_limit", DEFAULT_STEP_LIMIT)),
        )
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from e


# ============================
# ЗАПУСК
# ============================

@dataclass(frozen=True)
class ExperimentResult:
    frame: pd.DataFrame
    summary: pd.DataFrame
    infeasible: bool
    plan: SessionPlan


def _run_task(args: Tuple[SessionSettings, SessionPlan, str, int, int]) -> Tuple[List[MetricsRow], bool]:
    settings, plan, algo, session, seed = args
    return run_session(settings, plan, algo, session, seed)


def run_asprl_session(cfg: ExperimentConfig, algo: str, session_seed: int) -> List[MetricsRow]:
    """Одна сессия с seed = session_seed (номер сессии = session_seed - cfg.seed)."""
    before, after = build_maps(cfg)
    plan = plan_session(before, after, build_asp_params(cfg), (algo,))
    rows, _ = run_session(build_settings(cfg), plan, algo, session_seed - cfg.seed, session_seed)
    return rows


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """
    sessions x algorithms; seed сессии = cfg.seed + номер сессии.
    Строки идут в порядке (session, algorithm, episode) независимо от порядка завершения.
    """
    settings = build_settings(cfg)
    before, after = build_maps(cfg)
    plan = plan_session(before, after, build_asp_params(cfg), cfg.algorithms)

    tasks = [
        (settings, plan, algo, session, cfg.seed + session)
        for session in range(cfg.sessions)
        for algo in cfg.algorithms
    ]
    logger.info("running %d sessions x %d algorithms (jobs=%d)", cfg.sessions, len(cfg.algorithms), cfg.jobs)
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]

    rows = [row for task_rows, _ in results for row in task_rows]
    infeasible = any(flag for _, flag in results)
    frame = metrics_frame(rows)
    if cfg.out:
        write_csv(frame, cfg.out)
    if cfg.curves_out:
        curves = learning_curves(frame)
        Path(cfg.curves_out).parent.mkdir(parents=True, exist_ok=True)
        curves.to_csv(cfg.curves_out, index=False)
    return ExperimentResult(frame, summarize(frame, cfg.change_at), infeasible, plan)
