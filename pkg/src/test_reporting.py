from __future__ import annotations

import math

import pandas as pd
import pytest

from asprl.errors import EmptyTables
from asprl.qtable import QInit, QTable
from asprl.reporting import (
    CSV_COLUMNS,
    MetricsRow,
    format_summary,
    learning_curves,
    metrics_frame,
    read_csv,
    rmsd,
    summarize,
    summary_windows,
    write_csv,
)


def q(entries, init=QInit.constant(0.0)) -> QTable:
    return QTable(init, entries=entries)


# ---- RMSD ----

def test_rmsd_examples():
    assert rmsd(q({("s", "a"): 1.0}), q({("s", "a"): 1.0})) == 0.0
    assert rmsd(
        q({("s", "a"): 1.05, ("s", "b"): 2.05}),
        q({("s", "a"): 1.0, ("s", "b"): 2.0}),
    ) == pytest.approx(0.05)
    assert rmsd(
        q({("s", "a"): 3.0, ("s", "b"): -1.0}),
        q({("s", "a"): 1.0, ("s", "b"): 1.0}),
    ) == pytest.approx(2.0)


def test_rmsd_reads_missing_keys_as_init_value():
    assert rmsd(q({("s", "a"): 1.0, ("s", "b"): 0.0}), q({("s", "a"): 1.0})) == 0.0
    uniform = QInit.uniform(0.0, 0.1)
    got = rmsd(q({("s", "a"): 1.0, ("s", "b"): 0.0}, uniform), q({("s", "a"): 1.0}, uniform))
    assert got == pytest.approx(math.sqrt(0.05 ** 2 / 2))


def test_rmsd_of_empty_tables():
    with pytest.raises(EmptyTables):
        rmsd(q({}), q({}))


# ---- CSV ----

def rows():
    out = []
    for session in (0, 1):
        for episode in range(4):
            steps = 10 * session + episode
            out.append(MetricsRow(session, episode, "q", "1", steps, -float(steps), 0.1))
    return out


def test_metrics_csv(tmp_path):
    frame = metrics_frame(rows())
    path = tmp_path / "out" / "metrics.csv"
    write_csv(frame, path)
    assert path.read_text(encoding="utf-8").splitlines()[0] == ",".join(CSV_COLUMNS)
    back = read_csv(path)
    assert len(back) == 8
    assert list(back.columns) == CSV_COLUMNS
    assert back["situation"].tolist() == ["1"] * 8


def test_read_csv_requires_all_columns(tmp_path):
    path = tmp_path / "bad.csv"
    pd.DataFrame({"session": [0], "episode": [0]}).to_csv(path, index=False)
    with pytest.raises(ValueError):
        read_csv(path)


# ---- сводки ----

def test_summary_windows_are_clipped():
    assert summary_windows(10, 5, 100) == [
        ("first", 0, 10),
        ("pre_change", 0, 5),
        ("post_change", 5, 10),
        ("last", 0, 10),
    ]


def test_summarize_averages_sessions_then_windows():
    summary = summarize(metrics_frame(rows()), change_at=2, window=1)
    assert summary["window"].tolist() == ["first", "pre_change", "post_change", "last"]
    first = summary.iloc[0]
    assert first["steps_mean"] == pytest.approx(5.0)
    assert first["steps_std"] == pytest.approx(math.sqrt(50.0))
    post = summary.iloc[2]
    assert post["episodes"] == "[2,3)"
    assert post["steps_mean"] == pytest.approx(7.0)
    assert post["return_mean"] == pytest.approx(-7.0)
    assert post["rmsd_mean"] == pytest.approx(0.1)


def test_learning_curves():
    curves = learning_curves(metrics_frame(rows()))
    assert len(curves) == 4
    assert curves["steps_mean"].tolist() == pytest.approx([5.0, 6.0, 7.0, 8.0])
    assert {"return_std", "rmsd_mean"} <= set(curves.columns)


def test_format_summary():
    text = format_summary(summarize(metrics_frame(rows()), change_at=2, window=1))
    assert len(text.splitlines()) == 4
    assert "post_change" in text
    assert format_summary(summarize(metrics_frame([]), change_at=2)) == "(no episodes)"
