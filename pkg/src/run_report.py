from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from asprl.reporting import SUMMARY_WINDOW, format_summary, read_csv, summarize


def main(argv: Optional[List[str]] = None) -> int:
    """Сводка по уже посчитанному CSV, без повторного прогона."""
    ap = argparse.ArgumentParser(description="Summarize an existing metrics CSV")
    ap.add_argument("--csv", required=True, help="Per-episode metrics CSV from run_experiment.py")
    ap.add_argument("--change-at", type=int, help="Episode of the map change (default: half of the run)")
    ap.add_argument("--window", type=int, default=SUMMARY_WINDOW)
    args = ap.parse_args(argv)

    try:
        frame = read_csv(args.csv)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    # по умолчанию смена посередине, как в протоколе 5000 / 10000
    change_at = args.change_at
    if change_at is None:
        change_at = (int(frame["episode"].max()) + 1) // 2 if not frame.empty else 0

    print(f"csv: {args.csv}")
    print(f"sessions: {frame['session'].nunique()}  episodes: {frame['episode'].nunique()}  change_at: {change_at}")
    print()
    print(format_summary(summarize(frame, change_at, args.window)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
