"""Reporting utilities: study tables, CSV and JSON output."""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

import pandas as pd
from pydantic import BaseModel

from .constants import MSG_SAVED_TO
from .helpers import ensure_directory, format_percentage


def flatten_row(row: BaseModel) -> Dict[str, Any]:
    """One flat record per row; nested ``{test: value}`` maps become ``<key>_<test>``."""
    flat: Dict[str, Any] = {}
    for key, value in row.model_dump(mode="json").items():
        if isinstance(value, dict):
            for sub, sub_value in value.items():
                flat[f"{key}_{sub}"] = sub_value
        else:
            flat[key] = value
    return flat


def rows_to_frame(rows: Sequence[BaseModel]) -> pd.DataFrame:
    return pd.DataFrame([flatten_row(r) for r in rows])


def rows_to_json(rows: Sequence[BaseModel]) -> str:
    return json.dumps([r.model_dump(mode="json") for r in rows], indent=2)


def write_rows(rows: Sequence[BaseModel], path: str, fmt: str) -> Path:
    """Write study rows as CSV (pandas) or JSON (pydantic dumps)."""
    out = Path(path)
    ensure_directory(str(out.parent))
    if fmt == "csv":
        rows_to_frame(rows).to_csv(out, index=False)
    else:
        out.write_text(rows_to_json(rows) + "\n", encoding="utf-8")
    return out


def _mark_winners(frame: pd.DataFrame, columns: List[str], decimals: int) -> pd.DataFrame:
    """Render rates as percentages with an asterisk on the row maximum."""
    shown = frame.copy()
    best = frame[columns].max(axis=1)
    for col in columns:
        shown[col] = [
            format_percentage(v, decimals) + ("*" if v == b and b > 0 else "")
            for v, b in zip(frame[col], best)
        ]
    return shown


def format_power_table(rows: Iterable[BaseModel], decimals: int = 1) -> str:
    """One block per level: alternatives down, tests across, best test starred."""
    frame = rows_to_frame(list(rows))
    if frame.empty:
        return "(no rows)"
    blocks = []
    for level, part in frame.groupby("level", sort=True):
        table = part.pivot_table(
            index=["spec", "n"], columns="test", values="rejection_rate", sort=False
        )
        tests = list(dict.fromkeys(part["test"]))
        table = table[tests].reset_index()
        shown = _mark_winners(table, tests, decimals)
        blocks.append(f"level {level:g}\n{shown.to_string(index=False)}")
    return "\n\n".join(blocks)


def format_unique_table(rows: Iterable[BaseModel], decimals: int = 1) -> str:
    """Unique rejection ratios, alternatives down, tests across."""
    frame = rows_to_frame(list(rows))
    if frame.empty:
        return "(no rows)"
    tests = [c[len("unique_"):] for c in frame.columns if c.startswith("unique_")]
    table = frame[["spec", "n"] + [f"unique_{t}" for t in tests]]
    table.columns = ["spec", "n"] + tests
    return _mark_winners(table, tests, decimals).to_string(index=False)


def format_market_table(rows: Iterable[BaseModel], decimals: int = 1) -> str:
    """T and U per test for every (n, level)."""
    frame = rows_to_frame(list(rows))
    if frame.empty:
        return "(no rows)"
    tests = [c[len("total_"):] for c in frame.columns if c.startswith("total_")]
    t_frame = frame[[f"total_{t}" for t in tests]].set_axis(tests, axis=1)
    u_frame = frame[[f"unique_{t}" for t in tests]].set_axis(tests, axis=1)
    t_shown = _mark_winners(t_frame, tests, decimals)
    u_shown = _mark_winners(u_frame, tests, decimals)

    table = frame[["n", "level", "windows"]].copy()
    for t in tests:
        table[f"T {t}"] = t_shown[t]
    for t in tests:
        table[f"U {t}"] = u_shown[t]
    table["any"] = [format_percentage(v, decimals) for v in frame["rejects_any"]]
    return table.to_string(index=False)


def format_calibration_table(summaries: Sequence[Dict[str, Any]], side: str = "right") -> str:
    """Critical values on one side: one line per (statistic, n), levels across."""
    records = []
    for summary in summaries:
        record: Dict[str, Any] = {"statistic": summary["statistic"], "n": summary["n"]}
        for key, values in summary["critical_values"].items():
            key_side, level = key.split("@")
            if key_side == side:
                record[level] = round(values[-1], 4)
        records.append(record)
    if not records:
        return "(no rows)"
    return pd.DataFrame(records).to_string(index=False)


def print_table(title: str, body: str) -> None:
    print(f"\n📊 {title}")
    print(body)


def print_final_report(study: str, rows: int, output_file: str) -> None:
    """Print final completion report."""
    print(f"\n✅ {study.upper()} COMPLETE!")
    print(f"📊 Rows written: {rows}")
    print(MSG_SAVED_TO.format(file=output_file))
