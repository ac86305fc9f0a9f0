"""Scenario reports and their file emitters.

``report.json`` is fully deterministic for a fixed config and seeds: keys
are sorted, rows are plain lists, and everything time-dependent
(timestamps, wall-clock per stage, library versions) goes to the separate
``report_meta.json``.  CSV emission writes one file per table with a
header row; series additionally render to PNG line plots next to the CSVs.
"""

from __future__ import annotations

import csv
import datetime
import json
import os
import platform
from dataclasses import dataclass, field

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["Verdict", "Table", "Series", "ScenarioReport", "emit_report"]


def _jsonable(v):
    if isinstance(v, (bool, int, str)) or v is None:
        return v
    if isinstance(v, float):
        return v
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if hasattr(v, "item"):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return str(v)


@dataclass(frozen=True)
class Verdict:
    """One pass/fail check, citing the metric and threshold it applied."""

    name: str
    metric: str
    value: float
    threshold: str
    passed: bool
    detail: str = ""

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "metric": self.metric,
            "value": _jsonable(self.value),
            "threshold": self.threshold,
            "passed": self.passed,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class Table:
    """Named rectangular results: one CSV file per table."""

    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(
                    f"table {self.name}: row width {len(row)} != "
                    f"{len(self.columns)} columns"
                )

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "columns": list(self.columns),
            "rows": [[_jsonable(v) for v in row] for row in self.rows],
        }


@dataclass(frozen=True)
class Series:
    """A plot-ready (x, y) pair; files are named ``<metric>_vs_<parameter>``."""

    metric: str
    parameter: str
    xs: tuple[float, ...]
    ys: tuple[float, ...]
    logx: bool = False
    logy: bool = False

    def __post_init__(self):
        if len(self.xs) != len(self.ys):
            raise ValueError(f"series {self.name}: x and y lengths differ")

    @property
    def name(self) -> str:
        return f"{self.metric}_vs_{self.parameter}"

    def to_json_dict(self) -> dict:
        return {
            "metric": self.metric,
            "parameter": self.parameter,
            "xs": [_jsonable(v) for v in self.xs],
            "ys": [_jsonable(v) for v in self.ys],
        }


@dataclass
class ScenarioReport:
    """Everything one scenario run produced."""

    scenario: str
    config_echo: dict
    tables: list[Table] = field(default_factory=list)
    series: list[Series] = field(default_factory=list)
    verdicts: list[Verdict] = field(default_factory=list)
    extras: dict = field(default_factory=dict)
    stage_seconds: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def table(self, name: str) -> Table:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(f"no table named {name!r}")

    def to_json_dict(self) -> dict:
        """Deterministic payload: no timings, no timestamps."""
        return {
            "scenario": self.scenario,
            "config": _jsonable(self.config_echo),
            "tables": [t.to_json_dict() for t in self.tables],
            "series": [s.to_json_dict() for s in self.series],
            "verdicts": [v.to_json_dict() for v in self.verdicts],
            "extras": _jsonable(self.extras),
            "passed": self.passed,
        }


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_csv(path: str, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_jsonable(v) for v in row])


def _render_series(series: Series, path: str) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.plot(series.xs, series.ys, marker="o", lw=1.2)
    if series.logx:
        ax.set_xscale("log")
    if series.logy:
        ax.set_yscale("log")
    ax.set_xlabel(series.parameter)
    ax.set_ylabel(series.metric)
    ax.set_title(series.name)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def emit_report(
    report: ScenarioReport,
    out_dir: str,
    fmt: str = "json",
    config_text: str | None = None,
    figures: bool = True,
) -> list[str]:
    """Write a scenario report under ``out_dir``; returns the paths written.

    ``json`` writes the full deterministic report plus the metadata side
    file; ``csv`` writes one delimited file per table and per series.  The
    config echo is always written for exact replay, and each series renders
    to a PNG unless ``figures`` is off.
    """
    if fmt not in ("json", "csv"):
        raise ValueError(f"format must be 'json' or 'csv', got {fmt!r}")
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []

    if config_text is not None:
        p = os.path.join(out_dir, "config_echo.ini")
        with open(p, "w", encoding="utf-8") as fh:
            fh.write(config_text)
        written.append(p)

    if fmt == "json":
        p = os.path.join(out_dir, "report.json")
        _write_json(p, report.to_json_dict())
        written.append(p)
    else:
        for t in report.tables:
            p = os.path.join(out_dir, f"{t.name}.csv")
            _write_csv(p, t.columns, t.rows)
            written.append(p)
        for s in report.series:
            p = os.path.join(out_dir, f"{s.name}.csv")
            _write_csv(p, (s.parameter, s.metric), list(zip(s.xs, s.ys)))
            written.append(p)
        p = os.path.join(out_dir, "verdicts.csv")
        _write_csv(
            p,
            ("name", "metric", "value", "threshold", "passed", "detail"),
            [
                (v.name, v.metric, v.value, v.threshold, v.passed, v.detail)
                for v in report.verdicts
            ],
        )
        written.append(p)

    meta = {
        "written_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "stage_seconds": _jsonable(report.stage_seconds),
        "python": platform.python_version(),
        "platform": platform.platform(),
    }
    p = os.path.join(out_dir, "report_meta.json")
    _write_json(p, meta)
    written.append(p)

    if figures:
        for s in report.series:
            p = os.path.join(out_dir, f"{s.name}.png")
            _render_series(s, p)
            written.append(p)
    return written
