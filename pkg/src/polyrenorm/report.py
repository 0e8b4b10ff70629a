"""Report assembly and emission: JSON with sorted keys plus one CSV per table."""
from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__

CHECK_COLUMNS = ["name", "pass", "margin", "stage", "detail"]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    margin: float
    stage: str = ""
    detail: str = ""

    def __post_init__(self) -> None:
        m = float(self.margin)
        if not math.isfinite(m):
            raise ValueError(f"check {self.name} has a non-finite margin")
        object.__setattr__(self, "margin", m)
        object.__setattr__(self, "passed", bool(self.passed))

    def row(self) -> list:
        return [self.name, self.passed, self.margin, self.stage, self.detail]

    def to_json(self) -> dict:
        return dict(zip(CHECK_COLUMNS, self.row()))


@dataclass
class Table:
    columns: list[str]
    rows: list[list] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"columns": self.columns, "rows": self.rows}


@dataclass
class ReportFile:
    mode: str
    params: dict[str, Any]
    seed: int
    tables: dict[str, Table] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    timestamp: str = ""

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: Check) -> None:
        self.checks.append(check)

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "params": self.params,
            "tables": {k: v.to_json() for k, v in sorted(self.tables.items())},
            "checks": [c.to_json() for c in self.checks],
            "passed": self.passed,
            "environment": {"version": __version__, "seed": self.seed, "timestamp": self.timestamp},
        }

    def payload(self) -> dict:
        """Everything except the timestamp; equal across reruns of one config."""
        out = self.to_json()
        out["environment"] = {k: v for k, v in out["environment"].items() if k != "timestamp"}
        return out


def _clean(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return repr(obj)
        return obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):
        return _clean(obj.item())
    return obj


def dumps(report: ReportFile) -> str:
    return json.dumps(_clean(report.to_json()), sort_keys=True, indent=2, allow_nan=False) + "\n"


def emit_tables(report: ReportFile, out_dir: str | Path, formats=("json", "csv")) -> list[Path]:
    """Write ``report.json``, ``checks.csv`` and ``<table>.csv``; returns the paths."""
    if not report.timestamp:
        report.timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        p = out / "report.json"
        p.write_text(dumps(report), encoding="utf-8")
        written.append(p)
    if "csv" in formats:
        written.append(write_csv(out / "checks.csv", CHECK_COLUMNS, [c.row() for c in report.checks]))
        for name, table in sorted(report.tables.items()):
            written.append(write_csv(out / f"{name}.csv", table.columns, table.rows))
    return written


def write_csv(path: Path, columns: list[str], rows: list[list]) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in _clean(list(r))])
    return path
