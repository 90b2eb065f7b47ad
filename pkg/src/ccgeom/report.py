"""Scan reports: JSON with 17 significant digits, CSV tables, atomic writes."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ScanReport:
    experiment: str
    config: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)
    seed: int = 0
    wall_time: float = 0.0
    checks: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.checks.values())

    @property
    def failures(self) -> list:
        return [k for k, v in self.checks.items() if not v]

    def check(self, name: str, ok) -> bool:
        self.checks[name] = bool(ok)
        return bool(ok)

    def add_table(self, name: str, columns, rows) -> None:
        self.tables[name] = (list(columns), [list(r) for r in rows])

    def to_dict(self, timing: bool = True) -> dict:
        d = {
            "experiment": self.experiment,
            "seed": self.seed,
            "config": self.config,
            "results": self.results,
            "witnesses": self.witnesses,
            "checks": self.checks,
            "passed": self.passed,
            "failures": self.failures,
        }
        if timing:
            d["wall_time"] = self.wall_time
        return d

    def to_json(self, timing: bool = True) -> str:
        return dumps(self.to_dict(timing))


def _num(x) -> str:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        # JSON has no literal for these; keep them readable and parseable
        return json.dumps(repr(x))
    return format(x, ".17g")


def _emit(obj, out: list, indent: int, level: int) -> None:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_num(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for i, (k, v) in enumerate(items):
            out.append(pad + json.dumps(str(k)) + ": ")
            _emit(v, out, indent, level + 1)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else list(obj)
        if not seq:
            out.append("[]")
            return
        out.append("[")
        for i, v in enumerate(seq):
            _emit(v, out, indent, level + 1)
            if i < len(seq) - 1:
                out.append(", ")
        out.append("]")
    else:
        out.append(json.dumps(str(obj)))


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits."""
    out: list = []
    _emit(obj, out, indent, 0)
    return "".join(out) + "\n"


def table_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def atomic_write(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_report(report: ScanReport, out_dir, name: str | None = None) -> list:
    """Write ``<name>.report.json`` and one ``<name>.<table>.csv`` per table."""
    name = name or report.experiment
    os.makedirs(out_dir, exist_ok=True)
    paths = [os.path.join(out_dir, f"{name}.report.json")]
    atomic_write(paths[0], report.to_json())
    for tname, (cols, rows) in report.tables.items():
        p = os.path.join(out_dir, f"{name}.{tname}.csv")
        atomic_write(p, table_csv(cols, rows))
        paths.append(p)
    return paths
