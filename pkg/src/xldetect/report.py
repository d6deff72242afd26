"""Structured experiment reports: key=value sections plus fenced CSV blocks.

The writer is canonical (ordering and float formatting are deterministic)
and the parser preserves everything, so parse -> serialize reproduces a
written report byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import FormatError
from .metrics import MetricsReport

_HEADER = "XLREPORT 1"
_FENCE = "```"


@dataclass
class CsvBlock:
    name: str
    columns: list[str]
    rows: list[list[str]]


@dataclass
class Report:
    sections: dict[str, dict[str, str]] = field(default_factory=dict)
    tables: dict[str, CsvBlock] = field(default_factory=dict)

    def section(self, name: str) -> dict[str, str]:
        return self.sections.setdefault(name, {})

    def add_table(self, name: str, columns: list[str], rows: list[list[str]]) -> None:
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"table {name!r}: row width {len(row)} != {len(columns)}")
        self.tables[name] = CsvBlock(name, list(columns), [list(r) for r in rows])


def serialize_report(report: Report) -> str:
    parts = [_HEADER, ""]
    for name, kv in report.sections.items():
        parts.append(f"[{name}]")
        for key, value in kv.items():
            if "=" in key or "\n" in key or "\n" in str(value):
                raise ValueError(f"illegal report key/value under {name!r}: {key!r}")
            parts.append(f"{key}={value}")
        parts.append("")
    for block in report.tables.values():
        parts.append(f"{_FENCE}csv {block.name}")
        parts.append(",".join(block.columns))
        for row in block.rows:
            parts.append(",".join(row))
        parts.append(_FENCE)
        parts.append("")
    return "\n".join(parts)


def parse_report(text: str) -> Report:
    lines = text.splitlines()
    if not lines or lines[0] != _HEADER:
        raise FormatError(f"not a report: first line is {lines[0]!r}" if lines else "empty report")
    report = Report()
    section: dict[str, str] | None = None
    i = 1
    while i < len(lines):
        line = lines[i]
        if not line:
            i += 1
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1]
            if name in report.sections:
                raise FormatError(f"duplicate section {name!r}")
            section = report.section(name)
            i += 1
        elif line.startswith(_FENCE + "csv "):
            name = line[len(_FENCE) + 4 :]
            i += 1
            if i >= len(lines):
                raise FormatError(f"unterminated csv block {name!r}")
            columns = lines[i].split(",")
            rows = []
            i += 1
            while i < len(lines) and lines[i] != _FENCE:
                rows.append(lines[i].split(","))
                i += 1
            if i >= len(lines):
                raise FormatError(f"unterminated csv block {name!r}")
            i += 1
            report.add_table(name, columns, rows)
            section = None
        elif "=" in line and section is not None:
            key, value = line.split("=", 1)
            section[key] = value
            i += 1
        else:
            raise FormatError(f"cannot parse report line {i + 1}: {line!r}")
    return report


def write_report(report: Report, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_report(report))


def read_report(path: str | Path) -> Report:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_report(fh.read())


def metrics_section(metrics: MetricsReport) -> dict[str, str]:
    """Full-precision metric fields; F1 is recomputable from the counts."""
    return {
        "positive_class": metrics.positive_class,
        "confusion.tp": str(metrics.confusion.tp),
        "confusion.fp": str(metrics.confusion.fp),
        "confusion.fn": str(metrics.confusion.fn),
        "confusion.tn": str(metrics.confusion.tn),
        "precision": repr(metrics.precision),
        "recall": repr(metrics.recall),
        "f1": repr(metrics.f1),
        "flags": ",".join(metrics.flags),
    }


def metrics_from_section(kv: dict[str, str]) -> MetricsReport:
    from .metrics import ConfusionMatrix, binary_metrics

    cm = ConfusionMatrix(
        tp=int(kv["confusion.tp"]),
        fp=int(kv["confusion.fp"]),
        fn=int(kv["confusion.fn"]),
        tn=int(kv["confusion.tn"]),
    )
    return binary_metrics(cm)
