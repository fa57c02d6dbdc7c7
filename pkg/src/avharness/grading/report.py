"""Aggregation into accuracy tables, emitted as Markdown and CSV.

Cell ordering is canonical (taxonomy order, bucket order), accuracy prints to
one decimal place, and the emitters are pure functions of their inputs, so a
re-run over identical records produces byte-identical files."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

from ..bench.dataset import (
    ALL_TASKS,
    AUDIO_TYPES,
    CATEGORIES,
    CONTENT_TYPES,
    DURATION_BUCKETS,
    QAItem,
)
from ..errors import JoinMiss
from .grade import Verdict

log = logging.getLogger(__name__)

DIMENSIONS = ("overall", "category", "task", "duration_bucket", "audio_type", "content_type")

_CELL_ORDER: dict[str, tuple[str, ...]] = {
    "overall": ("all",),
    "category": CATEGORIES,
    "task": ALL_TASKS,
    "duration_bucket": DURATION_BUCKETS,
    "audio_type": AUDIO_TYPES,
    "content_type": CONTENT_TYPES,
}


@dataclass(frozen=True)
class ReportCell:
    key: str
    n_items: int
    n_correct: int

    @property
    def accuracy(self) -> float:
        return 100.0 * self.n_correct / self.n_items


@dataclass(frozen=True)
class ReportTable:
    dimension: str
    cells: tuple[ReportCell, ...]
    n_failed: int = 0
    n_manual_review: int = 0

    @property
    def total_items(self) -> int:
        return sum(c.n_items for c in self.cells)

    @property
    def total_correct(self) -> int:
        return sum(c.n_correct for c in self.cells)


def aggregate(verdicts: list[Verdict], items: list[QAItem], dimension: str) -> ReportTable:
    """Group verdicts by one item dimension. Every verdict must join to an
    item; a miss is an error, not a silent drop. Cells with no items are
    omitted entirely."""
    if dimension not in _CELL_ORDER:
        raise ValueError(f"unknown dimension {dimension!r}")
    by_id = {item.id: item for item in items}
    totals: dict[str, int] = {}
    corrects: dict[str, int] = {}
    n_failed = 0
    n_manual = 0
    for verdict in verdicts:
        item = by_id.get(verdict.item_id)
        if item is None:
            raise JoinMiss(f"verdict for unknown item {verdict.item_id!r}")
        key = item.dimension_value(dimension)
        totals[key] = totals.get(key, 0) + 1
        if verdict.correct:
            corrects[key] = corrects.get(key, 0) + 1
        if verdict.failed:
            n_failed += 1
        if verdict.manual_review:
            n_manual += 1
    cells = tuple(
        ReportCell(key=key, n_items=totals[key], n_correct=corrects.get(key, 0))
        for key in _CELL_ORDER[dimension]
        if key in totals
    )
    return ReportTable(
        dimension=dimension, cells=cells, n_failed=n_failed, n_manual_review=n_manual
    )


def build_tables(verdicts: list[Verdict], items: list[QAItem]) -> list[ReportTable]:
    return [aggregate(verdicts, items, dimension) for dimension in DIMENSIONS]


_TITLES = {
    "overall": "Overall",
    "category": "By category",
    "task": "By task",
    "duration_bucket": "By duration",
    "audio_type": "By audio type",
    "content_type": "By content type",
}


def render_markdown(tables: list[ReportTable]) -> str:
    lines = ["# Accuracy report", ""]
    for table in tables:
        lines.append(f"## {_TITLES.get(table.dimension, table.dimension)}")
        lines.append("")
        lines.append("| " + table.dimension + " | items | correct | accuracy |")
        lines.append("| --- | ---: | ---: | ---: |")
        for cell in table.cells:
            lines.append(
                f"| {cell.key} | {cell.n_items} | {cell.n_correct} | {cell.accuracy:.1f} |"
            )
        lines.append("")
    overall = tables[0] if tables else None
    if overall is not None and (overall.n_failed or overall.n_manual_review):
        notes = []
        if overall.n_failed:
            notes.append(
                f"{overall.n_failed} item(s) failed before answering and count as incorrect"
            )
        if overall.n_manual_review:
            notes.append(f"{overall.n_manual_review} item(s) flagged for manual review")
        lines.append("_Note: " + "; ".join(notes) + "._")
        lines.append("")
    return "\n".join(lines)


def render_csv(tables: list[ReportTable]) -> str:
    import io

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["dimension", "cell", "n_items", "n_correct", "accuracy"])
    for table in tables:
        for cell in table.cells:
            writer.writerow(
                [table.dimension, cell.key, cell.n_items, cell.n_correct, f"{cell.accuracy:.1f}"]
            )
    return buffer.getvalue()


def emit_report(tables: list[ReportTable], md_path: Path, csv_path: Path) -> None:
    Path(md_path).write_text(render_markdown(tables))
    Path(csv_path).write_text(render_csv(tables))
