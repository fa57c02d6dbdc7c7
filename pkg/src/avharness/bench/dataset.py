"""Dataset schema, taxonomy, and JSONL loading with line-accurate errors."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from ..errors import DanglingAsset, SchemaViolation
from ..prompts import MAX_OPTIONS

log = logging.getLogger(__name__)

# Canonical taxonomy. Ordering here is the display ordering everywhere.
TASKS_BY_CATEGORY: dict[str, tuple[str, ...]] = {
    "recognition": (
        "audio_source_recognition",
        "music_recognition",
        "counting",
    ),
    "localization": (
        "audio_source_localization",
        "speaker_localization",
        "music_localization",
    ),
    "quality_perception": (
        "av_content_matching",
        "music_temporal_matching",
        "audio_temporal_matching",
        "speech_temporal_matching",
        "distortion_type_classification",
        "distortion_localization",
        "av_overall_quality",
    ),
    "reasoning": (
        "music_understanding",
        "event_causal_reasoning",
        "human_interaction_reasoning",
        "identity_reasoning",
        "audio_causal_reasoning",
        "av_prediction",
        "emotion_reasoning",
    ),
}
CATEGORIES = tuple(TASKS_BY_CATEGORY)
ALL_TASKS = tuple(t for tasks in TASKS_BY_CATEGORY.values() for t in tasks)
AUDIO_TYPES = ("speech", "sound", "music", "mix")
CONTENT_TYPES = ("PGC", "UGC", "AIGC")
DURATION_BUCKETS = ("<10s", "10s-30s", "30s-1min", "1min-2min", ">2min")

MIN_OPTIONS = 2


def duration_bucket(duration: float) -> str:
    """Closed on the left, open on the right: a 10 s asset lands in 10s-30s."""
    if duration < 10:
        return "<10s"
    if duration < 30:
        return "10s-30s"
    if duration < 60:
        return "30s-1min"
    if duration < 120:
        return "1min-2min"
    return ">2min"


@dataclass(frozen=True)
class ManifestEntry:
    asset_id: str
    path: Path
    duration: float


@dataclass(frozen=True)
class QAItem:
    id: str
    question: str
    options: tuple[str, ...]
    gold_index: int
    category: str
    task: str
    audio_type: str
    content_type: str
    asset_id: str
    duration_bucket: str

    @property
    def n_options(self) -> int:
        return len(self.options)

    def dimension_value(self, dimension: str) -> str:
        if dimension == "overall":
            return "all"
        return getattr(self, dimension)


def load_media_manifest(path: Path) -> dict[str, ManifestEntry]:
    """Manifest: {"assets": [{"asset_id", "path", "duration"}, ...]}. Paths
    resolve relative to the manifest file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaViolation(f"cannot read media manifest {path}: {exc}") from exc
    rows = data.get("assets")
    if not isinstance(rows, list):
        raise SchemaViolation(f"media manifest {path}: 'assets' must be a list")
    entries: dict[str, ManifestEntry] = {}
    for i, row in enumerate(rows):
        if not isinstance(row, dict):
            raise SchemaViolation(f"media manifest {path}: assets[{i}] must be a mapping")
        for key in ("asset_id", "path", "duration"):
            if key not in row:
                raise SchemaViolation(f"media manifest {path}: assets[{i}] missing {key!r}")
        asset_id = str(row["asset_id"])
        if asset_id in entries:
            raise SchemaViolation(f"media manifest {path}: duplicate asset_id {asset_id!r}")
        duration = row["duration"]
        if not isinstance(duration, (int, float)) or isinstance(duration, bool) or duration <= 0:
            raise SchemaViolation(
                f"media manifest {path}: assets[{i}] duration must be a positive number"
            )
        entries[asset_id] = ManifestEntry(
            asset_id=asset_id,
            path=(path.parent / row["path"]).resolve(),
            duration=float(duration),
        )
    return entries


def _field(row: dict, key: str, line: int):
    if key not in row:
        raise SchemaViolation(f"missing field {key!r}", line)
    return row[key]


def load_dataset(path: Path, manifest: dict[str, ManifestEntry]) -> list[QAItem]:
    """Load and validate a JSONL dataset against the media manifest.

    Violations carry the 1-based line number; an asset id absent from the
    manifest (or whose file is missing) raises DanglingAsset.
    """
    path = Path(path)
    items: list[QAItem] = []
    seen_ids: dict[str, int] = {}
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaViolation(f"invalid JSON ({exc})", line_no) from exc
            if not isinstance(row, dict):
                raise SchemaViolation("row must be a JSON object", line_no)

            item_id = str(_field(row, "id", line_no))
            if item_id in seen_ids:
                raise SchemaViolation(
                    f"duplicate id {item_id!r} (first seen on line {seen_ids[item_id]})",
                    line_no,
                )
            seen_ids[item_id] = line_no

            question = _field(row, "question", line_no)
            if not isinstance(question, str) or not question.strip():
                raise SchemaViolation("question must be a non-empty string", line_no)

            options = _field(row, "options", line_no)
            if (
                not isinstance(options, list)
                or not all(isinstance(o, str) and o for o in options)
            ):
                raise SchemaViolation("options must be a list of non-empty strings", line_no)
            if not (MIN_OPTIONS <= len(options) <= MAX_OPTIONS):
                raise SchemaViolation(
                    f"options count {len(options)} outside [{MIN_OPTIONS}, {MAX_OPTIONS}]",
                    line_no,
                )

            gold_index = _field(row, "gold_index", line_no)
            if not isinstance(gold_index, int) or isinstance(gold_index, bool):
                raise SchemaViolation("gold_index must be an integer", line_no)
            if not (0 <= gold_index < len(options)):
                raise SchemaViolation(
                    f"gold_index {gold_index} out of range for {len(options)} options", line_no
                )

            category = _field(row, "category", line_no)
            if category not in TASKS_BY_CATEGORY:
                raise SchemaViolation(f"unknown category {category!r}", line_no)
            task = _field(row, "task", line_no)
            if task not in ALL_TASKS:
                raise SchemaViolation(f"unknown task {task!r}", line_no)
            if task not in TASKS_BY_CATEGORY[category]:
                raise SchemaViolation(
                    f"task {task!r} does not belong to category {category!r}", line_no
                )

            audio_type = _field(row, "audio_type", line_no)
            if audio_type not in AUDIO_TYPES:
                raise SchemaViolation(f"unknown audio_type {audio_type!r}", line_no)
            content_type = _field(row, "content_type", line_no)
            if content_type not in CONTENT_TYPES:
                raise SchemaViolation(f"unknown content_type {content_type!r}", line_no)

            asset_id = str(_field(row, "asset_id", line_no))
            entry = manifest.get(asset_id)
            if entry is None:
                raise DanglingAsset(
                    f"line {line_no}: asset {asset_id!r} not in media manifest"
                )
            if not entry.path.is_file():
                raise DanglingAsset(
                    f"line {line_no}: asset {asset_id!r} file missing: {entry.path}"
                )

            items.append(
                QAItem(
                    id=item_id,
                    question=question,
                    options=tuple(options),
                    gold_index=gold_index,
                    category=category,
                    task=task,
                    audio_type=audio_type,
                    content_type=content_type,
                    asset_id=asset_id,
                    duration_bucket=duration_bucket(entry.duration),
                )
            )
    return items
