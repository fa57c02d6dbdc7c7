"""Planning stage: prompt construction, plan parsing, segment normalization.

`parse_planner_output` is a total function: any string whatsoever produces a
valid PlanSpec. Unusable output degrades to the full-video fallback window
with `is_fallback` set, never an exception.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass

from .. import prompts
from ..gateway import ChatRequest, MediaPart
from ..media import MultimodalUnit

log = logging.getLogger(__name__)

_FENCE_RE = re.compile(r"```[a-zA-Z0-9_-]*\s*(.*?)\s*```", re.DOTALL)
_NO_ANSWER_RE = re.compile(r"^no\W*$", re.IGNORECASE)


@dataclass(frozen=True)
class PlanSegment:
    start: float
    end: float
    reasoning: str = ""

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class PlanSpec:
    planner_id: str
    segments: tuple[PlanSegment, ...]
    is_fallback: bool = False
    raw_text: str = ""
    parse_warning: str | None = None


def build_planner_prompt(units: list[MultimodalUnit], question: str,
                         duration: float) -> ChatRequest:
    """One text part per unit (frames + clip attached in unit order), then the
    planning instruction."""
    text_parts: list[str] = []
    media_parts: list[MediaPart] = []
    for unit in units:
        for frame in unit.frames:
            if frame.image_path is not None:
                media_parts.append(MediaPart(kind="frame", path=frame.image_path))
        if unit.audio_path is not None:
            media_parts.append(MediaPart(kind="audio_clip", path=unit.audio_path))
        text_parts.append(
            prompts.unit_context(unit.start, unit.end, unit.subtitle, unit.audio_description)
        )
    text_parts.append(prompts.planner_instruction(question, duration))
    return ChatRequest(
        role_tag="planner",
        text_parts=tuple(text_parts),
        media_parts=tuple(media_parts),
    )


def _strip_fences(text: str) -> str:
    return _FENCE_RE.sub(lambda m: m.group(1), text)


def _balanced_objects(text: str):
    """Yield every balanced {...} span in order, string-aware."""
    depth = 0
    start = None
    in_string = False
    escape = False
    for i, ch in enumerate(text):
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}":
            if depth > 0:
                depth -= 1
                if depth == 0 and start is not None:
                    yield text[start : i + 1]
                    start = None


def _coerce_seconds(value) -> float | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        cleaned = value.strip().rstrip("sS").strip()
        try:
            return float(cleaned)
        except ValueError:
            return None
    return None


def parse_planner_output(text: str, duration: float, planner_id: str) -> PlanSpec:
    """Parse a planner reply into a PlanSpec. Total: never raises on content.

    Recognized shapes: a JSON object bearing "time_segments" (code fences
    tolerated, prose around it tolerated), or a bare "No." refusal. Everything
    else, and segment lists that clamp to nothing, fall back to the whole
    video.
    """
    fallback_segment = PlanSegment(start=0.0, end=duration, reasoning="")

    def fallback(warning: str | None) -> PlanSpec:
        return PlanSpec(
            planner_id=planner_id,
            segments=(fallback_segment,),
            is_fallback=True,
            raw_text=text,
            parse_warning=warning,
        )

    if not isinstance(text, str) or not text.strip():
        return fallback("empty planner reply")
    stripped = _strip_fences(text)
    if _NO_ANSWER_RE.match(stripped.strip()):
        return fallback(None)  # explicit refusal, not a parse failure

    parsed = None
    for span in _balanced_objects(stripped):
        try:
            candidate = json.loads(span)
        except json.JSONDecodeError:
            continue
        if isinstance(candidate, dict) and "time_segments" in candidate:
            parsed = candidate
            break
    if parsed is None or not isinstance(parsed.get("time_segments"), list):
        return fallback("no parseable time_segments object")

    segments: list[PlanSegment] = []
    for row in parsed["time_segments"]:
        if not isinstance(row, dict):
            continue
        start = _coerce_seconds(row.get("start_time"))
        end = _coerce_seconds(row.get("end_time"))
        if start is None or end is None:
            continue
        start = min(max(start, 0.0), duration)
        end = min(max(end, 0.0), duration)
        if end <= start:
            continue
        reasoning = row.get("reasoning")
        segments.append(
            PlanSegment(start=start, end=end,
                        reasoning=str(reasoning) if reasoning is not None else "")
        )
    if not segments:
        return fallback("time_segments clamped to nothing usable")
    return PlanSpec(planner_id=planner_id, segments=tuple(segments), raw_text=text)


def normalize_segments(segments: list[PlanSegment] | tuple[PlanSegment, ...],
                       duration: float, gap_tolerance: float = 1.0) -> list[PlanSegment]:
    """Sort, clamp to [0, duration), and merge segments that overlap or sit
    within gap_tolerance seconds of each other. Reasonings of merged segments
    are concatenated. Output is disjoint and ordered."""
    clamped = []
    for seg in segments:
        start = min(max(seg.start, 0.0), duration)
        end = min(max(seg.end, 0.0), duration)
        if end > start:
            clamped.append(PlanSegment(start=start, end=end, reasoning=seg.reasoning))
    clamped.sort(key=lambda s: (s.start, s.end))
    merged: list[PlanSegment] = []
    for seg in clamped:
        if merged and seg.start - merged[-1].end <= gap_tolerance:
            last = merged[-1]
            reasons = [r for r in (last.reasoning, seg.reasoning) if r]
            merged[-1] = PlanSegment(
                start=last.start,
                end=max(last.end, seg.end),
                reasoning="; ".join(reasons),
            )
        else:
            merged.append(seg)
    return merged
