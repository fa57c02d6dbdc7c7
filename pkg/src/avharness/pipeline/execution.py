"""Execution stage: answer the question over one planner's windows."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .. import prompts
from ..gateway import ChatRequest, Gateway, MediaPart
from ..media import MediaAsset, MediaCache
from ..perception import PerceptionResult
from .planning import PlanSegment, PlanSpec

log = logging.getLogger(__name__)

INVALID = "INVALID"

_REASON_RE = re.compile(r"reason\s*[::]\s*", re.IGNORECASE)


@dataclass(frozen=True)
class ExecutorOutput:
    executor_id: str
    letter: str  # "A".."F" or INVALID
    reason: str
    raw_text: str
    latency_ms: float = 0.0

    @property
    def is_valid(self) -> bool:
        return self.letter != INVALID


def extract_letter(text: str, n_options: int) -> str | None:
    """First standalone in-range uppercase option letter, if any."""
    if n_options < 1:
        return None
    top = prompts.LETTERS[min(n_options, prompts.MAX_OPTIONS) - 1]
    match = re.search(rf"\b([A-{top}])\b", text)
    return match.group(1) if match else None


def extract_reason(text: str) -> str:
    match = _REASON_RE.search(text)
    if not match:
        return ""
    return text[match.end():].strip()


def allocate_frames(segments: list[PlanSegment] | tuple[PlanSegment, ...],
                    total: int = 15) -> list[int]:
    """Distribute a frame budget across segments proportionally to length,
    at least 1 each. Sums to `total` whenever len(segments) <= total."""
    n = len(segments)
    if n == 0:
        return []
    if n >= total:
        return [1] * n
    counts = [1] * n
    remaining = total - n
    total_len = sum(s.length for s in segments)
    if total_len <= 0:
        total_len = float(n)
        quotas = [remaining / n] * n
    else:
        quotas = [remaining * s.length / total_len for s in segments]
    floors = [int(q) for q in quotas]
    for i in range(n):
        counts[i] += floors[i]
    leftover = remaining - sum(floors)
    by_remainder = sorted(range(n), key=lambda i: (-(quotas[i] - floors[i]), i))
    for i in by_remainder[:leftover]:
        counts[i] += 1
    return counts


def build_executor_prompt(asset: MediaAsset, cache: MediaCache, plan: PlanSpec,
                          perception: PerceptionResult, question: str,
                          options: tuple[str, ...], frame_budget: int = 15) -> ChatRequest:
    """Slice each planned window and interleave its context; the planner's
    reasoning rides along as the 'Video description:' line."""
    text_parts: list[str] = []
    media_parts: list[MediaPart] = []
    budgets = allocate_frames(plan.segments, frame_budget)
    for seg, budget in zip(plan.segments, budgets):
        window = cache.slice_window(asset, seg.start, seg.end, frame_count=budget)
        for frame in window.frames:
            if frame.image_path is not None:
                media_parts.append(MediaPart(kind="frame", path=frame.image_path))
        if window.audio_path is not None:
            media_parts.append(MediaPart(kind="audio_clip", path=window.audio_path))
        text_parts.append(
            prompts.unit_context(
                seg.start,
                seg.end,
                perception.subtitle_for(seg.start, seg.end),
                perception.description_for(seg.start, seg.end),
                video_description=seg.reasoning,
            )
        )
    text_parts.append(prompts.executor_instruction(question, options))
    return ChatRequest(
        role_tag="executor",
        text_parts=tuple(text_parts),
        media_parts=tuple(media_parts),
    )


def run_executor(gateway: Gateway, binding: str, asset: MediaAsset, cache: MediaCache,
                 plan: PlanSpec, perception: PerceptionResult, question: str,
                 options: tuple[str, ...], frame_budget: int = 15) -> ExecutorOutput:
    request = build_executor_prompt(
        asset, cache, plan, perception, question, options, frame_budget
    )
    response = gateway.send(binding, request)
    letter = extract_letter(response.text, len(options))
    return ExecutorOutput(
        executor_id=binding,
        letter=letter if letter is not None else INVALID,
        reason=extract_reason(response.text),
        raw_text=response.text,
        latency_ms=response.latency_ms,
    )
