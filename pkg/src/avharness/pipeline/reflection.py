"""Reflection stage: consensus check, or a decider call over the full video."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .. import prompts
from ..gateway import ChatRequest, Gateway, MediaPart
from ..media import MultimodalUnit
from .execution import INVALID, ExecutorOutput, extract_letter
from .planning import PlanSpec

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FinalAnswer:
    letter: str  # "A".."F" or INVALID
    source: str  # "consensus" | "decider"
    decider_raw: str | None = None
    manual_review: bool = False
    latency_ms: float = 0.0


def _unit_video_description(unit: MultimodalUnit, plans: list[PlanSpec]) -> str:
    """Reasonings from both plans' segments overlapping this unit, in plan
    order. Conflicting plans are merged here rather than re-planned."""
    reasons = []
    for plan in plans:
        for seg in plan.segments:
            if min(seg.end, unit.end) - max(seg.start, unit.start) > 0 and seg.reasoning:
                reasons.append(seg.reasoning)
    return "; ".join(reasons)


def build_decider_prompt(units: list[MultimodalUnit], plans: list[PlanSpec],
                         outputs: list[ExecutorOutput], question: str,
                         options: tuple[str, ...]) -> ChatRequest:
    """Full-video context (every unit), merged plan reasonings, then both
    executors' answers."""
    text_parts: list[str] = []
    media_parts: list[MediaPart] = []
    for unit in units:
        for frame in unit.frames:
            if frame.image_path is not None:
                media_parts.append(MediaPart(kind="frame", path=frame.image_path))
        if unit.audio_path is not None:
            media_parts.append(MediaPart(kind="audio_clip", path=unit.audio_path))
        text_parts.append(
            prompts.unit_context(
                unit.start,
                unit.end,
                unit.subtitle,
                unit.audio_description,
                video_description=_unit_video_description(unit, plans),
            )
        )
    responses = [(o.letter, o.reason) for o in outputs]
    text_parts.append(prompts.decider_instruction(responses, question, options))
    return ChatRequest(
        role_tag="decider",
        text_parts=tuple(text_parts),
        media_parts=tuple(media_parts),
    )


def reflect(gateway: Gateway, binding: str, units: list[MultimodalUnit],
            plans: list[PlanSpec], outputs: list[ExecutorOutput], question: str,
            options: tuple[str, ...]) -> FinalAnswer:
    """Consensus iff every executor produced the same valid letter; anything
    else (including any INVALID) goes to the decider. An unparseable decider
    reply yields INVALID flagged for manual review."""
    if len(outputs) < 2:
        raise ValueError("reflect needs at least two executor outputs")
    letters = {o.letter for o in outputs}
    if len(letters) == 1 and outputs[0].is_valid:
        return FinalAnswer(letter=outputs[0].letter, source="consensus")
    request = build_decider_prompt(units, plans, outputs, question, options)
    response = gateway.send(binding, request)
    letter = extract_letter(response.text, len(options))
    if letter is None:
        return FinalAnswer(
            letter=INVALID,
            source="decider",
            decider_raw=response.text,
            manual_review=True,
            latency_ms=response.latency_ms,
        )
    return FinalAnswer(
        letter=letter, source="decider", decider_raw=response.text,
        latency_ms=response.latency_ms,
    )
