"""Single-model baselines: one prompt, one call, no agents."""

from __future__ import annotations

import logging

from .. import prompts
from ..gateway import ChatRequest, Gateway, MediaPart
from ..media import MediaAsset, MediaCache
from ..perception import Transcript, cached_transcript
from .shuffling import ShuffledItem

log = logging.getLogger(__name__)

BASELINE_MODES = ("baseline_video", "baseline_audio", "baseline_subtitle")


def build_baseline_prompt(shuffled: ShuffledItem, mode: str, asset: MediaAsset,
                          cache: MediaCache, transcript: Transcript | None = None,
                          frame_count: int = 15) -> ChatRequest:
    """Attachments by mode: frames only; frames + full audio; frames + full
    audio + the transcript inline. Prompt text is shared."""
    if mode not in BASELINE_MODES:
        raise ValueError(f"not a baseline mode: {mode!r}")
    media_parts: list[MediaPart] = []
    for frame in cache.sample_frames(asset, frame_count):
        if frame.image_path is not None:
            media_parts.append(MediaPart(kind="frame", path=frame.image_path))
    if mode in ("baseline_audio", "baseline_subtitle"):
        media_parts.append(MediaPart(kind="audio_clip", path=cache.full_audio(asset)))
    subtitle = None
    if mode == "baseline_subtitle":
        if transcript is None:
            raise ValueError("baseline_subtitle needs a transcript")
        subtitle = transcript.full_text()
    text = prompts.baseline_instruction(shuffled.question, shuffled.options, subtitle)
    return ChatRequest(
        role_tag="executor",
        text_parts=(text,),
        media_parts=tuple(media_parts),
    )


def run_baseline(shuffled: ShuffledItem, mode: str, asset: MediaAsset, cache: MediaCache,
                 gateway: Gateway, frame_count: int = 15,
                 answer_binding: str = "executor") -> tuple[str, float]:
    """Returns (raw answer text, latency ms)."""
    transcript = None
    if mode == "baseline_subtitle":
        transcript = cached_transcript(asset, cache, gateway)
    request = build_baseline_prompt(shuffled, mode, asset, cache, transcript, frame_count)
    response = gateway.send(answer_binding, request)
    return response.text, response.latency_ms
