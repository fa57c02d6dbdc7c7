"""Perception stage: transcription plus per-clip audio descriptions.

Transcription and description are backend roles behind the gateway
("translator", "descriptor"), so offline suites script them like any model.
Results persist as sidecar files under the asset's cache directory:

    <cache>/<asset-digest>/<asset-digest>.transcript.json
    <cache>/<asset-digest>/<asset-digest>.descriptions.json

Descriptions are keyed by clip length; a sidecar recorded at a different
clip_len is ignored rather than misapplied.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path

from . import prompts
from .errors import MediaError
from .gateway import ChatRequest, Gateway, MediaPart
from .media import AudioSegment, MediaAsset, MediaCache, Sentence

log = logging.getLogger(__name__)

_ARRAY_RE = re.compile(r"\[.*\]", re.DOTALL)


@dataclass(frozen=True)
class Transcript:
    """Sentences sorted by start time, clamped to [0, duration]."""

    asset_id: str
    duration: float
    sentences: tuple[Sentence, ...]

    def full_text(self) -> str:
        return " ".join(s.text for s in self.sentences)

    @classmethod
    def build(cls, asset_id: str, duration: float, raw: list[tuple[float, float, str]]) -> "Transcript":
        sentences = []
        for start, end, text in raw:
            start = min(max(float(start), 0.0), duration)
            end = min(max(float(end), 0.0), duration)
            if end <= start or not str(text).strip():
                continue
            sentences.append(Sentence(start=start, end=end, text=str(text).strip()))
        sentences.sort(key=lambda s: (s.start, s.end))
        return cls(asset_id=asset_id, duration=duration, sentences=tuple(sentences))


@dataclass(frozen=True)
class AudioDescription:
    segment_ordinal: int
    text: str
    speech_present: bool


def _parse_sentence_array(text: str) -> list[tuple[float, float, str]]:
    """Pull the first JSON array out of a translator reply; tolerant of prose
    around it. Unusable replies yield an empty transcript."""
    candidates = [text]
    match = _ARRAY_RE.search(text)
    if match:
        candidates.append(match.group(0))
    for candidate in candidates:
        try:
            data = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if not isinstance(data, list):
            continue
        out = []
        for row in data:
            if not isinstance(row, dict):
                continue
            try:
                start = float(row["start"])
                end = float(row["end"])
                text_value = str(row["text"])
            except (KeyError, TypeError, ValueError):
                continue
            out.append((start, end, text_value))
        return out
    log.warning("translator reply had no parseable sentence array")
    return []


def transcribe(asset: MediaAsset, cache: MediaCache, gateway: Gateway,
               binding: str = "translator") -> Transcript:
    """Run the translator over the full audio track."""
    audio = cache.full_audio(asset)
    request = ChatRequest(
        role_tag="translator",
        text_parts=(prompts.TRANSCRIBE_INSTRUCTION,),
        media_parts=(MediaPart(kind="audio_clip", path=audio),),
    )
    response = gateway.send(binding, request)
    return Transcript.build(asset.id, asset.duration, _parse_sentence_array(response.text))


def has_speech(segment: AudioSegment, transcript: Transcript) -> bool:
    """True when any transcript sentence overlaps the segment by more than 0 s
    (half-open windows; touching endpoints do not count)."""
    for s in transcript.sentences:
        if min(s.end, segment.end) - max(s.start, segment.start) > 0:
            return True
    return False


def describe_segment(segment: AudioSegment, subtitle: str, speech_present: bool,
                     gateway: Gateway, binding: str = "descriptor") -> AudioDescription:
    if segment.audio_path is None:
        raise MediaError(f"segment {segment.ordinal} has no extracted clip")
    request = ChatRequest(
        role_tag="descriptor",
        text_parts=(prompts.describe_instruction(subtitle, speech_present),),
        media_parts=(MediaPart(kind="audio_clip", path=segment.audio_path),),
    )
    response = gateway.send(binding, request)
    return AudioDescription(
        segment_ordinal=segment.ordinal,
        text=response.text.strip(),
        speech_present=speech_present,
    )


@dataclass(frozen=True)
class PerceptionResult:
    transcript: Transcript
    segments: tuple[AudioSegment, ...]
    descriptions: tuple[AudioDescription, ...]

    def description_texts(self) -> list[str]:
        return [d.text for d in self.descriptions]

    def subtitle_for(self, start: float, end: float) -> str:
        """Sentences whose midpoint falls in [start, end), concatenated."""
        parts = []
        for s in self.transcript.sentences:
            midpoint = (s.start + s.end) / 2
            if start <= midpoint < end:
                parts.append(s.text)
        return " ".join(parts)

    def description_for(self, start: float, end: float) -> str:
        """Descriptions of every clip overlapping [start, end), concatenated."""
        parts = []
        for segment, description in zip(self.segments, self.descriptions):
            if min(segment.end, end) - max(segment.start, start) > 0:
                parts.append(description.text)
        return " ".join(p for p in parts if p)


def _transcript_sidecar(cache: MediaCache, asset: MediaAsset) -> Path:
    return cache.asset_dir(asset.id) / f"{asset.id}.transcript.json"


def _descriptions_sidecar(cache: MediaCache, asset: MediaAsset) -> Path:
    return cache.asset_dir(asset.id) / f"{asset.id}.descriptions.json"


def _load_transcript(path: Path, asset: MediaAsset) -> Transcript | None:
    if not path.is_file():
        return None
    try:
        data = json.loads(path.read_text())
        sentences = [(row["start"], row["end"], row["text"]) for row in data["sentences"]]
    except (json.JSONDecodeError, KeyError, TypeError):
        log.warning("ignoring unreadable transcript sidecar %s", path)
        return None
    return Transcript.build(asset.id, asset.duration, sentences)


def _save_transcript(path: Path, transcript: Transcript) -> None:
    payload = {
        "asset_id": transcript.asset_id,
        "duration": transcript.duration,
        "sentences": [
            {"start": s.start, "end": s.end, "text": s.text} for s in transcript.sentences
        ],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=1))


def cached_transcript(asset: MediaAsset, cache: MediaCache, gateway: Gateway,
                      binding: str = "translator") -> Transcript:
    """Sidecar-backed transcribe: reuse a persisted transcript when present."""
    path = _transcript_sidecar(cache, asset)
    transcript = _load_transcript(path, asset)
    if transcript is None:
        transcript = transcribe(asset, cache, gateway, binding)
        _save_transcript(path, transcript)
    return transcript


def run_perception(asset: MediaAsset, cache: MediaCache, gateway: Gateway,
                   clip_len: float = 10.0,
                   translator_binding: str = "translator",
                   descriptor_binding: str = "descriptor") -> PerceptionResult:
    """Transcribe once, segment the audio, and describe every clip.

    Sidecars short-circuit repeat work on the same asset across runs sharing a
    cache directory.
    """
    segments = tuple(cache.segment_audio(asset, clip_len))
    transcript = cached_transcript(asset, cache, gateway, translator_binding)

    descriptions_path = _descriptions_sidecar(cache, asset)
    descriptions = _load_descriptions(descriptions_path, clip_len, len(segments))
    if descriptions is None:
        built = []
        for segment in segments:
            speech = has_speech(segment, transcript)
            subtitle = _segment_subtitle(segment, transcript)
            built.append(describe_segment(segment, subtitle, speech, gateway, descriptor_binding))
        descriptions = tuple(built)
        _save_descriptions(descriptions_path, asset.id, clip_len, descriptions)

    return PerceptionResult(transcript=transcript, segments=segments, descriptions=descriptions)


def _segment_subtitle(segment: AudioSegment, transcript: Transcript) -> str:
    parts = []
    for s in transcript.sentences:
        midpoint = (s.start + s.end) / 2
        if segment.start <= midpoint < segment.end:
            parts.append(s.text)
    return " ".join(parts)


def _load_descriptions(path: Path, clip_len: float, n_segments: int) -> tuple[AudioDescription, ...] | None:
    if not path.is_file():
        return None
    try:
        data = json.loads(path.read_text())
        if data.get("clip_len") != clip_len:
            return None
        rows = data["descriptions"]
        out = tuple(
            AudioDescription(
                segment_ordinal=int(row["ordinal"]),
                text=str(row["text"]),
                speech_present=bool(row["speech_present"]),
            )
            for row in rows
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError):
        log.warning("ignoring unreadable descriptions sidecar %s", path)
        return None
    if len(out) != n_segments:
        return None
    return out


def _save_descriptions(path: Path, asset_id: str, clip_len: float,
                       descriptions: tuple[AudioDescription, ...]) -> None:
    payload = {
        "asset_id": asset_id,
        "clip_len": clip_len,
        "descriptions": [
            {"ordinal": d.segment_ordinal, "speech_present": d.speech_present, "text": d.text}
            for d in descriptions
        ],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=1))
