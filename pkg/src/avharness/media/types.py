"""Core media value types.

All timestamps are seconds from the start of the asset; windows are half-open
[start, end).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class MediaAsset:
    """A probed media file. `id` is derived from the file's content digest."""

    id: str
    video_path: Path
    duration: float
    frame_count: int
    audio_sample_rate: int | None = None

    @property
    def fps(self) -> float:
        return self.frame_count / self.duration

    @property
    def has_audio(self) -> bool:
        return self.audio_sample_rate is not None


@dataclass(frozen=True)
class FrameSample:
    """One sampled still: the requested timestamp and the source frame index."""

    timestamp: float
    index: int
    image_path: Path | None = None


@dataclass(frozen=True)
class AudioSegment:
    """One clip of the asset's audio track; segments of an asset tile [0, duration)."""

    ordinal: int
    start: float
    end: float
    audio_path: Path | None = None

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class MediaSlice:
    """Frames plus audio extracted for one arbitrary window of an asset."""

    asset_id: str
    start: float
    end: float
    frames: tuple[FrameSample, ...]
    audio_path: Path | None


@dataclass(frozen=True)
class Sentence:
    """One transcribed sentence with its time span."""

    start: float
    end: float
    text: str


@dataclass
class MultimodalUnit:
    """One aligned bundle: a time window with its frames, audio clip, subtitle
    text, and audio description. Units of an asset tile [0, duration)."""

    start: float
    end: float
    frames: list[FrameSample] = field(default_factory=list)
    audio_path: Path | None = None
    subtitle: str = ""
    audio_description: str = ""
