"""Probing, frame sampling, audio segmentation, and window slicing.

Extraction products are content-addressed under a cache root:

    <cache>/<asset-digest>/frames/f<index>.png
    <cache>/<asset-digest>/clips/c<start_ms>_<end_ms>.wav

Files are written once and reused; a per-asset advisory lock serializes
concurrent extraction of the same asset.
"""

from __future__ import annotations

import hashlib
import logging
import math
import threading
from pathlib import Path
from typing import Iterable, Sequence

from filelock import FileLock

from ..errors import (
    AlignmentMismatch,
    EmptyWindow,
    MediaError,
    NoAudioStream,
    NonpositiveClipLen,
    OutOfRange,
)
from .toolchain import Toolchain, resolve_toolchain, wav_duration
from .types import AudioSegment, FrameSample, MediaAsset, MediaSlice, MultimodalUnit, Sentence

log = logging.getLogger(__name__)

# Tolerance for verifying emitted clips against an independent duration probe.
CLIP_DURATION_TOLERANCE = 0.05


def digest_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def frame_timestamps(
    duration: float,
    frame_count: int,
    count: int,
    window: tuple[float, float] | None = None,
) -> list[tuple[float, int]]:
    """Plan frame samples for a window: (timestamp, source frame index) pairs.

    Timestamps are the midpoints of `n` equal sub-windows,
    t_i = start + (end - start) * (2i + 1) / (2n), where n is `count` clamped
    to the number of source frames inside the window. Indices are a uniform
    pick over those source frames, so they are strictly increasing.
    """
    start, end = window if window is not None else (0.0, duration)
    if start >= end:
        raise EmptyWindow(f"empty window [{start}, {end})")
    if start < 0 or end > duration:
        raise OutOfRange(f"window [{start}, {end}) outside [0, {duration})")
    if count < 1:
        raise ValueError("count must be >= 1")
    fps = frame_count / duration
    first = math.ceil(start * fps - 1e-9)
    last = math.ceil(end * fps - 1e-9) - 1
    last = min(last, frame_count - 1)
    available = last - first + 1
    if available <= 0:
        return []
    n = min(count, available)
    width = end - start
    out = []
    for i in range(n):
        timestamp = start + width * (2 * i + 1) / (2 * n)
        index = first + (2 * i + 1) * available // (2 * n)
        out.append((timestamp, index))
    return out


def audio_tiling(duration: float, clip_len: float) -> list[tuple[float, float]]:
    """Equal-length tiling of [0, duration): ceil(duration / clip_len) spans,
    all of length clip_len except possibly the last."""
    if clip_len <= 0:
        raise NonpositiveClipLen(f"clip_len must be positive, got {clip_len}")
    if duration <= 0:
        raise ValueError("duration must be positive")
    spans = []
    for k in range(math.ceil(duration / clip_len)):
        spans.append((k * clip_len, min((k + 1) * clip_len, duration)))
    return spans


class MediaCache:
    """Extraction cache bound to one root directory and one toolchain."""

    def __init__(self, root: Path, toolchain: Toolchain | None = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.toolchain = toolchain if toolchain is not None else resolve_toolchain()
        self._probe_memo: dict[tuple[str, int, int], MediaAsset] = {}
        self._memo_lock = threading.Lock()

    # -- probing -----------------------------------------------------------

    def probe(self, path: Path) -> MediaAsset:
        """Probe a media file into a MediaAsset; id comes from the content digest."""
        path = Path(path).resolve()
        stat = path.stat() if path.is_file() else None
        key = (str(path), stat.st_mtime_ns, stat.st_size) if stat else None
        if key is not None:
            with self._memo_lock:
                memo = self._probe_memo.get(key)
            if memo is not None:
                return memo
        info = self.toolchain.probe(path)
        asset = MediaAsset(
            id=digest_file(path)[:16],
            video_path=path,
            duration=info.duration,
            frame_count=info.frame_count,
            audio_sample_rate=info.audio_sample_rate,
        )
        if key is not None:
            with self._memo_lock:
                self._probe_memo[key] = asset
        return asset

    # -- cache layout --------------------------------------------------------

    def asset_dir(self, asset_id: str) -> Path:
        return self.root / asset_id

    def _lock(self, asset_id: str) -> FileLock:
        directory = self.asset_dir(asset_id)
        directory.mkdir(parents=True, exist_ok=True)
        return FileLock(str(directory / ".lock"))

    # -- operations ----------------------------------------------------------

    def sample_frames(
        self,
        asset: MediaAsset,
        count: int,
        window: tuple[float, float] | None = None,
    ) -> list[FrameSample]:
        """Extract uniformly spread stills for a window (default: whole asset)."""
        plan = frame_timestamps(asset.duration, asset.frame_count, count, window)
        frames_dir = self.asset_dir(asset.id) / "frames"
        samples = []
        pending: list[tuple[int, Path]] = []
        for timestamp, index in plan:
            image_path = frames_dir / f"f{index:08d}.png"
            samples.append(FrameSample(timestamp=timestamp, index=index, image_path=image_path))
            if not image_path.is_file():
                pending.append((index, image_path))
        if pending:
            with self._lock(asset.id):
                frames_dir.mkdir(parents=True, exist_ok=True)
                todo = [(i, p) for i, p in pending if not p.is_file()]
                if todo:
                    self.toolchain.extract_frames(asset.video_path, todo)
        return samples

    def segment_audio(self, asset: MediaAsset, clip_len: float = 10.0) -> list[AudioSegment]:
        """Cut the audio track into ceil(duration / clip_len) clips tiling
        [0, duration). Assets shorter than clip_len yield one short clip."""
        if clip_len <= 0:
            raise NonpositiveClipLen(f"clip_len must be positive, got {clip_len}")
        if not asset.has_audio:
            raise NoAudioStream(f"asset {asset.id} has no audio track")
        segments = []
        for ordinal, (start, end) in enumerate(audio_tiling(asset.duration, clip_len)):
            clip = self._ensure_clip(asset, start, end)
            segments.append(AudioSegment(ordinal=ordinal, start=start, end=end, audio_path=clip))
        return segments

    def slice_window(
        self,
        asset: MediaAsset,
        start: float,
        end: float,
        frame_count: int = 15,
    ) -> MediaSlice:
        """Extract frames plus the exact [start, end) audio clip for one window."""
        if not (0 <= start < end <= asset.duration):
            raise OutOfRange(
                f"window [{start}, {end}) outside [0, {asset.duration}) of asset {asset.id}"
            )
        frames = tuple(self.sample_frames(asset, frame_count, (start, end)))
        audio_path = None
        if asset.has_audio:
            audio_path = self._ensure_clip(asset, start, end)
        return MediaSlice(asset_id=asset.id, start=start, end=end, frames=frames, audio_path=audio_path)

    def full_audio(self, asset: MediaAsset) -> Path:
        """The whole audio track as one clip."""
        if not asset.has_audio:
            raise NoAudioStream(f"asset {asset.id} has no audio track")
        return self._ensure_clip(asset, 0.0, asset.duration)

    def _ensure_clip(self, asset: MediaAsset, start: float, end: float) -> Path:
        clips_dir = self.asset_dir(asset.id) / "clips"
        name = f"c{round(start * 1000):09d}_{round(end * 1000):09d}.wav"
        clip = clips_dir / name
        if not clip.is_file():
            with self._lock(asset.id):
                if not clip.is_file():
                    clips_dir.mkdir(parents=True, exist_ok=True)
                    self.toolchain.extract_audio(asset.video_path, start, end, clip)
        emitted = wav_duration(clip)
        if abs(emitted - (end - start)) > CLIP_DURATION_TOLERANCE:
            raise MediaError(
                f"clip {clip} spans {emitted:.3f}s, expected {end - start:.3f}s"
            )
        return clip


def build_units(
    asset: MediaAsset,
    frames: Iterable[FrameSample],
    segments: Sequence[AudioSegment],
    sentences: Sequence[Sentence],
    description_texts: Sequence[str],
) -> list[MultimodalUnit]:
    """Bundle one MultimodalUnit per audio segment.

    Frames join a unit when their timestamp falls in its window; a subtitle
    sentence joins the unit containing its midpoint. Descriptions must align
    1:1 with segments (same order).
    """
    if len(description_texts) != len(segments):
        raise AlignmentMismatch(
            f"{len(description_texts)} descriptions for {len(segments)} segments"
        )
    units = [
        MultimodalUnit(
            start=seg.start,
            end=seg.end,
            audio_path=seg.audio_path,
            audio_description=description_texts[i],
        )
        for i, seg in enumerate(segments)
    ]
    for frame in frames:
        for unit in units:
            if unit.start <= frame.timestamp < unit.end:
                unit.frames.append(frame)
                break
    for unit in units:
        parts = []
        for sentence in sentences:
            midpoint = (sentence.start + sentence.end) / 2
            if unit.start <= midpoint < unit.end:
                parts.append(sentence.text)
        unit.subtitle = " ".join(parts)
    return units
