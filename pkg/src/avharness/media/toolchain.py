"""Media decoding/extraction backends.

Two interchangeable toolchains sit behind one interface:

* ``FfmpegToolchain`` shells out to an ffmpeg binary (path from the
  ``AVH_FFMPEG`` env var, or PATH lookup).
* ``OpenCvToolchain`` decodes in-process with OpenCV and stdlib ``wave``; it is
  the default wherever no ffmpeg binary exists.

Both honor the sidecar convention: a ``<video-stem>.wav`` file next to the
video, when present, is the asset's audio track. The OpenCV toolchain can only
read sidecar audio (it cannot demux container audio); the ffmpeg toolchain
prefers the sidecar and falls back to container audio.

Select explicitly with ``AVH_MEDIA_TOOLCHAIN={auto,ffmpeg,opencv}``.
"""

from __future__ import annotations

import logging
import os
import re
import shutil
import subprocess
import wave
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from ..errors import NoAudioStream, NoVideoStream, UnreadableMedia

log = logging.getLogger(__name__)

ENV_FFMPEG = "AVH_FFMPEG"
ENV_TOOLCHAIN = "AVH_MEDIA_TOOLCHAIN"


@dataclass(frozen=True)
class ProbeResult:
    duration: float
    frame_count: int
    fps: float
    audio_sample_rate: int | None


def sidecar_audio_path(video_path: Path) -> Path | None:
    """Return the sidecar WAV for a video if one exists (and is a distinct file)."""
    candidate = video_path.with_suffix(".wav")
    if candidate != video_path and candidate.is_file():
        return candidate
    return None


def _read_wav_params(path: Path) -> tuple[int, int, int, int]:
    """(sample_rate, n_frames, n_channels, samp_width) of a WAV file."""
    with wave.open(str(path), "rb") as wf:
        return wf.getframerate(), wf.getnframes(), wf.getnchannels(), wf.getsampwidth()


def wav_duration(path: Path) -> float:
    """Duration of a WAV file straight from its header. Used as the independent
    duration oracle for extracted clips."""
    rate, n_frames, _, _ = _read_wav_params(path)
    if rate <= 0:
        raise UnreadableMedia(f"invalid sample rate in {path}")
    return n_frames / rate


def _is_wav(path: Path) -> bool:
    try:
        with wave.open(str(path), "rb"):
            return True
    except (wave.Error, EOFError, OSError):
        return False


class OpenCvToolchain:
    """In-process toolchain: OpenCV for video, stdlib wave for audio."""

    name = "opencv"

    def probe(self, path: Path) -> ProbeResult:
        path = Path(path)
        if not path.is_file():
            raise UnreadableMedia(f"no such file: {path}")
        if _is_wav(path):
            raise NoVideoStream(f"audio-only input: {path}")
        cap = cv2.VideoCapture(str(path))
        try:
            if not cap.isOpened():
                raise UnreadableMedia(f"cannot decode: {path}")
            frame_count = int(cap.get(cv2.CAP_PROP_FRAME_COUNT))
            fps = float(cap.get(cv2.CAP_PROP_FPS))
        finally:
            cap.release()
        if frame_count <= 0 or fps <= 0:
            raise UnreadableMedia(f"no usable video stream in {path}")
        duration = frame_count / fps
        rate: int | None = None
        sidecar = sidecar_audio_path(path)
        if sidecar is not None:
            rate, _, _, _ = _read_wav_params(sidecar)
        return ProbeResult(duration, frame_count, fps, rate)

    def extract_frames(self, video_path: Path, plan: list[tuple[int, Path]]) -> None:
        """Extract stills for (frame_index, out_path) pairs, written as PNG."""
        if not plan:
            return
        cap = cv2.VideoCapture(str(video_path))
        try:
            if not cap.isOpened():
                raise UnreadableMedia(f"cannot decode: {video_path}")
            last = int(cap.get(cv2.CAP_PROP_FRAME_COUNT)) - 1
            for index, out_path in sorted(plan, key=lambda p: p[0]):
                target = min(max(index, 0), max(last, 0))
                cap.set(cv2.CAP_PROP_POS_FRAMES, target)
                ok, frame = cap.read()
                if not ok:
                    raise UnreadableMedia(
                        f"frame {target} unreadable in {video_path}"
                    )
                if not cv2.imwrite(str(out_path), frame):
                    raise UnreadableMedia(f"failed to write {out_path}")
        finally:
            cap.release()

    def extract_audio(self, video_path: Path, start: float, end: float, out_path: Path) -> None:
        """Write the [start, end) span of the audio track as PCM-16 WAV.

        Spans past the end of the recorded audio are padded with silence so the
        emitted clip always covers exactly end - start seconds.
        """
        source = self._audio_source(video_path)
        with wave.open(str(source), "rb") as wf:
            rate = wf.getframerate()
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            if width != 2:
                raise UnreadableMedia(
                    f"sidecar audio must be PCM-16, got {8 * width}-bit: {source}"
                )
            total = wf.getnframes()
            first = int(round(start * rate))
            last = int(round(end * rate))
            wf.setpos(min(first, total))
            payload = wf.readframes(max(0, min(last, total) - min(first, total)))
        missing = (last - first) * channels * width - len(payload)
        if missing > 0:
            payload += b"\x00" * missing
        with wave.open(str(out_path), "wb") as out:
            out.setnchannels(channels)
            out.setsampwidth(width)
            out.setframerate(rate)
            out.writeframes(payload)

    def _audio_source(self, video_path: Path) -> Path:
        video_path = Path(video_path)
        if _is_wav(video_path):
            return video_path
        sidecar = sidecar_audio_path(video_path)
        if sidecar is None:
            raise NoAudioStream(f"no sidecar audio track for {video_path}")
        return sidecar


_DURATION_RE = re.compile(r"Duration:\s*(\d+):(\d+):(\d+(?:\.\d+)?)")
_VIDEO_FPS_RE = re.compile(r"Stream #[^\n]*Video:[^\n]*?(\d+(?:\.\d+)?)\s*fps")
_AUDIO_RATE_RE = re.compile(r"Stream #[^\n]*Audio:[^\n]*?(\d+)\s*Hz")


class FfmpegToolchain:
    """Subprocess toolchain around an ffmpeg binary.

    ``runner`` is injectable for tests; it must behave like ``subprocess.run``
    and return an object with ``returncode`` and ``stderr`` (text).
    """

    name = "ffmpeg"

    def __init__(self, tool_path: str | None = None, runner=None):
        self.tool_path = tool_path or os.environ.get(ENV_FFMPEG) or "ffmpeg"
        self._run = runner or self._default_runner

    @staticmethod
    def _default_runner(argv: list[str]):
        return subprocess.run(argv, capture_output=True, text=True, check=False)

    def probe(self, path: Path) -> ProbeResult:
        path = Path(path)
        if not path.is_file():
            raise UnreadableMedia(f"no such file: {path}")
        # `ffmpeg -i <file>` exits nonzero without an output; the stream dump
        # on stderr is still complete, so parse it regardless of return code.
        result = self._run([self.tool_path, "-hide_banner", "-i", str(path)])
        stderr = result.stderr or ""
        duration_m = _DURATION_RE.search(stderr)
        if duration_m is None:
            raise UnreadableMedia(f"cannot decode: {path}")
        hours, minutes, seconds = duration_m.groups()
        duration = int(hours) * 3600 + int(minutes) * 60 + float(seconds)
        fps_m = _VIDEO_FPS_RE.search(stderr)
        rate: int | None = None
        sidecar = sidecar_audio_path(path)
        if sidecar is not None:
            rate, _, _, _ = _read_wav_params(sidecar)
        else:
            rate_m = _AUDIO_RATE_RE.search(stderr)
            if rate_m is not None:
                rate = int(rate_m.group(1))
        if fps_m is None:
            raise NoVideoStream(f"no video stream in {path}")
        fps = float(fps_m.group(1))
        if duration <= 0 or fps <= 0:
            raise UnreadableMedia(f"no usable video stream in {path}")
        return ProbeResult(duration, int(round(duration * fps)), fps, rate)

    def extract_frames(self, video_path: Path, plan: list[tuple[int, Path]]) -> None:
        if not plan:
            return
        probe = self.probe(Path(video_path))
        for index, out_path in plan:
            timestamp = index / probe.fps
            argv = [
                self.tool_path,
                "-hide_banner",
                "-loglevel", "error",
                "-ss", f"{timestamp:.3f}",
                "-i", str(video_path),
                "-frames:v", "1",
                "-y", str(out_path),
            ]
            result = self._run(argv)
            if result.returncode != 0:
                raise UnreadableMedia(
                    f"frame extraction failed for {video_path}: {result.stderr}"
                )

    def extract_audio(self, video_path: Path, start: float, end: float, out_path: Path) -> None:
        video_path = Path(video_path)
        sidecar = sidecar_audio_path(video_path)
        source = sidecar if sidecar is not None else video_path
        argv = [
            self.tool_path,
            "-hide_banner",
            "-loglevel", "error",
            "-ss", f"{start:.3f}",
            "-to", f"{end:.3f}",
            "-i", str(source),
            "-vn",
            "-acodec", "pcm_s16le",
            "-y", str(out_path),
        ]
        result = self._run(argv)
        if result.returncode != 0:
            raise NoAudioStream(
                f"audio extraction failed for {video_path}: {result.stderr}"
            )


Toolchain = OpenCvToolchain | FfmpegToolchain


def resolve_toolchain(choice: str | None = None) -> Toolchain:
    """Pick a toolchain: explicit arg, then AVH_MEDIA_TOOLCHAIN, then auto."""
    choice = choice or os.environ.get(ENV_TOOLCHAIN) or "auto"
    if choice == "ffmpeg":
        return FfmpegToolchain()
    if choice == "opencv":
        return OpenCvToolchain()
    if choice != "auto":
        raise ValueError(f"unknown toolchain {choice!r}")
    if os.environ.get(ENV_FFMPEG) or shutil.which("ffmpeg"):
        return FfmpegToolchain()
    return OpenCvToolchain()


def write_wav(path: Path, samples: "np.ndarray", sample_rate: int) -> None:
    """Write mono float samples in [-1, 1] as PCM-16 WAV (fixture synthesis)."""
    pcm = np.clip(samples, -1.0, 1.0)
    pcm = (pcm * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate)
        wf.writeframes(pcm.tobytes())
