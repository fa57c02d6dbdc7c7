from .prep import MediaCache, audio_tiling, build_units, digest_file, frame_timestamps
from .toolchain import (
    FfmpegToolchain,
    OpenCvToolchain,
    ProbeResult,
    resolve_toolchain,
    sidecar_audio_path,
    wav_duration,
    write_wav,
)
from .types import (
    AudioSegment,
    FrameSample,
    MediaAsset,
    MediaSlice,
    MultimodalUnit,
    Sentence,
)

__all__ = [
    "AudioSegment",
    "FfmpegToolchain",
    "FrameSample",
    "MediaAsset",
    "MediaCache",
    "MediaSlice",
    "MultimodalUnit",
    "OpenCvToolchain",
    "ProbeResult",
    "Sentence",
    "audio_tiling",
    "build_units",
    "digest_file",
    "frame_timestamps",
    "resolve_toolchain",
    "sidecar_audio_path",
    "wav_duration",
    "write_wav",
]
