"""Request/response types for the model gateway.

A ChatRequest is the only thing agents hand to a backend: ordered text parts,
ordered media attachments, and decode parameters. Fingerprints canonicalize a
request (with media by content digest, not path) so scripted runs, recording,
and replay all key on the same identity.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import MediaUnreadable

ROLE_TAGS = ("translator", "descriptor", "planner", "executor", "decider", "grader")
MEDIA_KINDS = ("frame", "audio_clip")


@dataclass(frozen=True)
class MediaPart:
    kind: str
    path: Path

    def __post_init__(self):
        if self.kind not in MEDIA_KINDS:
            raise ValueError(f"unknown media kind {self.kind!r}")


@dataclass(frozen=True)
class DecodeParams:
    temperature: float = 0.0
    max_tokens: int | None = None
    seed: int | None = None


@dataclass(frozen=True)
class ChatRequest:
    role_tag: str
    text_parts: tuple[str, ...]
    media_parts: tuple[MediaPart, ...] = ()
    decode: DecodeParams = field(default_factory=DecodeParams)

    def __post_init__(self):
        if self.role_tag not in ROLE_TAGS:
            raise ValueError(f"unknown role tag {self.role_tag!r}")
        if not self.text_parts:
            raise ValueError("text_parts must be non-empty")

    def joined_text(self) -> str:
        return "\n".join(self.text_parts)


@dataclass(frozen=True)
class ModelResponse:
    text: str
    latency_ms: float
    backend_id: str
    from_cache: bool = False


@dataclass(frozen=True)
class RequestFingerprint:
    hex: str

    def __str__(self) -> str:
        return self.hex


_digest_cache: dict[tuple[str, int, int], str] = {}
_digest_lock = threading.Lock()


def _media_digest(path: Path) -> str:
    try:
        stat = path.stat()
    except OSError as exc:
        raise MediaUnreadable(f"cannot stat media part {path}: {exc}") from exc
    key = (str(path), stat.st_mtime_ns, stat.st_size)
    with _digest_lock:
        hit = _digest_cache.get(key)
    if hit is not None:
        return hit
    try:
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
    except OSError as exc:
        raise MediaUnreadable(f"cannot read media part {path}: {exc}") from exc
    with _digest_lock:
        _digest_cache[key] = digest
    return digest


def canonical_payload(req: ChatRequest) -> dict:
    """The canonical, serialization-ready form of a request. Media parts are
    replaced by (kind, content sha256) pairs so the identity survives moves."""
    return {
        "decode": {
            "max_tokens": req.decode.max_tokens,
            "seed": req.decode.seed,
            "temperature": req.decode.temperature,
        },
        "media": [[part.kind, _media_digest(Path(part.path))] for part in req.media_parts],
        "role": req.role_tag,
        "text": list(req.text_parts),
    }


def fingerprint(req: ChatRequest) -> RequestFingerprint:
    """SHA-256 over the canonical JSON serialization (sorted keys, compact
    separators, ASCII). Stable across processes and platforms."""
    canonical = json.dumps(
        canonical_payload(req), sort_keys=True, separators=(",", ":"), ensure_ascii=True
    )
    return RequestFingerprint(hashlib.sha256(canonical.encode("utf-8")).hexdigest())
