from .backends import (
    HttpBackend,
    ScriptRule,
    ScriptedBackend,
    TransientFailure,
    backend_from_spec,
    load_bundle,
    rules_from_bundle,
)
from .core import BindingStats, Gateway
from .replay import REPLAY_MODES, ReplayStore
from .types import (
    MEDIA_KINDS,
    ROLE_TAGS,
    ChatRequest,
    DecodeParams,
    MediaPart,
    ModelResponse,
    RequestFingerprint,
    canonical_payload,
    fingerprint,
)

__all__ = [
    "BindingStats",
    "ChatRequest",
    "DecodeParams",
    "Gateway",
    "HttpBackend",
    "MEDIA_KINDS",
    "MediaPart",
    "ModelResponse",
    "REPLAY_MODES",
    "ROLE_TAGS",
    "ReplayStore",
    "RequestFingerprint",
    "ScriptRule",
    "ScriptedBackend",
    "TransientFailure",
    "backend_from_spec",
    "canonical_payload",
    "fingerprint",
    "load_bundle",
    "rules_from_bundle",
]
