"""Error types shared across the harness.

Every failure surfaced by the public API is one of these classes so callers can
switch on type instead of parsing messages.
"""

from __future__ import annotations


class HarnessError(Exception):
    """Base class for all errors raised by this package."""


# --- media ---------------------------------------------------------------


class MediaError(HarnessError):
    pass


class UnreadableMedia(MediaError):
    """File missing, truncated, or not decodable at all."""


class NoVideoStream(MediaError):
    """Input decodes as audio only; a video stream is required."""


class NoAudioStream(MediaError):
    """Asset has no audio track (container or sidecar)."""


class NonpositiveClipLen(MediaError):
    """segment_audio called with clip_len <= 0."""


class EmptyWindow(MediaError):
    """Frame sampling window has start >= end."""


class OutOfRange(MediaError):
    """Requested window is not contained in [0, duration)."""


class AlignmentMismatch(MediaError):
    """Audio descriptions do not line up 1:1 with audio segments."""


# --- model gateway -------------------------------------------------------


class GatewayError(HarnessError):
    pass


class BackendTimeout(GatewayError):
    """Final attempt against a backend timed out."""


class BackendRejected(GatewayError):
    """Non-retryable backend failure (4xx, scripted miss, replay miss)."""


class BudgetExhausted(GatewayError):
    """Retry budget spent on transient failures."""


class MediaUnreadable(GatewayError):
    """A media part referenced by a request cannot be read for digesting."""


# --- bench harness -------------------------------------------------------


class BenchError(HarnessError):
    pass


class SchemaViolation(BenchError):
    """Dataset row failed validation; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DanglingAsset(BenchError):
    """Dataset references an asset id missing from the media manifest."""


# --- grading / reporting -------------------------------------------------


class GradingError(HarnessError):
    pass


class WrongArity(GradingError):
    """Majority vote requires exactly five votes."""


class JoinMiss(GradingError):
    """A verdict references an item id absent from the dataset."""


# --- cli ------------------------------------------------------------------


class ConfigInvalid(HarnessError):
    """Run configuration is unusable (missing roles, bad mode, bad paths)."""


class DatasetInvalid(HarnessError):
    """Dataset or media manifest failed validation before the run started."""


class CorruptEntry(HarnessError):
    """A replay store entry failed its digest check."""
