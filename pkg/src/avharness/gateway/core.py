"""The gateway: one entry point for every model call.

Responsibilities: capability filtering (via backend.prepare), fingerprinting,
record/replay, bounded retries with exponential backoff, per-binding request
counters. Agents never talk to a backend directly.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field

from ..errors import BackendRejected, BackendTimeout, BudgetExhausted
from .backends import TransientFailure, _BackendBase
from .replay import ReplayStore
from .types import ChatRequest, ModelResponse, fingerprint

log = logging.getLogger(__name__)


@dataclass
class BindingStats:
    backend_calls: int = 0
    replay_hits: int = 0
    failures: int = 0

    @property
    def requests(self) -> int:
        return self.backend_calls + self.replay_hits


@dataclass
class Gateway:
    backends: dict[str, _BackendBase]
    replay: str = "off"  # off | record | strict
    store: ReplayStore | None = None
    attempts: int = 3
    base_delay: float = 0.5
    sleep: object = None  # injectable for tests; defaults to time.sleep
    stats: dict[str, BindingStats] = field(default_factory=dict)

    def __post_init__(self):
        if self.replay not in ("off", "record", "strict"):
            raise ValueError(f"unknown replay mode {self.replay!r}")
        if self.replay != "off" and self.store is None:
            raise ValueError(f"replay mode {self.replay!r} needs a store")
        if self.sleep is None:
            import time

            self.sleep = time.sleep
        self._lock = threading.Lock()
        for binding in self.backends:
            self.stats[binding] = BindingStats()

    def _bump(self, binding: str, attr: str) -> None:
        with self._lock:
            stats = self.stats.setdefault(binding, BindingStats())
            setattr(stats, attr, getattr(stats, attr) + 1)

    def send(self, binding: str, req: ChatRequest) -> ModelResponse:
        """Send a request through the named binding.

        In `strict` replay a store miss is an error (no live call is ever
        attempted); in `record` the store is read through and misses are
        recorded after a live call.
        """
        backend = self.backends.get(binding)
        if backend is None:
            raise BackendRejected(f"no backend bound for {binding!r}")
        prepared = backend.prepare(req)
        fp = fingerprint(prepared).hex

        if self.replay in ("record", "strict"):
            assert self.store is not None
            entry = self.store.get(fp)
            if entry is not None:
                self._bump(binding, "replay_hits")
                return ModelResponse(
                    text=entry["text"],
                    latency_ms=entry["latency_ms"],
                    backend_id=entry["backend_id"],
                    from_cache=True,
                )
            if self.replay == "strict":
                self._bump(binding, "failures")
                raise BackendRejected(f"replay miss for {binding}: {fp}")

        text, latency_ms = self._call_with_retries(binding, backend, prepared)
        if self.replay == "record":
            assert self.store is not None
            self.store.put(fp, prepared.role_tag, backend.backend_id, text, latency_ms)
        return ModelResponse(
            text=text, latency_ms=latency_ms, backend_id=backend.backend_id, from_cache=False
        )

    def _call_with_retries(
        self, binding: str, backend: _BackendBase, req: ChatRequest
    ) -> tuple[str, float]:
        last: TransientFailure | None = None
        for attempt in range(self.attempts):
            if attempt:
                self.sleep(self.base_delay * (2 ** (attempt - 1)))
            try:
                with backend.semaphore:
                    self._bump(binding, "backend_calls")
                    return backend.complete(req)
            except TransientFailure as exc:
                last = exc
                log.warning(
                    "attempt %d/%d on %s failed: %s", attempt + 1, self.attempts, binding, exc
                )
            except BackendRejected:
                self._bump(binding, "failures")
                raise
        self._bump(binding, "failures")
        assert last is not None
        if last.timeout:
            raise BackendTimeout(f"{binding}: {last}") from last
        raise BudgetExhausted(
            f"{binding}: {self.attempts} attempts exhausted; last error: {last}"
        ) from last

    def stats_snapshot(self) -> dict[str, dict[str, int]]:
        with self._lock:
            return {
                binding: {
                    "requests": s.requests,
                    "backend_calls": s.backend_calls,
                    "replay_hits": s.replay_hits,
                    "failures": s.failures,
                }
                for binding, s in sorted(self.stats.items())
            }
