"""Backend adapters: scripted (offline) and generic HTTP chat endpoints.

A backend exposes:
  backend_id      stable identity recorded in responses and replay entries
  media_kinds     which attachment kinds it accepts (None = all); other kinds
                  are dropped before fingerprinting so the recorded identity
                  matches what was actually sent
  decode_override fixed decode params applied over the request's
  semaphore       per-backend concurrency budget
  complete(req)   -> (text, latency_ms); raises TransientFailure for
                  retryable faults, BackendRejected for permanent ones
"""

from __future__ import annotations

import base64
import json
import logging
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import requests

from ..errors import BackendRejected, ConfigInvalid
from .types import ChatRequest, DecodeParams, MediaPart

log = logging.getLogger(__name__)


class TransientFailure(Exception):
    """Retryable backend fault; `timeout` marks deadline expiry specifically."""

    def __init__(self, message: str, timeout: bool = False):
        super().__init__(message)
        self.timeout = timeout


@dataclass
class _BackendBase:
    backend_id: str
    media_kinds: frozenset[str] | None = None
    decode_override: dict = field(default_factory=dict)
    concurrency: int = 4

    def __post_init__(self):
        self.semaphore = threading.Semaphore(self.concurrency)

    def prepare(self, req: ChatRequest) -> ChatRequest:
        """Apply capability filtering and decode overrides; the result is what
        gets fingerprinted, sent, and recorded."""
        media = req.media_parts
        if self.media_kinds is not None:
            media = tuple(p for p in media if p.kind in self.media_kinds)
        decode = req.decode
        if self.decode_override:
            decode = replace(decode, **self.decode_override)
        if media is req.media_parts and decode is req.decode:
            return req
        return replace(req, media_parts=media, decode=decode)

    def complete(self, req: ChatRequest) -> tuple[str, float]:
        raise NotImplementedError


@dataclass
class ScriptRule:
    """One scripted response. All given filters must match; `responses` plays
    a sequence across successive matches (sticking on the last)."""

    response: str | None = None
    responses: list[str] | None = None
    role: str | None = None
    backend: str | None = None
    contains: str | None = None
    path_contains: str | None = None
    fail: str | None = None  # "timeout" | "transient" | "reject"
    fail_times: int | None = None  # fail first N matches, then respond

    def matches(self, backend_id: str, req: ChatRequest) -> bool:
        if self.role is not None and self.role != req.role_tag:
            return False
        if self.backend is not None and self.backend != backend_id:
            return False
        if self.contains is not None and self.contains not in req.joined_text():
            return False
        if self.path_contains is not None:
            if not any(self.path_contains in str(p.path) for p in req.media_parts):
                return False
        return True


class ScriptedBackend(_BackendBase):
    """Deterministic offline backend driven by a rule list plus per-role
    defaults. Never touches the network."""

    def __init__(
        self,
        backend_id: str,
        rules: list[ScriptRule],
        defaults: dict[str, str] | None = None,
        latency_ms: float = 0.0,
        media_kinds: frozenset[str] | None = None,
        decode_override: dict | None = None,
        concurrency: int = 4,
    ):
        super().__init__(backend_id, media_kinds, decode_override or {}, concurrency)
        self.rules = rules
        self.defaults = defaults or {}
        self.latency_ms = latency_ms
        self._state_lock = threading.Lock()
        self._hits: dict[int, int] = {}

    def complete(self, req: ChatRequest) -> tuple[str, float]:
        for i, rule in enumerate(self.rules):
            if not rule.matches(self.backend_id, req):
                continue
            with self._state_lock:
                seen = self._hits.get(i, 0)
                self._hits[i] = seen + 1
            if rule.fail is not None and (rule.fail_times is None or seen < rule.fail_times):
                if rule.fail == "timeout":
                    raise TransientFailure("scripted timeout", timeout=True)
                if rule.fail == "transient":
                    raise TransientFailure("scripted transient fault")
                raise BackendRejected("scripted rejection")
            if rule.responses is not None:
                return rule.responses[min(seen, len(rule.responses) - 1)], self.latency_ms
            return rule.response or "", self.latency_ms
        fallback = self.defaults.get(req.role_tag)
        if fallback is not None:
            return fallback, self.latency_ms
        raise BackendRejected(
            f"no scripted response for role {req.role_tag!r} on {self.backend_id}"
        )


def load_bundle(path: Path) -> dict:
    """Load a scripted-response bundle: {"rules": [...], "defaults": {...}}."""
    try:
        bundle = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read scripted bundle {path}: {exc}") from exc
    if not isinstance(bundle.get("rules", []), list):
        raise ConfigInvalid(f"bundle {path}: 'rules' must be a list")
    return bundle


def rules_from_bundle(bundle: dict) -> list[ScriptRule]:
    known = {f.name for f in ScriptRule.__dataclass_fields__.values()}  # type: ignore[attr-defined]
    rules = []
    for raw in bundle.get("rules", []):
        rules.append(ScriptRule(**{k: v for k, v in raw.items() if k in known}))
    return rules


class HttpBackend(_BackendBase):
    """Generic chat-completion endpoint speaking JSON.

    Media attaches either inline ("base64") or by reference URI ("reference").
    The auth token is read from the env var named in the config, never from
    the config itself. `transport` is injectable for tests.
    """

    def __init__(
        self,
        backend_id: str,
        endpoint: str,
        model: str,
        auth_env: str | None = None,
        timeout: float = 60.0,
        attach: str = "base64",
        reference_prefix: str = "",
        media_kinds: frozenset[str] | None = None,
        decode_override: dict | None = None,
        concurrency: int = 4,
        transport=None,
    ):
        super().__init__(backend_id, media_kinds, decode_override or {}, concurrency)
        self.endpoint = endpoint
        self.model = model
        self.auth_env = auth_env
        self.timeout = timeout
        self.attach = attach
        self.reference_prefix = reference_prefix
        self._post = transport or self._default_transport

    def _default_transport(self, url: str, payload: dict, headers: dict, timeout: float):
        return requests.post(url, json=payload, headers=headers, timeout=timeout)

    def _headers(self) -> dict:
        import os

        headers = {"Content-Type": "application/json"}
        if self.auth_env:
            token = os.environ.get(self.auth_env)
            if not token:
                raise BackendRejected(
                    f"auth env var {self.auth_env} is not set for {self.backend_id}"
                )
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _content(self, req: ChatRequest) -> list[dict]:
        content: list[dict] = []
        for part in req.media_parts:
            block = self._media_block(part)
            content.append(block)
        for text in req.text_parts:
            content.append({"type": "text", "text": text})
        return content

    def _media_block(self, part: MediaPart) -> dict:
        kind = "image" if part.kind == "frame" else "audio"
        if self.attach == "reference":
            return {"type": f"{kind}_ref", "uri": f"{self.reference_prefix}{part.path.name}"}
        data = base64.b64encode(Path(part.path).read_bytes()).decode("ascii")
        return {"type": kind, "name": part.path.name, "data": data}

    def complete(self, req: ChatRequest) -> tuple[str, float]:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": self._content(req)}],
            "temperature": req.decode.temperature,
        }
        if req.decode.max_tokens is not None:
            payload["max_tokens"] = req.decode.max_tokens
        if req.decode.seed is not None:
            payload["seed"] = req.decode.seed
        started = time.monotonic()
        try:
            response = self._post(self.endpoint, payload, self._headers(), self.timeout)
        except requests.Timeout as exc:
            raise TransientFailure(f"timeout after {self.timeout}s", timeout=True) from exc
        except requests.RequestException as exc:
            raise TransientFailure(f"transport error: {exc}") from exc
        latency_ms = (time.monotonic() - started) * 1000.0
        status = response.status_code
        if status == 429 or status >= 500:
            raise TransientFailure(f"HTTP {status} from {self.backend_id}")
        if status >= 400:
            raise BackendRejected(f"HTTP {status} from {self.backend_id}")
        body = response.json()
        return self._extract_text(body), latency_ms

    @staticmethod
    def _extract_text(body: dict) -> str:
        if isinstance(body.get("text"), str):
            return body["text"]
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise BackendRejected(f"unrecognized response shape: {list(body)[:5]}")


def backend_from_spec(binding: str, spec: dict, base_dir: Path) -> _BackendBase:
    """Build a backend from one config mapping. `base_dir` anchors relative
    paths (scripted bundle files)."""
    if not isinstance(spec, dict):
        raise ConfigInvalid(f"backend {binding!r}: expected a mapping")
    kind = spec.get("kind")
    media = spec.get("media")
    media_kinds = frozenset(media) if media is not None else None
    decode_override = spec.get("decode") or {}
    bad = set(decode_override) - {"temperature", "max_tokens", "seed"}
    if bad:
        raise ConfigInvalid(f"backend {binding!r}: unknown decode keys {sorted(bad)}")
    concurrency = int(spec.get("concurrency", 4))
    if kind == "scripted":
        bundle_path = spec.get("bundle")
        if not bundle_path:
            raise ConfigInvalid(f"backend {binding!r}: scripted backend needs 'bundle'")
        bundle = load_bundle(base_dir / bundle_path)
        return ScriptedBackend(
            backend_id=binding,
            rules=rules_from_bundle(bundle),
            defaults=bundle.get("defaults", {}),
            media_kinds=media_kinds,
            decode_override=decode_override,
            concurrency=concurrency,
        )
    if kind == "http":
        for key in ("endpoint", "model"):
            if not spec.get(key):
                raise ConfigInvalid(f"backend {binding!r}: http backend needs {key!r}")
        return HttpBackend(
            backend_id=spec.get("id", binding),
            endpoint=spec["endpoint"],
            model=spec["model"],
            auth_env=spec.get("auth_env"),
            timeout=float(spec.get("timeout", 60.0)),
            attach=spec.get("attach", "base64"),
            reference_prefix=spec.get("reference_prefix", ""),
            media_kinds=media_kinds,
            decode_override=decode_override,
            concurrency=concurrency,
        )
    raise ConfigInvalid(f"backend {binding!r}: unknown kind {kind!r}")
