"""Gateway layer: fingerprint canonicalization (golden vector), scripted
backends, retry/backoff policy, the replay store, and the HTTP adapter with a
fake transport."""

from __future__ import annotations

import hashlib
import json
import threading
import time

import pytest

from avharness.errors import (
    BackendRejected,
    BackendTimeout,
    BudgetExhausted,
    CorruptEntry,
    MediaUnreadable,
)
from avharness.gateway import (
    ChatRequest,
    DecodeParams,
    Gateway,
    HttpBackend,
    MediaPart,
    ModelResponse,
    ReplayStore,
    ScriptRule,
    ScriptedBackend,
    canonical_payload,
    fingerprint,
)
from avharness.gateway.backends import TransientFailure, _BackendBase

# Independently computed: sha256 over the canonical byte string below.
GOLDEN_CANONICAL = (
    '{"decode":{"max_tokens":null,"seed":null,"temperature":0.0},'
    '"media":[],"role":"translator","text":[""]}'
)
GOLDEN_HEX = "3e5d9a8b5f5aa97982edc7bd8114e098b26e7d2e308d0b2034c6a6e17330e9ac"


def probe_request() -> ChatRequest:
    return ChatRequest(role_tag="translator", text_parts=("",))


class TestFingerprint:
    def test_golden_vector(self):
        req = probe_request()
        canonical = json.dumps(
            canonical_payload(req), sort_keys=True, separators=(",", ":"), ensure_ascii=True
        )
        assert canonical == GOLDEN_CANONICAL
        assert fingerprint(req).hex == GOLDEN_HEX
        assert fingerprint(req).hex == hashlib.sha256(canonical.encode()).hexdigest()

    def test_identical_requests_identical_digest(self):
        a = ChatRequest(role_tag="planner", text_parts=("x", "y"))
        b = ChatRequest(role_tag="planner", text_parts=("x", "y"))
        assert fingerprint(a) == fingerprint(b)

    def test_temperature_changes_digest(self):
        a = ChatRequest(role_tag="planner", text_parts=("x",))
        b = ChatRequest(
            role_tag="planner", text_parts=("x",), decode=DecodeParams(temperature=0.7)
        )
        assert fingerprint(a) != fingerprint(b)

    def test_seed_changes_digest(self):
        a = ChatRequest(role_tag="grader", text_parts=("x",))
        b = ChatRequest(role_tag="grader", text_parts=("x",), decode=DecodeParams(seed=1))
        assert fingerprint(a) != fingerprint(b)

    def test_role_and_text_change_digest(self):
        a = ChatRequest(role_tag="planner", text_parts=("x",))
        assert fingerprint(a) != fingerprint(ChatRequest(role_tag="decider", text_parts=("x",)))
        assert fingerprint(a) != fingerprint(ChatRequest(role_tag="planner", text_parts=("y",)))

    def test_media_content_not_path_identity(self, tmp_path):
        one = tmp_path / "one.png"
        two = tmp_path / "two.png"
        one.write_bytes(b"same bytes")
        two.write_bytes(b"same bytes")
        req_one = ChatRequest(
            role_tag="executor", text_parts=("t",),
            media_parts=(MediaPart("frame", one),),
        )
        req_two = ChatRequest(
            role_tag="executor", text_parts=("t",),
            media_parts=(MediaPart("frame", two),),
        )
        assert fingerprint(req_one) == fingerprint(req_two)
        two.write_bytes(b"different bytes now")
        assert fingerprint(req_one) != fingerprint(req_two)

    def test_missing_media_unreadable(self, tmp_path):
        req = ChatRequest(
            role_tag="executor", text_parts=("t",),
            media_parts=(MediaPart("frame", tmp_path / "ghost.png"),),
        )
        with pytest.raises(MediaUnreadable):
            fingerprint(req)

    def test_request_validation(self):
        with pytest.raises(ValueError):
            ChatRequest(role_tag="poet", text_parts=("x",))
        with pytest.raises(ValueError):
            ChatRequest(role_tag="planner", text_parts=())
        with pytest.raises(ValueError):
            MediaPart("hologram", None)


class TestScriptedBackend:
    def test_first_match_wins(self):
        backend = ScriptedBackend(
            "b", rules=[
                ScriptRule(role="planner", contains="alpha", response="first"),
                ScriptRule(role="planner", response="second"),
            ],
        )
        req = ChatRequest(role_tag="planner", text_parts=("alpha beta",))
        assert backend.complete(req)[0] == "first"
        req = ChatRequest(role_tag="planner", text_parts=("beta",))
        assert backend.complete(req)[0] == "second"

    def test_backend_filter(self):
        rule = ScriptRule(backend="executor1", response="one")
        backend1 = ScriptedBackend("executor1", rules=[rule])
        backend2 = ScriptedBackend("executor2", rules=[rule], defaults={"executor": "dflt"})
        req = ChatRequest(role_tag="executor", text_parts=("q",))
        assert backend1.complete(req)[0] == "one"
        assert backend2.complete(req)[0] == "dflt"

    def test_sequential_responses_stick_on_last(self):
        backend = ScriptedBackend(
            "b", rules=[ScriptRule(role="grader", responses=["1", "0"])]
        )
        req = ChatRequest(role_tag="grader", text_parts=("vote",))
        got = [backend.complete(req)[0] for _ in range(4)]
        assert got == ["1", "0", "0", "0"]

    def test_fail_times_then_recovers(self):
        backend = ScriptedBackend(
            "b", rules=[ScriptRule(role="planner", fail="transient", fail_times=2,
                                   response="ok now")]
        )
        req = ChatRequest(role_tag="planner", text_parts=("x",))
        for _ in range(2):
            with pytest.raises(TransientFailure):
                backend.complete(req)
        assert backend.complete(req)[0] == "ok now"

    def test_no_match_rejected(self):
        backend = ScriptedBackend("b", rules=[])
        with pytest.raises(BackendRejected):
            backend.complete(ChatRequest(role_tag="decider", text_parts=("x",)))

    def test_path_contains(self, tmp_path):
        clip = tmp_path / "c000010000_000020000.wav"
        clip.write_bytes(b"RIFF")
        backend = ScriptedBackend(
            "b", rules=[ScriptRule(path_contains="c000010000", response="clip two")],
            defaults={"descriptor": "other"},
        )
        with_clip = ChatRequest(
            role_tag="descriptor", text_parts=("d",),
            media_parts=(MediaPart("audio_clip", clip),),
        )
        without = ChatRequest(role_tag="descriptor", text_parts=("d",))
        assert backend.complete(with_clip)[0] == "clip two"
        assert backend.complete(without)[0] == "other"


class TestPrepare:
    def test_media_kind_filtering(self, tmp_path):
        frame = tmp_path / "f.png"
        clip = tmp_path / "c.wav"
        frame.write_bytes(b"png")
        clip.write_bytes(b"wav")
        backend = ScriptedBackend("b", rules=[], media_kinds=frozenset({"frame"}))
        req = ChatRequest(
            role_tag="planner", text_parts=("x",),
            media_parts=(MediaPart("frame", frame), MediaPart("audio_clip", clip)),
        )
        prepared = backend.prepare(req)
        assert [p.kind for p in prepared.media_parts] == ["frame"]

    def test_decode_override_applies_before_fingerprint(self, tmp_path):
        backend = ScriptedBackend(
            "b", rules=[], defaults={"planner": "ok"},
            decode_override={"temperature": 0.3},
        )
        req = ChatRequest(role_tag="planner", text_parts=("x",))
        prepared = backend.prepare(req)
        assert prepared.decode.temperature == 0.3
        assert fingerprint(prepared) != fingerprint(req)

    def test_noop_prepare_returns_same_request(self):
        backend = ScriptedBackend("b", rules=[])
        req = ChatRequest(role_tag="planner", text_parts=("x",))
        assert backend.prepare(req) is req


class _FlakyBackend(_BackendBase):
    """Fails `failures` times (timeout flavor if asked), then succeeds."""

    def __init__(self, failures: int, timeout: bool = False, **kwargs):
        super().__init__(backend_id=kwargs.pop("backend_id", "flaky"), **kwargs)
        self.failures = failures
        self.timeout = timeout
        self.calls = 0

    def complete(self, req: ChatRequest) -> tuple[str, float]:
        self.calls += 1
        if self.calls <= self.failures:
            raise TransientFailure("induced", timeout=self.timeout)
        return "recovered", 12.5


class TestGatewayRetries:
    def test_backoff_schedule_and_recovery(self):
        delays: list[float] = []
        backend = _FlakyBackend(failures=2)
        gateway = Gateway(
            backends={"planner1": backend}, attempts=3, base_delay=0.5,
            sleep=delays.append,
        )
        response = gateway.send("planner1", ChatRequest(role_tag="planner", text_parts=("x",)))
        assert response.text == "recovered"
        assert backend.calls == 3
        assert delays == [0.5, 1.0]
        stats = gateway.stats_snapshot()["planner1"]
        assert stats["backend_calls"] == 3
        assert stats["failures"] == 0

    def test_budget_exhausted(self):
        backend = _FlakyBackend(failures=99)
        gateway = Gateway(backends={"planner1": backend}, attempts=3, sleep=lambda _: None)
        with pytest.raises(BudgetExhausted):
            gateway.send("planner1", ChatRequest(role_tag="planner", text_parts=("x",)))
        assert backend.calls == 3
        assert gateway.stats_snapshot()["planner1"]["failures"] == 1

    def test_timeout_flavor_surfaces_as_backend_timeout(self):
        backend = _FlakyBackend(failures=99, timeout=True)
        gateway = Gateway(backends={"planner1": backend}, attempts=2, sleep=lambda _: None)
        with pytest.raises(BackendTimeout):
            gateway.send("planner1", ChatRequest(role_tag="planner", text_parts=("x",)))
        assert backend.calls == 2

    def test_rejection_is_not_retried(self):
        backend = ScriptedBackend("b", rules=[ScriptRule(role="planner", fail="reject")])
        gateway = Gateway(backends={"planner1": backend}, attempts=3, sleep=lambda _: None)
        with pytest.raises(BackendRejected):
            gateway.send("planner1", ChatRequest(role_tag="planner", text_parts=("x",)))
        assert gateway.stats_snapshot()["planner1"]["backend_calls"] == 1

    def test_unknown_binding_rejected(self):
        gateway = Gateway(backends={})
        with pytest.raises(BackendRejected):
            gateway.send("nobody", ChatRequest(role_tag="planner", text_parts=("x",)))

    def test_retry_keeps_fingerprint(self):
        """The prepared request is immutable across attempts, so the recorded
        identity equals the first attempt's identity."""
        seen: list[str] = []

        class Spy(_BackendBase):
            def complete(self, req):
                seen.append(fingerprint(req).hex)
                if len(seen) < 3:
                    raise TransientFailure("again")
                return "done", 1.0

        gateway = Gateway(
            backends={"planner1": Spy(backend_id="spy")}, attempts=3, sleep=lambda _: None
        )
        gateway.send("planner1", ChatRequest(role_tag="planner", text_parts=("x",)))
        assert len(set(seen)) == 1

    def test_semaphore_bounds_concurrency(self):
        active = 0
        peak = 0
        lock = threading.Lock()

        class Slow(_BackendBase):
            def complete(self, req):
                nonlocal active, peak
                with lock:
                    active += 1
                    peak = max(peak, active)
                time.sleep(0.02)
                with lock:
                    active -= 1
                return "ok", 1.0

        gateway = Gateway(backends={"planner1": Slow(backend_id="slow", concurrency=2)})
        req = ChatRequest(role_tag="planner", text_parts=("x",))
        threads = [threading.Thread(target=gateway.send, args=("planner1", req))
                   for _ in range(6)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert peak <= 2


class TestReplay:
    def _gateway(self, tmp_path, mode: str, backend=None):
        store = ReplayStore(tmp_path / "replays")
        backend = backend or ScriptedBackend(
            "scripted", rules=[], defaults={"planner": "live answer"}, latency_ms=3.0
        )
        return Gateway(backends={"planner1": backend}, replay=mode, store=store), store

    def test_record_then_hit(self, tmp_path):
        gateway, store = self._gateway(tmp_path, "record")
        req = ChatRequest(role_tag="planner", text_parts=("q",))
        first = gateway.send("planner1", req)
        assert not first.from_cache
        second = gateway.send("planner1", req)
        assert second.from_cache
        assert second.text == first.text
        assert second.latency_ms == first.latency_ms
        stats = gateway.stats_snapshot()["planner1"]
        assert stats["backend_calls"] == 1
        assert stats["replay_hits"] == 1

    def test_strict_hit_makes_no_backend_call(self, tmp_path):
        recorder, _ = self._gateway(tmp_path, "record")
        req = ChatRequest(role_tag="planner", text_parts=("q",))
        recorder.send("planner1", req)

        calls = []

        class Counting(_BackendBase):
            def complete(self, req):
                calls.append(1)
                return "never", 0.0

        strict = Gateway(
            backends={"planner1": Counting(backend_id="c")},
            replay="strict", store=ReplayStore(tmp_path / "replays"),
        )
        response = strict.send("planner1", req)
        assert response.from_cache
        assert response.text == "live answer"
        assert calls == []

    def test_strict_miss_raises(self, tmp_path):
        gateway, _ = self._gateway(tmp_path, "strict")
        with pytest.raises(BackendRejected, match="replay miss"):
            gateway.send("planner1", ChatRequest(role_tag="planner", text_parts=("new",)))

    def test_store_append_only(self, tmp_path):
        store = ReplayStore(tmp_path)
        store.put("ff" * 32, "planner", "b1", "first text", 1.0)
        store.put("ff" * 32, "planner", "b2", "other text", 2.0)
        entry = store.get("ff" * 32)
        assert entry["text"] == "first text"
        assert entry["backend_id"] == "b1"

    def test_verify_flags_corruption(self, tmp_path):
        store = ReplayStore(tmp_path)
        store.put("aa" * 32, "planner", "b", "text", 1.0)
        store.put("bb" * 32, "planner", "b", "text", 1.0)
        victim = tmp_path / ("bb" * 32 + ".json")
        entry = json.loads(victim.read_text())
        entry["text"] = "tampered"
        victim.write_text(json.dumps(entry))
        corrupt = store.verify()
        assert len(corrupt) == 1
        assert corrupt[0].startswith("bb" * 32)
        with pytest.raises(CorruptEntry):
            store.verify_entry(victim)

    def test_verify_flags_garbage_file(self, tmp_path):
        store = ReplayStore(tmp_path)
        (tmp_path / ("cc" * 32 + ".json")).write_text("{not json")
        corrupt = store.verify()
        assert len(corrupt) == 1
        assert corrupt[0].startswith("cc" * 32)

    def test_replay_mode_validation(self, tmp_path):
        with pytest.raises(ValueError):
            Gateway(backends={}, replay="sometimes")
        with pytest.raises(ValueError):
            Gateway(backends={}, replay="record", store=None)


class _FakeHttp:
    """Transport double: records payloads, returns a canned HTTP response."""

    def __init__(self, status=200, body=None):
        self.status = status
        self.body = body if body is not None else {"text": "http says hi"}
        self.calls: list[dict] = []

    def __call__(self, url, payload, headers, timeout):
        self.calls.append({"url": url, "payload": payload, "headers": headers})

        class R:
            status_code = self.status
            _body = self.body

            def json(self):
                return self._body

        return R()


class TestHttpBackend:
    def _backend(self, transport, **kwargs):
        return HttpBackend(
            backend_id="remote", endpoint="https://example.invalid/chat",
            model="omni-medium", transport=transport, **kwargs,
        )

    def test_payload_shape_with_base64_media(self, tmp_path):
        frame = tmp_path / "f00000005.png"
        frame.write_bytes(b"fake png bytes")
        transport = _FakeHttp()
        backend = self._backend(transport)
        req = ChatRequest(
            role_tag="executor", text_parts=("pick one",),
            media_parts=(MediaPart("frame", frame),),
            decode=DecodeParams(temperature=0.2, max_tokens=64, seed=9),
        )
        text, latency = backend.complete(req)
        assert text == "http says hi"
        assert latency >= 0.0
        payload = transport.calls[0]["payload"]
        assert payload["model"] == "omni-medium"
        assert payload["temperature"] == 0.2
        assert payload["max_tokens"] == 64
        assert payload["seed"] == 9
        content = payload["messages"][0]["content"]
        assert content[0]["type"] == "image"
        assert content[0]["data"]
        assert content[-1] == {"type": "text", "text": "pick one"}

    def test_reference_attachment(self, tmp_path):
        clip = tmp_path / "c000000000_000010000.wav"
        clip.write_bytes(b"riff")
        transport = _FakeHttp()
        backend = self._backend(transport, attach="reference", reference_prefix="media://")
        req = ChatRequest(
            role_tag="descriptor", text_parts=("describe",),
            media_parts=(MediaPart("audio_clip", clip),),
        )
        backend.complete(req)
        block = transport.calls[0]["payload"]["messages"][0]["content"][0]
        assert block == {"type": "audio_ref", "uri": "media://c000000000_000010000.wav"}

    def test_auth_token_from_env_only(self, monkeypatch):
        transport = _FakeHttp()
        backend = self._backend(transport, auth_env="AVH_TEST_TOKEN")
        req = ChatRequest(role_tag="planner", text_parts=("x",))
        monkeypatch.delenv("AVH_TEST_TOKEN", raising=False)
        with pytest.raises(BackendRejected, match="AVH_TEST_TOKEN"):
            backend.complete(req)
        assert transport.calls == []
        monkeypatch.setenv("AVH_TEST_TOKEN", "sk-test-123")
        backend.complete(req)
        assert transport.calls[0]["headers"]["Authorization"] == "Bearer sk-test-123"

    @pytest.mark.parametrize("status,exc", [
        (429, TransientFailure), (500, TransientFailure), (503, TransientFailure),
        (400, BackendRejected), (404, BackendRejected),
    ])
    def test_status_mapping(self, status, exc):
        backend = self._backend(_FakeHttp(status=status))
        with pytest.raises(exc):
            backend.complete(ChatRequest(role_tag="planner", text_parts=("x",)))

    def test_choices_response_shape(self):
        body = {"choices": [{"message": {"content": "from choices"}}]}
        backend = self._backend(_FakeHttp(body=body))
        text, _ = backend.complete(ChatRequest(role_tag="planner", text_parts=("x",)))
        assert text == "from choices"

    def test_unrecognized_shape_rejected(self):
        backend = self._backend(_FakeHttp(body={"surprise": True}))
        with pytest.raises(BackendRejected):
            backend.complete(ChatRequest(role_tag="planner", text_parts=("x",)))


class TestModelResponse:
    def test_fields(self):
        r = ModelResponse(text="t", latency_ms=1.0, backend_id="b")
        assert not r.from_cache
