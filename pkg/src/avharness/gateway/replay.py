"""Record/replay store for backend responses.

One JSON file per request fingerprint, append-only: recording never rewrites
an existing entry, so a store can be shipped as a frozen test fixture. Each
entry carries a self-digest so `cache verify` can detect corruption.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from pathlib import Path
from typing import Iterator

from ..errors import CorruptEntry

log = logging.getLogger(__name__)

REPLAY_MODES = ("off", "record", "strict")


def _entry_digest(entry: dict) -> str:
    body = {k: entry[k] for k in ("fingerprint", "role_tag", "backend_id", "text", "latency_ms")}
    canonical = json.dumps(body, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class ReplayStore:
    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, fingerprint_hex: str) -> Path:
        return self.root / f"{fingerprint_hex}.json"

    def get(self, fingerprint_hex: str) -> dict | None:
        path = self._path(fingerprint_hex)
        if not path.is_file():
            return None
        return json.loads(path.read_text())

    def put(
        self,
        fingerprint_hex: str,
        role_tag: str,
        backend_id: str,
        text: str,
        latency_ms: float,
    ) -> None:
        path = self._path(fingerprint_hex)
        if path.is_file():
            return
        entry = {
            "fingerprint": fingerprint_hex,
            "role_tag": role_tag,
            "backend_id": backend_id,
            "text": text,
            "latency_ms": latency_ms,
            "recorded_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }
        entry["entry_digest"] = _entry_digest(entry)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(entry, sort_keys=True, indent=1))
        tmp.replace(path)

    def entries(self) -> Iterator[Path]:
        yield from sorted(self.root.glob("*.json"))

    def verify_entry(self, path: Path) -> None:
        """Raise CorruptEntry if the file is unparseable, misnamed, or its
        self-digest does not match."""
        try:
            entry = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CorruptEntry(f"{path.name}: unreadable ({exc})") from exc
        required = {"fingerprint", "role_tag", "backend_id", "text", "latency_ms", "entry_digest"}
        missing = required - entry.keys()
        if missing:
            raise CorruptEntry(f"{path.name}: missing fields {sorted(missing)}")
        if f"{entry['fingerprint']}.json" != path.name:
            raise CorruptEntry(f"{path.name}: filename does not match fingerprint")
        if _entry_digest(entry) != entry["entry_digest"]:
            raise CorruptEntry(f"{path.name}: digest mismatch")

    def verify(self) -> list[str]:
        """Check every entry; returns the list of corrupt entry names."""
        corrupt = []
        for path in self.entries():
            try:
                self.verify_entry(path)
            except CorruptEntry as exc:
                corrupt.append(str(exc))
        return corrupt
