"""Run manifest: the immutable provenance stamp of a run directory."""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

from .. import __version__
from ..bench.suite import RunConfig
from ..errors import ConfigInvalid

MANIFEST_NAME = "run-manifest.json"


def _file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _sanitize_backends(backends: dict[str, dict]) -> dict[str, dict]:
    """Config snapshot keeps the auth env var NAME only; secrets never land in
    a run directory."""
    out = {}
    for binding, spec in sorted(backends.items()):
        out[binding] = {k: v for k, v in sorted(spec.items())}
    return out


def build_manifest(
    config: RunConfig,
    dataset_path: Path,
    media_manifest_path: Path,
    toolchain_name: str,
) -> dict:
    return {
        "schema": 1,
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "package_version": __version__,
        "mode": config.mode,
        "seed": config.seed,
        "replay": config.replay,
        "workers": config.workers,
        "clip_len": config.clip_len,
        "frame_count": config.frame_count,
        "gap_tolerance": config.gap_tolerance,
        "planner_count": config.planner_count,
        "toolchain": toolchain_name,
        "dataset": {
            "path": str(dataset_path),
            "sha256": _file_sha256(dataset_path),
        },
        "media_manifest": {
            "path": str(media_manifest_path),
            "sha256": _file_sha256(media_manifest_path),
        },
        "backends": _sanitize_backends(config.backends),
    }


def write_manifest(run_dir: Path, manifest: dict, resume: bool) -> dict:
    """Create the manifest before any pipeline work; on resume, verify the
    existing one matches instead of rewriting it."""
    run_dir = Path(run_dir)
    path = run_dir / MANIFEST_NAME
    if path.exists():
        if not resume:
            raise ConfigInvalid(
                f"{run_dir} already holds a run (found {MANIFEST_NAME}); "
                "pass --resume to continue it or choose a fresh --out"
            )
        existing = json.loads(path.read_text())
        for key in ("mode", "seed", "replay"):
            if existing.get(key) != manifest.get(key):
                raise ConfigInvalid(
                    f"resume mismatch on {key!r}: run dir has {existing.get(key)!r}, "
                    f"current config says {manifest.get(key)!r}"
                )
        if existing.get("dataset", {}).get("sha256") != manifest["dataset"]["sha256"]:
            raise ConfigInvalid("resume mismatch: dataset file changed since the run started")
        return existing
    run_dir.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, sort_keys=True, indent=1))
    return manifest
