"""Shared fixtures: one generated fixture directory per session, plus small
builders for synthetic items and scripted gateways."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
import yaml

from avharness.bench.dataset import QAItem, duration_bucket, load_dataset, load_media_manifest
from avharness.cli.fixtures import generate_fixtures
from avharness.gateway import Gateway, ScriptedBackend, rules_from_bundle
from avharness.media import MediaCache, resolve_toolchain


def pytest_runtest_logreport(report):
    """One visible verdict line per acceptance criterion, capture or not."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    outcome = "PASS" if report.passed else "FAIL"
    print(f"\nACCEPTANCE {name}: {outcome}", flush=True)


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("fixtures")
    generate_fixtures(root)
    return root


@pytest.fixture(scope="session")
def fixture_bundle(fixture_dir) -> dict:
    return json.loads((fixture_dir / "scripted_bundle.json").read_text())


@pytest.fixture(scope="session")
def fixture_config(fixture_dir) -> dict:
    return yaml.safe_load((fixture_dir / "config.yaml").read_text())


@pytest.fixture(scope="session")
def fixture_manifest(fixture_dir):
    return load_media_manifest(fixture_dir / "media_manifest.json")


@pytest.fixture(scope="session")
def fixture_items(fixture_dir, fixture_manifest) -> list[QAItem]:
    return load_dataset(fixture_dir / "dataset.jsonl", fixture_manifest)


@pytest.fixture(scope="session")
def session_cache(tmp_path_factory, fixture_dir) -> MediaCache:
    """One extraction cache shared across the session; extraction is the slow
    part and the cache is content-addressed, so sharing is safe."""
    return MediaCache(tmp_path_factory.mktemp("media-cache"), resolve_toolchain())


def scripted_gateway(bundle: dict, bindings: tuple[str, ...], **gateway_kwargs) -> Gateway:
    backends = {
        binding: ScriptedBackend(
            backend_id=binding,
            rules=rules_from_bundle(bundle),
            defaults=bundle.get("defaults", {}),
        )
        for binding in bindings
    }
    return Gateway(backends=backends, **gateway_kwargs)


@pytest.fixture()
def fixture_gateway(fixture_bundle) -> Gateway:
    return scripted_gateway(
        fixture_bundle,
        (
            "translator", "descriptor", "planner1", "planner2",
            "executor1", "executor2", "decider", "executor", "grader",
        ),
    )


def config_copy(fixture_dir: Path, dest_dir: Path, **changes) -> Path:
    """Clone the generated config into dest_dir with every relative path made
    absolute, so CLI tests can tweak single keys without breaking resolution."""
    raw = yaml.safe_load((fixture_dir / "config.yaml").read_text())
    for key in ("dataset", "media_manifest", "cache_dir", "replay_dir"):
        if raw.get(key):
            raw[key] = str(fixture_dir / raw[key])
    for spec in raw.get("backends", {}).values():
        if spec.get("bundle"):
            spec["bundle"] = str(fixture_dir / spec["bundle"])
    raw.update(changes)
    dest_dir.mkdir(parents=True, exist_ok=True)
    path = dest_dir / "config.yaml"
    path.write_text(yaml.safe_dump(raw, sort_keys=True))
    return path


def make_item(
    item_id: str = "item-1",
    n_options: int = 4,
    gold_index: int = 1,
    category: str = "recognition",
    task: str = "counting",
    audio_type: str = "speech",
    content_type: str = "PGC",
    asset_id: str = "asset-1",
    duration: float = 30.0,
    question: str = "What happens in the clip?",
    options: tuple[str, ...] | None = None,
) -> QAItem:
    if options is None:
        options = tuple(f"option {i}" for i in range(n_options))
    return QAItem(
        id=item_id,
        question=question,
        options=options,
        gold_index=gold_index,
        category=category,
        task=task,
        audio_type=audio_type,
        content_type=content_type,
        asset_id=asset_id,
        duration_bucket=duration_bucket(duration),
    )
