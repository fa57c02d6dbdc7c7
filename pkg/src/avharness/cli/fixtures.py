"""Offline fixture generation: synthetic media, a QA dataset, a scripted
backend bundle, and a ready-to-run config.

Everything is deterministic in (durations, items, seed), and the scripted
bundle covers every run mode, so a generated directory is a self-contained
offline test bed. Bundle `meta` records the intended consensus/disagreement
split and expected final letters so tests can assert protocol behavior."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import cv2
import numpy as np
import yaml

from ..bench.dataset import (
    AUDIO_TYPES,
    CATEGORIES,
    CONTENT_TYPES,
    TASKS_BY_CATEGORY,
    load_dataset,
    load_media_manifest,
)
from ..media.toolchain import write_wav
from ..prompts import LETTERS

log = logging.getLogger(__name__)

DEFAULT_DURATIONS = (7.0, 10.0, 43.0, 61.0)
FPS = 5
FRAME_SIZE = (160, 120)  # (width, height)
SAMPLE_RATE = 16000


def _make_video(path: Path, duration: float) -> None:
    """Moving color bars; frame content is a pure function of the frame index."""
    width, height = FRAME_SIZE
    writer = cv2.VideoWriter(
        str(path), cv2.VideoWriter_fourcc(*"MJPG"), FPS, (width, height)
    )
    if not writer.isOpened():
        raise RuntimeError(f"cannot open video writer for {path}")
    n_frames = int(round(duration * FPS))
    bar_width = max(1, width // 8)
    palette = np.array(
        [
            (32, 32, 200), (32, 200, 200), (32, 200, 32), (200, 200, 32),
            (200, 32, 32), (200, 32, 200), (128, 128, 128), (230, 230, 230),
        ],
        dtype=np.uint8,
    )
    for k in range(n_frames):
        frame = np.zeros((height, width, 3), dtype=np.uint8)
        for x in range(width):
            bar = ((x + 2 * k) // bar_width) % len(palette)
            frame[:, x] = palette[bar]
        frame[: height // 8, : width // 8] = (k * 7) % 256
        writer.write(frame)
    writer.release()


def _make_audio(path: Path, duration: float) -> None:
    """Tone sweep: frequency steps up once per second."""
    n = int(round(duration * SAMPLE_RATE))
    t = np.arange(n) / SAMPLE_RATE
    freq = 220.0 + 30.0 * np.floor(t)
    samples = 0.5 * np.sin(2 * np.pi * freq * t)
    write_wav(path, samples, SAMPLE_RATE)


TRANSLATOR_REPLY = json.dumps(
    [
        {"start": 1.0, "end": 3.0, "text": "The narrator introduces the tone pattern."},
        {"start": 12.0, "end": 14.5, "text": "The narrator counts the repeating bars."},
    ]
)
DESCRIPTOR_REPLY = "A steady synthetic tone rises over a quiet electronic hum."

_N_OPTION_CYCLE = (4, 3, 2, 5, 6)


def _item_spec(i: int, asset_ids: list[str]) -> dict:
    qid = f"q{i:03d}"
    category = CATEGORIES[i % len(CATEGORIES)]
    tasks = TASKS_BY_CATEGORY[category]
    n_options = _N_OPTION_CYCLE[i % len(_N_OPTION_CYCLE)]
    return {
        "id": qid,
        "question": (
            f"({qid}) Which option best matches the audio-visual cue in this clip?"
        ),
        "options": [f"The cue appears around second {3 * j + 1}" for j in range(n_options)],
        "gold_index": i % n_options,
        "category": category,
        "task": tasks[(i // len(CATEGORIES)) % len(tasks)],
        "audio_type": AUDIO_TYPES[(i // len(CATEGORIES)) % len(AUDIO_TYPES)],
        "content_type": CONTENT_TYPES[i % len(CONTENT_TYPES)],
        "asset_id": asset_ids[i % len(asset_ids)],
    }


def _planner_json(duration: float, two_segments: bool) -> str:
    a_start, a_end = round(0.1 * duration, 2), round(0.45 * duration, 2)
    segments = [
        {"start_time": a_start, "end_time": a_end, "reasoning": "The cue begins in this span."}
    ]
    if two_segments:
        b_start, b_end = round(0.6 * duration, 2), round(0.9 * duration, 2)
        segments.append(
            {"start_time": b_start, "end_time": b_end, "reasoning": "The pattern repeats here."}
        )
    return json.dumps({"time_segments": segments})


def _planner_reply(i: int, planner: str, duration: float) -> tuple[str, bool]:
    """Reply text and whether it forces the full-window fallback. Styles
    rotate so fence-stripping and prose-embedded JSON both get exercised."""
    if planner == "planner1" and i == 6:
        return "No.", True
    if planner == "planner1" and i == 9:
        return "{time_segments: oops, this is not valid JSON", True
    if planner == "planner2" and i == 12:
        return "I could not find any relevant span to cite for this question.", True
    body = _planner_json(duration, two_segments=(i % 2 == 0))
    style = (i + (0 if planner == "planner1" else 1)) % 3
    if style == 1:
        return f"```json\n{body}\n```", False
    if style == 2:
        return f"Here is the plan you asked for: {body} Let me know if you need more.", False
    return body, False


def build_bundle(items: list[dict], durations_by_asset: dict[str, float]) -> dict:
    """Scripted responses for every role and mode, plus expectations under
    `meta`. Disagreement on every third item; the rest reach consensus."""
    rules: list[dict] = []
    meta: dict = {
        "consensus_items": [],
        "disagreement_items": [],
        "fallback_items": [],
        "expected_final": {},
        "executor_letters": {},
        "decider_letters": {},
    }
    for i, item in enumerate(items):
        qid = item["id"]
        tag = f"({qid})"
        n_options = len(item["options"])
        duration = durations_by_asset[item["asset_id"]]
        letter1 = LETTERS[i % n_options]
        disagree = i % 3 == 0
        letter2 = LETTERS[(i + 1) % n_options] if disagree else letter1
        decider_letter = letter1 if i % 2 == 0 else letter2

        for planner in ("planner1", "planner2"):
            reply, is_fallback = _planner_reply(i, planner, duration)
            rules.append(
                {"role": "planner", "backend": planner, "contains": tag, "response": reply}
            )
            if is_fallback:
                meta["fallback_items"].append({"item": qid, "planner": planner})
        rules.append(
            {
                "role": "executor",
                "backend": "executor1",
                "contains": tag,
                "response": f"{letter1} Reason: the tone and bars line up in the cited span.",
            }
        )
        rules.append(
            {
                "role": "executor",
                "backend": "executor2",
                "contains": tag,
                "response": f"{letter2} Reason: the repeating sweep points at this option.",
            }
        )
        rules.append(
            {
                "role": "executor",
                "backend": "executor",
                "contains": tag,
                "response": f"{letter1}",
            }
        )
        rules.append(
            {"role": "decider", "contains": tag, "response": decider_letter}
        )
        meta["executor_letters"][qid] = {"executor1": letter1, "executor2": letter2}
        meta["decider_letters"][qid] = decider_letter
        if disagree:
            meta["disagreement_items"].append(qid)
            meta["expected_final"][qid] = decider_letter
        else:
            meta["consensus_items"].append(qid)
            meta["expected_final"][qid] = letter1
    return {
        "rules": rules,
        "defaults": {
            "translator": TRANSLATOR_REPLY,
            "descriptor": DESCRIPTOR_REPLY,
            "grader": "0",
        },
        "meta": meta,
    }


BUNDLE_NAME = "scripted_bundle.json"
DATASET_NAME = "dataset.jsonl"
MEDIA_MANIFEST_NAME = "media_manifest.json"
CONFIG_NAME = "config.yaml"

_SCRIPTED_BINDINGS = (
    "translator", "descriptor", "planner1", "planner2",
    "executor1", "executor2", "decider", "executor", "grader",
)


def generate_fixtures(
    out_dir: Path,
    durations: tuple[float, ...] = DEFAULT_DURATIONS,
    n_items: int = 20,
    seed: int = 7,
) -> dict:
    """Write the whole fixture directory; returns a small summary dict."""
    if len(set(durations)) != len(durations):
        raise ValueError("durations must be unique")
    out_dir = Path(out_dir)
    media_dir = out_dir / "media"
    media_dir.mkdir(parents=True, exist_ok=True)

    asset_ids = []
    manifest_rows = []
    durations_by_asset: dict[str, float] = {}
    for duration in durations:
        asset_id = f"clip{duration:g}".replace(".", "_")
        video_path = media_dir / f"{asset_id}.avi"
        if not video_path.exists():
            _make_video(video_path, duration)
            _make_audio(media_dir / f"{asset_id}.wav", duration)
        asset_ids.append(asset_id)
        durations_by_asset[asset_id] = float(duration)
        manifest_rows.append(
            {
                "asset_id": asset_id,
                "path": f"media/{asset_id}.avi",
                "duration": float(duration),
            }
        )
    manifest_path = out_dir / MEDIA_MANIFEST_NAME
    manifest_path.write_text(json.dumps({"assets": manifest_rows}, indent=1))

    items = [_item_spec(i, asset_ids) for i in range(n_items)]
    dataset_path = out_dir / DATASET_NAME
    with open(dataset_path, "w", encoding="utf-8") as f:
        for item in items:
            f.write(json.dumps(item, sort_keys=True) + "\n")

    bundle = build_bundle(items, durations_by_asset)
    (out_dir / BUNDLE_NAME).write_text(json.dumps(bundle, indent=1))

    backends = {
        binding: {"kind": "scripted", "bundle": BUNDLE_NAME} for binding in _SCRIPTED_BINDINGS
    }
    backends["planner1"]["media"] = ["frame"]  # video+text-only planner
    config = {
        "mode": "pipeline",
        "seed": seed,
        "clip_len": 10.0,
        "frame_count": 15,
        "gap_tolerance": 1.0,
        "workers": 4,
        "replay": "off",
        "cache_dir": "cache",
        "replay_dir": "replays",
        "dataset": DATASET_NAME,
        "media_manifest": MEDIA_MANIFEST_NAME,
        "backends": backends,
    }
    (out_dir / CONFIG_NAME).write_text(yaml.safe_dump(config, sort_keys=True))

    # The generated dataset must pass its own loader.
    loaded = load_dataset(dataset_path, load_media_manifest(manifest_path))
    assert len(loaded) == n_items

    return {
        "out_dir": str(out_dir),
        "assets": asset_ids,
        "items": n_items,
        "dataset": str(dataset_path),
        "media_manifest": str(manifest_path),
        "bundle": str(out_dir / BUNDLE_NAME),
        "config": str(out_dir / CONFIG_NAME),
    }
