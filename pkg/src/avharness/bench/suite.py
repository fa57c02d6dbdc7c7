"""Suite driver: shuffle, answer, grade, persist: one JSONL record per item.

Records land in results.jsonl in dataset order regardless of worker
scheduling; a journal of completed item ids makes interrupted runs resumable
without touching already-written records. One item's failure never aborts the
suite: the record is written with status "failed" and graded incorrect."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..errors import ConfigInvalid
from ..gateway import Gateway
from ..grading.grade import Verdict, failed_verdict, grade, verdict_to_dict
from ..media import MediaCache
from ..pipeline import (
    PIPELINE_MODES,
    PerceptionMemo,
    PipelineSettings,
    answer_question,
    planner_pairs,
)
from .baselines import BASELINE_MODES, run_baseline
from .dataset import ManifestEntry, QAItem
from .shuffling import shuffle_options

log = logging.getLogger(__name__)

RUN_MODES = PIPELINE_MODES + BASELINE_MODES


@dataclass
class RunConfig:
    """Fully resolved run settings (config file merged with CLI flags)."""

    mode: str = "pipeline"
    seed: int = 0
    clip_len: float = 10.0
    frame_count: int = 15
    gap_tolerance: float = 1.0
    workers: int = 4
    planner_count: int = 2
    replay: str = "off"
    cache_dir: str = "cache"
    replay_dir: str | None = None
    retry_attempts: int = 3
    retry_base_delay: float = 0.5
    backends: dict[str, dict] = field(default_factory=dict)

    def pipeline_settings(self) -> PipelineSettings:
        return PipelineSettings(
            mode=self.mode,
            planner_count=self.planner_count,
            clip_len=self.clip_len,
            frame_count=self.frame_count,
            gap_tolerance=self.gap_tolerance,
        )


def required_bindings(mode: str, planner_count: int = 2) -> set[str]:
    """Role bindings a mode cannot run without. The grader is always optional:
    without it, non-clean answers grade incorrect with a manual-review flag."""
    if mode in PIPELINE_MODES:
        needed = {"translator", "descriptor"}
        pairs = planner_pairs(mode, planner_count)
        for planner_binding, executor_binding in pairs:
            needed.add(planner_binding)
            needed.add(executor_binding)
        if len(pairs) >= 2:
            needed.add("decider")
        return needed
    if mode == "baseline_video" or mode == "baseline_audio":
        return {"executor"}
    if mode == "baseline_subtitle":
        return {"executor", "translator"}
    raise ConfigInvalid(f"unknown mode {mode!r}")


def validate_config(config: RunConfig) -> None:
    if config.mode not in RUN_MODES:
        raise ConfigInvalid(f"unknown mode {config.mode!r}; expected one of {RUN_MODES}")
    if config.replay not in ("off", "record", "strict"):
        raise ConfigInvalid(f"unknown replay mode {config.replay!r}")
    if config.clip_len <= 0:
        raise ConfigInvalid("clip_len must be positive")
    if config.frame_count < 1:
        raise ConfigInvalid("frame_count must be >= 1")
    if config.workers < 1:
        raise ConfigInvalid("workers must be >= 1")
    if config.planner_count < 1:
        raise ConfigInvalid("planner_count must be >= 1")
    if config.gap_tolerance < 0:
        raise ConfigInvalid("gap_tolerance must be >= 0")
    missing = required_bindings(config.mode, config.planner_count) - set(config.backends)
    if missing:
        raise ConfigInvalid(
            f"mode {config.mode!r} needs backend bindings {sorted(missing)}"
        )


def _plan_to_dict(plan) -> dict:
    return {
        "planner": plan.planner_id,
        "raw_text": plan.raw_text,
        "is_fallback": plan.is_fallback,
        "parse_warning": plan.parse_warning,
        "segments": [
            {"start": s.start, "end": s.end, "reasoning": s.reasoning} for s in plan.segments
        ],
    }


def _executor_to_dict(output) -> dict:
    return {
        "executor": output.executor_id,
        "letter": output.letter,
        "reason": output.reason,
        "raw_text": output.raw_text,
    }


def process_item(
    item: QAItem,
    manifest: dict[str, ManifestEntry],
    config: RunConfig,
    cache: MediaCache,
    gateway: Gateway,
    memo: PerceptionMemo,
) -> tuple[dict, Verdict]:
    """Answer and grade one item. Faults become a failed record, not an
    exception."""
    shuffled = shuffle_options(item, config.seed)
    record: dict = {
        "item_id": item.id,
        "asset_id": item.asset_id,
        "mode": config.mode,
        "question": item.question,
        "options": list(shuffled.options),
        "gold_letter": shuffled.gold_letter,
        "permutation": list(shuffled.permutation),
        "seed_used": shuffled.seed_used,
        "plans": [],
        "executors": [],
        "final": None,
        "baseline": None,
        "answer_text": None,
        "timings_ms": {},
    }
    stage = "probe"
    try:
        asset = cache.probe(manifest[item.asset_id].path)
        if config.mode in PIPELINE_MODES:
            stage = "pipeline"
            outcome = answer_question(
                item.id, item.question, shuffled.options, asset, cache, gateway,
                config.pipeline_settings(), memo,
            )
            record["plans"] = [_plan_to_dict(p) for p in outcome.plans]
            record["executors"] = [_executor_to_dict(o) for o in outcome.executors]
            final = outcome.final
            record["final"] = {
                "letter": final.letter,
                "source": final.source,
                "decider_raw": final.decider_raw,
                "manual_review": final.manual_review,
            }
            record["timings_ms"] = dict(sorted(outcome.timings_ms.items()))
            answer_text = final.letter
            flag_manual = final.manual_review
        else:
            stage = "baseline"
            text, latency_ms = run_baseline(
                shuffled, config.mode, asset, cache, gateway, config.frame_count
            )
            record["baseline"] = {"raw_text": text}
            record["timings_ms"] = {"executor": latency_ms}
            answer_text = text
            flag_manual = False
        record["answer_text"] = answer_text
        stage = "grade"
        verdict = grade(shuffled, answer_text, gateway)
        if flag_manual and not verdict.manual_review:
            verdict = replace(verdict, manual_review=True)
        record["status"] = "ok"
        record["failed_stage"] = None
        record["error"] = None
    except Exception as exc:
        log.exception("item %s failed at stage %s", item.id, stage)
        verdict = failed_verdict(item.id)
        record["status"] = "failed"
        record["failed_stage"] = stage
        record["error"] = f"{type(exc).__name__}: {exc}"
    record["verdict"] = verdict_to_dict(verdict)
    return record, verdict


def read_journal(path: Path) -> list[str]:
    if not path.is_file():
        return []
    return [line.strip() for line in path.read_text().splitlines() if line.strip()]


def run_suite(
    items: list[QAItem],
    manifest: dict[str, ManifestEntry],
    config: RunConfig,
    cache: MediaCache,
    gateway: Gateway,
    run_dir: Path,
    resume: bool = False,
) -> list[dict]:
    """Execute every not-yet-journaled item; returns the records produced by
    this invocation (resumed runs return only the new ones)."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    results_path = run_dir / "results.jsonl"
    journal_path = run_dir / "journal.log"

    completed: set[str] = set()
    if resume:
        completed = set(read_journal(journal_path))
    elif results_path.exists() and results_path.stat().st_size > 0:
        raise ConfigInvalid(
            f"{results_path} already has records; pass resume to continue that run"
        )

    todo = [item for item in items if item.id not in completed]
    if completed:
        log.info("resuming: %d items done, %d to go", len(completed), len(todo))
    memo = PerceptionMemo(cache, gateway, config.clip_len)

    records: list[dict] = []
    with open(results_path, "a", encoding="utf-8") as results_f, \
            open(journal_path, "a", encoding="utf-8") as journal_f:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = [
                pool.submit(process_item, item, manifest, config, cache, gateway, memo)
                for item in todo
            ]
            try:
                # Futures resolve in any order; writing in submission order
                # keeps results.jsonl deterministic run to run.
                for item, future in zip(todo, futures):
                    record, _ = future.result()
                    results_f.write(json.dumps(record, sort_keys=True) + "\n")
                    results_f.flush()
                    journal_f.write(item.id + "\n")
                    journal_f.flush()
                    records.append(record)
            except KeyboardInterrupt:
                log.warning("interrupted; journal has %d completed items", len(records))
                pool.shutdown(wait=False, cancel_futures=True)
                raise
    return records


def read_results(run_dir: Path) -> list[dict]:
    results_path = Path(run_dir) / "results.jsonl"
    records = []
    with open(results_path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                records.append(json.loads(line))
    return records
