"""Four-stage question answering: perceive, plan, execute, reflect."""

from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..gateway import Gateway
from ..media import MediaAsset, MediaCache, build_units
from ..perception import PerceptionResult, run_perception
from .execution import INVALID, run_executor
from .planning import PlanSpec, build_planner_prompt, normalize_segments, parse_planner_output
from .reflection import FinalAnswer, reflect

log = logging.getLogger(__name__)

PIPELINE_MODES = ("pipeline", "ablation_no_p1", "ablation_no_p2")


@dataclass(frozen=True)
class PipelineSettings:
    mode: str = "pipeline"
    planner_count: int = 2
    clip_len: float = 10.0
    frame_count: int = 15
    gap_tolerance: float = 1.0


def planner_pairs(mode: str, planner_count: int = 2) -> list[tuple[str, str]]:
    """(planner binding, executor binding) pairs active for a mode. Ablations
    drop one pair entirely; its backends are never contacted."""
    pairs = [(f"planner{i}", f"executor{i}") for i in range(1, planner_count + 1)]
    if mode == "pipeline":
        return pairs
    if mode == "ablation_no_p1":
        return pairs[1:]
    if mode == "ablation_no_p2":
        return pairs[:1] + pairs[2:]
    raise ValueError(f"not a pipeline mode: {mode!r}")


class PerceptionMemo:
    """Per-asset perception cache shared by concurrent suite workers."""

    def __init__(self, cache: MediaCache, gateway: Gateway, clip_len: float):
        self.cache = cache
        self.gateway = gateway
        self.clip_len = clip_len
        self._results: dict[str, PerceptionResult] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def get(self, asset: MediaAsset) -> PerceptionResult:
        with self._guard:
            lock = self._locks.setdefault(asset.id, threading.Lock())
        with lock:
            result = self._results.get(asset.id)
            if result is None:
                result = run_perception(asset, self.cache, self.gateway, self.clip_len)
                with self._guard:
                    self._results[asset.id] = result
            return result


@dataclass
class PipelineOutcome:
    plans: list[PlanSpec] = field(default_factory=list)
    executors: list = field(default_factory=list)
    final: FinalAnswer | None = None
    timings_ms: dict = field(default_factory=dict)


def answer_question(
    item_id: str,
    question: str,
    options: tuple[str, ...],
    asset: MediaAsset,
    cache: MediaCache,
    gateway: Gateway,
    settings: PipelineSettings,
    memo: PerceptionMemo | None = None,
) -> PipelineOutcome:
    """Run the full multi-agent pipeline for one (already shuffled) question."""
    if settings.mode not in PIPELINE_MODES:
        raise ValueError(f"not a pipeline mode: {settings.mode!r}")
    if memo is None:
        memo = PerceptionMemo(cache, gateway, settings.clip_len)
    timings: dict[str, float] = {}

    perception = memo.get(asset)
    frames = cache.sample_frames(asset, settings.frame_count)
    units = build_units(
        asset, frames, list(perception.segments),
        perception.transcript.sentences, perception.description_texts(),
    )

    pairs = planner_pairs(settings.mode, settings.planner_count)
    planner_request = build_planner_prompt(units, question, asset.duration)

    def plan_one(pair: tuple[str, str]) -> PlanSpec:
        planner_binding = pair[0]
        response = gateway.send(planner_binding, planner_request)
        timings[planner_binding] = timings.get(planner_binding, 0.0) + response.latency_ms
        spec = parse_planner_output(response.text, asset.duration, planner_binding)
        segments = normalize_segments(
            list(spec.segments), asset.duration, settings.gap_tolerance
        )
        return PlanSpec(
            planner_id=spec.planner_id,
            segments=tuple(segments),
            is_fallback=spec.is_fallback,
            raw_text=spec.raw_text,
            parse_warning=spec.parse_warning,
        )

    with ThreadPoolExecutor(max_workers=max(1, len(pairs))) as pool:
        plans = list(pool.map(plan_one, pairs))

    def execute_one(pair_plan) -> object:
        (_, executor_binding), plan = pair_plan
        output = run_executor(
            gateway, executor_binding, asset, cache, plan, perception,
            question, options, settings.frame_count,
        )
        timings[executor_binding] = timings.get(executor_binding, 0.0) + output.latency_ms
        return output

    with ThreadPoolExecutor(max_workers=max(1, len(pairs))) as pool:
        outputs = list(pool.map(execute_one, zip(pairs, plans)))

    if len(outputs) >= 2:
        final = reflect(gateway, "decider", units, plans, outputs, question, options)
        if final.source == "decider":
            timings["decider"] = timings.get("decider", 0.0) + final.latency_ms
    else:
        only = outputs[0]
        final = FinalAnswer(
            letter=only.letter, source="consensus", manual_review=not only.is_valid
        )

    return PipelineOutcome(plans=plans, executors=outputs, final=final, timings_ms=timings)
