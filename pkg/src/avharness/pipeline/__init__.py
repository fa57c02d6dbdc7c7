from .execution import (
    INVALID,
    ExecutorOutput,
    allocate_frames,
    build_executor_prompt,
    extract_letter,
    extract_reason,
    run_executor,
)
from .orchestrator import (
    PIPELINE_MODES,
    PerceptionMemo,
    PipelineOutcome,
    PipelineSettings,
    answer_question,
    planner_pairs,
)
from .planning import (
    PlanSegment,
    PlanSpec,
    build_planner_prompt,
    normalize_segments,
    parse_planner_output,
)
from .reflection import FinalAnswer, build_decider_prompt, reflect

__all__ = [
    "ExecutorOutput",
    "FinalAnswer",
    "INVALID",
    "PIPELINE_MODES",
    "PerceptionMemo",
    "PipelineOutcome",
    "PipelineSettings",
    "PlanSegment",
    "PlanSpec",
    "allocate_frames",
    "answer_question",
    "build_decider_prompt",
    "build_executor_prompt",
    "build_planner_prompt",
    "extract_letter",
    "extract_reason",
    "normalize_segments",
    "parse_planner_output",
    "planner_pairs",
    "reflect",
    "run_executor",
]
