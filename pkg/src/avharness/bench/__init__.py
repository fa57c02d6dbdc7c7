from .baselines import BASELINE_MODES, build_baseline_prompt, run_baseline
from .dataset import (
    ALL_TASKS,
    AUDIO_TYPES,
    CATEGORIES,
    CONTENT_TYPES,
    DURATION_BUCKETS,
    MIN_OPTIONS,
    TASKS_BY_CATEGORY,
    ManifestEntry,
    QAItem,
    duration_bucket,
    load_dataset,
    load_media_manifest,
)
from .shuffling import ShuffledItem, derive_seed, shuffle_options
from .suite import (
    RUN_MODES,
    RunConfig,
    process_item,
    read_journal,
    read_results,
    required_bindings,
    run_suite,
    validate_config,
)

__all__ = [
    "ALL_TASKS",
    "AUDIO_TYPES",
    "BASELINE_MODES",
    "CATEGORIES",
    "CONTENT_TYPES",
    "DURATION_BUCKETS",
    "MIN_OPTIONS",
    "ManifestEntry",
    "QAItem",
    "RUN_MODES",
    "RunConfig",
    "ShuffledItem",
    "TASKS_BY_CATEGORY",
    "build_baseline_prompt",
    "derive_seed",
    "duration_bucket",
    "load_dataset",
    "load_media_manifest",
    "process_item",
    "read_journal",
    "read_results",
    "required_bindings",
    "run_baseline",
    "run_suite",
    "shuffle_options",
    "validate_config",
]
