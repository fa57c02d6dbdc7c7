"""Command line interface: run suites, generate fixtures, manage caches."""

from __future__ import annotations

import json
import logging
import shutil
import sys
import time
from pathlib import Path

import click
import yaml

from ..bench.dataset import load_dataset, load_media_manifest
from ..bench.suite import RunConfig, read_results, run_suite, validate_config
from ..errors import ConfigInvalid, DanglingAsset, DatasetInvalid, SchemaViolation
from ..gateway import Gateway, ReplayStore, backend_from_spec
from ..grading.grade import verdict_from_dict
from ..grading.report import build_tables, emit_report
from ..media import MediaCache
from ..media.toolchain import resolve_toolchain
from .fixtures import DEFAULT_DURATIONS, generate_fixtures
from .manifest import build_manifest, write_manifest

log = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_DATASET = 3

_CONFIG_KEYS = {
    "mode", "seed", "clip_len", "frame_count", "gap_tolerance", "workers",
    "planner_count", "replay", "cache_dir", "replay_dir", "retry_attempts",
    "retry_base_delay", "backends", "dataset", "media_manifest",
}


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def load_config(path: Path) -> dict:
    """Parse a YAML run config; relative paths inside it are anchored at the
    config file's directory by the caller."""
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigInvalid(f"config {path} must be a YAML mapping")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigInvalid(f"config {path}: unknown keys {sorted(unknown)}")
    return data


@click.group()
@click.option("--verbose", is_flag=True, help="Debug-level logging.")
def cli(verbose: bool) -> None:
    """Audio-visual QA harness."""
    _setup_logging(verbose)


@cli.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--dataset", "dataset_opt", type=click.Path(path_type=Path), default=None)
@click.option("--media-manifest", "manifest_opt", type=click.Path(path_type=Path), default=None)
@click.option("--mode", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--replay", type=click.Choice(["off", "record", "strict"]), default=None)
@click.option("--resume", is_flag=True, help="Continue an interrupted run directory.")
def cmd_run(
    config_path: Path,
    out_dir: Path,
    dataset_opt: Path | None,
    manifest_opt: Path | None,
    mode: str | None,
    seed: int | None,
    workers: int | None,
    replay: str | None,
    resume: bool,
) -> None:
    """Run a full suite and write results, verdicts, and reports to --out."""
    started = time.monotonic()
    try:
        raw = load_config(config_path)
        base_dir = Path(config_path).resolve().parent

        overrides = {"mode": mode, "seed": seed, "workers": workers, "replay": replay}
        for key, value in overrides.items():
            if value is not None:
                raw[key] = value

        dataset_path = Path(dataset_opt) if dataset_opt else base_dir / raw.get("dataset", "")
        manifest_path = (
            Path(manifest_opt) if manifest_opt else base_dir / raw.get("media_manifest", "")
        )
        if not raw.get("dataset") and not dataset_opt:
            raise ConfigInvalid("no dataset given (config 'dataset' or --dataset)")
        if not raw.get("media_manifest") and not manifest_opt:
            raise ConfigInvalid(
                "no media manifest given (config 'media_manifest' or --media-manifest)"
            )

        config_fields = {
            k: v for k, v in raw.items() if k not in ("dataset", "media_manifest")
        }
        config = RunConfig(**config_fields)
        validate_config(config)
    except ConfigInvalid as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except TypeError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    try:
        manifest = load_media_manifest(manifest_path)
        items = load_dataset(dataset_path, manifest)
    except (SchemaViolation, DanglingAsset, DatasetInvalid, OSError) as exc:
        click.echo(f"dataset error: {exc}", err=True)
        sys.exit(EXIT_DATASET)

    try:
        toolchain = resolve_toolchain()
        cache_dir = base_dir / config.cache_dir
        cache = MediaCache(cache_dir, toolchain)

        run_manifest = build_manifest(config, dataset_path, manifest_path, toolchain.name)
        write_manifest(out_dir, run_manifest, resume=resume)

        store = None
        if config.replay != "off":
            replay_root = (
                base_dir / config.replay_dir if config.replay_dir else cache_dir / "replays"
            )
            store = ReplayStore(replay_root)
        backends = {
            binding: backend_from_spec(binding, spec, base_dir)
            for binding, spec in sorted(config.backends.items())
        }
        gateway = Gateway(
            backends=backends,
            replay=config.replay,
            store=store,
            attempts=config.retry_attempts,
            base_delay=config.retry_base_delay,
        )
    except ConfigInvalid as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    try:
        run_suite(items, manifest, config, cache, gateway, out_dir, resume=resume)
    except ConfigInvalid as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except KeyboardInterrupt:
        click.echo("interrupted; re-run with --resume to continue", err=True)
        sys.exit(130)

    # Reports always reflect the whole results file, so a resumed run ends
    # with the same outputs a single uninterrupted run would have produced.
    records = read_results(out_dir)
    verdicts = [verdict_from_dict(r["verdict"]) for r in records]
    with open(out_dir / "verdicts.jsonl", "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record["verdict"], sort_keys=True) + "\n")
    tables = build_tables(verdicts, items)
    emit_report(tables, out_dir / "report.md", out_dir / "report.csv")
    (out_dir / "backend_stats.json").write_text(
        json.dumps(gateway.stats_snapshot(), indent=1, sort_keys=True)
    )

    n = len(verdicts)
    n_correct = sum(1 for v in verdicts if v.correct)
    n_failed = sum(1 for v in verdicts if v.failed)
    accuracy = 100.0 * n_correct / n if n else 0.0
    elapsed = time.monotonic() - started
    click.echo(
        f"{n} items, {n_correct} correct ({accuracy:.1f}%), {n_failed} failed, "
        f"{elapsed:.1f}s; outputs in {out_dir}"
    )


@cli.command("fixtures")
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option(
    "--duration", "durations", type=float, multiple=True,
    help="Asset durations in seconds; repeatable. Defaults to 7/10/43/61.",
)
@click.option("--items", "n_items", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
def cmd_fixtures(out_dir: Path, durations: tuple[float, ...], n_items: int, seed: int) -> None:
    """Generate synthetic media, a dataset, and a scripted backend config."""
    summary = generate_fixtures(
        out_dir,
        durations=tuple(durations) if durations else DEFAULT_DURATIONS,
        n_items=n_items,
        seed=seed,
    )
    click.echo(
        f"wrote {summary['items']} items over {len(summary['assets'])} assets; "
        f"try: avharness run --config {summary['config']} --out {out_dir}/run"
    )


@cli.group("cache")
def cmd_cache() -> None:
    """Inspect and maintain the extraction and replay caches."""


def _asset_dirs(cache_dir: Path) -> list[Path]:
    if not cache_dir.is_dir():
        return []
    return sorted(
        p for p in cache_dir.iterdir()
        if p.is_dir() and len(p.name) == 16 and all(c in "0123456789abcdef" for c in p.name)
    )


@cmd_cache.command("stats")
@click.option("--cache-dir", type=click.Path(path_type=Path), default=Path("cache"),
              show_default=True)
def cache_stats(cache_dir: Path) -> None:
    """Summarize what the extraction cache currently holds."""
    assets = _asset_dirs(cache_dir)
    n_frames = n_clips = total_bytes = 0
    for asset_dir in assets:
        for f in asset_dir.rglob("*"):
            if not f.is_file():
                continue
            total_bytes += f.stat().st_size
            if f.parent.name == "frames":
                n_frames += 1
            elif f.parent.name == "clips":
                n_clips += 1
    replays = cache_dir / "replays"
    n_replays = len(list(replays.glob("*.json"))) if replays.is_dir() else 0
    click.echo(
        f"{len(assets)} assets, {n_frames} frames, {n_clips} clips, "
        f"{n_replays} replay entries, {total_bytes / 1e6:.1f} MB in {cache_dir}"
    )


@cmd_cache.command("verify")
@click.option("--cache-dir", type=click.Path(path_type=Path), default=Path("cache"),
              show_default=True)
@click.option("--replay-dir", type=click.Path(path_type=Path), default=None,
              help="Replay store location; defaults to <cache-dir>/replays.")
def cache_verify(cache_dir: Path, replay_dir: Path | None) -> None:
    """Check every replay entry's structure and digest; nonzero on corruption."""
    root = Path(replay_dir) if replay_dir else Path(cache_dir) / "replays"
    if not root.is_dir():
        click.echo(f"no replay store at {root}")
        return
    store = ReplayStore(root)
    corrupt = store.verify()
    total = len(list(root.glob("*.json")))
    if corrupt:
        for name in corrupt:
            click.echo(f"corrupt: {name}", err=True)
        click.echo(f"{len(corrupt)} of {total} entries corrupt", err=True)
        sys.exit(1)
    click.echo(f"all {total} replay entries verified")


@cmd_cache.command("prune")
@click.option("--cache-dir", type=click.Path(path_type=Path), default=Path("cache"),
              show_default=True)
@click.option("--max-age-days", type=float, default=30.0, show_default=True)
def cache_prune(cache_dir: Path, max_age_days: float) -> None:
    """Drop per-asset extraction directories untouched for max-age-days."""
    cutoff = time.time() - max_age_days * 86400.0
    removed = 0
    for asset_dir in _asset_dirs(cache_dir):
        newest = max(
            (f.stat().st_mtime for f in asset_dir.rglob("*") if f.is_file()),
            default=asset_dir.stat().st_mtime,
        )
        if newest < cutoff:
            shutil.rmtree(asset_dir)
            removed += 1
    click.echo(f"removed {removed} asset directories from {cache_dir}")


if __name__ == "__main__":
    cli()
