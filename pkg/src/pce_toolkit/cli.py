from __future__ import annotations

import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import click
import typer
from pydantic import ValidationError
from rich.console import Console

from pce_toolkit.annotations import DEFAULT_MIN_CONF, parse_labels, read_chunk_labels, write_frame_labels
from pce_toolkit.encoder import DEFAULT_BUMP, DEFAULT_COMPRESSION
from pce_toolkit.errors import ParameterError, PceError
from pce_toolkit.evaluation import evaluate
from pce_toolkit.integrations.detection_providers import TemplateDetectionProvider
from pce_toolkit.logging_utils import configure_logging
from pce_toolkit.models.config import MOVING_CONTENT_OMP, EvalConfig, OmpConfig, RunConfig
from pce_toolkit.models.enums import DistributionKind, ExportMode, LogLevel, SweepAxis
from pce_toolkit.sensing import MatrixDistribution
from pce_toolkit.services.compress_service import compress_file, generate_matrix_file
from pce_toolkit.services.demo_service import run_demo
from pce_toolkit.services.label_service import build_dataset, merge_label_file
from pce_toolkit.services.reconstruct_service import reconstruct_files
from pce_toolkit.services.report_service import (
    ap_table,
    sweep_view,
    timing_table,
    write_ap_report,
    write_sweep_table,
)
from pce_toolkit.services.sweep_service import sweep
from pce_toolkit.settings import build_run_config
from pce_toolkit.synthetic import moving_objects_video
from pce_toolkit.video_io import load_video, save_video

app = typer.Typer(help="Pixel-wise coded exposure compressive video toolkit.", add_completion=False)
console = Console()
err_console = Console(stderr=True)
logger = logging.getLogger(__name__)


def _run(ctx: typer.Context) -> RunConfig:
    return ctx.obj if isinstance(ctx.obj, RunConfig) else RunConfig()


def _check_overrides(ctx: typer.Context, run: RunConfig) -> None:
    """Config-file keys must name options of the invoked subcommand."""

    if not run.overrides or ctx.invoked_subcommand is None:
        return
    command = ctx.command.get_command(ctx, ctx.invoked_subcommand)
    if command is None:
        return
    known = {param.name for param in command.params}
    unknown = sorted(set(run.overrides) - known)
    if unknown:
        raise ParameterError(
            f"{run.config_path}: unknown option(s) for {ctx.invoked_subcommand}: {', '.join(unknown)}",
            module="config",
        )
    ctx.default_map = {ctx.invoked_subcommand: dict(run.overrides)}


@app.callback()
def root(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(None, "--config", help="key=value file with subcommand defaults."),
    log_level: Optional[LogLevel] = typer.Option(None, "--log-level", help="Overrides PCE_LOG."),
    workers: Optional[int] = typer.Option(None, "--workers", min=1, help="Worker threads (default: CPU count)."),
) -> None:
    """Simulate PCE capture, reconstruct with OMP and score detections."""

    run = build_run_config(
        command=ctx.invoked_subcommand,
        config_path=config,
        log_level=log_level.value if log_level else None,
        workers=workers,
    )
    configure_logging(run.log_level)
    _check_overrides(ctx, run)
    ctx.obj = run
    logger.debug("run config: %s", run.model_dump())


def _distribution(kind: DistributionKind) -> MatrixDistribution:
    return MatrixDistribution(kind=kind)


def _db_text(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.2f}"


def _check_bump(compression: int, bump: int) -> None:
    if not 1 <= bump <= compression:
        raise ParameterError(
            f"need 1 <= bump <= compression, got bump={bump}, compression={compression}", module="cli"
        )


@app.command("gen-matrix")
def gen_matrix(
    out: Path = typer.Option(..., "--out", help="Destination PCESM1 file."),
    height: int = typer.Option(..., "--height", min=1),
    width: int = typer.Option(..., "--width", min=1),
    compression: int = typer.Option(DEFAULT_COMPRESSION, "--compression", min=1, help="Chunk length in frames."),
    bump: int = typer.Option(DEFAULT_BUMP, "--bump", min=1, help="Exposure length in frames."),
    seed: int = typer.Option(0, "--seed", min=0),
    dist: DistributionKind = typer.Option(DistributionKind.UNIFORM, "--dist"),
) -> None:
    """Generate one sensing matrix."""

    _check_bump(compression, bump)
    generate_matrix_file(
        out, height=height, width=width, chunk_len=compression, bump_len=bump, distribution=dist, seed=seed
    )
    console.print(f"[green]Wrote matrix[/green] {out}")


@app.command()
def compress(
    ctx: typer.Context,
    input_path: Path = typer.Option(..., "--in", help="PCEV1 file or PGM directory."),
    out: Path = typer.Option(..., "--out", help="Output directory."),
    compression: int = typer.Option(DEFAULT_COMPRESSION, "--compression", min=1),
    bump: int = typer.Option(DEFAULT_BUMP, "--bump", min=1),
    seed: int = typer.Option(0, "--seed", min=0, help="Base seed; chunk k uses seed + k."),
    dist: DistributionKind = typer.Option(DistributionKind.UNIFORM, "--dist"),
    export: ExportMode = typer.Option(ExportMode.BOTH, "--export"),
) -> None:
    """Encode a video into coded frames."""

    _check_bump(compression, bump)
    outcome = compress_file(
        input_path,
        out,
        compression=compression,
        bump=bump,
        seed=seed,
        distribution=dist,
        export=export,
        workers=_run(ctx).workers,
    )
    stats = outcome.stats
    console.print(
        f"[green]Coded frames:[/green] {stats.coded_frames} "
        f"(dropped {stats.dropped_frames} frame(s), payload ratio {stats.payload_ratio:.4f}, "
        f"entropy {stats.mean_entropy_bits:.3f} bits)"
    )
    console.print(f"Output: {out}")


@app.command()
def reconstruct(
    ctx: typer.Context,
    coded: Path = typer.Option(..., "--coded", help="PCEC1 raw-sums file."),
    matrix: Path = typer.Option(..., "--matrix", help="PCESM1 file or matrix directory."),
    out: Path = typer.Option(..., "--out", help="Output video (PCEV1 file or PGM directory)."),
    chunk: Optional[int] = typer.Option(None, "--chunk", min=0, help="Coded frame index for a single matrix."),
    patch: int = typer.Option(7, "--patch", min=1),
    stride: int = typer.Option(3, "--stride", min=1),
    sparsity: int = typer.Option(16, "--sparsity", min=1),
    tol: float = typer.Option(1e-3, "--tol", min=0.0),
    original: Optional[Path] = typer.Option(None, "--original", help="Source video for PSNR."),
    report_time: bool = typer.Option(False, "--report-time", help="Print per-frame timing."),
) -> None:
    """Recover frames from coded sums with patch-wise OMP."""

    cfg = OmpConfig(max_sparsity=sparsity, residual_tol=tol, patch_size=patch, patch_stride=stride)
    _, report = reconstruct_files(
        coded, matrix, out, cfg, chunk=chunk, original_path=original, workers=_run(ctx).workers
    )
    if report_time:
        console.print(timing_table(report))
    console.print(f"[green]Reconstructed[/green] {len(report.frames)} coded frame(s) -> {out}")


@app.command("merge-labels")
def merge_labels(
    labels: Path = typer.Option(..., "--labels", help="Per-frame label file."),
    out: Path = typer.Option(..., "--out", help="Chunk-label output file."),
    compression: int = typer.Option(DEFAULT_COMPRESSION, "--compression", min=1),
    min_conf: float = typer.Option(DEFAULT_MIN_CONF, "--min-conf", min=0.0, max=1.0),
    frames: Optional[int] = typer.Option(None, "--frames", min=0, help="Clip length; default last labelled frame."),
) -> None:
    """Merge per-frame boxes into one box per class per chunk."""

    chunks = merge_label_file(labels, out, compression=compression, min_conf=min_conf, frame_count=frames)
    console.print(f"[green]Wrote {len(chunks)} chunk label(s)[/green] -> {out}")


@app.command("evaluate")
def evaluate_command(
    ctx: typer.Context,
    det: Path = typer.Option(..., "--det", help="Chunk-label detections."),
    gt: Path = typer.Option(..., "--gt", help="Chunk-label ground truth."),
    out: Optional[Path] = typer.Option(None, "--out", help="report.json or report.csv"),
) -> None:
    """Score detections: AP at IoU 0.50-0.95 and mAP."""

    report = evaluate(read_chunk_labels(det), read_chunk_labels(gt), EvalConfig(), workers=_run(ctx).workers)
    console.print(ap_table(report))
    if out is not None:
        write_ap_report(report, out)
        console.print(f"Report: {out}")


def _parse_values(raw: str) -> list[int]:
    try:
        values = [int(token) for token in raw.split(",") if token.strip()]
    except ValueError as exc:
        raise ParameterError(f"--values must be comma-separated integers, got {raw!r}", module="cli") from exc
    if not values:
        raise ParameterError("--values is empty", module="cli")
    return values


@app.command("sweep")
def sweep_command(
    ctx: typer.Context,
    video: Path = typer.Option(..., "--video"),
    labels: Path = typer.Option(..., "--labels", help="Per-frame ground-truth labels."),
    axis: SweepAxis = typer.Option(..., "--axis"),
    values: str = typer.Option("2,3,4,5", "--values", help="Comma-separated axis values."),
    det_template: Optional[str] = typer.Option(None, "--det-template", help="Path with a {value} placeholder."),
    seed: int = typer.Option(0, "--seed", min=0),
    dist: DistributionKind = typer.Option(DistributionKind.UNIFORM, "--dist"),
    min_conf: Optional[float] = typer.Option(None, "--min-conf", min=0.0, max=1.0),
    out: Optional[Path] = typer.Option(None, "--out", help="table.json or table.csv"),
) -> None:
    """AP (or encoding statistics) across bump times or compression rates."""

    parsed = _parse_values(values)
    provider = TemplateDetectionProvider(det_template, min_conf=min_conf) if det_template else None
    clip = load_video(video)
    frame_labels = parse_labels(labels, bounds=(clip.width, clip.height))
    table = sweep(
        clip,
        frame_labels,
        axis,
        parsed,
        provider,
        base_seed=seed,
        distribution=_distribution(dist),
        workers=_run(ctx).workers,
    )
    console.print(sweep_view(table))
    if out is not None:
        write_sweep_table(table, out)
        console.print(f"Table: {out}")


@app.command()
def demo(
    ctx: typer.Context,
    seed: int = typer.Option(0, "--seed", min=0),
    compression: int = typer.Option(DEFAULT_COMPRESSION, "--compression", min=1),
    bump: int = typer.Option(DEFAULT_BUMP, "--bump", min=1),
    out: Optional[Path] = typer.Option(None, "--out", help="Directory for all demo artifacts."),
    moving: bool = typer.Option(False, "--moving", help="Use the sparse stride-1 OMP setting for moving content."),
) -> None:
    """Run synthesize -> compress -> reconstruct -> merge -> evaluate."""

    _check_bump(compression, bump)
    omp = MOVING_CONTENT_OMP if moving else OmpConfig()
    result = run_demo(
        seed=seed, compression=compression, bump=bump, out_dir=out, omp=omp, workers=_run(ctx).workers
    )
    console.print(timing_table(result.reconstruction))
    console.print(ap_table(result.report))
    console.print(
        f"[green]Demo done:[/green] PSNR {_db_text(result.mean_psnr_db)} dB "
        f"(repeated coded frame {_db_text(result.mean_naive_psnr_db)} dB), mAP {result.map:.4f}"
    )


@app.command()
def synth(
    out: Path = typer.Option(..., "--out", help="Output video (PCEV1 file or PGM directory)."),
    labels: Path = typer.Option(..., "--labels", help="Per-frame label output."),
    height: int = typer.Option(64, "--height", min=16),
    width: int = typer.Option(64, "--width", min=16),
    frames: int = typer.Option(312, "--frames", min=1),
    seed: int = typer.Option(0, "--seed", min=0),
) -> None:
    """Write a synthetic car/person clip with exact per-frame labels."""

    video, frame_labels = moving_objects_video(height, width, frames, seed)
    save_video(video, out)
    write_frame_labels(frame_labels, labels)
    console.print(f"[green]Wrote {frames} frame(s)[/green] -> {out}, labels -> {labels}")


@app.command("build-dataset")
def build_dataset_command(
    ctx: typer.Context,
    video: Path = typer.Option(..., "--video"),
    labels: Path = typer.Option(..., "--labels"),
    out: Path = typer.Option(..., "--out"),
    compression: int = typer.Option(DEFAULT_COMPRESSION, "--compression", min=1),
    bump: int = typer.Option(DEFAULT_BUMP, "--bump", min=1),
    seed: int = typer.Option(0, "--seed", min=0),
    dist: DistributionKind = typer.Option(DistributionKind.UNIFORM, "--dist"),
    min_conf: float = typer.Option(DEFAULT_MIN_CONF, "--min-conf", min=0.0, max=1.0),
    train_ratio: float = typer.Option(0.7, "--train-ratio", min=0.0, max=1.0),
    previews: bool = typer.Option(False, "--previews", help="Also write PNGs with boxes drawn."),
) -> None:
    """Compress a labelled clip into coded images, chunk labels and a split."""

    _check_bump(compression, bump)
    clip = load_video(video)
    frame_labels = parse_labels(labels, min_conf=min_conf, bounds=(clip.width, clip.height))
    summary = build_dataset(
        clip,
        frame_labels,
        out,
        compression=compression,
        bump=bump,
        seed=seed,
        distribution=_distribution(dist),
        train_ratio=train_ratio,
        previews=previews,
        workers=_run(ctx).workers,
    )
    console.print(
        f"[green]Dataset:[/green] {summary.coded_frames} coded frame(s), "
        f"{len(summary.train)} train / {len(summary.test)} test -> {out}"
    )


def _print_usage() -> None:
    command = typer.main.get_command(app)
    with click.Context(command, info_name="pce") as ctx:
        err_console.print(command.get_help(ctx), markup=False, highlight=False, soft_wrap=True)


def main(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and map failures onto exit codes: 1 validation, 2 I/O."""

    args = list(sys.argv[1:] if argv is None else argv)
    if not args:
        _print_usage()
        return 1
    try:
        result = app(args=args, prog_name="pce", standalone_mode=False)
    except click.exceptions.Abort:
        err_console.print("aborted")
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except PceError as exc:
        err_console.print(exc.qualified(), markup=False, highlight=False, soft_wrap=True)
        return 1
    except ValidationError as exc:
        err_console.print(f"config: {exc}", markup=False, highlight=False, soft_wrap=True)
        return 1
    except OSError as exc:
        err_console.print(f"io: {exc}", markup=False, highlight=False, soft_wrap=True)
        return 2
    return result if isinstance(result, int) else 0


def run() -> None:
    """Console-script entry point."""

    sys.exit(main())


if __name__ == "__main__":
    run()
