from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from pce_toolkit.encoder import CodedSequence, compression_stats, encode_video, export_coded
from pce_toolkit.models.enums import DistributionKind, ExportMode
from pce_toolkit.models.reports import EncodingStats
from pce_toolkit.sensing import MatrixDistribution, SensingMatrix, generate_matrix, save_matrix
from pce_toolkit.video_io import load_video

logger = logging.getLogger(__name__)


@dataclass
class CompressOutcome:
    """Encoded sequence plus what was written for it."""

    sequence: CodedSequence
    stats: EncodingStats
    written: list[Path] = field(default_factory=list)


def generate_matrix_file(
    out_path: Path,
    *,
    height: int,
    width: int,
    chunk_len: int,
    bump_len: int,
    distribution: DistributionKind = DistributionKind.UNIFORM,
    seed: int = 0,
) -> SensingMatrix:
    """Generate one sensing matrix and store it as PCESM1."""

    matrix = generate_matrix(
        height, width, chunk_len, bump_len, MatrixDistribution(kind=distribution), seed
    )
    save_matrix(matrix, out_path)
    logger.info("wrote %dx%d matrix (T=%d, Tb=%d, seed %d) to %s", height, width, chunk_len, bump_len, seed, out_path)
    return matrix


def compress_file(
    video_path: Path,
    out_dir: Path,
    *,
    compression: int,
    bump: int,
    seed: int = 0,
    distribution: DistributionKind = DistributionKind.UNIFORM,
    export: ExportMode = ExportMode.BOTH,
    workers: int = 1,
) -> CompressOutcome:
    """Load a clip, encode every complete chunk and export it under `out_dir`."""

    video = load_video(video_path)
    sequence = encode_video(
        video,
        chunk_len=compression,
        bump_len=bump,
        distribution=MatrixDistribution(kind=distribution),
        base_seed=seed,
        workers=workers,
    )
    written = export_coded(sequence, out_dir, export)
    return CompressOutcome(sequence=sequence, stats=compression_stats(sequence), written=written)
