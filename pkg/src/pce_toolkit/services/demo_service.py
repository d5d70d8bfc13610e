from __future__ import annotations

import logging
import math
from pathlib import Path

import numpy as np

from pce_toolkit.annotations import build_chunk_labels, write_chunk_labels, write_frame_labels
from pce_toolkit.encoder import encode_video, export_coded
from pce_toolkit.evaluation import evaluate
from pce_toolkit.integrations.detection_providers import GroundTruthDetectionProvider
from pce_toolkit.integrations.filesystem_adapter import ensure_dir
from pce_toolkit.models.config import EvalConfig, OmpConfig
from pce_toolkit.models.reports import DemoResult
from pce_toolkit.reconstruction import naive_reconstruction, psnr, reconstruct_sequence
from pce_toolkit.sensing import UNIFORM
from pce_toolkit.services.report_service import write_json
from pce_toolkit.synthetic import moving_square_video
from pce_toolkit.video_io import save_video

logger = logging.getLogger(__name__)

DEMO_SIZE = 48
DEMO_CHUNKS = 2


def run_demo(
    *,
    seed: int = 0,
    compression: int = 13,
    bump: int = 3,
    out_dir: Path | None = None,
    omp: OmpConfig | None = None,
    size: int = DEMO_SIZE,
    chunks: int = DEMO_CHUNKS,
    workers: int = 1,
) -> DemoResult:
    """Synthesize, compress, reconstruct, merge labels and evaluate end to end."""

    omp = omp or OmpConfig()
    video, frame_labels = moving_square_video(size, size, chunks * compression, size=size // 4, seed=seed)
    logger.info("demo stage: compress (C=%d, Tb=%d, seed %d)", compression, bump, seed)
    sequence = encode_video(video, compression, bump, UNIFORM, seed, workers=workers)

    logger.info("demo stage: reconstruct %d coded frame(s)", sequence.count)
    originals = [video.chunk(frame.chunk_index, compression) for frame in sequence.frames]
    recovered, timing = reconstruct_sequence(sequence.frames, omp, originals=originals, workers=workers)

    logger.info("demo stage: merge labels and evaluate")
    truths = build_chunk_labels(frame_labels, compression, video.frame_count)
    detections = GroundTruthDetectionProvider().detections_for(compression, truths)
    report = evaluate(detections, truths, EvalConfig(), workers=workers)

    psnrs = [item.psnr_db for item in timing.frames if item.psnr_db is not None]
    mean_psnr = float(np.mean(psnrs)) if psnrs else math.inf
    naive = [
        psnr(original, naive_reconstruction(frame, compression))
        for original, frame in zip(originals, sequence.frames)
    ]
    mean_naive = float(np.mean(naive)) if naive else math.inf
    logger.info("demo PSNR: OMP %.2f dB, repeated coded frame %.2f dB", mean_psnr, mean_naive)

    if out_dir is not None:
        out_dir = ensure_dir(out_dir)
        save_video(video, out_dir / "original.pcev")
        write_frame_labels(frame_labels, out_dir / "frame_labels.txt")
        export_coded(sequence, out_dir / "coded")
        save_video(recovered, out_dir / "reconstructed.pcev")
        write_chunk_labels(truths, out_dir / "chunk_labels.txt")
        write_json(report, out_dir / "report.json")

    return DemoResult(
        seed=seed,
        compression=compression,
        bump=bump,
        coded_frames=sequence.count,
        psnr_db=psnrs,
        mean_psnr_db=mean_psnr,
        naive_psnr_db=naive,
        mean_naive_psnr_db=mean_naive,
        map=report.map,
        report=report,
        reconstruction=timing,
        output_dir=str(out_dir) if out_dir is not None else None,
    )
