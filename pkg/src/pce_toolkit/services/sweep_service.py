from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from pce_toolkit.annotations import build_chunk_labels
from pce_toolkit.contracts import FrameAnnotations
from pce_toolkit.encoder import DEFAULT_BUMP, DEFAULT_COMPRESSION, compression_stats, encode_video
from pce_toolkit.errors import ParameterError
from pce_toolkit.evaluation import evaluate
from pce_toolkit.models.config import EvalConfig
from pce_toolkit.models.enums import SweepAxis
from pce_toolkit.models.reports import SweepRow, SweepTable
from pce_toolkit.reconstruction import naive_reconstruction, psnr
from pce_toolkit.sensing import UNIFORM, MatrixDistribution
from pce_toolkit.services.ports import DetectionProvider
from pce_toolkit.video_io import Video

logger = logging.getLogger(__name__)

MODULE = "detection-eval"
BUMP_VALUES = (2, 3, 4, 5)
COMPRESSION_VALUES = (6, 10, 13, 16, 20, 24)


def axis_parameters(axis: SweepAxis, value: int) -> tuple[int, int]:
    """(compression, bump) of one sweep value; the other axis stays at its capture default."""

    if axis is SweepAxis.BUMP:
        return DEFAULT_COMPRESSION, value
    return value, DEFAULT_BUMP


def sweep(
    video: Video,
    labels: Sequence[FrameAnnotations],
    axis: SweepAxis,
    values: Sequence[int],
    provider: DetectionProvider | None = None,
    *,
    base_seed: int = 0,
    distribution: MatrixDistribution = UNIFORM,
    cfg: EvalConfig | None = None,
    workers: int = 1,
) -> SweepTable:
    """Re-encode the clip at each value and score it.

    With a provider each row holds AP per threshold and mean AP; without
    one it holds encoding statistics including the PSNR of the naive
    repeated-frame reconstruction.
    """

    cfg = cfg or EvalConfig()
    axis = SweepAxis(axis)
    if not values:
        raise ParameterError("sweep needs at least one value", module=MODULE)
    for value in values:
        compression, bump = axis_parameters(axis, value)
        if not 1 <= bump <= compression:
            raise ParameterError(
                f"{axis.value} value {value} gives bump {bump} > compression {compression}", module=MODULE
            )

    fixed_compression = DEFAULT_COMPRESSION if axis is SweepAxis.BUMP else None
    fixed_bump = DEFAULT_BUMP if axis is SweepAxis.COMPRESSION else None
    table = SweepTable(
        axis=axis,
        fixed_compression=fixed_compression,
        fixed_bump=fixed_bump,
        thresholds=list(cfg.iou_thresholds),
    )
    for value in values:
        compression, bump = axis_parameters(axis, value)
        sequence = encode_video(video, compression, bump, distribution, base_seed, workers=workers)
        stats = compression_stats(sequence)
        naive = [
            psnr(video.chunk(frame.chunk_index, compression), naive_reconstruction(frame, compression))
            for frame in sequence.frames
        ]
        stats = stats.model_copy(update={"naive_psnr_db": float(np.mean(naive))})
        row = SweepRow(value=value, compression=compression, bump=bump, stats=stats)
        if provider is not None:
            truths = build_chunk_labels(labels, compression, video.frame_count)
            detections = provider.detections_for(value, truths)
            if detections is None:
                logger.warning("sweep row %s=%d unavailable: no detections", axis.value, value)
                row = row.model_copy(update={"available": False, "note": "detections unavailable"})
            else:
                report = evaluate(detections, truths, cfg, workers=workers)
                row = row.model_copy(update={"ap": report.ap_by_threshold, "mean_ap": report.map})
        logger.info("sweep %s=%d done (C=%d, Tb=%d)", axis.value, value, compression, bump)
        table.rows.append(row)
    return table
