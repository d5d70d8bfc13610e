"""IoU, all-point AP and threshold-averaged mAP over chunk-level boxes."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from pce_toolkit.contracts import BoundingBox, ChunkLabel, class_id_for
from pce_toolkit.errors import AlignmentError, ParameterError
from pce_toolkit.models.config import EvalConfig
from pce_toolkit.models.reports import APReport, ClassReport, ThresholdCounts
from pce_toolkit.workers.pool import ordered_map

logger = logging.getLogger(__name__)

MODULE = "detection-eval"


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0 when disjoint."""

    inter_w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    inter_h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if inter_w <= 0.0 or inter_h <= 0.0:
        return 0.0
    inter = inter_w * inter_h
    return inter / (a.area + b.area - inter)


def _confidence(box: BoundingBox) -> float:
    return 1.0 if box.confidence is None else box.confidence


def _by_confidence(detections: Sequence[BoundingBox]) -> list[int]:
    # sorted() is stable, so equal confidences keep input order.
    return sorted(range(len(detections)), key=lambda i: -_confidence(detections[i]))


def match_detections(
    detections: Sequence[BoundingBox],
    truths: Sequence[BoundingBox],
    threshold: float,
) -> list[bool]:
    """Greedy matching; returns the hit flag of each detection in input order.

    Detections are visited by descending confidence and each takes the
    unmatched truth of highest IoU, if that IoU reaches `threshold`.
    """

    hits = [False] * len(detections)
    taken = [False] * len(truths)
    for det_idx in _by_confidence(detections):
        best, best_iou = -1, threshold
        for truth_idx, truth in enumerate(truths):
            if taken[truth_idx]:
                continue
            overlap = iou(detections[det_idx], truth)
            if overlap >= best_iou and (best < 0 or overlap > best_iou):
                best, best_iou = truth_idx, overlap
        if best >= 0:
            taken[best] = True
            hits[det_idx] = True
    return hits


def ap_from_ranked_hits(hits: Sequence[bool], truth_count: int) -> float | None:
    """Area under the precision envelope for hits already ranked by confidence.

    None when there is nothing to score; 0 when either side is empty.
    """

    if truth_count == 0 and not hits:
        return None
    if truth_count == 0 or not hits:
        return 0.0
    flags = np.asarray(hits, dtype=bool)
    tp = np.cumsum(flags)
    fp = np.cumsum(~flags)
    recall = tp / float(truth_count)
    precision = tp / np.maximum(tp + fp, np.finfo(np.float64).eps)

    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    for i in range(mpre.size - 1, 0, -1):
        mpre[i - 1] = max(mpre[i - 1], mpre[i])
    steps = np.flatnonzero(mrec[1:] != mrec[:-1])
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def average_precision(
    detections: Sequence[BoundingBox],
    truths: Sequence[BoundingBox],
    threshold: float,
) -> float | None:
    """AP of one class on one image at one IoU threshold."""

    hits = match_detections(detections, truths, threshold)
    ranked = [hits[i] for i in _by_confidence(detections)]
    return ap_from_ranked_hits(ranked, len(truths))


@dataclass(frozen=True)
class _Cell:
    ap: float | None
    counts: ThresholdCounts


def _score_cell(
    pairs: Sequence[tuple[list[BoundingBox], list[BoundingBox]]],
    threshold: float,
) -> _Cell:
    """Pool greedy matches of every chunk, then rank them all by confidence."""

    pooled: list[tuple[float, bool]] = []
    truth_count = 0
    for dets, truths in pairs:
        truth_count += len(truths)
        hits = match_detections(dets, truths, threshold)
        pooled.extend((_confidence(det), hit) for det, hit in zip(dets, hits))
    order = sorted(range(len(pooled)), key=lambda i: -pooled[i][0])
    ranked = [pooled[i][1] for i in order]
    tp = sum(ranked)
    return _Cell(
        ap=ap_from_ranked_hits(ranked, truth_count),
        counts=ThresholdCounts(threshold=threshold, tp=tp, fp=len(ranked) - tp, fn=truth_count - tp),
    )


def _aligned(detections: Sequence[ChunkLabel], truths: Sequence[ChunkLabel]) -> list[tuple[ChunkLabel, ChunkLabel | None]]:
    truth_by_chunk = {label.chunk_index: label for label in truths}
    det_by_chunk: dict[int, ChunkLabel] = {}
    for label in detections:
        if label.chunk_index in det_by_chunk:
            merged = det_by_chunk[label.chunk_index].boxes + label.boxes
            det_by_chunk[label.chunk_index] = ChunkLabel(chunk_index=label.chunk_index, boxes=merged)
        else:
            det_by_chunk[label.chunk_index] = label
    missing = sorted(set(det_by_chunk) - set(truth_by_chunk))
    if missing:
        raise AlignmentError(missing, module=MODULE)
    return [(truth_by_chunk[idx], det_by_chunk.get(idx)) for idx in sorted(truth_by_chunk)]


def evaluate(
    detections: Sequence[ChunkLabel],
    truths: Sequence[ChunkLabel],
    cfg: EvalConfig | None = None,
    *,
    workers: int = 1,
) -> APReport:
    """Per-class AP at every threshold, pooled over chunks, and the overall mAP.

    Classes with neither truths nor detections are reported but left out
    of every mean; with no applicable class the mAP is 0.
    """

    cfg = cfg or EvalConfig()
    aligned = _aligned(detections, truths)
    try:
        class_ids = [class_id_for(name) for name in cfg.classes]
    except KeyError as exc:
        raise ParameterError(f"unknown class {exc.args[0]!r} in evaluation config", module=MODULE) from exc

    per_class = {
        cid: [
            (det.boxes_of(cid) if det is not None else [], truth.boxes_of(cid))
            for truth, det in aligned
        ]
        for cid in class_ids
    }
    grid = [(cid, thr) for cid in class_ids for thr in cfg.iou_thresholds]
    cells = ordered_map(lambda item: _score_cell(per_class[item[0]], item[1]), grid, workers=workers)

    n_thr = len(cfg.iou_thresholds)
    rows: list[ClassReport] = []
    for pos, (name, cid) in enumerate(zip(cfg.classes, class_ids)):
        class_cells = cells[pos * n_thr : (pos + 1) * n_thr]
        truth_count = sum(len(t) for _, t in per_class[cid])
        det_count = sum(len(d) for d, _ in per_class[cid])
        applicable = truth_count > 0 or det_count > 0
        aps = [cell.ap for cell in class_cells] if applicable else [None] * n_thr
        rows.append(
            ClassReport(
                class_name=name,
                applicable=applicable,
                truth_count=truth_count,
                detection_count=det_count,
                ap=aps,
                mean_ap=float(np.mean(aps)) if applicable else None,
                counts=[cell.counts for cell in class_cells],
            )
        )

    scored = [row for row in rows if row.applicable]
    if scored:
        by_threshold = [float(np.mean([row.ap[i] for row in scored])) for i in range(n_thr)]
        overall = float(np.mean(by_threshold))
    else:
        logger.warning("no class has ground truth or detections; mAP reported as 0")
        by_threshold = [0.0] * n_thr
        overall = 0.0
    logger.info("evaluated %d chunk(s): mAP %.4f", len(aligned), overall)
    return APReport(
        thresholds=list(cfg.iou_thresholds),
        classes=rows,
        ap_by_threshold=by_threshold,
        map=overall,
    )
