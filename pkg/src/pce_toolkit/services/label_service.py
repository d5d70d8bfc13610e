from __future__ import annotations

import logging
from collections import Counter
from pathlib import Path

from pce_toolkit.annotations import (
    build_chunk_labels,
    parse_labels,
    render_labelled_frame,
    write_chunk_labels,
)
from pce_toolkit.contracts import ChunkLabel, FrameAnnotations
from pce_toolkit.encoder import CODED_FRAME_NAME, compression_stats, encode_video
from pce_toolkit.errors import ParameterError
from pce_toolkit.integrations.filesystem_adapter import ensure_dir
from pce_toolkit.models.reports import DatasetSummary
from pce_toolkit.sensing import UNIFORM, MatrixDistribution, make_rng
from pce_toolkit.video_io import Video, save_frame

logger = logging.getLogger(__name__)

IMAGES_DIR = "images"
LABELS_DIR = "labels"
PREVIEWS_DIR = "previews"
LABEL_NAME = "coded_{index:05d}.txt"
PREVIEW_NAME = "coded_{index:05d}.png"


def merge_label_file(
    labels_path: Path,
    out_path: Path,
    *,
    compression: int,
    min_conf: float | None = None,
    frame_count: int | None = None,
) -> list[ChunkLabel]:
    """Merge a per-frame label file into chunk labels and write them."""

    frames = parse_labels(labels_path, min_conf=min_conf)
    chunks = build_chunk_labels(frames, compression, frame_count)
    write_chunk_labels(chunks, out_path)
    logger.info("merged %d frame(s) into %d chunk label(s) at %s", len(frames), len(chunks), out_path)
    return chunks


def split_indices(count: int, train_ratio: float, seed: int) -> tuple[list[int], list[int]]:
    """Seeded shuffle split into sorted train and test index lists."""

    if not 0.0 <= train_ratio <= 1.0:
        raise ParameterError(f"train ratio must lie in [0, 1], got {train_ratio}", module="dataset")
    order = make_rng(seed).permutation(count)
    cut = int(round(count * train_ratio))
    return sorted(int(i) for i in order[:cut]), sorted(int(i) for i in order[cut:])


def build_dataset(
    video: Video,
    frame_labels: list[FrameAnnotations],
    out_dir: Path,
    *,
    compression: int = 13,
    bump: int = 3,
    seed: int = 0,
    distribution: MatrixDistribution = UNIFORM,
    train_ratio: float = 0.7,
    previews: bool = False,
    workers: int = 1,
) -> DatasetSummary:
    """Compress a labelled clip into a detection dataset of coded frames.

    Layout: ``images/`` one PGM per coded frame, ``labels/`` one chunk-label
    file per coded frame, ``train.txt``/``test.txt`` with image paths
    relative to `out_dir`, optional ``previews/`` PNGs with boxes drawn.
    """

    out_dir = ensure_dir(out_dir)
    sequence = encode_video(video, compression, bump, distribution, seed, workers=workers)
    chunks = build_chunk_labels(frame_labels, compression, video.frame_count)
    images_dir = ensure_dir(out_dir / IMAGES_DIR)
    labels_dir = ensure_dir(out_dir / LABELS_DIR)

    names: list[str] = []
    class_counts: Counter[str] = Counter()
    for frame, label in zip(sequence.frames, chunks):
        image_name = CODED_FRAME_NAME.format(index=frame.chunk_index)
        save_frame(frame.normalized, images_dir / image_name)
        write_chunk_labels([label], labels_dir / LABEL_NAME.format(index=frame.chunk_index))
        if previews:
            render_labelled_frame(
                frame.normalized,
                label.boxes,
                out_dir / PREVIEWS_DIR / PREVIEW_NAME.format(index=frame.chunk_index),
            )
        class_counts.update(box.class_name for box in label.boxes)
        names.append(f"{IMAGES_DIR}/{image_name}")

    train_idx, test_idx = split_indices(len(names), train_ratio, seed)
    train = [names[i] for i in train_idx]
    test = [names[i] for i in test_idx]
    (out_dir / "train.txt").write_text("".join(f"{name}\n" for name in train), encoding="utf-8")
    (out_dir / "test.txt").write_text("".join(f"{name}\n" for name in test), encoding="utf-8")
    logger.info("dataset at %s: %d train, %d test", out_dir, len(train), len(test))
    return DatasetSummary(
        compression=compression,
        bump=bump,
        seed=seed,
        coded_frames=sequence.count,
        train=train,
        test=test,
        boxes_per_class=dict(sorted(class_counts.items())),
        stats=compression_stats(sequence),
        output_dir=str(out_dir),
    )
