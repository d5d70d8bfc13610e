from __future__ import annotations

from pathlib import Path
from uuid import uuid4

import numpy as np
import pytest

from pce_toolkit.annotations import read_chunk_labels
from pce_toolkit.errors import ParameterError
from pce_toolkit.services.demo_service import run_demo
from pce_toolkit.services.label_service import build_dataset, split_indices
from pce_toolkit.synthetic import block_video, moving_objects_video, moving_square_video
from pce_toolkit.video_io import load_frame


def _scratch() -> Path:
    root = Path("outputs") / "pytest_tmp" / str(uuid4())
    root.mkdir(parents=True, exist_ok=True)
    return root


def test_synthetic_labels_match_rendered_pixels() -> None:
    """The label box covers exactly the square painted over the background."""

    video, labels = moving_square_video(32, 32, 20, size=8, seed=6, background=100)
    for t in (0, 7, 19):
        for box in labels[t].boxes:
            patch = video.pixels[t, int(box.y_min) : int(box.y_max), int(box.x_min) : int(box.x_max)]
            assert np.unique(patch).size == 1
            assert int(patch[0, 0]) != 100


def test_synthetic_clip_is_seeded() -> None:
    a, la = moving_objects_video(32, 48, 13, seed=9)
    b, lb = moving_objects_video(32, 48, 13, seed=9)
    assert a == b and la == lb


def test_block_video_levels() -> None:
    video = block_video(4, 6, 2, levels=(1, 2, 3, 4))
    assert video.pixels[1].tolist() == [[1, 1, 1, 2, 2, 2]] * 2 + [[3, 3, 3, 4, 4, 4]] * 2
    with pytest.raises(ParameterError):
        block_video(4, 4, 1, levels=(1, 2))


def test_split_is_seeded_and_disjoint() -> None:
    train, test = split_indices(10, 0.7, seed=1)
    assert (train, test) == split_indices(10, 0.7, seed=1)
    assert len(train) == 7 and sorted(train + test) == list(range(10))
    with pytest.raises(ParameterError):
        split_indices(10, 1.5, seed=1)


def test_dataset_layout_and_labels() -> None:
    """One coded image and one chunk-label file per coded frame."""

    video, labels = moving_objects_video(32, 48, 39, seed=2)
    out = _scratch()
    summary = build_dataset(video, labels, out, compression=13, bump=3, seed=4, train_ratio=0.5)
    assert summary.coded_frames == 3
    assert summary.boxes_per_class == {"car": 3, "person": 3}
    assert len(summary.train) + len(summary.test) == 3
    image = load_frame(out / summary.train[0])
    assert (image.height, image.width) == (32, 48)
    chunk = read_chunk_labels(out / "labels" / "coded_00001.txt")
    assert [label.chunk_index for label in chunk] == [0, 1]
    assert len(chunk[1].boxes) == 2


def test_demo_recovers_and_scores() -> None:
    """The synthetic pipeline scores perfect echoed detections and reports PSNR."""

    result = run_demo(seed=1, out_dir=_scratch())
    assert result.coded_frames == 2
    assert result.map == 1.0
    assert len(result.psnr_db) == 2
    assert result.mean_psnr_db > 12.0
    assert len(result.naive_psnr_db) == 2
    assert result.mean_naive_psnr_db == pytest.approx(sum(result.naive_psnr_db) / 2)
    assert Path(result.output_dir, "report.json").is_file()


def test_demo_at_higher_compression_completes() -> None:
    result = run_demo(seed=2, compression=20)
    assert result.coded_frames == 2
    assert all(value > 0.0 for value in result.psnr_db)
    assert result.output_dir is None
