from __future__ import annotations

import logging
from pathlib import Path
from uuid import uuid4

import numpy as np
import pytest

from pce_toolkit.encoder import (
    MATRIX_DIR,
    RAW_SUMS_NAME,
    MAX_BUMP,
    CodedFrame,
    attach_matrices,
    compression_stats,
    encode_chunk,
    encode_video,
    export_coded,
    load_coded,
    normalize_sums,
    save_coded_raw,
)
from pce_toolkit.errors import DimensionError, EmptyOutputError, ParameterError
from pce_toolkit.models.enums import CodedKind, ExportMode
from pce_toolkit.sensing import SensingMatrix, UNIFORM, generate_matrix
from pce_toolkit.video_io import Video


def _scratch() -> Path:
    root = Path("outputs") / "pytest_tmp" / str(uuid4())
    root.mkdir(parents=True, exist_ok=True)
    return root


def _random_video(rng: np.random.Generator, frames: int, height: int, width: int) -> Video:
    return Video(rng.integers(0, 256, size=(frames, height, width), dtype=np.uint8))


def test_single_frame_chunk_is_identity() -> None:
    """chunk_len = bump_len = 1 returns the frame itself."""

    video = _random_video(np.random.default_rng(1), 1, 5, 6)
    coded = encode_chunk(video, generate_matrix(5, 6, 1, 1))
    assert np.array_equal(coded.sums, video.pixels[0])


def test_constant_video_sums_and_normalizes() -> None:
    """V = 100 with bump 3 gives sums 300 and normalized 100."""

    video = Video(np.full((13, 4, 4), 100, dtype=np.uint8))
    coded = encode_chunk(video, generate_matrix(4, 4, 13, 3, UNIFORM, 9))
    assert (coded.sums == 300).all()
    assert (coded.normalized == 100).all()


def test_encoder_matches_brute_force_oracle() -> None:
    """1000 random instances equal a triple loop over the full binary cube."""

    rng = np.random.default_rng(2024)
    for trial in range(1000):
        height, width = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        chunk_len = int(rng.integers(1, 25))
        bump_len = int(rng.integers(1, chunk_len + 1))
        video = _random_video(rng, chunk_len, height, width)
        matrix = generate_matrix(height, width, chunk_len, bump_len, UNIFORM, trial)

        cube = matrix.cube()
        expected = np.zeros((height, width), dtype=np.int64)
        for m in range(height):
            for n in range(width):
                for t in range(chunk_len):
                    expected[m, n] += int(cube[t, m, n]) * int(video.pixels[t, m, n])

        coded = encode_chunk(video, matrix)
        assert np.array_equal(coded.sums.astype(np.int64), expected)
        assert coded.sums.max(initial=0) <= 255 * bump_len
        assert coded.normalized.max(initial=0) <= 255


def test_static_chunk_normalizes_to_its_frame() -> None:
    """Identical frames make the normalized coded frame equal that frame."""

    frame = np.random.default_rng(3).integers(0, 256, size=(6, 6), dtype=np.uint8)
    video = Video(np.repeat(frame[None], 13, axis=0))
    coded = encode_chunk(video, generate_matrix(6, 6, 13, 3, UNIFORM, 4))
    assert np.array_equal(coded.normalized, frame)


def test_normalization_rounds_half_away_and_never_overflows() -> None:
    """300/3 -> 100, 765/3 -> 255, 7/2 -> 4."""

    assert normalize_sums(np.array([300]), 3).tolist() == [100]
    assert normalize_sums(np.array([255 * 3]), 3).tolist() == [255]
    assert normalize_sums(np.array([7, 5]), 2).tolist() == [4, 3]


def test_default_capture_settings_give_twenty_frames() -> None:
    """64x64x260 at C=13, Tb=3 yields 20 coded frames at ratio 1/13."""

    video = Video(np.zeros((260, 64, 64), dtype=np.uint8))
    seq = encode_video(video, 13, 3, UNIFORM, base_seed=0)
    stats = compression_stats(seq)
    assert seq.count == 20
    assert stats.dropped_frames == 0
    assert stats.payload_ratio == pytest.approx(1 / 13)
    assert stats.output_bytes * 13 == stats.input_bytes


def test_trailing_partial_chunk_is_dropped_with_warning(monkeypatch, caplog) -> None:
    """T = 14, C = 13 emits one frame and warns about one dropped frame."""

    monkeypatch.setattr(logging.getLogger("pce_toolkit"), "propagate", True)
    caplog.set_level(logging.WARNING, logger="pce_toolkit")
    video = Video(np.zeros((14, 4, 4), dtype=np.uint8))
    seq = encode_video(video, 13, 3)
    assert seq.count == 1
    assert seq.dropped_frames == 1
    assert any("dropping 1 trailing frame" in rec.getMessage() for rec in caplog.records)


def test_too_short_video_is_empty_output() -> None:
    """Fewer frames than one chunk produce nothing."""

    with pytest.raises(EmptyOutputError):
        encode_video(Video(np.zeros((5, 2, 2), dtype=np.uint8)), 13, 3)


def test_chunks_use_consecutive_seeds_and_are_deterministic() -> None:
    """Chunk k is sensed with base_seed + k; reruns are bit-identical."""

    video = _random_video(np.random.default_rng(8), 39, 8, 8)
    first = encode_video(video, 13, 3, UNIFORM, base_seed=100, workers=1)
    second = encode_video(video, 13, 3, UNIFORM, base_seed=100, workers=3)
    assert [f.matrix.seed for f in first.frames] == [100, 101, 102]
    for a, b in zip(first.frames, second.frames):
        assert np.array_equal(a.sums, b.sums)
        assert a.matrix == b.matrix


def test_dimension_mismatch_is_rejected() -> None:
    """Chunk and matrix dims must agree."""

    with pytest.raises(DimensionError):
        encode_chunk(Video(np.zeros((13, 4, 4), dtype=np.uint8)), generate_matrix(4, 5, 13, 3))


def test_raw_export_round_trip() -> None:
    """PCEC1 reload reproduces the sums exactly."""

    video = _random_video(np.random.default_rng(5), 26, 7, 5)
    seq = encode_video(video, 13, 3, UNIFORM, base_seed=1)
    path = save_coded_raw(seq.frames, _scratch() / "sums.pcec")
    loaded = load_coded(path)
    assert [f.kind for f in loaded] == [CodedKind.RAW, CodedKind.RAW]
    for original, again in zip(seq.frames, loaded):
        assert np.array_equal(original.sums, again.sums)
        assert again.bump_len == 3


def test_export_both_writes_sums_normalized_and_matrices() -> None:
    """Both-mode export can be reloaded and re-paired with its matrices."""

    video = _random_video(np.random.default_rng(6), 26, 6, 6)
    seq = encode_video(video, 13, 3, UNIFORM, base_seed=3)
    out = _scratch()
    export_coded(seq, out, ExportMode.BOTH)

    assert (out / RAW_SUMS_NAME).is_file()
    assert len(list((out / MATRIX_DIR).glob("*.pcesm"))) == 2
    normalized = load_coded(out / "coded_normalized.pcev", bump_len=3)
    assert normalized[1].kind is CodedKind.NORMALIZED
    assert np.array_equal(normalized[1].normalized, seq.frames[1].normalized)

    paired = attach_matrices(load_coded(out / RAW_SUMS_NAME), out)
    assert paired[1].matrix == seq.frames[1].matrix


def test_coded_frame_bound_is_enforced() -> None:
    """Raw sums above 255 * bump_len are impossible."""

    with pytest.raises(ParameterError):
        CodedFrame(sums=np.array([[256 * 2]]), bump_len=2)


def test_longest_bump_that_fits_sixteen_bits_is_exact() -> None:
    """At bump_len 257 a saturated pixel sums to 65535 without wrapping."""

    assert MAX_BUMP == 257
    video = Video(np.full((257, 1, 1), 255, dtype=np.uint8))
    seq = encode_video(video, 257, 257)
    assert int(seq.frames[0].sums[0, 0]) == 65535
    assert int(seq.frames[0].normalized[0, 0]) == 255


def test_bump_past_sixteen_bit_headroom_is_rejected() -> None:
    """255 * 300 does not fit in uint16, so the encoder refuses instead of wrapping."""

    video = Video(np.full((300, 1, 1), 255, dtype=np.uint8))
    with pytest.raises(ParameterError, match="overflow"):
        encode_video(video, 300, 300)
    with pytest.raises(ParameterError, match="overflow"):
        encode_chunk(video, generate_matrix(1, 1, 300, 300, UNIFORM, 0))
    with pytest.raises(ParameterError, match="overflow"):
        CodedFrame(sums=np.zeros((1, 1)), bump_len=300)


def test_attach_pairs_by_chunk_index_and_reports_gaps() -> None:
    """A missing chunk file is an error even when a later stray file keeps the count."""

    video = _random_video(np.random.default_rng(8), 52, 5, 5)
    seq = encode_video(video, 13, 3, UNIFORM, base_seed=1)
    out = _scratch()
    export_coded(seq, out, ExportMode.RAW)
    frames = load_coded(out / RAW_SUMS_NAME)

    paired = attach_matrices(frames[2:], out / MATRIX_DIR)
    assert [f.matrix for f in paired] == [seq.frames[2].matrix, seq.frames[3].matrix]

    (out / MATRIX_DIR / "chunk_00002.pcesm").unlink()
    (out / MATRIX_DIR / "chunk_00004.pcesm").write_bytes((out / MATRIX_DIR / "chunk_00003.pcesm").read_bytes())
    with pytest.raises(ParameterError, match=r"\[2\]"):
        attach_matrices(frames, out)


def test_entropy_statistics_are_reported() -> None:
    """A flat coded frame has zero entropy; random content has positive entropy."""

    flat = encode_video(Video(np.zeros((13, 8, 8), dtype=np.uint8)), 13, 3)
    noisy = encode_video(_random_video(np.random.default_rng(0), 13, 8, 8), 13, 3)
    assert compression_stats(flat).mean_entropy_bits == 0.0
    assert compression_stats(noisy).mean_entropy_bits > 0.0


def test_matrix_attached_to_each_frame() -> None:
    """Every coded frame carries the matrix that produced it."""

    seq = encode_video(Video(np.zeros((13, 3, 3), dtype=np.uint8)), 13, 3)
    assert isinstance(seq.frames[0].matrix, SensingMatrix)
