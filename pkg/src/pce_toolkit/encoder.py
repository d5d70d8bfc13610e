"""Pixel-wise coded exposure encoder.

Each chunk of `chunk_len` frames collapses into one coded frame whose
pixel holds the sum of the frames during its exposure bump:
I(m, n) = sum_t S(m, n, t) * V(m, n, t).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import entropy

from pce_toolkit.errors import DimensionError, EmptyOutputError, ParameterError
from pce_toolkit.models.enums import CodedKind, ExportMode, VideoFormat
from pce_toolkit.models.reports import EncodingStats
from pce_toolkit.sensing import (
    UNIFORM,
    MatrixDistribution,
    SensingMatrix,
    chunk_seed,
    generate_matrix,
    load_matrix,
    save_matrix,
)
from pce_toolkit.video_io import PCEV1_MAGIC, Video, load_video, read_header, save_frame, save_video
from pce_toolkit.workers.pool import ordered_map

logger = logging.getLogger(__name__)

MODULE = "pce-encoder"
DEFAULT_COMPRESSION = 13
DEFAULT_BUMP = 3
# Largest bump whose worst-case sum 255 * bump_len still fits in uint16.
MAX_BUMP = np.iinfo(np.uint16).max // 255
PCEC1_MAGIC = b"PCEC1"
PCEC1_HEADER = np.dtype(
    [
        ("magic", "S5"),
        ("height", "<u4"),
        ("width", "<u4"),
        ("frames", "<u4"),
        ("bump_len", "<u4"),
    ]
)
RAW_SUMS_NAME = "coded_sums.pcec"
NORMALIZED_NAME = "coded_normalized.pcev"
NORMALIZED_DIR = "coded_pgm"
MATRIX_DIR = "matrices"
MATRIX_NAME = "chunk_{index:05d}.pcesm"
CODED_FRAME_NAME = "coded_{index:05d}.pgm"


def check_bump(bump_len: int) -> None:
    if bump_len > MAX_BUMP:
        raise ParameterError(
            f"bump_len {bump_len} exceeds {MAX_BUMP}; coded sums would overflow 16 bits", module=MODULE
        )


def normalize_sums(sums: np.ndarray, bump_len: int) -> np.ndarray:
    """round(sums / bump_len), half away from zero, in exact integer arithmetic."""

    wide = sums.astype(np.int64)
    return ((2 * wide + bump_len) // (2 * bump_len)).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class CodedFrame:
    """One coded frame: u16 accumulation sums plus provenance."""

    sums: np.ndarray
    bump_len: int
    chunk_index: int = 0
    matrix: SensingMatrix | None = None
    kind: CodedKind = CodedKind.RAW

    def __post_init__(self) -> None:
        arr = np.asarray(self.sums)
        if arr.ndim != 2:
            raise DimensionError(f"coded sums must be 2-D, got {arr.shape}", module=MODULE)
        if self.bump_len < 1:
            raise ParameterError(f"bump_len must be >= 1, got {self.bump_len}", module=MODULE)
        if self.kind is CodedKind.RAW:
            check_bump(self.bump_len)
        limit = 255 * self.bump_len if self.kind is CodedKind.RAW else 255
        if arr.size and (arr.min() < 0 or arr.max() > limit):
            raise ParameterError(f"coded values must lie in [0, {limit}]", module=MODULE)
        if self.matrix is not None and (self.matrix.height, self.matrix.width) != arr.shape:
            raise DimensionError(
                f"matrix is {self.matrix.height}x{self.matrix.width}, coded frame is {arr.shape[0]}x{arr.shape[1]}",
                module=MODULE,
            )
        frozen = arr.astype(np.uint16, copy=True)
        frozen.flags.writeable = False
        object.__setattr__(self, "sums", frozen)

    @property
    def height(self) -> int:
        return int(self.sums.shape[0])

    @property
    def width(self) -> int:
        return int(self.sums.shape[1])

    @property
    def normalized(self) -> np.ndarray:
        """8-bit export value of every pixel."""

        if self.kind is CodedKind.NORMALIZED:
            return self.sums.astype(np.uint8)
        return normalize_sums(self.sums, self.bump_len)

    def with_matrix(self, matrix: SensingMatrix) -> "CodedFrame":
        return CodedFrame(
            sums=self.sums,
            bump_len=self.bump_len,
            chunk_index=self.chunk_index,
            matrix=matrix,
            kind=self.kind,
        )


@dataclass(frozen=True)
class CodedSequence:
    """All complete chunks of a clip encoded with shared parameters."""

    frames: tuple[CodedFrame, ...]
    height: int
    width: int
    source_frames: int
    chunk_len: int
    bump_len: int
    base_seed: int
    distribution: MatrixDistribution = field(default=UNIFORM)

    def __post_init__(self) -> None:
        for frame in self.frames:
            if (frame.height, frame.width, frame.bump_len) != (self.height, self.width, self.bump_len):
                raise DimensionError(
                    f"coded frame {frame.chunk_index} disagrees with sequence parameters", module=MODULE
                )

    @property
    def count(self) -> int:
        return len(self.frames)

    @property
    def dropped_frames(self) -> int:
        return self.source_frames - self.count * self.chunk_len

    def normalized_video(self) -> Video:
        """Normalized coded frames stacked as an 8-bit video."""

        return Video(np.stack([f.normalized for f in self.frames]))


def encode_chunk(chunk: Video, matrix: SensingMatrix) -> CodedFrame:
    """Exact integer coded frame of one chunk.

    A zero-padded cumulative sum over time turns each pixel's bump into
    one subtraction: sums = C[start + bump] - C[start].
    """

    if (chunk.height, chunk.width) != (matrix.height, matrix.width):
        raise DimensionError(
            f"chunk is {chunk.height}x{chunk.width}, matrix is {matrix.height}x{matrix.width}",
            module=MODULE,
        )
    if chunk.frame_count != matrix.chunk_len:
        raise DimensionError(
            f"chunk has {chunk.frame_count} frames, matrix expects {matrix.chunk_len}", module=MODULE
        )
    check_bump(matrix.bump_len)
    cumulative = np.zeros((chunk.frame_count + 1, chunk.height, chunk.width), dtype=np.uint32)
    np.cumsum(chunk.pixels, axis=0, dtype=np.uint32, out=cumulative[1:])
    starts = matrix.start_times.astype(np.intp)[None]
    upper = np.take_along_axis(cumulative, starts + matrix.bump_len, axis=0)[0]
    lower = np.take_along_axis(cumulative, starts, axis=0)[0]
    return CodedFrame(sums=(upper - lower).astype(np.uint16), bump_len=matrix.bump_len, matrix=matrix)


def encode_video(
    video: Video,
    chunk_len: int = DEFAULT_COMPRESSION,
    bump_len: int = DEFAULT_BUMP,
    distribution: MatrixDistribution = UNIFORM,
    base_seed: int = 0,
    *,
    workers: int = 1,
) -> CodedSequence:
    """Encode every complete chunk; chunk k is sensed with seed base_seed + k."""

    if not 1 <= bump_len <= chunk_len:
        raise ParameterError(
            f"need chunk_len >= bump_len >= 1, got chunk_len={chunk_len}, bump_len={bump_len}",
            module=MODULE,
        )
    check_bump(bump_len)
    count = video.frame_count // chunk_len
    if count == 0:
        raise EmptyOutputError(
            f"video has {video.frame_count} frames, fewer than one chunk of {chunk_len}", module=MODULE
        )
    dropped = video.frame_count - count * chunk_len
    if dropped:
        logger.warning("dropping %d trailing frame(s) that do not fill a chunk of %d", dropped, chunk_len)

    def _encode(index: int) -> CodedFrame:
        matrix = generate_matrix(
            video.height, video.width, chunk_len, bump_len, distribution, chunk_seed(base_seed, index)
        )
        coded = encode_chunk(video.chunk(index, chunk_len), matrix)
        logger.debug("encoded chunk %d (seed %d)", index, matrix.seed)
        return CodedFrame(sums=coded.sums, bump_len=bump_len, chunk_index=index, matrix=matrix)

    frames = ordered_map(_encode, range(count), workers=workers)
    return CodedSequence(
        frames=tuple(frames),
        height=video.height,
        width=video.width,
        source_frames=video.frame_count,
        chunk_len=chunk_len,
        bump_len=bump_len,
        base_seed=base_seed,
        distribution=distribution,
    )


def save_coded_raw(frames: list[CodedFrame] | tuple[CodedFrame, ...], path: Path) -> Path:
    """Write raw u16 sums as a PCEC1 container."""

    if not frames:
        raise EmptyOutputError("no coded frames to write", module=MODULE)
    first = frames[0]
    head = np.zeros(1, dtype=PCEC1_HEADER)
    head["magic"] = PCEC1_MAGIC
    head["height"] = first.height
    head["width"] = first.width
    head["frames"] = len(frames)
    head["bump_len"] = first.bump_len
    payload = np.stack([f.sums for f in frames]).astype("<u2")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(head.tobytes())
        fh.write(payload.tobytes(order="C"))
    return path


def load_coded(path: Path, *, bump_len: int | None = None) -> list[CodedFrame]:
    """Read a PCEC1 (raw sums) or PCEV1 (normalized export) coded container.

    Normalized frames carry no bump length on disk; pass `bump_len` to
    record it, otherwise 1 is assumed.
    """

    path = Path(path)
    raw = path.read_bytes()
    if raw[: len(PCEV1_MAGIC)] == PCEV1_MAGIC:
        video = load_video(path, VideoFormat.RAW)
        return [
            CodedFrame(sums=video.pixels[k], bump_len=bump_len or 1, chunk_index=k, kind=CodedKind.NORMALIZED)
            for k in range(video.frame_count)
        ]
    head = read_header(raw, magic=PCEC1_MAGIC, header=PCEC1_HEADER, module=MODULE)
    height, width = int(head["height"]), int(head["width"])
    count, bump = int(head["frames"]), int(head["bump_len"])
    payload = raw[PCEC1_HEADER.itemsize :]
    expected = 2 * height * width * count
    if len(payload) != expected:
        raise DimensionError(
            f"{path.name}: {len(payload)} payload bytes, header {height}x{width}x{count} needs {expected}",
            module=MODULE,
        )
    sums = np.frombuffer(payload, dtype="<u2").reshape(count, height, width)
    return [CodedFrame(sums=sums[k], bump_len=bump, chunk_index=k) for k in range(count)]


def matrix_path(out_dir: Path, chunk_index: int) -> Path:
    return Path(out_dir) / MATRIX_DIR / MATRIX_NAME.format(index=chunk_index)


def attach_matrices(
    frames: list[CodedFrame],
    matrix_source: Path,
    *,
    coded_name: str = "coded",
    module: str = MODULE,
) -> list[CodedFrame]:
    """Pair each coded frame with the matrix file named after its chunk index.

    `matrix_source` is the `export_coded` output directory or its
    `matrices/` subdirectory. Every frame must find its own file.
    """

    matrix_source = Path(matrix_source)
    directory = matrix_source / MATRIX_DIR if (matrix_source / MATRIX_DIR).is_dir() else matrix_source
    if not directory.is_dir():
        raise NotADirectoryError(f"matrix directory not found: {directory}")
    paths = [directory / MATRIX_NAME.format(index=f.chunk_index) for f in frames]
    missing = [f.chunk_index for f, path in zip(frames, paths) if not path.is_file()]
    if missing:
        raise ParameterError(f"{directory} has no matrix for chunk(s) {missing}", module=module)

    paired = []
    for frame, path in zip(frames, paths):
        matrix = load_matrix(path)
        if (matrix.height, matrix.width) != (frame.height, frame.width):
            raise DimensionError(
                f"{coded_name} frame {frame.chunk_index} is {frame.height}x{frame.width} "
                f"but {path} is {matrix.height}x{matrix.width}",
                module=module,
            )
        paired.append(frame.with_matrix(matrix))
    return paired


def export_coded(seq: CodedSequence, out_dir: Path, mode: ExportMode | str = ExportMode.BOTH) -> list[Path]:
    """Write coded frames and the matrices needed to reconstruct them under `out_dir`."""

    mode = ExportMode(mode)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if mode in (ExportMode.RAW, ExportMode.BOTH):
        written.append(save_coded_raw(seq.frames, out_dir / RAW_SUMS_NAME))
    if mode in (ExportMode.NORMALIZED, ExportMode.BOTH):
        written.append(save_video(seq.normalized_video(), out_dir / NORMALIZED_NAME, VideoFormat.RAW))
        for frame in seq.frames:
            written.append(
                save_frame(frame.normalized, out_dir / NORMALIZED_DIR / CODED_FRAME_NAME.format(index=frame.chunk_index))
            )
    for frame in seq.frames:
        if frame.matrix is not None:
            written.append(save_matrix(frame.matrix, matrix_path(out_dir, frame.chunk_index)))
    logger.info("exported %d coded frame(s) to %s (%s)", seq.count, out_dir, mode.value)
    return written


def frame_entropy(pixels: np.ndarray) -> float:
    """Shannon entropy in bits of an 8-bit image histogram."""

    hist = np.bincount(np.asarray(pixels, dtype=np.uint8).ravel(), minlength=256)
    return float(entropy(hist, base=2))


def compression_stats(seq: CodedSequence) -> EncodingStats:
    """Payload accounting of a coded sequence against its source clip."""

    pixels_per_frame = seq.height * seq.width
    input_bytes = seq.source_frames * pixels_per_frame
    output_bytes = seq.count * pixels_per_frame
    entropies = [frame_entropy(f.normalized) for f in seq.frames]
    return EncodingStats(
        coded_frames=seq.count,
        dropped_frames=seq.dropped_frames,
        input_bytes=input_bytes,
        output_bytes=output_bytes,
        payload_ratio=output_bytes / input_bytes,
        mean_entropy_bits=float(np.mean(entropies)) if entropies else 0.0,
    )
