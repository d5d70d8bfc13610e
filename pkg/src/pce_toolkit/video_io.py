"""Grayscale video cubes and their bit-exact containers.

Two on-disk forms are supported: the single-file PCEV1 container
(magic + little-endian dims + frame-major payload) and a directory of
binary P5 PGM frames read in lexicographic filename order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from pce_toolkit.errors import DimensionError, FormatError, ParameterError
from pce_toolkit.models.enums import VideoFormat

logger = logging.getLogger(__name__)

MODULE = "video-io"
PCEV1_MAGIC = b"PCEV1"
PCEV1_HEADER = np.dtype(
    [("magic", "S5"), ("height", "<u4"), ("width", "<u4"), ("frames", "<u4")]
)
FRAME_NAME = "frame_{index:05d}.pgm"


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    if out is arr:
        out = arr.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class Frame:
    """A single M×N 8-bit luminance image."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels)
        if arr.ndim != 2:
            raise DimensionError(f"frame must be 2-D, got shape {arr.shape}", module=MODULE)
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"frame dims must be >= 1, got {arr.shape}", module=MODULE)
        object.__setattr__(self, "pixels", _frozen(_as_u8(arr)))

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True, eq=False)
class Video:
    """An M×N×T grayscale cube stored frame-major as a (T, M, N) uint8 array."""

    pixels: np.ndarray
    source: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels)
        if arr.ndim != 3:
            raise DimensionError(f"video must be 3-D (T, M, N), got shape {arr.shape}", module=MODULE)
        if min(arr.shape) < 1:
            raise DimensionError(f"video dims must be >= 1, got {arr.shape}", module=MODULE)
        object.__setattr__(self, "pixels", _frozen(_as_u8(arr)))

    @classmethod
    def from_bytes(cls, payload: bytes, *, height: int, width: int, frame_count: int) -> "Video":
        """Build a video from a frame-major, row-major byte payload."""

        expected = height * width * frame_count
        if len(payload) != expected:
            raise DimensionError(
                f"payload holds {len(payload)} bytes but {height}x{width}x{frame_count} needs {expected}",
                module=MODULE,
            )
        arr = np.frombuffer(payload, dtype=np.uint8).reshape(frame_count, height, width)
        return cls(arr)

    @property
    def height(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[2])

    @property
    def frame_count(self) -> int:
        return int(self.pixels.shape[0])

    def frame(self, index: int) -> Frame:
        """Return the time-slice at `index`."""

        if not 0 <= index < self.frame_count:
            raise ParameterError(
                f"frame index {index} outside [0, {self.frame_count})", module=MODULE
            )
        return Frame(self.pixels[index])

    def chunk(self, index: int, chunk_len: int) -> "Video":
        """Return complete chunk `index` of `chunk_len` consecutive frames."""

        start = index * chunk_len
        if chunk_len < 1 or index < 0 or start + chunk_len > self.frame_count:
            raise ParameterError(
                f"chunk {index} of length {chunk_len} exceeds {self.frame_count} frames",
                module=MODULE,
            )
        return Video(self.pixels[start : start + chunk_len])

    def to_bytes(self) -> bytes:
        return self.pixels.tobytes(order="C")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Video):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)


def _as_u8(arr: np.ndarray) -> np.ndarray:
    if arr.dtype == np.uint8:
        return arr
    if not np.issubdtype(arr.dtype, np.integer):
        raise ParameterError(f"pixels must be integers, got {arr.dtype}", module=MODULE)
    if arr.size and (arr.min() < 0 or arr.max() > 255):
        raise ParameterError("pixel values must lie in [0, 255]", module=MODULE)
    return arr.astype(np.uint8)


def read_header(raw: bytes, *, magic: bytes, header: np.dtype, module: str) -> np.void:
    """Decode a fixed little-endian header, validating magic and length."""

    if len(raw) < len(magic) or raw[: len(magic)] != magic:
        found = raw[: len(magic)]
        raise FormatError(
            f"expected magic {magic!r}, found {found!r}", offset=0, module=module
        )
    if len(raw) < header.itemsize:
        raise FormatError(
            f"header truncated: {len(raw)} of {header.itemsize} bytes", offset=len(raw), module=module
        )
    return np.frombuffer(raw, dtype=header, count=1)[0]


def _load_raw(path: Path) -> Video:
    raw = path.read_bytes()
    head = read_header(raw, magic=PCEV1_MAGIC, header=PCEV1_HEADER, module=MODULE)
    height, width, frames = int(head["height"]), int(head["width"]), int(head["frames"])
    for name, value in (("height", height), ("width", width), ("frames", frames)):
        if value < 1:
            offset = PCEV1_HEADER.fields[name][1]
            raise FormatError(f"{name} must be >= 1, got {value}", offset=offset, module=MODULE)
    video = Video.from_bytes(
        raw[PCEV1_HEADER.itemsize :], height=height, width=width, frame_count=frames
    )
    return Video(video.pixels, source=str(path))


def _save_raw(video: Video, path: Path) -> None:
    head = np.zeros(1, dtype=PCEV1_HEADER)
    head["magic"] = PCEV1_MAGIC
    head["height"] = video.height
    head["width"] = video.width
    head["frames"] = video.frame_count
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(head.tobytes())
        fh.write(video.to_bytes())


def _pgm_header_fields(raw: bytes, name: str) -> list[tuple[int, int]]:
    """(value, byte offset) of width, height and maxval after the P5 magic."""

    fields: list[tuple[int, int]] = []
    pos = 2
    while len(fields) < 3:
        while raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while raw[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise FormatError(f"{name}: malformed PGM header", offset=start, module=MODULE)
        fields.append((int(raw[start:pos]), start))
    return fields


def load_frame(path: Path) -> Frame:
    """Read one binary P5 PGM with maxval 255."""

    raw = path.read_bytes()
    if raw[:2] != b"P5":
        raise FormatError(f"{path.name}: expected P5 signature, found {raw[:2]!r}", offset=0, module=MODULE)
    maxval, offset = _pgm_header_fields(raw, path.name)[2]
    if maxval != 255:
        raise FormatError(f"{path.name}: maxval must be 255, found {maxval}", offset=offset, module=MODULE)
    with Image.open(path) as img:
        if img.mode != "L":
            raise FormatError(
                f"{path.name}: expected maxval 255 (8-bit), Pillow decoded mode {img.mode}",
                offset=2,
                module=MODULE,
            )
        return Frame(np.array(img, dtype=np.uint8))


def save_frame(frame: Frame | np.ndarray, path: Path) -> Path:
    """Write one frame as binary P5 PGM."""

    pixels = frame.pixels if isinstance(frame, Frame) else Frame(frame).pixels
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(pixels)).save(path, format="PPM")
    return path


def list_pgm_frames(directory: Path) -> list[Path]:
    """PGM files of a sequence directory in lexicographic filename order."""

    if not directory.is_dir():
        raise NotADirectoryError(f"PGM sequence directory not found: {directory}")
    return sorted(
        (p for p in directory.iterdir() if p.is_file() and p.suffix.lower() == ".pgm"),
        key=lambda p: p.name,
    )


def _load_pgm(path: Path) -> Video:
    paths = list_pgm_frames(path)
    if not paths:
        raise DimensionError(f"no .pgm frames in {path}", module=MODULE)
    frames = [load_frame(p) for p in paths]
    first = frames[0]
    for p, frame in zip(paths, frames):
        if (frame.height, frame.width) != (first.height, first.width):
            raise DimensionError(
                f"{p.name} is {frame.height}x{frame.width}, "
                f"expected {first.height}x{first.width} like {paths[0].name}",
                module=MODULE,
            )
    return Video(np.stack([f.pixels for f in frames]), source=str(path))


def _save_pgm(video: Video, path: Path) -> None:
    path.mkdir(parents=True, exist_ok=True)
    stale = list_pgm_frames(path)
    if stale:
        logger.info("removing %d existing frame(s) from %s", len(stale), path)
        for old in stale:
            old.unlink()
    for index in range(video.frame_count):
        save_frame(video.pixels[index], path / FRAME_NAME.format(index=index))


def infer_format(path: Path) -> VideoFormat:
    """Directories are PGM sequences, files are PCEV1 containers."""

    return VideoFormat.PGM if path.is_dir() or path.suffix == "" else VideoFormat.RAW


def load_video(path: Path, fmt: VideoFormat | str | None = None) -> Video:
    """Load a video, preserving pixel values bit-exactly."""

    path = Path(path)
    fmt = VideoFormat(fmt) if fmt is not None else infer_format(path)
    logger.debug("loading %s video from %s", fmt.value, path)
    if fmt is VideoFormat.RAW:
        return _load_raw(path)
    return _load_pgm(path)


def save_video(video: Video, path: Path, fmt: VideoFormat | str | None = None) -> Path:
    """Store a video so that `load_video` returns identical dims and pixels."""

    path = Path(path)
    fmt = VideoFormat(fmt) if fmt is not None else infer_format(path)
    if fmt is VideoFormat.RAW:
        _save_raw(video, path)
    else:
        _save_pgm(video, path)
    logger.debug("saved %dx%dx%d video to %s", video.height, video.width, video.frame_count, path)
    return path
