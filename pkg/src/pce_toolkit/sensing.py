"""Single-on sensing matrices: one contiguous exposure bump per pixel per chunk.

Only start times are stored; the binary M×N×T cube is implied by
``S(m, n, t) = 1 iff start <= t < start + bump_len``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from pce_toolkit.errors import DimensionError, FormatError, InvariantError, ParameterError
from pce_toolkit.models.common import FrozenModel
from pce_toolkit.models.enums import DistributionKind
from pce_toolkit.video_io import read_header

logger = logging.getLogger(__name__)

MODULE = "sensing"
SEED_MASK = (1 << 64) - 1
PCESM1_MAGIC = b"PCESM1"
PCESM1_HEADER = np.dtype(
    [
        ("magic", "S6"),
        ("height", "<u4"),
        ("width", "<u4"),
        ("chunk_len", "<u4"),
        ("bump_len", "<u4"),
        ("seed", "<u8"),
        ("dist", "u1"),
    ]
)
_DIST_TAGS = {DistributionKind.UNIFORM: 0, DistributionKind.GAUSSIAN: 1}
_TAG_DISTS = {tag: kind for kind, tag in _DIST_TAGS.items()}


class MatrixDistribution(FrozenModel):
    """Start-time distribution; the gaussian is centred on the legal range."""

    kind: DistributionKind = DistributionKind.UNIFORM

    @staticmethod
    def span(chunk_len: int, bump_len: int) -> int:
        """Number of legal start positions minus one."""

        return chunk_len - bump_len

    def mean(self, chunk_len: int, bump_len: int) -> float:
        return self.span(chunk_len, bump_len) / 2.0

    def stddev(self, chunk_len: int, bump_len: int) -> float:
        return self.span(chunk_len, bump_len) / 4.0


UNIFORM = MatrixDistribution(kind=DistributionKind.UNIFORM)
GAUSSIAN = MatrixDistribution(kind=DistributionKind.GAUSSIAN)


def chunk_seed(base_seed: int, chunk_index: int) -> int:
    """Seed of chunk `chunk_index`: base_seed + k, wrapped to 64 bits."""

    return (base_seed + chunk_index) & SEED_MASK


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; the bit stream is fixed for a given seed on every platform."""

    if seed < 0:
        raise ParameterError(f"seed must be non-negative, got {seed}", module=MODULE)
    return np.random.Generator(np.random.PCG64(seed & SEED_MASK))


@dataclass(frozen=True, eq=False)
class SensingMatrix:
    """Per-pixel exposure start frames for one chunk."""

    height: int
    width: int
    chunk_len: int
    bump_len: int
    start_times: np.ndarray
    seed: int = 0
    distribution: DistributionKind = DistributionKind.UNIFORM

    def __post_init__(self) -> None:
        if self.height < 1 or self.width < 1:
            raise ParameterError(f"matrix dims must be >= 1, got {self.height}x{self.width}", module=MODULE)
        if not 1 <= self.bump_len <= self.chunk_len:
            raise ParameterError(
                f"need 1 <= bump_len <= chunk_len, got bump_len={self.bump_len}, chunk_len={self.chunk_len}",
                module=MODULE,
            )
        starts = np.asarray(self.start_times)
        if starts.size != self.height * self.width:
            raise DimensionError(
                f"{starts.size} start times for a {self.height}x{self.width} matrix", module=MODULE
            )
        starts = starts.reshape(self.height, self.width)
        latest = self.chunk_len - self.bump_len
        bad = np.flatnonzero((starts < 0) | (starts > latest))
        if bad.size:
            idx = int(bad[0])
            raise InvariantError(
                f"start time {int(starts.flat[idx])} outside [0, {latest}]",
                pixel_index=idx,
                module=MODULE,
            )
        frozen = starts.astype(np.uint16, copy=True)
        frozen.flags.writeable = False
        object.__setattr__(self, "start_times", frozen)
        object.__setattr__(self, "seed", int(self.seed) & SEED_MASK)
        object.__setattr__(self, "distribution", DistributionKind(self.distribution))

    def mask_at(self, frame_index: int) -> np.ndarray:
        """Binary M×N mask of pixels exposed during `frame_index`."""

        if not 0 <= frame_index < self.chunk_len:
            raise ParameterError(
                f"frame index {frame_index} outside [0, {self.chunk_len})", module=MODULE
            )
        starts = self.start_times.astype(np.int64)
        return ((starts <= frame_index) & (frame_index < starts + self.bump_len)).astype(np.uint8)

    def cube(self) -> np.ndarray:
        """Full binary (T, M, N) sensing cube."""

        t = np.arange(self.chunk_len, dtype=np.int64)[:, None, None]
        starts = self.start_times.astype(np.int64)[None]
        return ((starts <= t) & (t < starts + self.bump_len)).astype(np.uint8)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SensingMatrix):
            return NotImplemented
        return (
            (self.height, self.width, self.chunk_len, self.bump_len, self.seed, self.distribution)
            == (other.height, other.width, other.chunk_len, other.bump_len, other.seed, other.distribution)
            and np.array_equal(self.start_times, other.start_times)
        )


def generate_matrix(
    height: int,
    width: int,
    chunk_len: int,
    bump_len: int,
    distribution: MatrixDistribution = UNIFORM,
    seed: int = 0,
) -> SensingMatrix:
    """Draw per-pixel start times; a deterministic function of all arguments."""

    if height < 1 or width < 1 or chunk_len < 1 or bump_len < 1:
        raise ParameterError("height, width, chunk_len and bump_len must be >= 1", module=MODULE)
    if bump_len > chunk_len:
        raise ParameterError(
            f"bump_len ({bump_len}) exceeds chunk_len ({chunk_len})", module=MODULE
        )
    rng = make_rng(seed)
    latest = MatrixDistribution.span(chunk_len, bump_len)
    if latest == 0:
        starts = np.zeros((height, width), dtype=np.uint16)
    elif distribution.kind is DistributionKind.UNIFORM:
        starts = rng.integers(0, latest, size=(height, width), endpoint=True)
    else:
        samples = rng.normal(
            distribution.mean(chunk_len, bump_len),
            distribution.stddev(chunk_len, bump_len),
            size=(height, width),
        )
        starts = np.clip(np.rint(samples), 0, latest)
    return SensingMatrix(
        height=height,
        width=width,
        chunk_len=chunk_len,
        bump_len=bump_len,
        start_times=starts.astype(np.uint16),
        seed=seed,
        distribution=distribution.kind,
    )


def save_matrix(matrix: SensingMatrix, path: Path) -> Path:
    """Write the PCESM1 container."""

    head = np.zeros(1, dtype=PCESM1_HEADER)
    head["magic"] = PCESM1_MAGIC
    head["height"] = matrix.height
    head["width"] = matrix.width
    head["chunk_len"] = matrix.chunk_len
    head["bump_len"] = matrix.bump_len
    head["seed"] = matrix.seed
    head["dist"] = _DIST_TAGS[matrix.distribution]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(head.tobytes())
        fh.write(matrix.start_times.astype("<u2").tobytes(order="C"))
    return path


def load_matrix(path: Path) -> SensingMatrix:
    """Read a PCESM1 container and re-validate every invariant."""

    path = Path(path)
    raw = path.read_bytes()
    head = read_header(raw, magic=PCESM1_MAGIC, header=PCESM1_HEADER, module=MODULE)
    tag = int(head["dist"])
    if tag not in _TAG_DISTS:
        raise FormatError(
            f"unknown distribution tag {tag}", offset=PCESM1_HEADER.fields["dist"][1], module=MODULE
        )
    height, width = int(head["height"]), int(head["width"])
    payload = raw[PCESM1_HEADER.itemsize :]
    expected = 2 * height * width
    if len(payload) != expected:
        raise DimensionError(
            f"{path.name}: {len(payload)} start-time bytes for a {height}x{width} matrix (need {expected})",
            module=MODULE,
        )
    starts = np.frombuffer(payload, dtype="<u2").reshape(height, width)
    return SensingMatrix(
        height=height,
        width=width,
        chunk_len=int(head["chunk_len"]),
        bump_len=int(head["bump_len"]),
        start_times=starts,
        seed=int(head["seed"]),
        distribution=_TAG_DISTS[tag],
    )
