"""Patch-wise OMP reconstruction over an orthonormal 3D-DCT dictionary.

Vectors over a spatio-temporal patch are ordered frame-major then
row-major, index ``t * p * p + i * p + j``, matching the (T, M, N)
layout of `Video`. Atoms are ordered by frequency (u, v, w)
lexicographically: u vertical, v horizontal, w temporal.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.fft import dct
from scipy.linalg import lstsq

from pce_toolkit.encoder import CodedFrame
from pce_toolkit.errors import DimensionError, MeasurementError, ParameterError
from pce_toolkit.models.config import OmpConfig
from pce_toolkit.models.enums import CodedKind, OmpStop
from pce_toolkit.models.reports import FrameTiming, ReconstructionReport
from pce_toolkit.sensing import SensingMatrix
from pce_toolkit.video_io import Video
from pce_toolkit.workers.pool import ordered_map

logger = logging.getLogger(__name__)

MODULE = "omp-reconstruction"
# Relative thresholds for "numerically zero" column norms and correlations.
_ZERO_COLUMN = 1e-12
_NEGLIGIBLE = 1e-12


def dct_basis(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis; column f is the f-th cosine over n samples."""

    return dct(np.eye(n), norm="ortho", axis=0).T


@dataclass(frozen=True, eq=False)
class Dictionary3D:
    """Separable 3D-DCT-II basis as a square column matrix."""

    patch_size: int
    chunk_len: int
    atoms: np.ndarray

    @property
    def patch_pixels(self) -> int:
        return self.patch_size * self.patch_size

    @property
    def atom_count(self) -> int:
        return int(self.atoms.shape[1])

    @cached_property
    def cumulative(self) -> np.ndarray:
        """Running sum over time of the atom rows, shape (T + 1, p*p, K)."""

        per_frame = self.atoms.reshape(self.chunk_len, self.patch_pixels, self.atom_count)
        out = np.zeros((self.chunk_len + 1, self.patch_pixels, self.atom_count))
        np.cumsum(per_frame, axis=0, out=out[1:])
        return out


def build_dictionary(patch_size: int = 7, chunk_len: int = 13) -> Dictionary3D:
    """Build the orthonormal separable DCT-II dictionary for p×p×T patches."""

    if patch_size < 1 or chunk_len < 1:
        raise ParameterError(
            f"patch_size and chunk_len must be >= 1, got {patch_size}, {chunk_len}", module=MODULE
        )
    spatial = dct_basis(patch_size)
    temporal = dct_basis(chunk_len)
    size = patch_size * patch_size * chunk_len
    atoms = np.einsum("tw,iu,jv->tijuvw", temporal, spatial, spatial).reshape(size, size)
    atoms = np.ascontiguousarray(atoms)
    atoms.flags.writeable = False
    return Dictionary3D(patch_size=patch_size, chunk_len=chunk_len, atoms=atoms)


@dataclass(frozen=True, eq=False)
class PatchProblem:
    """Coded sums of one p×p window and the exposure windows that produced them."""

    y: np.ndarray
    starts: np.ndarray
    bump_len: int
    chunk_len: int

    def __post_init__(self) -> None:
        starts = np.asarray(self.starts)
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if starts.ndim != 2 or starts.shape[0] != starts.shape[1]:
            raise DimensionError(f"patch starts must be square, got {starts.shape}", module=MODULE)
        if y.size != starts.size:
            raise DimensionError(f"{y.size} measurements for a {starts.shape} patch", module=MODULE)
        if starts.size and int(starts.max()) > self.chunk_len - self.bump_len:
            raise ParameterError("patch start times exceed chunk_len - bump_len", module=MODULE)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "starts", starts.astype(np.intp))

    @classmethod
    def from_window(cls, coded: CodedFrame, matrix: SensingMatrix, row: int, col: int, size: int) -> "PatchProblem":
        return cls(
            y=coded.sums[row : row + size, col : col + size],
            starts=matrix.start_times[row : row + size, col : col + size],
            bump_len=matrix.bump_len,
            chunk_len=matrix.chunk_len,
        )

    @property
    def patch_size(self) -> int:
        return int(self.starts.shape[0])

    @cached_property
    def phi(self) -> np.ndarray:
        """Binary p² × (p²·T) measurement operator; bump_len ones per row."""

        pixels = self.patch_size * self.patch_size
        op = np.zeros((pixels, pixels * self.chunk_len), dtype=np.uint8)
        flat = self.starts.ravel()
        for pix in range(pixels):
            for t in range(flat[pix], flat[pix] + self.bump_len):
                op[pix, t * pixels + pix] = 1
        return op

    def effective_dictionary(self, dictionary: Dictionary3D) -> np.ndarray:
        """Φ·D without forming Φ: each row sums bump_len atom rows."""

        if dictionary.patch_size != self.patch_size or dictionary.chunk_len != self.chunk_len:
            raise DimensionError(
                f"dictionary is {dictionary.patch_size}x{dictionary.patch_size}x{dictionary.chunk_len}, "
                f"patch is {self.patch_size}x{self.patch_size}x{self.chunk_len}",
                module=MODULE,
            )
        flat = self.starts.ravel()
        pix = np.arange(flat.size)
        cum = dictionary.cumulative
        return cum[flat + self.bump_len, pix] - cum[flat, pix]


@dataclass(frozen=True, eq=False)
class OmpResult:
    """Sparse code and the trace of the pursuit that produced it."""

    coefficients: np.ndarray
    support: tuple[int, ...]
    residual: np.ndarray
    residual_norms: tuple[float, ...]
    stop: OmpStop
    support_history: tuple[tuple[int, ...], ...] = ()

    @property
    def iterations(self) -> int:
        return len(self.support)

    @property
    def rank_deficient(self) -> bool:
        return self.stop is OmpStop.RANK_DEFICIENT


def omp(A: np.ndarray, y: np.ndarray, *, max_sparsity: int, residual_tol: float) -> OmpResult:
    """Orthogonal matching pursuit on an arbitrary (possibly masked) dictionary.

    Atoms are scored by |a_j . r| / ||a_j||; numerically zero columns are
    never selected. A support whose least squares is rank deficient is
    rejected and the loop stops with the previous solution.
    """

    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if A.ndim != 2 or A.shape[0] != y.size:
        raise DimensionError(f"dictionary {A.shape} does not match {y.size} measurements", module=MODULE)
    if max_sparsity < 1:
        raise ParameterError(f"max_sparsity must be >= 1, got {max_sparsity}", module=MODULE)

    coefficients = np.zeros(A.shape[1])
    y_norm = float(np.linalg.norm(y))
    if y_norm == 0.0:
        return OmpResult(coefficients, (), y.copy(), (0.0,), OmpStop.ZERO_MEASUREMENT)

    norms = np.linalg.norm(A, axis=0)
    usable = norms > _ZERO_COLUMN * max(float(norms.max(initial=0.0)), 1.0)
    safe_norms = np.where(usable, norms, 1.0)
    target = residual_tol * y_norm

    support: list[int] = []
    history: list[tuple[int, ...]] = []
    solution = np.zeros(0)
    residual = y.copy()
    norms_trace = [y_norm]
    stop = OmpStop.SPARSITY
    while len(support) < max_sparsity:
        scores = np.abs(A.T @ residual) / safe_norms
        scores[~usable] = -1.0
        scores[support] = -1.0
        best = int(np.argmax(scores))
        if scores[best] <= _NEGLIGIBLE * y_norm:
            stop = OmpStop.EXHAUSTED
            break
        trial = support + [best]
        candidate, _, rank, _ = lstsq(A[:, trial], y)
        if rank < len(trial):
            logger.debug("rank-deficient support at size %d; keeping previous solution", len(trial))
            stop = OmpStop.RANK_DEFICIENT
            break
        support, solution = trial, candidate
        residual = y - A[:, support] @ solution
        norms_trace.append(float(np.linalg.norm(residual)))
        history.append(tuple(support))
        if norms_trace[-1] <= target:
            stop = OmpStop.TOLERANCE
            break
    coefficients[support] = solution
    return OmpResult(
        coefficients=coefficients,
        support=tuple(support),
        residual=residual,
        residual_norms=tuple(norms_trace),
        stop=stop,
        support_history=tuple(history),
    )


def omp_solve(problem: PatchProblem, dictionary: Dictionary3D, cfg: OmpConfig) -> OmpResult:
    """Sparse-code one patch problem over the masked dictionary Φ·D."""

    return omp(
        problem.effective_dictionary(dictionary),
        problem.y,
        max_sparsity=cfg.max_sparsity,
        residual_tol=cfg.residual_tol,
    )


def window_starts(length: int, patch: int, stride: int) -> list[int]:
    """Window offsets at `stride`; the last one is shifted inward to end at the edge."""

    if length < patch:
        raise ParameterError(f"image side {length} is smaller than patch size {patch}", module=MODULE)
    starts = list(range(0, length - patch + 1, stride))
    if starts[-1] != length - patch:
        starts.append(length - patch)
    return starts


def _check_inputs(coded: CodedFrame, matrix: SensingMatrix | None, dictionary: Dictionary3D, cfg: OmpConfig) -> SensingMatrix:
    if coded.kind is not CodedKind.RAW:
        raise MeasurementError(
            "coded frame holds normalized 8-bit values; reconstruction needs the raw 16-bit sums "
            "(export with --export raw or both and pass the .pcec file)",
            module=MODULE,
        )
    matrix = matrix if matrix is not None else coded.matrix
    if matrix is None:
        raise ParameterError("no sensing matrix supplied for the coded frame", module=MODULE)
    if (matrix.height, matrix.width) != (coded.height, coded.width):
        raise DimensionError(
            f"coded frame is {coded.height}x{coded.width} but matrix is {matrix.height}x{matrix.width}",
            module=MODULE,
        )
    if matrix.bump_len != coded.bump_len:
        raise DimensionError(
            f"coded bump_len {coded.bump_len} differs from matrix bump_len {matrix.bump_len}", module=MODULE
        )
    if dictionary.chunk_len != matrix.chunk_len or dictionary.patch_size != cfg.patch_size:
        raise ParameterError(
            f"dictionary ({dictionary.patch_size}, {dictionary.chunk_len}) does not match "
            f"patch size {cfg.patch_size} and chunk_len {matrix.chunk_len}",
            module=MODULE,
        )
    return matrix


def reconstruct_chunk_with_timing(
    coded: CodedFrame,
    matrix: SensingMatrix | None,
    dictionary: Dictionary3D,
    cfg: OmpConfig,
    *,
    workers: int = 1,
) -> tuple[Video, FrameTiming]:
    """Reconstruct one chunk and report how long it took."""

    matrix = _check_inputs(coded, matrix, dictionary, cfg)
    p, T = cfg.patch_size, matrix.chunk_len
    windows = [
        (row, col)
        for row in window_starts(coded.height, p, cfg.patch_stride)
        for col in window_starts(coded.width, p, cfg.patch_stride)
    ]

    def _solve(window: tuple[int, int]) -> tuple[np.ndarray, int, bool]:
        problem = PatchProblem.from_window(coded, matrix, window[0], window[1], p)
        result = omp_solve(problem, dictionary, cfg)
        support = list(result.support)
        patch = dictionary.atoms[:, support] @ result.coefficients[support]
        return patch.reshape(T, p, p), result.iterations, result.rank_deficient

    started = time.perf_counter()
    solved = ordered_map(_solve, windows, workers=workers)
    accumulator = np.zeros((T, coded.height, coded.width))
    coverage = np.zeros((coded.height, coded.width))
    for (row, col), (patch, _, _) in zip(windows, solved):
        accumulator[:, row : row + p, col : col + p] += patch
        coverage[row : row + p, col : col + p] += 1.0
    estimate = np.floor(np.clip(accumulator / coverage, 0.0, 255.0) + 0.5).astype(np.uint8)
    elapsed = time.perf_counter() - started

    timing = FrameTiming(
        chunk_index=coded.chunk_index,
        seconds=elapsed,
        patches=len(windows),
        mean_iterations=float(np.mean([item[1] for item in solved])),
        rank_deficient_patches=sum(1 for item in solved if item[2]),
    )
    logger.info(
        "reconstructed chunk %d: %d patches in %.3fs", coded.chunk_index, timing.patches, timing.seconds
    )
    return Video(estimate), timing


def reconstruct_chunk(
    coded: CodedFrame,
    matrix: SensingMatrix | None,
    dictionary: Dictionary3D,
    cfg: OmpConfig,
    *,
    workers: int = 1,
) -> Video:
    """Recover the chunk_len frames behind one coded frame."""

    video, _ = reconstruct_chunk_with_timing(coded, matrix, dictionary, cfg, workers=workers)
    return video


def reconstruct_sequence(
    frames: Sequence[CodedFrame],
    cfg: OmpConfig,
    *,
    originals: Sequence[Video] | None = None,
    workers: int = 1,
) -> tuple[Video, ReconstructionReport]:
    """Reconstruct consecutive coded frames into one video, timing each."""

    if not frames:
        raise ParameterError("no coded frames to reconstruct", module=MODULE)
    chunk_len = frames[0].matrix.chunk_len if frames[0].matrix is not None else 0
    if chunk_len < 1:
        raise ParameterError("coded frames carry no sensing matrices", module=MODULE)
    dictionary = build_dictionary(cfg.patch_size, chunk_len)
    chunks: list[np.ndarray] = []
    report = ReconstructionReport()
    for pos, coded in enumerate(frames):
        video, timing = reconstruct_chunk_with_timing(coded, None, dictionary, cfg, workers=workers)
        if originals is not None:
            timing.psnr_db = psnr(originals[pos], video)
        chunks.append(video.pixels)
        report.frames.append(timing)
    return Video(np.concatenate(chunks, axis=0)), report


def naive_reconstruction(coded: CodedFrame, chunk_len: int) -> Video:
    """Baseline that repeats the normalized coded frame chunk_len times."""

    return Video(np.repeat(coded.normalized[None], chunk_len, axis=0))


def psnr(reference: Video | np.ndarray, estimate: Video | np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB with peak 255; +inf for identical inputs."""

    ref = reference.pixels if isinstance(reference, Video) else np.asarray(reference)
    est = estimate.pixels if isinstance(estimate, Video) else np.asarray(estimate)
    if ref.shape != est.shape:
        raise DimensionError(f"cannot compare shapes {ref.shape} and {est.shape}", module=MODULE)
    mse = float(np.mean((ref.astype(np.float64) - est.astype(np.float64)) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)
