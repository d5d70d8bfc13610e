from __future__ import annotations

import logging
from pathlib import Path

from pce_toolkit.encoder import CodedFrame, attach_matrices, load_coded
from pce_toolkit.errors import DimensionError, ParameterError
from pce_toolkit.models.config import OmpConfig
from pce_toolkit.models.reports import ReconstructionReport
from pce_toolkit.reconstruction import MODULE, reconstruct_sequence
from pce_toolkit.sensing import load_matrix
from pce_toolkit.video_io import Video, load_video, save_video

logger = logging.getLogger(__name__)


def _check_chunk(chunk: int, count: int, coded_path: Path) -> None:
    if not 0 <= chunk < count:
        raise ParameterError(f"chunk {chunk} outside [0, {count}) of {coded_path.name}", module=MODULE)


def _pair_single(frames: list[CodedFrame], matrix_path: Path, chunk: int, coded_path: Path) -> list[CodedFrame]:
    _check_chunk(chunk, len(frames), coded_path)
    matrix = load_matrix(matrix_path)
    frame = frames[chunk]
    if (matrix.height, matrix.width) != (frame.height, frame.width):
        raise DimensionError(
            f"{coded_path} is {frame.height}x{frame.width} but {matrix_path} is {matrix.height}x{matrix.width}",
            module=MODULE,
        )
    return [frame.with_matrix(matrix)]


def reconstruct_files(
    coded_path: Path,
    matrix_path: Path,
    out_path: Path,
    cfg: OmpConfig,
    *,
    chunk: int | None = None,
    original_path: Path | None = None,
    workers: int = 1,
) -> tuple[Video, ReconstructionReport]:
    """Reconstruct coded frames from disk and store the recovered video.

    `matrix_path` is either one PCESM1 file (paired with coded frame
    `chunk`, default 0) or a directory written by `compress`, where coded
    frame k takes `chunk_<k>.pcesm`.
    """

    coded_path, matrix_path = Path(coded_path), Path(matrix_path)
    frames = load_coded(coded_path)
    if matrix_path.is_dir():
        if chunk is not None:
            _check_chunk(chunk, len(frames), coded_path)
            frames = [frames[chunk]]
        paired = attach_matrices(frames, matrix_path, coded_name=str(coded_path), module=MODULE)
    else:
        paired = _pair_single(frames, matrix_path, chunk or 0, coded_path)

    originals = None
    if original_path is not None:
        source = load_video(original_path)
        chunk_len = paired[0].matrix.chunk_len
        originals = [source.chunk(frame.chunk_index, chunk_len) for frame in paired]

    video, report = reconstruct_sequence(paired, cfg, originals=originals, workers=workers)
    save_video(video, out_path)
    logger.info(
        "reconstructed %d coded frame(s) into %s in %.3fs", len(paired), out_path, report.total_seconds
    )
    return video, report
