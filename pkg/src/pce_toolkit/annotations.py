"""Label-file ingestion and per-chunk box merging.

Per-frame label lines read::

    frame_index class_name confidence x_min y_min x_max y_max

with ``-`` as the confidence of ground-truth boxes and ``#`` starting a
comment. Chunk-label files use the same columns with ``chunk_index``
first and a leading ``# chunk_count N`` comment.
"""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image, ImageDraw
from pydantic import ValidationError

from pce_toolkit.contracts import (
    CLASS_IDS,
    BoundingBox,
    ChunkLabel,
    FrameAnnotations,
    class_name_for,
)
from pce_toolkit.errors import AmbiguityError, LabelError, ParameterError

logger = logging.getLogger(__name__)

MODULE = "annotations"
DEFAULT_MIN_CONF = 0.99
CHUNK_COUNT_TAG = "chunk_count"
CLASS_COLOURS: dict[int, tuple[int, int, int]] = {0: (255, 64, 64), 1: (64, 160, 255)}
FALLBACK_COLOUR = (255, 220, 0)


def _parse_box(tokens: list[str], line_no: int) -> BoundingBox:
    class_token, conf_token, *coords = tokens
    if class_token not in CLASS_IDS:
        raise LabelError(f"unknown class {class_token!r}", line_no=line_no, module=MODULE)
    try:
        confidence = None if conf_token == "-" else float(conf_token)
        x_min, y_min, x_max, y_max = (float(value) for value in coords)
    except ValueError as exc:
        raise LabelError(f"not a number: {exc}", line_no=line_no, module=MODULE) from exc
    try:
        return BoundingBox(
            x_min=x_min,
            y_min=y_min,
            x_max=x_max,
            y_max=y_max,
            class_id=CLASS_IDS[class_token],
            confidence=confidence,
        )
    except ValidationError as exc:
        reason = exc.errors()[0]["msg"]
        raise LabelError(reason, line_no=line_no, module=MODULE) from exc


def _records(path: Path) -> Iterable[tuple[int, list[str]]]:
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        tokens = body.split()
        if len(tokens) != 7:
            raise LabelError(f"expected 7 fields, found {len(tokens)}", line_no=line_no, module=MODULE)
        yield line_no, tokens


def _index(token: str, line_no: int, what: str) -> int:
    try:
        value = int(token)
    except ValueError as exc:
        raise LabelError(f"{what} {token!r} is not an integer", line_no=line_no, module=MODULE) from exc
    if value < 0:
        raise LabelError(f"{what} must be >= 0, got {value}", line_no=line_no, module=MODULE)
    return value


def _check_bounds(box: BoundingBox, bounds: tuple[int, int] | None, line_no: int) -> None:
    if bounds is not None and not box.within(*bounds):
        raise LabelError(
            f"box exceeds the {bounds[0]}x{bounds[1]} image", line_no=line_no, module=MODULE
        )


def parse_labels(
    path: Path,
    *,
    min_conf: float | None = None,
    bounds: tuple[int, int] | None = None,
) -> list[FrameAnnotations]:
    """Read a per-frame label file, ordered by frame index.

    Boxes whose confidence is below `min_conf` are dropped; ground-truth
    boxes (no confidence) are always kept. `bounds` is (width, height).
    """

    per_frame: dict[int, list[BoundingBox]] = defaultdict(list)
    dropped = 0
    for line_no, tokens in _records(path):
        frame_index = _index(tokens[0], line_no, "frame index")
        box = _parse_box(tokens[1:], line_no)
        _check_bounds(box, bounds, line_no)
        per_frame.setdefault(frame_index, [])
        if min_conf is not None and box.confidence is not None and box.confidence < min_conf:
            dropped += 1
            continue
        per_frame[frame_index].append(box)
    if dropped:
        logger.info("dropped %d box(es) below confidence %.3f from %s", dropped, min_conf, Path(path).name)
    return [FrameAnnotations(frame_index=idx, boxes=per_frame[idx]) for idx in sorted(per_frame)]


def merge_chunk(frames: Sequence[FrameAnnotations], class_id: int) -> BoundingBox | None:
    """Smallest box enclosing every box of `class_id` across the frames."""

    boxes: list[BoundingBox] = []
    per_frame: Counter[int] = Counter()
    for frame in frames:
        for box in frame.boxes:
            if box.class_id != class_id:
                continue
            per_frame[frame.frame_index] += 1
            if per_frame[frame.frame_index] > 1:
                raise AmbiguityError(
                    f"frame {frame.frame_index} has more than one {class_name_for(class_id)} box; "
                    "only one object per class can be merged",
                    module=MODULE,
                )
            boxes.append(box)
    if not boxes:
        return None
    return BoundingBox(
        x_min=min(b.x_min for b in boxes),
        y_min=min(b.y_min for b in boxes),
        x_max=max(b.x_max for b in boxes),
        y_max=max(b.y_max for b in boxes),
        class_id=class_id,
    )


def build_chunk_labels(
    all_frames: Sequence[FrameAnnotations],
    chunk_len: int,
    frame_count: int | None = None,
) -> list[ChunkLabel]:
    """One merged label per complete chunk; frames past the last chunk are ignored.

    Without `frame_count` the clip is assumed to end at the highest
    annotated frame.
    """

    if chunk_len < 1:
        raise ParameterError(f"chunk_len must be >= 1, got {chunk_len}", module=MODULE)
    if frame_count is None:
        frame_count = max((f.frame_index for f in all_frames), default=-1) + 1
    chunk_count = frame_count // chunk_len
    grouped: dict[int, list[FrameAnnotations]] = defaultdict(list)
    for frame in all_frames:
        chunk = frame.frame_index // chunk_len
        if chunk < chunk_count:
            grouped[chunk].append(frame)
    class_ids = sorted({box.class_id for frame in all_frames for box in frame.boxes})

    labels: list[ChunkLabel] = []
    for chunk in range(chunk_count):
        merged = [merge_chunk(grouped[chunk], cid) for cid in class_ids]
        labels.append(ChunkLabel(chunk_index=chunk, boxes=[box for box in merged if box is not None]))
    return labels


def _fmt(value: float) -> str:
    return repr(float(value))


def write_chunk_labels(labels: Sequence[ChunkLabel], path: Path) -> Path:
    """Write chunk labels; the header keeps chunks without boxes."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    chunk_count = max((label.chunk_index for label in labels), default=-1) + 1
    lines = [f"# {CHUNK_COUNT_TAG} {chunk_count}"]
    for label in sorted(labels, key=lambda item: item.chunk_index):
        for box in label.boxes:
            conf = "-" if box.confidence is None else _fmt(box.confidence)
            lines.append(
                " ".join(
                    [
                        str(label.chunk_index),
                        box.class_name,
                        conf,
                        _fmt(box.x_min),
                        _fmt(box.y_min),
                        _fmt(box.x_max),
                        _fmt(box.y_max),
                    ]
                )
            )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _declared_chunk_count(path: Path) -> int | None:
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if not stripped.startswith("#"):
            return None
        parts = stripped[1:].split()
        if len(parts) == 2 and parts[0] == CHUNK_COUNT_TAG and parts[1].isdigit():
            return int(parts[1])
    return None


def read_chunk_labels(path: Path, *, min_conf: float | None = None) -> list[ChunkLabel]:
    """Read a chunk-label file into one ChunkLabel per chunk index."""

    per_chunk: dict[int, list[BoundingBox]] = defaultdict(list)
    declared = _declared_chunk_count(path)
    for line_no, tokens in _records(path):
        chunk_index = _index(tokens[0], line_no, "chunk index")
        if declared is not None and chunk_index >= declared:
            raise LabelError(
                f"chunk index {chunk_index} beyond declared {CHUNK_COUNT_TAG} {declared}",
                line_no=line_no,
                module=MODULE,
            )
        box = _parse_box(tokens[1:], line_no)
        if min_conf is not None and box.confidence is not None and box.confidence < min_conf:
            continue
        per_chunk[chunk_index].append(box)
    count = declared if declared is not None else max(per_chunk, default=-1) + 1
    return [ChunkLabel(chunk_index=idx, boxes=per_chunk.get(idx, [])) for idx in range(count)]


def write_frame_labels(frames: Sequence[FrameAnnotations], path: Path) -> Path:
    """Write per-frame labels in the ingestion format."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for frame in sorted(frames, key=lambda item: item.frame_index):
        for box in frame.boxes:
            conf = "-" if box.confidence is None else _fmt(box.confidence)
            coords = " ".join(_fmt(v) for v in (box.x_min, box.y_min, box.x_max, box.y_max))
            lines.append(f"{frame.frame_index} {box.class_name} {conf} {coords}")
    path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
    return path


def render_labelled_frame(pixels: np.ndarray, boxes: Sequence[BoundingBox], path: Path) -> Path:
    """Save a PNG of a grayscale frame with its boxes outlined per class."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    image = Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8)).convert("RGB")
    draw = ImageDraw.Draw(image)
    for box in boxes:
        right = max(box.x_min, box.x_max - 1)
        bottom = max(box.y_min, box.y_max - 1)
        draw.rectangle(
            [box.x_min, box.y_min, right, bottom],
            outline=CLASS_COLOURS.get(box.class_id, FALLBACK_COLOUR),
        )
    image.save(path, format="PNG")
    return path
