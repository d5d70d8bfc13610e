"""Deterministic synthetic clips with exact per-frame labels."""

from __future__ import annotations

import logging
from typing import Annotated, Sequence

import numpy as np
from pydantic import Field

from pce_toolkit.contracts import BoundingBox, FrameAnnotations, class_id_for
from pce_toolkit.errors import ParameterError
from pce_toolkit.models.common import FrozenModel
from pce_toolkit.sensing import make_rng
from pce_toolkit.video_io import Video

logger = logging.getLogger(__name__)

MODULE = "synthetic"
DEFAULT_BLOCK_LEVELS = (64, 112, 160, 208)


class SyntheticObject(FrozenModel):
    """A flat rectangle moving at constant speed and bouncing off the borders."""

    class_name: str = "car"
    size: tuple[Annotated[int, Field(ge=1)], Annotated[int, Field(ge=1)]] = (8, 12)
    velocity: tuple[int, int] = (0, 1)
    intensity: Annotated[int, Field(ge=0, le=255)] = 200


DEFAULT_OBJECTS: tuple[SyntheticObject, ...] = (
    SyntheticObject(class_name="car", size=(8, 14), velocity=(0, 2), intensity=210),
    SyntheticObject(class_name="person", size=(14, 6), velocity=(1, 0), intensity=20),
)


def gradient_background(height: int, width: int) -> np.ndarray:
    rows = np.linspace(0.0, 30.0, height)[:, None]
    cols = np.linspace(0.0, 30.0, width)[None, :]
    return np.rint(80.0 + rows + cols).astype(np.uint8)


def _step(pos: int, vel: int, limit: int) -> tuple[int, int]:
    nxt = pos + vel
    if nxt < 0 or nxt > limit:
        vel = -vel
        nxt = pos + vel
    return min(max(nxt, 0), limit), vel


def moving_objects_video(
    height: int,
    width: int,
    frame_count: int,
    seed: int = 0,
    objects: Sequence[SyntheticObject] = DEFAULT_OBJECTS,
    *,
    background: int | None = None,
) -> tuple[Video, list[FrameAnnotations]]:
    """Render objects over a static background; start positions come from `seed`.

    `background` gives a flat level; by default a smooth gradient is used.
    Each label box is the exact pixel extent of its object.
    """

    if height < 1 or width < 1 or frame_count < 1:
        raise ParameterError("height, width and frame_count must be >= 1", module=MODULE)
    names = [obj.class_name for obj in objects]
    if len(set(names)) != len(names):
        raise ParameterError("at most one object per class is supported", module=MODULE)
    for obj in objects:
        try:
            class_id_for(obj.class_name)
        except KeyError as exc:
            raise ParameterError(f"unknown class {obj.class_name!r}", module=MODULE) from exc
        if obj.size[0] > height or obj.size[1] > width:
            raise ParameterError(f"{obj.class_name} of size {obj.size} does not fit {height}x{width}", module=MODULE)

    base = (
        gradient_background(height, width)
        if background is None
        else np.full((height, width), background, dtype=np.uint8)
    )
    rng = make_rng(seed)
    state = []
    for obj in objects:
        h, w = obj.size
        y0 = int(rng.integers(0, height - h, endpoint=True))
        x0 = int(rng.integers(0, width - w, endpoint=True))
        state.append([y0, x0, obj.velocity[0], obj.velocity[1]])

    pixels = np.empty((frame_count, height, width), dtype=np.uint8)
    labels: list[FrameAnnotations] = []
    for t in range(frame_count):
        frame = base.copy()
        boxes = []
        for obj, pos in zip(objects, state):
            h, w = obj.size
            y0, x0 = pos[0], pos[1]
            frame[y0 : y0 + h, x0 : x0 + w] = obj.intensity
            boxes.append(
                BoundingBox(
                    x_min=x0, y_min=y0, x_max=x0 + w, y_max=y0 + h, class_id=class_id_for(obj.class_name)
                )
            )
            pos[0], pos[2] = _step(y0, pos[2], height - h)
            pos[1], pos[3] = _step(x0, pos[3], width - w)
        pixels[t] = frame
        labels.append(FrameAnnotations(frame_index=t, boxes=boxes))
    logger.debug("rendered %dx%dx%d synthetic clip (seed %d)", height, width, frame_count, seed)
    return Video(pixels, source=f"synthetic:{seed}"), labels


def moving_square_video(
    height: int = 64,
    width: int = 64,
    frame_count: int = 13,
    size: int = 12,
    seed: int = 0,
    *,
    velocity: tuple[int, int] = (1, 1),
    intensity: int = 200,
    background: int = 60,
) -> tuple[Video, list[FrameAnnotations]]:
    """One `car` square moving over a flat background."""

    square = SyntheticObject(class_name="car", size=(size, size), velocity=velocity, intensity=intensity)
    return moving_objects_video(height, width, frame_count, seed, [square], background=background)


def block_video(
    height: int,
    width: int,
    frame_count: int,
    levels: Sequence[int] = DEFAULT_BLOCK_LEVELS,
) -> Video:
    """Static 2×2 grid of flat gray blocks, levels in row-major block order."""

    if len(levels) != 4:
        raise ParameterError(f"need 4 block levels, got {len(levels)}", module=MODULE)
    if height < 2 or width < 2 or frame_count < 1:
        raise ParameterError("block video needs height, width >= 2 and frame_count >= 1", module=MODULE)
    frame = np.empty((height, width), dtype=np.uint8)
    mid_r, mid_c = height // 2, width // 2
    frame[:mid_r, :mid_c] = levels[0]
    frame[:mid_r, mid_c:] = levels[1]
    frame[mid_r:, :mid_c] = levels[2]
    frame[mid_r:, mid_c:] = levels[3]
    return Video(np.broadcast_to(frame, (frame_count, height, width)).copy())
