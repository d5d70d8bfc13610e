"""Schema definitions for per-frame and per-chunk object boxes."""

from __future__ import annotations

from typing import List, Optional

from pydantic import Field, model_validator

from pce_toolkit.models.common import FrozenModel, StrictModel

CLASS_NAMES: dict[int, str] = {0: "car", 1: "person"}
CLASS_IDS: dict[str, int] = {name: cid for cid, name in CLASS_NAMES.items()}


def class_id_for(name: str) -> int:
    """Map a class token to its id; unknown tokens raise KeyError."""

    return CLASS_IDS[name]


def class_name_for(class_id: int) -> str:
    return CLASS_NAMES.get(class_id, str(class_id))


class BoundingBox(FrozenModel):
    """Axis-aligned box in continuous pixel coordinates."""

    x_min: float = Field(..., ge=0.0)
    y_min: float = Field(..., ge=0.0)
    x_max: float = Field(..., ge=0.0)
    y_max: float = Field(..., ge=0.0)
    class_id: int = Field(default=0, ge=0)
    confidence: Optional[float] = Field(default=None, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _ordered_corners(self) -> "BoundingBox":
        if self.x_min >= self.x_max:
            raise ValueError(f"x_min ({self.x_min}) must be < x_max ({self.x_max})")
        if self.y_min >= self.y_max:
            raise ValueError(f"y_min ({self.y_min}) must be < y_max ({self.y_max})")
        return self

    @property
    def class_name(self) -> str:
        return class_name_for(self.class_id)

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def within(self, width: float, height: float) -> bool:
        """True when the box lies inside a width×height image."""

        return self.x_max <= width and self.y_max <= height

    def contains(self, other: "BoundingBox") -> bool:
        return (
            self.x_min <= other.x_min
            and self.y_min <= other.y_min
            and self.x_max >= other.x_max
            and self.y_max >= other.y_max
        )


class FrameAnnotations(StrictModel):
    """Boxes observed in one original frame."""

    frame_index: int = Field(..., ge=0)
    boxes: List[BoundingBox] = Field(default_factory=list)


class ChunkLabel(StrictModel):
    """Merged CS-domain boxes of one chunk, at most one per class for ground truth."""

    chunk_index: int = Field(..., ge=0)
    boxes: List[BoundingBox] = Field(default_factory=list)

    def boxes_of(self, class_id: int) -> list[BoundingBox]:
        return [box for box in self.boxes if box.class_id == class_id]
