from __future__ import annotations

import logging
from pathlib import Path

from pce_toolkit.annotations import read_chunk_labels
from pce_toolkit.contracts import BoundingBox, ChunkLabel
from pce_toolkit.errors import ParameterError

logger = logging.getLogger(__name__)


class TemplateDetectionProvider:
    """Read detections from one chunk-label file per sweep value.

    The template holds a ``{value}`` placeholder, e.g. ``dets/c{value}.txt``.
    """

    def __init__(self, template: str, *, min_conf: float | None = None) -> None:
        if "{value}" not in template:
            raise ParameterError(f"detection template must contain {{value}}: {template}", module="detection-eval")
        self.template = template
        self.min_conf = min_conf

    def path_for(self, value: int) -> Path:
        return Path(self.template.format(value=value))

    def detections_for(self, value: int, truths: list[ChunkLabel]) -> list[ChunkLabel] | None:
        path = self.path_for(value)
        if not path.is_file():
            logger.warning("no detections for value %d: %s does not exist", value, path)
            return None
        return read_chunk_labels(path, min_conf=self.min_conf)


class GroundTruthDetectionProvider:
    """Echo the merged ground truth back as detections of fixed confidence."""

    def __init__(self, confidence: float = 1.0) -> None:
        self.confidence = confidence

    def detections_for(self, value: int, truths: list[ChunkLabel]) -> list[ChunkLabel] | None:
        return [
            ChunkLabel(
                chunk_index=label.chunk_index,
                boxes=[self._as_detection(box) for box in label.boxes],
            )
            for label in truths
        ]

    def _as_detection(self, box: BoundingBox) -> BoundingBox:
        return box.model_copy(update={"confidence": self.confidence})
