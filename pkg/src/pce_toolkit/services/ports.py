from __future__ import annotations

from typing import Protocol

from pce_toolkit.contracts import ChunkLabel


class DetectionProvider(Protocol):
    """Source of chunk-level detections for one sweep value."""

    def detections_for(self, value: int, truths: list[ChunkLabel]) -> list[ChunkLabel] | None:
        """Return detections for `value`, or None when none are available."""

        ...
