from __future__ import annotations

import os
from typing import Annotated

from pydantic import Field, field_validator, model_validator

from pce_toolkit.models.common import FrozenModel, StrictModel
from pce_toolkit.models.enums import LogLevel

DEFAULT_IOU_THRESHOLDS: tuple[float, ...] = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))
DEFAULT_CLASSES: tuple[str, ...] = ("car", "person")


def default_workers() -> int:
    """Available parallelism, never below one."""

    return max(1, os.cpu_count() or 1)


class OmpConfig(FrozenModel):
    """Patch-wise OMP hyperparameters (none are fixed by the capture model)."""

    max_sparsity: Annotated[int, Field(ge=1)] = 16
    residual_tol: Annotated[float, Field(ge=0.0)] = 1e-3
    patch_size: Annotated[int, Field(ge=1)] = 7
    patch_stride: Annotated[int, Field(ge=1)] = 3

    @model_validator(mode="after")
    def _stride_within_patch(self) -> "OmpConfig":
        if self.patch_stride > self.patch_size:
            raise ValueError(
                f"patch_stride ({self.patch_stride}) must not exceed patch_size ({self.patch_size})"
            )
        return self


# Beats the repeated-frame baseline on moving content; the k=16 default does not.
MOVING_CONTENT_OMP = OmpConfig(max_sparsity=4, patch_stride=1)


class EvalConfig(FrozenModel):
    """IoU thresholds and class set used to score detections."""

    iou_thresholds: tuple[float, ...] = DEFAULT_IOU_THRESHOLDS
    classes: tuple[str, ...] = DEFAULT_CLASSES

    @field_validator("iou_thresholds")
    @classmethod
    def _thresholds_increasing(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value:
            raise ValueError("at least one IoU threshold is required")
        for thr in value:
            if not 0.0 < thr <= 1.0:
                raise ValueError(f"IoU threshold {thr} outside (0, 1]")
        for prev, cur in zip(value, value[1:]):
            if cur <= prev:
                raise ValueError("IoU thresholds must be strictly increasing")
        return value


class RunConfig(StrictModel):
    """Resolved settings for one CLI invocation."""

    command: str | None = None
    log_level: LogLevel = LogLevel.WARN
    workers: Annotated[int, Field(ge=1)] = Field(default_factory=default_workers)
    config_path: str | None = None
    overrides: dict[str, str] = Field(default_factory=dict)
