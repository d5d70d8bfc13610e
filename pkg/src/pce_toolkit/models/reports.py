from __future__ import annotations

from typing import Literal

from pydantic import Field

from pce_toolkit.models.common import StrictModel
from pce_toolkit.models.enums import SweepAxis
from pce_toolkit.models.version import REPORT_SCHEMA_VERSION


class ThresholdCounts(StrictModel):
    """Match outcome of one class at one IoU threshold."""

    threshold: float
    tp: int = 0
    fp: int = 0
    fn: int = 0


class ClassReport(StrictModel):
    """AP of one class at every threshold.

    A class with neither truths nor detections is not applicable: its AP
    entries are None and it is excluded from every mean.
    """

    class_name: str
    applicable: bool = True
    truth_count: int = 0
    detection_count: int = 0
    ap: list[float | None] = Field(default_factory=list)
    mean_ap: float | None = None
    counts: list[ThresholdCounts] = Field(default_factory=list)


class APReport(StrictModel):
    """Per-class AP at each IoU threshold plus the aggregate mAP."""

    schema_version: Literal["v1"] = REPORT_SCHEMA_VERSION
    ap_method: Literal["all-point-envelope"] = "all-point-envelope"
    pooling: Literal["per-class-threshold-over-chunks"] = "per-class-threshold-over-chunks"
    thresholds: list[float]
    classes: list[ClassReport] = Field(default_factory=list)
    ap_by_threshold: list[float] = Field(
        default_factory=list,
        description="AP averaged over applicable classes, one entry per threshold.",
    )
    map: float = 0.0

    def class_report(self, class_name: str) -> ClassReport:
        """Return the row for `class_name`."""

        for row in self.classes:
            if row.class_name == class_name:
                return row
        raise KeyError(class_name)


class EncodingStats(StrictModel):
    """Compression accounting for one encoded clip."""

    coded_frames: int
    dropped_frames: int = 0
    input_bytes: int
    output_bytes: int
    payload_ratio: float
    mean_entropy_bits: float
    naive_psnr_db: float | None = None


class SweepRow(StrictModel):
    """One row of a bump/compression sweep table."""

    value: int
    compression: int
    bump: int
    available: bool = True
    ap: list[float] | None = None
    mean_ap: float | None = None
    stats: EncodingStats | None = None
    note: str | None = None


class SweepTable(StrictModel):
    """Rows shaped like the AP-versus-parameter tables of the capture study."""

    schema_version: Literal["v1"] = REPORT_SCHEMA_VERSION
    axis: SweepAxis
    fixed_compression: int | None = None
    fixed_bump: int | None = None
    thresholds: list[float]
    rows: list[SweepRow] = Field(default_factory=list)


class FrameTiming(StrictModel):
    """Wall time and solver statistics for one reconstructed coded frame."""

    chunk_index: int
    seconds: float
    patches: int
    mean_iterations: float
    rank_deficient_patches: int = 0
    psnr_db: float | None = None


class ReconstructionReport(StrictModel):
    """Timing report across the reconstructed coded frames."""

    frames: list[FrameTiming] = Field(default_factory=list)

    @property
    def total_seconds(self) -> float:
        return sum(item.seconds for item in self.frames)

    @property
    def mean_seconds(self) -> float:
        if not self.frames:
            return 0.0
        return self.total_seconds / len(self.frames)


class DemoResult(StrictModel):
    """Outcome of the end-to-end synthetic pipeline."""

    seed: int
    compression: int
    bump: int
    coded_frames: int
    psnr_db: list[float] = Field(default_factory=list)
    mean_psnr_db: float
    naive_psnr_db: list[float] = Field(default_factory=list)
    mean_naive_psnr_db: float
    map: float
    report: APReport
    reconstruction: ReconstructionReport
    output_dir: str | None = None


class DatasetSummary(StrictModel):
    """Files and split of a CS-domain detection dataset."""

    schema_version: Literal["v1"] = REPORT_SCHEMA_VERSION
    compression: int
    bump: int
    seed: int
    coded_frames: int
    train: list[str] = Field(default_factory=list)
    test: list[str] = Field(default_factory=list)
    boxes_per_class: dict[str, int] = Field(default_factory=dict)
    stats: EncodingStats
    output_dir: str
