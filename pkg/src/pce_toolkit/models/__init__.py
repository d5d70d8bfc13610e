"""Public model exports."""

from pce_toolkit.models.common import FrozenModel, StrictModel
from pce_toolkit.models.config import (
    DEFAULT_CLASSES,
    DEFAULT_IOU_THRESHOLDS,
    EvalConfig,
    OmpConfig,
    RunConfig,
)
from pce_toolkit.models.enums import (
    CodedKind,
    DistributionKind,
    ExportMode,
    LogLevel,
    OmpStop,
    SweepAxis,
    VideoFormat,
)
from pce_toolkit.models.reports import (
    APReport,
    ClassReport,
    DatasetSummary,
    DemoResult,
    EncodingStats,
    FrameTiming,
    ReconstructionReport,
    SweepRow,
    SweepTable,
    ThresholdCounts,
)
from pce_toolkit.models.version import REPORT_SCHEMA_VERSION

__all__ = [
    "APReport",
    "ClassReport",
    "CodedKind",
    "DatasetSummary",
    "DEFAULT_CLASSES",
    "DEFAULT_IOU_THRESHOLDS",
    "DemoResult",
    "DistributionKind",
    "EncodingStats",
    "EvalConfig",
    "ExportMode",
    "FrameTiming",
    "FrozenModel",
    "LogLevel",
    "OmpConfig",
    "OmpStop",
    "REPORT_SCHEMA_VERSION",
    "ReconstructionReport",
    "RunConfig",
    "StrictModel",
    "SweepAxis",
    "SweepRow",
    "SweepTable",
    "ThresholdCounts",
    "VideoFormat",
]
