from __future__ import annotations

from enum import Enum


class VideoFormat(str, Enum):
    """Supported grayscale video containers."""

    RAW = "raw"  # PCEV1 single-file container.
    PGM = "pgm"  # Directory of binary P5 frames.


class DistributionKind(str, Enum):
    """Per-pixel exposure start-time distributions."""

    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"  # Truncated gaussian centred on the legal range.


class ExportMode(str, Enum):
    """Coded-frame export flavours."""

    NORMALIZED = "normalized"  # round(sums / bump_len) as 8-bit frames.
    RAW = "raw"  # Lossless u16 sums (PCEC1).
    BOTH = "both"


class CodedKind(str, Enum):
    """What a loaded coded frame actually holds."""

    RAW = "raw"
    NORMALIZED = "normalized"


class SweepAxis(str, Enum):
    """Parameter varied by the sweep harness."""

    BUMP = "bump"  # Compression fixed at 13.
    COMPRESSION = "compression"  # Bump time fixed at 3.


class LogLevel(str, Enum):
    """Accepted values of `PCE_LOG` / `--log-level`."""

    ERROR = "error"
    WARN = "warn"
    INFO = "info"
    DEBUG = "debug"


class OmpStop(str, Enum):
    """Why the pursuit loop returned."""

    ZERO_MEASUREMENT = "zero_measurement"
    SPARSITY = "sparsity"
    TOLERANCE = "tolerance"
    RANK_DEFICIENT = "rank_deficient"
    EXHAUSTED = "exhausted"  # No remaining atom correlates with the residual.
