"""Domain error hierarchy.

Every error names the module that raised it so the CLI can print
module-qualified messages (``sensing: ...``).
"""

from __future__ import annotations

from typing import Sequence


class PceError(ValueError):
    """Base class for all validation-type failures of the toolkit."""

    module = "pce"

    def __init__(self, message: str, *, module: str | None = None) -> None:
        super().__init__(message)
        if module is not None:
            self.module = module

    def qualified(self) -> str:
        """Return the message prefixed with the owning module."""

        return f"{self.module}: {self}"


class ParameterError(PceError):
    """Invalid argument combination or out-of-range parameter."""


class DimensionError(PceError):
    """Array or container dimensions disagree with each other."""


class FormatError(PceError):
    """Malformed container bytes; `offset` is the first offending byte."""

    def __init__(self, message: str, *, offset: int, module: str | None = None) -> None:
        super().__init__(f"{message} (byte offset {offset})", module=module)
        self.offset = offset


class InvariantError(PceError):
    """A stored sensing matrix violates the single-on invariants."""

    def __init__(self, message: str, *, pixel_index: int, module: str | None = None) -> None:
        super().__init__(f"{message} (pixel index {pixel_index})", module=module)
        self.pixel_index = pixel_index


class LabelError(PceError):
    """A label file line failed validation."""

    def __init__(self, message: str, *, line_no: int, module: str | None = None) -> None:
        super().__init__(f"line {line_no}: {message}", module=module)
        self.line_no = line_no


class AmbiguityError(PceError):
    """More than one box of a class in a single frame; tracking is unsupported."""


class AlignmentError(PceError):
    """Detections reference chunks the ground truth does not have."""

    def __init__(self, missing: Sequence[int], *, module: str | None = None) -> None:
        listed = ", ".join(str(idx) for idx in missing)
        super().__init__(f"chunks missing from ground truth: {listed}", module=module)
        self.missing = list(missing)


class EmptyOutputError(PceError):
    """The input is too short to produce a single output item."""


class MeasurementError(PceError):
    """Reconstruction was handed normalized 8-bit frames instead of raw sums."""
