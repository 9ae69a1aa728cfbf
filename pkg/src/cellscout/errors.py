"""Domain error hierarchy.

Every error carries a stable machine-readable ``code`` (the class name) so
the HTTP layer and the CLI can report failures without string matching.
"""

from __future__ import annotations


class CellScoutError(Exception):
    """Base class for all domain errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# --- matrix ingestion / normalization ---------------------------------------

class RaggedRow(CellScoutError):
    pass


class NonNumericCell(CellScoutError):
    pass


class NegativeValue(CellScoutError):
    pass


class DuplicateId(CellScoutError):
    pass


class EmptyMatrix(CellScoutError):
    pass


class AlreadyNormalized(CellScoutError):
    pass


# --- mining model ------------------------------------------------------------

class NonFiniteLogits(CellScoutError):
    pass


class IndexOutOfRange(CellScoutError):
    pass


class TooFewPoints(CellScoutError):
    pass


class TooFewCells(CellScoutError):
    pass


class NonFiniteLoss(CellScoutError):
    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(message or f"non-finite loss at epoch {epoch}")


class InvalidConfig(CellScoutError):
    pass


# --- embeddings / analytics ---------------------------------------------------

class DimensionMismatch(CellScoutError):
    pass


class EmptyRegion(CellScoutError):
    pass


class UnknownGene(CellScoutError):
    pass


class NotFound(CellScoutError):
    """Id-addressed resource does not exist; maps to HTTP 404."""


class UnknownRegion(NotFound):
    pass


class UnknownDataset(NotFound):
    pass


class UnknownJob(NotFound):
    pass


class NotTrained(CellScoutError):
    pass


# --- verification --------------------------------------------------------------

class EmptySet(CellScoutError):
    pass


class LengthMismatch(CellScoutError):
    pass


class DegenerateValues(CellScoutError):
    pass


class SingleClass(CellScoutError):
    pass


class OverlappingRegions(CellScoutError):
    pass


class EmptyBiomarker(CellScoutError):
    pass


# --- benchmark ------------------------------------------------------------------

class InvalidSpec(CellScoutError):
    pass


class MissingClassInTrain(CellScoutError):
    pass


class DegenerateClusters(CellScoutError):
    pass


# --- service ----------------------------------------------------------------------

class TrainingInProgress(CellScoutError):
    pass
