"""Expression matrix loading, validation and normalization.

The on-disk layout is a UTF-8 CSV/TSV whose header row starts with the
literal cell ``cell_id`` followed by gene names; every further row is one
cell. Values use ``.`` as the decimal separator and ``\\n`` line endings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import (
    AlreadyNormalized,
    DuplicateId,
    EmptyMatrix,
    NegativeValue,
    NonNumericCell,
    RaggedRow,
)

NormalizationMethod = Literal["log1p_zscore", "log1p_only", "none"]


@dataclass(frozen=True)
class ExpressionMatrix:
    """m cells x n genes expression matrix with id registries.

    Raw matrices hold nonnegative expression levels; normalized matrices may
    hold any finite real. Instances are immutable and safe to share across
    threads.
    """

    values: np.ndarray
    cell_ids: list[str]
    gene_names: list[str]
    normalized: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 2:
            raise EmptyMatrix(f"expected a 2-d matrix, got shape {values.shape}")
        m, n = values.shape
        if m == 0 or n == 0:
            raise EmptyMatrix("matrix has no cells or no genes")
        if len(self.cell_ids) != m:
            raise DuplicateId(f"{len(self.cell_ids)} cell ids for {m} rows")
        if len(self.gene_names) != n:
            raise DuplicateId(f"{len(self.gene_names)} gene names for {n} columns")
        if len(set(self.cell_ids)) != m:
            raise DuplicateId("duplicate cell ids")
        if len(set(self.gene_names)) != n:
            raise DuplicateId("duplicate gene names")
        if np.isnan(values).any():
            raise NonNumericCell("matrix contains NaN entries")
        if not self.normalized and (values < 0).any():
            i, j = np.argwhere(values < 0)[0]
            raise NegativeValue(
                f"negative value {values[i, j]} at cell {self.cell_ids[i]!r}, "
                f"gene {self.gene_names[j]!r}"
            )

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def gene_index(self, gene: str) -> int:
        try:
            return self.gene_names.index(gene)
        except ValueError:
            from .errors import UnknownGene

            raise UnknownGene(f"unknown gene {gene!r}") from None


@dataclass(frozen=True)
class NormalizationSpec:
    method: NormalizationMethod = "log1p_zscore"
    per_gene: bool = True

    def __post_init__(self):
        if self.method not in ("log1p_zscore", "log1p_only", "none"):
            raise ValueError(f"unknown normalization method {self.method!r}")


@dataclass
class ValidationReport:
    m: int
    n: int
    zero_variance_genes: list[str] = field(default_factory=list)
    zero_cells: list[str] = field(default_factory=list)
    min_value: float = 0.0
    max_value: float = 0.0
    mean_value: float = 0.0

    @property
    def clean(self) -> bool:
        return not self.zero_variance_genes and not self.zero_cells


def _parse_value(token: str, line_no: int, col: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise NonNumericCell(
            f"line {line_no}, column {col}: {token!r} is not a number"
        ) from None
    if math.isnan(value):
        raise NonNumericCell(f"line {line_no}, column {col}: NaN is not allowed")
    return value


def load_matrix(path: str | Path, format: str = "csv") -> ExpressionMatrix:
    """Load a raw expression matrix from a CSV or TSV file.

    The first header cell must be ``cell_id``; the remaining header cells are
    gene names. Raises RaggedRow, NonNumericCell, NegativeValue, DuplicateId
    or EmptyMatrix on malformed input.
    """
    if format not in ("csv", "tsv"):
        raise ValueError(f"unknown format {format!r}")
    sep = "," if format == "csv" else "\t"
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise EmptyMatrix(f"{path}: file is empty")

    header = lines[0].split(sep)
    if header[0] != "cell_id":
        raise NonNumericCell(
            f"line 1: first header cell must be 'cell_id', got {header[0]!r}"
        )
    gene_names = header[1:]
    n = len(gene_names)
    if n == 0:
        raise EmptyMatrix(f"{path}: header declares no genes")
    if len(lines) == 1:
        raise EmptyMatrix(f"{path}: no data rows")

    cell_ids: list[str] = []
    rows: list[list[float]] = []
    for line_no, line in enumerate(lines[1:], start=2):
        parts = line.split(sep)
        if len(parts) != n + 1:
            raise RaggedRow(
                f"line {line_no}: expected {n + 1} fields, got {len(parts)}"
            )
        cell_ids.append(parts[0])
        row = [_parse_value(tok, line_no, col) for col, tok in enumerate(parts[1:], start=2)]
        for col, value in enumerate(row, start=2):
            if value < 0:
                raise NegativeValue(f"line {line_no}, column {col}: negative value {value}")
        rows.append(row)

    return ExpressionMatrix(
        values=np.array(rows, dtype=float),
        cell_ids=cell_ids,
        gene_names=gene_names,
        normalized=False,
    )


def save_matrix(matrix: ExpressionMatrix, path: str | Path, format: str = "csv") -> None:
    """Write a matrix in the round-trippable CSV/TSV layout."""
    sep = "," if format == "csv" else "\t"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(sep.join(["cell_id", *matrix.gene_names]) + "\n")
        for cid, row in zip(matrix.cell_ids, matrix.values):
            fh.write(sep.join([cid, *(repr(float(v)) for v in row)]) + "\n")


def normalize(matrix: ExpressionMatrix, spec: NormalizationSpec | None = None) -> ExpressionMatrix:
    """Return a normalized copy of a raw matrix.

    log1p_zscore applies x -> ln(1+x) and then standardizes each gene column
    to mean 0 / sd 1; zero-variance columns are mapped to all-zeros so gene
    indices stay stable. Already-normalized input is rejected, never
    silently re-normalized.
    """
    if matrix.normalized:
        raise AlreadyNormalized("matrix is already normalized")
    spec = spec or NormalizationSpec()
    values = matrix.values
    if spec.method in ("log1p_zscore", "log1p_only"):
        values = np.log1p(values)
    if spec.method == "log1p_zscore":
        if spec.per_gene:
            mean = values.mean(axis=0)
            sd = values.std(axis=0)
            centered = values - mean
            out = np.zeros_like(centered)
            ok = sd > 0
            out[:, ok] = centered[:, ok] / sd[ok]
            values = out
        else:
            sd = values.std()
            values = (values - values.mean()) / sd if sd > 0 else np.zeros_like(values)
    return ExpressionMatrix(
        values=values,
        cell_ids=list(matrix.cell_ids),
        gene_names=list(matrix.gene_names),
        normalized=True,
    )


def validate(matrix: ExpressionMatrix) -> ValidationReport:
    """Summarize data quality issues without mutating the matrix."""
    values = matrix.values
    variances = values.var(axis=0)
    zero_var = [g for g, v in zip(matrix.gene_names, variances) if v == 0.0]
    zero_cells = [
        cid for cid, row in zip(matrix.cell_ids, values) if np.all(row == 0.0)
    ]
    return ValidationReport(
        m=matrix.m,
        n=matrix.n,
        zero_variance_genes=zero_var,
        zero_cells=zero_cells,
        min_value=float(values.min()),
        max_value=float(values.max()),
        mean_value=float(values.mean()),
    )
