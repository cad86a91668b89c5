"""Directed similarity fields and their fibres.

A similarity field assigns a value in [0, 1] to every ordered entity pair and
is reflexive (unit diagonal). Symmetry and transitivity are deliberately not
required; the asymmetric case is what makes mutual fibre membership
impossible (see :func:`incompatibility`).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AlphaOutOfRange,
    DiagonalNotOne,
    EmptyGeneratedSet,
    InvalidLabel,
    InverseDomain,
    OutOfRange,
    RegistryMismatch,
    ShapeMismatch,
    UnknownEntity,
    WeightsNotConvex,
)

__all__ = [
    "EntityId",
    "SimilarityField",
    "Fibre",
    "MembershipReport",
    "IntelligenceScore",
    "make_field",
    "fibre",
    "combine_product",
    "combine_convex",
    "incompatibility",
    "intelligence_metrics",
    "calibrated_readout",
    "inverse_readout",
    "field_to_csv",
    "field_from_csv",
]


@dataclass(frozen=True)
class EntityId:
    """Position and label of one entity in an ordered registry."""

    index: int
    label: str


class SimilarityField:
    """Finite directed similarity field over an ordered entity registry.

    ``values[i, j]`` is the similarity of entity ``i`` to entity ``j``; rows
    are the first argument. The array is validated once and frozen.
    """

    __slots__ = ("entities", "values")

    def __init__(self, entities: tuple[EntityId, ...], values: np.ndarray):
        object.__setattr__(self, "entities", entities)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("SimilarityField is immutable")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(e.label for e in self.entities)

    @property
    def n(self) -> int:
        return len(self.entities)

    def entity(self, ref: "EntityId | str | int") -> EntityId:
        """Resolve a label, index, or EntityId to this field's registry."""
        if isinstance(ref, EntityId):
            if 0 <= ref.index < self.n and self.entities[ref.index].label == ref.label:
                return self.entities[ref.index]
            raise UnknownEntity(f"entity {ref!r} is not in this registry")
        if isinstance(ref, str):
            for e in self.entities:
                if e.label == ref:
                    return e
            raise UnknownEntity(f"no entity labelled {ref!r}")
        if isinstance(ref, int):
            if 0 <= ref < self.n:
                return self.entities[ref]
            raise UnknownEntity(f"index {ref} outside registry of size {self.n}")
        raise UnknownEntity(f"cannot resolve entity reference {ref!r}")

    def similarity(self, a: "EntityId | str | int", b: "EntityId | str | int") -> float:
        """S(a, b): how similar ``a`` is to ``b``."""
        ea, eb = self.entity(a), self.entity(b)
        return float(self.values[ea.index, eb.index])

    def __eq__(self, other) -> bool:
        if not isinstance(other, SimilarityField):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.values, other.values)

    __hash__ = None  # mutable-array payload; identity hashing would mislead

    def __repr__(self) -> str:
        return f"SimilarityField(n={self.n}, labels={self.labels!r})"


@dataclass(frozen=True)
class Fibre:
    """Superlevel set of S(., concept) at a closed threshold."""

    concept: EntityId
    threshold: float
    members: frozenset[EntityId]

    def __contains__(self, entity: EntityId) -> bool:
        return entity in self.members


@dataclass(frozen=True)
class MembershipReport:
    """Mutual fibre-membership check for one ordered value pair.

    ``cond1`` holds when the first entity clears the second's threshold
    (x >= y) and ``cond2`` when the converse holds; with x != y the two
    conditions can never hold together.
    """

    x: float
    y: float
    cond1: bool
    cond2: bool

    @property
    def mutual(self) -> bool:
        return self.cond1 and self.cond2


@dataclass(frozen=True)
class IntelligenceScore:
    """Coverage and fidelity of a generated set against a concept fibre."""

    coverage: float
    fidelity: float
    threshold: float


def make_field(labels: Sequence[str], values) -> SimilarityField:
    """Validate and build a similarity field.

    Reflexivity is checked exactly (diagonal == 1.0, no tolerance); callers
    producing fields numerically must set the diagonal explicitly.
    """
    labels = tuple(labels)
    for lab in labels:
        if not isinstance(lab, str) or not lab.strip():
            raise InvalidLabel(f"empty or non-string label: {lab!r}")
    if len(set(labels)) != len(labels):
        raise InvalidLabel("registry labels must be unique")

    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeMismatch(f"values must be square, got shape {arr.shape}")
    if arr.shape[0] != len(labels):
        raise ShapeMismatch(
            f"{len(labels)} labels but value array of shape {arr.shape}"
        )
    diag = np.diagonal(arr)
    if not np.all(diag == 1.0):
        bad = int(np.argmax(diag != 1.0))
        raise DiagonalNotOne(f"self-similarity of {labels[bad]!r} is {diag[bad]!r}, not 1")
    finite = np.isfinite(arr)
    if not (finite.all() and (arr >= 0.0).all() and (arr <= 1.0).all()):
        raise OutOfRange("similarity values must lie in [0, 1]")

    arr = arr.copy()
    arr.setflags(write=False)
    entities = tuple(EntityId(i, lab) for i, lab in enumerate(labels))
    return SimilarityField(entities, arr)


def fibre(field: SimilarityField, concept, alpha: float) -> Fibre:
    """Members E with S(E, concept) >= alpha (closed threshold, ties included)."""
    if not (isinstance(alpha, (int, float)) and 0.0 <= alpha <= 1.0):
        raise AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha!r}")
    k = field.entity(concept)
    column = field.values[:, k.index]
    members = frozenset(
        field.entities[i] for i in range(field.n) if column[i] >= alpha
    )
    return Fibre(concept=k, threshold=float(alpha), members=members)


def _require_same_registry(a: SimilarityField, b: SimilarityField) -> None:
    if a.labels != b.labels:
        raise RegistryMismatch("fields must share one ordered registry")


def combine_product(f1: SimilarityField, f2: SimilarityField) -> SimilarityField:
    """Pointwise product of two fields over one registry."""
    _require_same_registry(f1, f2)
    return make_field(f1.labels, f1.values * f2.values)


def combine_convex(
    fields: Sequence[SimilarityField], weights: Sequence[float]
) -> SimilarityField:
    """Convex combination of fields with non-negative weights summing to 1.

    The diagonal is re-pinned to exactly 1 and off-diagonal values clipped to
    [0, 1], so closure survives floating-point rounding of the weight sum.
    """
    if len(fields) == 0 or len(fields) != len(weights):
        raise WeightsNotConvex("need one weight per field and at least one field")
    w = np.asarray(weights, dtype=float)
    if not (np.isfinite(w).all() and (w >= 0.0).all()):
        raise WeightsNotConvex("weights must be finite and non-negative")
    if abs(w.sum() - 1.0) > 1e-12:
        raise WeightsNotConvex(f"weights sum to {w.sum()!r}, expected 1 within 1e-12")
    first = fields[0]
    for f in fields[1:]:
        _require_same_registry(first, f)
    acc = np.zeros_like(first.values)
    for wk, f in zip(w, fields):
        acc = acc + wk * f.values
    acc = np.clip(acc, 0.0, 1.0)
    np.fill_diagonal(acc, 1.0)
    return make_field(first.labels, acc)


def incompatibility(x: float, y: float) -> MembershipReport:
    """Check whether two entities could sit in each other's fibres.

    With thresholds set by the opposite entity's value, membership one way
    means x >= y and the other way y >= x; both only when x == y.
    """
    for v in (x, y):
        if not (isinstance(v, (int, float)) and 0.0 <= v <= 1.0):
            raise OutOfRange(f"similarity value {v!r} outside [0, 1]")
    return MembershipReport(x=float(x), y=float(y), cond1=(x >= y), cond2=(y >= x))


def intelligence_metrics(
    field: SimilarityField, concept, alpha: float, generated: Iterable
) -> IntelligenceScore:
    """Coverage (fraction of generated entities inside the fibre) and fidelity
    (their mean similarity to the concept)."""
    if not (isinstance(alpha, (int, float)) and 0.0 <= alpha <= 1.0):
        raise AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha!r}")
    k = field.entity(concept)
    resolved = [field.entity(g) for g in generated]
    if not resolved:
        raise EmptyGeneratedSet("generated set must be non-empty")
    sims = np.array([field.values[e.index, k.index] for e in resolved])
    coverage = float(np.count_nonzero(sims >= alpha)) / len(sims)
    return IntelligenceScore(
        coverage=coverage, fidelity=float(sims.mean()), threshold=float(alpha)
    )


def calibrated_readout(r: float) -> float:
    """Map a raw activation to (0, 1) through the logistic bijection."""
    if not math.isfinite(r):
        raise OutOfRange(f"readout argument must be finite, got {r!r}")
    if r >= 0:
        z = math.exp(-r)
        return 1.0 / (1.0 + z)
    z = math.exp(r)
    return z / (1.0 + z)


def inverse_readout(s: float) -> float:
    """Recover the raw activation r = ln(s / (1 - s)).

    Exact round-trip is limited by float64: once s is within a few hundred
    ulps of 1 the inverse loses roughly eps * e^r absolute accuracy, so
    recovery at 1e-12 holds for r in [-30, 9] while the value-side
    round-trip readout(inverse(s)) stays at machine precision everywhere.
    """
    if not (isinstance(s, (int, float)) and 0.0 < s < 1.0):
        raise InverseDomain(f"readout inverse needs s in (0, 1), got {s!r}")
    return math.log(s) - math.log1p(-s)


def field_to_csv(field: SimilarityField) -> str:
    """Render as a square matrix with a label header row and label column."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([""] + list(field.labels))
    for i, lab in enumerate(field.labels):
        writer.writerow([lab] + [repr(float(v)) for v in field.values[i]])
    return buf.getvalue()


def field_from_csv(text: str) -> SimilarityField:
    """Parse the matrix format written by :func:`field_to_csv` and validate."""
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise ShapeMismatch("empty field file")
    header = rows[0][1:]
    body = rows[1:]
    if len(body) != len(header):
        raise ShapeMismatch(
            f"{len(header)} header labels but {len(body)} data rows"
        )
    values = []
    for row in body:
        if len(row) != len(header) + 1:
            raise ShapeMismatch(f"row {row[:1]} has {len(row) - 1} values")
        values.append([float(cell) for cell in row[1:]])
    row_labels = [row[0] for row in body]
    if row_labels != list(header):
        raise ShapeMismatch("row labels do not repeat the header labels")
    return make_field(header, values)
