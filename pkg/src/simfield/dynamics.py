"""Finite-trace detectors for stability, anchors, and cluster structure.

Asymptotic notions (limits, omega-limit sets, eventual confinement) are
approximated on a finite sample by a tail window: by default the last
quarter of the trace, never fewer than 8 samples. "Infinitely often" is
operationalized as at least ``min_visits`` visits inside the tail half.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import MissingReadouts, OutOfRange, TraceTooShort

__all__ = [
    "SequenceTrace",
    "StabilityVerdict",
    "CoordinateAnchor",
    "AnchorReport",
    "Cluster",
    "make_trace",
    "stability_assess",
    "anchor_detect",
    "separation_check",
    "confinement_check",
    "cluster_estimate",
    "trace_to_csv",
    "trace_from_csv",
]

MIN_TAIL_WINDOW = 8


@dataclass(frozen=True, eq=False)
class SequenceTrace:
    """Sampled determining vectors with an optional readout sequence.

    ``samples`` has one row per step, coordinates in [0, 1]. Readouts may be
    precomputed or derived lazily from ``f``.
    """

    samples: np.ndarray
    readouts: np.ndarray | None = None
    f: Callable[[np.ndarray], float] | None = None

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def resolved_readouts(self) -> np.ndarray:
        """Precomputed readouts, or f applied samplewise."""
        if self.readouts is not None:
            return self.readouts
        if self.f is None:
            raise MissingReadouts("trace has neither readouts nor a readout function")
        return np.array([float(self.f(v)) for v in self.samples])


def make_trace(samples, readouts=None, f=None) -> SequenceTrace:
    """Validate coordinates and lengths, freeze arrays, build a trace."""
    arr = np.asarray(samples, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise OutOfRange(f"samples must be a non-empty 2-d array, got shape {arr.shape}")
    if not (np.isfinite(arr).all() and (arr >= 0.0).all() and (arr <= 1.0).all()):
        raise OutOfRange("every sample coordinate must lie in [0, 1]")
    arr = arr.copy()
    arr.setflags(write=False)
    ys = None
    if readouts is not None:
        ys = np.asarray(readouts, dtype=float)
        if ys.shape != (arr.shape[0],):
            raise OutOfRange(
                f"{arr.shape[0]} samples but {ys.shape} readouts"
            )
        ys = ys.copy()
        ys.setflags(write=False)
    return SequenceTrace(samples=arr, readouts=ys, f=f)


def _resolve_window(length: int, tail_window: int | None) -> int:
    w = max(MIN_TAIL_WINDOW, length // 4) if tail_window is None else int(tail_window)
    if w < 1:
        raise TraceTooShort(f"tail window must be positive, got {w}")
    if length < 2 * w:
        raise TraceTooShort(f"trace of length {length} needs at least {2 * w} samples")
    return w


@dataclass(frozen=True)
class StabilityVerdict:
    """Outcome of the tail-tube stability check."""

    stable: bool
    limit_estimate: float
    epsilon: float
    tail_start: int | None
    tube_violations: int
    tail_window: int


def stability_assess(
    trace: SequenceTrace,
    epsilon: float,
    tail_window: int | None = None,
    c: float | None = None,
) -> StabilityVerdict:
    """Decide finite-trace stability: do the last W readouts stay within
    epsilon of the limit estimate?

    The limit estimate is the tail mean unless ``c`` is supplied.
    ``tail_start`` is the first index from which the closed tube
    |y - c| <= epsilon holds through the end of the trace (None if even the
    final sample violates it); ``tube_violations`` counts violations over
    the whole trace.
    """
    w = _resolve_window(len(trace), tail_window)
    ys = trace.resolved_readouts()
    limit = float(np.mean(ys[-w:])) if c is None else float(c)
    dev = np.abs(ys - limit)
    inside = dev <= epsilon
    stable = bool(inside[-w:].all())
    violations = int(np.count_nonzero(~inside))
    if inside[-1]:
        bad = np.flatnonzero(~inside)
        tail_start = int(bad[-1] + 1) if bad.size else 0
    else:
        tail_start = None
    return StabilityVerdict(
        stable=stable,
        limit_estimate=limit,
        epsilon=float(epsilon),
        tail_start=tail_start,
        tube_violations=violations,
        tail_window=w,
    )


@dataclass(frozen=True)
class CoordinateAnchor:
    """Convergence verdict for one coordinate of the determining vector."""

    index: int
    converged: bool
    limit_estimate: float
    oscillation: float


@dataclass(frozen=True)
class AnchorReport:
    coordinates: tuple[CoordinateAnchor, ...]
    tolerance: float
    tail_window: int

    @property
    def any_converged(self) -> bool:
        return any(c.converged for c in self.coordinates)

    @property
    def all_converged(self) -> bool:
        return all(c.converged for c in self.coordinates)


def anchor_detect(
    trace: SequenceTrace, tolerance: float, tail_window: int | None = None
) -> AnchorReport:
    """Flag coordinates whose tail oscillation (max - min over the last W
    samples) is within tolerance; their limit estimate is the tail mean."""
    w = _resolve_window(len(trace), tail_window)
    tail = trace.samples[-w:]
    coords = []
    for i in range(trace.dim):
        col = tail[:, i]
        osc = float(col.max() - col.min())
        coords.append(
            CoordinateAnchor(
                index=i,
                converged=osc <= tolerance,
                limit_estimate=float(col.mean()),
                oscillation=osc,
            )
        )
    return AnchorReport(
        coordinates=tuple(coords), tolerance=float(tolerance), tail_window=w
    )


def separation_check(
    trace: SequenceTrace,
    set_a: Callable[[np.ndarray], bool],
    set_b: Callable[[np.ndarray], bool],
    delta: float,
    min_visits: int = 3,
) -> bool:
    """Flag nonconvergence when the tail half keeps visiting two sets whose
    readout images stay at least delta apart.

    Both sets must be visited at least ``min_visits`` times within the tail
    half and the observed readout gap between them must reach delta;
    otherwise the trace is not flagged (no error is raised).
    """
    ys = trace.resolved_readouts()
    start = len(trace) // 2
    ya, yb = [], []
    for p in range(start, len(trace)):
        v = trace.samples[p]
        if set_a(v):
            ya.append(ys[p])
        if set_b(v):
            yb.append(ys[p])
    if len(ya) < min_visits or len(yb) < min_visits:
        return False
    gap = max(min(yb) - max(ya), min(ya) - max(yb))
    return gap >= delta


def confinement_check(
    trace: SequenceTrace, c: float, epsilon: float
) -> int | None:
    """Smallest index from which every later readout stays in the closed
    tube [c - epsilon, c + epsilon], or None if the trace keeps leaving it."""
    ys = trace.resolved_readouts()
    inside = np.abs(ys - c) <= epsilon
    if not inside[-1]:
        return None
    bad = np.flatnonzero(~inside)
    return int(bad[-1] + 1) if bad.size else 0


@dataclass(frozen=True)
class Cluster:
    """A max-norm ball center covering part of the tail, with its visit count."""

    center: tuple[float, ...]
    count: int


def cluster_estimate(trace: SequenceTrace, radius: float) -> list[Cluster]:
    """Greedy ball covering of the tail half in max-norm.

    Repeatedly picks the sample covering the most uncovered tail points as a
    center; clusters are returned by descending visit count. A single cluster
    bounds every coordinate's tail oscillation by 2 * radius. This is one
    admissible finite-sample estimate of the cluster-point structure, not a
    canonical one.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius!r}")
    tail = trace.samples[len(trace) // 2:]
    m = tail.shape[0]
    uncovered = np.ones(m, dtype=bool)
    clusters: list[Cluster] = []
    # pairwise max-norm distances; desk-scale traces keep this small
    dist = np.abs(tail[:, None, :] - tail[None, :, :]).max(axis=2)
    within = dist <= radius
    while uncovered.any():
        cover_counts = (within & uncovered[None, :]).sum(axis=1)
        cover_counts[~uncovered] = -1  # centers must themselves be uncovered
        best = int(np.argmax(cover_counts))
        covered = within[best] & uncovered
        clusters.append(
            Cluster(center=tuple(float(x) for x in tail[best]), count=int(covered.sum()))
        )
        uncovered &= ~covered
    clusters.sort(key=lambda cl: -cl.count)
    return clusters


def trace_to_csv(trace: SequenceTrace, include_readouts: bool = False) -> str:
    """One sample per row; optionally append the readout as a final column."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    ys = trace.resolved_readouts() if include_readouts else None
    for p in range(len(trace)):
        row = [repr(float(x)) for x in trace.samples[p]]
        if ys is not None:
            row.append(repr(float(ys[p])))
        writer.writerow(row)
    return buf.getvalue()


def trace_from_csv(text: str, readout_column: bool = False) -> SequenceTrace:
    """Parse rows of coordinates, with an optional trailing readout column."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    data = np.array([[float(cell) for cell in row] for row in rows])
    if readout_column:
        return make_trace(data[:, :-1], readouts=data[:, -1])
    return make_trace(data)
