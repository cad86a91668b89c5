"""Bradley-Terry-Luce fitting on soft counts, power calibration, metrics.

The MM update treats (P, C) as soft counts: per iteration

    wins_i  = sum_j C[i,j] * P[i,j]
    denom_i = sum_{j != i} C[i,j] / (pi_i + pi_j + eps)
    pi_i   <- wins_i / denom_i, then renormalize to the simplex.

Fitting starts from the uniform vector and runs a fixed iteration count
with no early stopping; a convergence diagnostic is reported but never
used for control, so identical inputs give bit-identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DisconnectedComparisonGraph,
    GammaNonPositive,
    LengthMismatch,
    WeightsNotConvex,
)
from .probes import PairwiseMatrices

__all__ = [
    "BtlResult",
    "CalibrationResult",
    "GroundTruth",
    "btl_fit",
    "apply_power",
    "power_calibrate",
    "spearman",
    "mae_pp",
    "rank_desc",
    "GAMMA_GRID_START",
    "GAMMA_GRID_STOP",
    "GAMMA_GRID_POINTS",
]

GAMMA_GRID_START = 0.2
GAMMA_GRID_STOP = 5.0
GAMMA_GRID_POINTS = 200


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """External shares (percent) over an ordered brand list, summing to 100."""

    brands: tuple[str, ...]
    shares_pct: np.ndarray

    def __post_init__(self):
        if len(self.brands) != len(self.shares_pct):
            raise LengthMismatch("brands and shares differ in length")


@dataclass(frozen=True, eq=False)
class BtlResult:
    """Fitted strength vector on the simplex plus run diagnostics."""

    pi: np.ndarray
    iterations: int
    epsilon: float
    final_delta: float
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class CalibrationResult:
    """Grid-search outcome for the power gauge."""

    gamma: float
    mae_at_gamma: float
    grid: np.ndarray


def gamma_grid() -> np.ndarray:
    """200 evenly spaced gauge candidates, both endpoints included."""
    return np.linspace(GAMMA_GRID_START, GAMMA_GRID_STOP, GAMMA_GRID_POINTS)


def _check_connected(C: np.ndarray) -> None:
    n = C.shape[0]
    adj = C > 0
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(adj[i]):
            if not seen[j]:
                seen[j] = True
                stack.append(int(j))
    if not seen.all():
        stranded = [int(i) for i in np.flatnonzero(~seen)]
        raise DisconnectedComparisonGraph(
            f"comparison graph splits off component containing indices {stranded}"
        )


def mm_strengths(
    P: np.ndarray, C: np.ndarray, iterations: int, epsilon: float
) -> tuple[np.ndarray, float]:
    """Run the MM iteration; C may be batched with shape (..., n, n).

    Each leading-index slice is an independent fit against the shared P.
    Per-slice arithmetic does not depend on the batch shape, so batched,
    chunked, and single fits agree bitwise.
    """
    n = P.shape[-1]
    lead = C.shape[:-2]
    offdiag = ~np.eye(n, dtype=bool)
    wins = (C * P).sum(axis=-1)
    pi = np.full(lead + (n,), 1.0 / n)
    prev = pi
    for _ in range(iterations):
        prev = pi
        pairsum = pi[..., :, None] + pi[..., None, :] + epsilon
        denom = np.where(offdiag, C / pairsum, 0.0).sum(axis=-1)
        pi = wins / denom
        pi = pi / pi.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(pi - prev) / np.where(prev > 0, prev, 1.0)
    return pi, float(np.max(rel)) if pi.size else 0.0


def btl_fit(
    m: PairwiseMatrices, iterations: int = 300, epsilon: float = 1e-9
) -> BtlResult:
    """Fit BTL strengths from the win-rate and count matrices."""
    _check_connected(m.C)
    wins = (m.C * m.P).sum(axis=1)
    warnings = []
    pi, final_delta = mm_strengths(m.P, m.C, iterations, epsilon)
    zero_rows = np.flatnonzero(wins == 0.0)
    if zero_rows.size:
        names = [m.brands[int(i)] for i in zero_rows]
        warnings.append(f"zero-win rows floored at epsilon: {names}")
        pi = np.maximum(pi, epsilon)
        pi = pi / pi.sum()
    pi.setflags(write=False)
    return BtlResult(
        pi=pi,
        iterations=iterations,
        epsilon=epsilon,
        final_delta=final_delta,
        warnings=tuple(warnings),
    )


def _check_simplex(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if not (np.isfinite(p).all() and (p >= 0).all()):
        raise WeightsNotConvex("simplex vector must be finite and non-negative")
    if abs(p.sum() - 1.0) > 1e-8:
        raise WeightsNotConvex(f"vector sums to {p.sum()!r}, expected 1")
    return p


def apply_power(p, gamma: float) -> np.ndarray:
    """Componentwise power then renormalization; monotone, so the ranking of
    components never changes, only the sharpness of the distribution."""
    if not (isinstance(gamma, (int, float)) and math.isfinite(gamma) and gamma > 0):
        raise GammaNonPositive(f"gamma must be positive and finite, got {gamma!r}")
    p = _check_simplex(p)
    q = p ** float(gamma)
    return q / q.sum()


def power_calibrate(
    p, truth: GroundTruth, subset: list[int] | None = None
) -> CalibrationResult:
    """Grid-search the power gauge that minimizes MAE against the truth.

    Ties break toward the smaller gamma (first grid hit). ``subset``
    restricts the MAE to a holdout set of brand indices while the power map
    is still applied to the full vector. The chosen gauge is meant to be
    frozen for all downstream passes.
    """
    p = _check_simplex(p)
    if len(p) != len(truth.brands):
        raise LengthMismatch(
            f"{len(p)} predictions vs {len(truth.brands)} ground-truth brands"
        )
    sel = np.arange(len(p)) if subset is None else np.asarray(subset, dtype=int)
    grid = gamma_grid()
    maes = np.empty_like(grid)
    for k, g in enumerate(grid):
        calibrated = apply_power(p, float(g))
        maes[k] = np.abs(100.0 * calibrated[sel] - truth.shares_pct[sel]).mean()
    best = int(np.argmin(maes))
    return CalibrationResult(
        gamma=float(grid[best]), mae_at_gamma=float(maes[best]), grid=grid
    )


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """Ranks 1..n, averaging over ties."""
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x), dtype=float)
    base = np.arange(1, len(x) + 1, dtype=float)
    i = 0
    sx = x[order]
    while i < len(x):
        j = i
        while j + 1 < len(x) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = base[i : j + 1].mean()
        i = j + 1
    return ranks


def rank_desc(x) -> np.ndarray:
    """Ordinal ranks with 1 for the largest value (ties by position)."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(-x, kind="mergesort")
    ranks = np.empty(len(x), dtype=int)
    ranks[order] = np.arange(1, len(x) + 1)
    return ranks


def spearman(pred, truth) -> float:
    """Spearman rank correlation with average ranks for ties.

    Uses the 1 - 6*sum(d^2)/(n(n^2-1)) form when both vectors are tie-free,
    and Pearson correlation on the rank vectors otherwise.
    """
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape or pred.ndim != 1 or len(pred) < 2:
        raise LengthMismatch(
            f"need two equal-length vectors of size >= 2, got {pred.shape} and {truth.shape}"
        )
    rp = _average_ranks(pred)
    rt = _average_ranks(truth)
    n = len(pred)
    no_ties = len(np.unique(pred)) == n and len(np.unique(truth)) == n
    if no_ties:
        d2 = float(((rp - rt) ** 2).sum())
        return 1.0 - 6.0 * d2 / (n * (n * n - 1.0))
    rp = rp - rp.mean()
    rt = rt - rt.mean()
    denom = math.sqrt(float((rp * rp).sum()) * float((rt * rt).sum()))
    if denom == 0.0:
        raise LengthMismatch("rank variance is zero; correlation undefined")
    return float((rp * rt).sum()) / denom


def mae_pp(pred, truth: GroundTruth) -> float:
    """Mean absolute error in percentage points between a simplex prediction
    and ground-truth shares."""
    pred = np.asarray(pred, dtype=float)
    if len(pred) != len(truth.brands):
        raise LengthMismatch(
            f"{len(pred)} predictions vs {len(truth.brands)} ground-truth brands"
        )
    return float(np.abs(100.0 * pred - truth.shares_pct).mean())
