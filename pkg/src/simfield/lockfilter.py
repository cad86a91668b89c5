"""Locked-pair detection, count down-weighting, and the randomized control.

A locked pair is an unordered pair whose yes-probabilities point both ways
at once (min(Y[i,j], Y[j,i]) >= tau). Under an asymmetric similarity field
mutual inclusion is impossible, so such pairs are treated as measurement
noise: their counts are down-weighted and the model refit under the frozen
power gauge. The permutation control down-weights equally many random
non-locked pairs R times and reports an add-one-smoothed upper-tail
p-value for the observed improvement.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .btl import GroundTruth, apply_power, btl_fit, mae_pp, mm_strengths, spearman
from .errors import (
    AlphaOutOfRange,
    MissingYMatrix,
    NoLockedPairs,
    PoolTooSmall,
    TauOutOfRange,
)
from .probes import PairwiseMatrices
from .rng import sample_pair_indices, substream

__all__ = [
    "LockedPair",
    "LockReport",
    "LockFilterResult",
    "PermutationOutcome",
    "detect_locks",
    "downweight",
    "lock_filter_run",
    "perm_test",
    "add_one_p_value",
]


@dataclass(frozen=True)
class LockedPair:
    i: int
    j: int
    brand_i: str
    brand_j: str
    y_ij: float
    y_ji: float

    @property
    def sum_minus_1(self) -> float:
        """Mutual-yes surplus: how far the two directions overshoot a
        complementary pair."""
        return self.y_ij + self.y_ji - 1.0


@dataclass(frozen=True)
class LockReport:
    tau: float
    pairs: tuple[LockedPair, ...]

    @property
    def k(self) -> int:
        return len(self.pairs)

    def index_pairs(self) -> list[tuple[int, int]]:
        return [(p.i, p.j) for p in self.pairs]


def detect_locks(m: PairwiseMatrices, tau: float) -> LockReport:
    """All unordered pairs with min(Y[i,j], Y[j,i]) >= tau, sorted by
    descending mutual-yes surplus."""
    if m.Y is None:
        raise MissingYMatrix("lock detection needs the yes-probability matrix")
    if not 0.5 < tau <= 1.0:
        raise TauOutOfRange(f"tau must lie in (0.5, 1], got {tau!r}")
    found = []
    for i, j in m.pairs():
        y_ij, y_ji = float(m.Y[i, j]), float(m.Y[j, i])
        if min(y_ij, y_ji) >= tau:
            found.append(
                LockedPair(i, j, m.brands[i], m.brands[j], y_ij, y_ji)
            )
    found.sort(key=lambda p: (-p.sum_minus_1, p.i, p.j))
    return LockReport(tau=float(tau), pairs=tuple(found))


def downweight(m: PairwiseMatrices, pairs, alpha: float = 0.01) -> PairwiseMatrices:
    """Scale the counts of the given unordered pairs by alpha, both
    directions; P is left untouched."""
    if not (isinstance(alpha, (int, float)) and 0.0 < alpha < 1.0):
        raise AlphaOutOfRange(f"alpha must lie in (0, 1), got {alpha!r}")
    C = m.C.copy()
    for p in pairs:
        i, j = (p.i, p.j) if isinstance(p, LockedPair) else p
        C[i, j] *= alpha
        C[j, i] *= alpha
    return m.with_counts(C)


@dataclass(frozen=True, eq=False)
class LockFilterResult:
    """Baseline vs lock-filtered fit under one frozen power gauge."""

    locks: LockReport
    alpha: float
    gamma: float
    baseline_pred: np.ndarray
    filtered_pred: np.ndarray
    baseline_mae: float
    filtered_mae: float
    baseline_spearman: float
    filtered_spearman: float

    @property
    def delta_mae(self) -> float:
        return self.baseline_mae - self.filtered_mae

    @property
    def improvement_pct(self) -> float:
        if self.baseline_mae == 0.0:
            return 0.0
        return 100.0 * self.delta_mae / self.baseline_mae


def _fit_predict(
    m: PairwiseMatrices, gamma: float, iterations: int, epsilon: float
) -> np.ndarray:
    return apply_power(btl_fit(m, iterations, epsilon).pi, gamma)


def lock_filter_run(
    m: PairwiseMatrices,
    tau: float,
    alpha: float,
    gamma_frozen: float,
    truth: GroundTruth,
    iterations: int = 300,
    epsilon: float = 1e-9,
) -> LockFilterResult:
    """Detect locks, down-weight them, refit, and compare MAE and rank
    correlation against the baseline fit, all under the frozen gauge
    (never re-tuned here)."""
    locks = detect_locks(m, tau)
    baseline = _fit_predict(m, gamma_frozen, iterations, epsilon)
    if locks.k:
        filtered = _fit_predict(
            downweight(m, locks.pairs, alpha), gamma_frozen, iterations, epsilon
        )
    else:
        filtered = baseline
    return LockFilterResult(
        locks=locks,
        alpha=float(alpha),
        gamma=float(gamma_frozen),
        baseline_pred=baseline,
        filtered_pred=filtered,
        baseline_mae=mae_pp(baseline, truth),
        filtered_mae=mae_pp(filtered, truth),
        baseline_spearman=spearman(baseline, truth.shares_pct),
        filtered_spearman=spearman(filtered, truth.shares_pct),
    )


@dataclass(frozen=True, eq=False)
class PermutationOutcome:
    delta_mae_lock: float
    random_deltas: np.ndarray
    p_value: float
    R: int
    seed: int


def add_one_p_value(random_deltas: np.ndarray, observed: float) -> float:
    """One-sided upper-tail p-value with add-one smoothing."""
    r = len(random_deltas)
    exceed = int(np.count_nonzero(np.asarray(random_deltas) >= observed))
    return (1 + exceed) / (r + 1)


def perm_test(
    m: PairwiseMatrices,
    locks: LockReport,
    alpha: float,
    gamma_frozen: float,
    truth: GroundTruth,
    R: int = 10000,
    seed: int = 123,
    iterations: int = 300,
    epsilon: float = 1e-9,
    workers: int = 1,
) -> PermutationOutcome:
    """Randomized control for the lock filter.

    Locked pairs are removed from the candidate set; each replicate r
    down-weights k pairs sampled without replacement from the remaining
    pool using its own substream of the seeded generator, refits, and
    records the MAE improvement. Replicates are independent, so any worker
    count produces the replicate deltas, and hence the p-value, bitwise
    identically.
    """
    if locks.k == 0:
        raise NoLockedPairs("permutation control needs at least one locked pair")
    locked = set(locks.index_pairs())
    pool = [pq for pq in m.pairs() if pq not in locked]
    k = locks.k
    if len(pool) < k:
        raise PoolTooSmall(f"pool of {len(pool)} non-locked pairs cannot supply {k}")

    baseline = _fit_predict(m, gamma_frozen, iterations, epsilon)
    baseline_mae = mae_pp(baseline, truth)
    filtered = _fit_predict(
        downweight(m, locks.pairs, alpha), gamma_frozen, iterations, epsilon
    )
    delta_lock = baseline_mae - mae_pp(filtered, truth)

    # every replicate's count matrix, selected up front from its substream
    n = m.n
    C_batch = np.broadcast_to(m.C, (R, n, n)).copy()
    for r in range(R):
        rng = substream(seed, r)
        for idx in sample_pair_indices(rng, len(pool), k):
            i, j = pool[idx]
            C_batch[r, i, j] *= alpha
            C_batch[r, j, i] *= alpha

    def run_block(lo: int, hi: int) -> np.ndarray:
        pi_block, _ = mm_strengths(m.P, C_batch[lo:hi], iterations, epsilon)
        preds = pi_block ** gamma_frozen
        preds = preds / preds.sum(axis=1, keepdims=True)
        return np.abs(100.0 * preds - truth.shares_pct[None, :]).mean(axis=1)

    if workers <= 1:
        maes = run_block(0, R)
    else:
        step = -(-R // workers)
        bounds = [(lo, min(lo + step, R)) for lo in range(0, R, step)]
        with ThreadPoolExecutor(max_workers=workers) as pool_exec:
            blocks = list(pool_exec.map(lambda b: run_block(*b), bounds))
        maes = np.concatenate(blocks)

    random_deltas = baseline_mae - maes
    random_deltas.setflags(write=False)
    return PermutationOutcome(
        delta_mae_lock=float(delta_lock),
        random_deltas=random_deltas,
        p_value=add_one_p_value(random_deltas, delta_lock),
        R=R,
        seed=seed,
    )
