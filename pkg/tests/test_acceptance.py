"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest -s`` to see them on success)."""

import time
from contextlib import contextmanager

import numpy as np
import pytest

from simfield.btl import GroundTruth, apply_power, btl_fit, gamma_grid, mae_pp, power_calibrate, spearman
from simfield.dynamics import anchor_detect, make_trace, separation_check, stability_assess
from simfield.errors import DiagonalNotOne
from simfield.fields import combine_convex, combine_product, fibre, incompatibility, make_field
from simfield.lockfilter import detect_locks, perm_test
from simfield.metrics_io import data_text, load_truth
from simfield.probes import attach_yes_matrix, make_matrices, matrices_from_csv

from conftest import random_field, random_matrices


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    print(f"ACCEPTANCE {name}: PASS")


PYTHIA_TABLE_PRED = {
    "Coca-Cola": 24.722,
    "Dr Pepper": 16.203,
    "Sprite": 14.929,
    "Pepsi-Cola": 8.699,
    "Diet Coke": 7.269,
    "Mountain Dew": 7.055,
    "Coke Zero Sugar": 8.358,
    "Diet Pepsi": 5.677,
    "Fanta": 4.042,
    "Ginger Ale": 3.044,
}

GEMMA_LOCKS = [
    ("Coca-Cola", "Sprite", 0.7247, 0.6784, 0.4030),
    ("Sprite", "Pepsi-Cola", 0.6808, 0.6857, 0.3665),
    ("Coca-Cola", "Coke Zero Sugar", 0.6839, 0.6758, 0.3597),
    ("Coca-Cola", "Ginger Ale", 0.6763, 0.6759, 0.3522),
]


def test_pythia_csd_reproduction():
    with criterion("pythia CSD reproduction"):
        m = matrices_from_csv(
            data_text("csd_pythia160m_P.csv"), data_text("csd_pythia160m_C.csv")
        )
        truth = load_truth("carbonated soft drink")

        start = time.perf_counter()
        result = btl_fit(m, iterations=300, epsilon=1e-9)
        cal = power_calibrate(result.pi, truth)
        pred = apply_power(result.pi, cal.gamma)
        rho = spearman(pred, truth.shares_pct)
        mae = mae_pp(pred, truth)
        elapsed = time.perf_counter() - start

        assert rho == pytest.approx(1.0 - 36.0 / 990.0, abs=1e-12)
        assert mae == pytest.approx(2.160, abs=0.15)
        for i, brand in enumerate(m.brands):
            assert 100.0 * pred[i] == pytest.approx(
                PYTHIA_TABLE_PRED[brand], abs=0.25
            ), brand
        assert elapsed < 1.0


def test_gemma_lock_detection():
    with criterion("gemma lock detection"):
        brands = tuple(PYTHIA_TABLE_PRED)
        index = {b: i for i, b in enumerate(brands)}
        rng = np.random.default_rng(7)
        base = random_matrices(rng, 10)
        yes = {(i, j): 0.5 for i in range(10) for j in range(10) if i != j}
        for bi, bj, y_ij, y_ji, _ in GEMMA_LOCKS:
            yes[(index[bi], index[bj])] = y_ij
            yes[(index[bj], index[bi])] = y_ji
        m = attach_yes_matrix(
            make_matrices(brands, base.P, base.C), yes
        )

        report = detect_locks(m, tau=0.67)
        assert report.k == 4
        got = [(p.brand_i, p.brand_j) for p in report.pairs]
        assert got == [(bi, bj) for bi, bj, _, _, _ in GEMMA_LOCKS]
        for pair, (_, _, _, _, published) in zip(report.pairs, GEMMA_LOCKS):
            assert abs(pair.sum_minus_1 - published) <= 1e-4

        assert detect_locks(m, tau=0.69).k == 0


def test_two_entity_btl_oracle():
    with criterion("two-entity BTL closed form"):
        rng = np.random.default_rng(42)
        for _ in range(200):
            p = float(rng.uniform(0.01, 0.99))
            count = float(rng.uniform(1.0, 50.0))
            m = make_matrices(
                ("x", "y"),
                [[0.0, p], [1.0 - p, 0.0]],
                [[0.0, count], [count, 0.0]],
            )
            pi = btl_fit(m, iterations=300, epsilon=1e-9).pi
            assert np.abs(pi - np.array([p, 1.0 - p])).max() <= 1e-6


def test_calibration_ranking_invariance():
    with criterion("power calibration never reorders"):
        rng = np.random.default_rng(3)
        grid = gamma_grid()
        for _ in range(1000):
            n = int(rng.integers(2, 12))
            p = rng.dirichlet(np.ones(n))
            order = np.argsort(p, kind="mergesort")
            powered = p[None, :] ** grid[:, None]
            powered = powered / powered.sum(axis=1, keepdims=True)
            for row in powered:
                assert np.array_equal(np.argsort(row, kind="mergesort"), order)
        gamma = float(grid[int(rng.integers(0, len(grid)))])
        assert np.array_equal(
            np.argsort(apply_power(p, gamma)), np.argsort(p)
        )


def test_theory_property_suite():
    with criterion("theory property suite"):
        start = time.perf_counter()

        # (a) exhaustive incompatibility grid
        values = np.round(np.linspace(0.0, 1.0, 101), 10)
        for x in values:
            for y in values:
                if x != y:
                    assert not incompatibility(float(x), float(y)).mutual

        rng = np.random.default_rng(11)
        for _ in range(1000):
            n = int(rng.integers(1, 8))
            f = random_field(rng, n)

            # (b) fibre monotonicity and intersection identity
            concept = f.entities[int(rng.integers(0, n))]
            alpha, beta = sorted(rng.uniform(0.0, 1.0, 2))
            assert fibre(f, concept, beta).members <= fibre(f, concept, alpha).members
            alphas = rng.uniform(0.0, 1.0, 3)
            inter = frozenset(f.entities)
            for a in alphas:
                inter &= fibre(f, concept, float(a)).members
            assert inter == fibre(f, concept, float(alphas.max())).members

            # (c) closure under product and convex combination
            g = random_field(rng, n)
            combine_product(f, g)
            w = rng.uniform(0.01, 1.0, 2)
            w = w / w.sum()
            combine_convex([f, g], w)

            # (d) 1 - S is never a valid field
            with pytest.raises(DiagonalNotOne):
                make_field(f.labels, 1.0 - f.values)

        elapsed = time.perf_counter() - start
        assert elapsed < 10.0


def test_dynamics_suite():
    with criterion("dynamics detectors"):
        p = np.arange(500)
        v1 = 0.5 + 0.5 * np.sin(p)
        v2 = 0.5 - 0.5 * np.sin(p)
        trace = make_trace(
            np.column_stack([v1, v2]), f=lambda v: float(np.mean(v))
        )
        verdict = stability_assess(trace, epsilon=0.01)
        assert verdict.stable
        assert abs(verdict.limit_estimate - 0.5) <= 0.01
        anchors = anchor_detect(trace, tolerance=0.1)
        assert not anchors.any_converged

        ys = np.array([float(q % 2) for q in range(500)])
        alternating = make_trace(ys[:, None], readouts=ys)
        assert separation_check(
            alternating, lambda v: v[0] < 0.5, lambda v: v[0] >= 0.5, delta=1.0
        )
        assert not stability_assess(alternating, epsilon=0.25).stable


def test_permutation_determinism():
    with criterion("permutation control determinism"):
        rng = np.random.default_rng(99)
        m = random_matrices(rng, 6)
        yes = {(i, j): 0.5 for i in range(6) for j in range(6) if i != j}
        for i, j in [(0, 1), (2, 3)]:
            yes[(i, j)] = 0.70
            yes[(j, i)] = 0.68
        m = attach_yes_matrix(m, yes)
        locks = detect_locks(m, tau=0.67)
        assert locks.k == 2
        shares = np.array([30.0, 25.0, 20.0, 12.0, 8.0, 5.0])
        truth = GroundTruth(m.brands, shares / shares.sum() * 100.0)

        start = time.perf_counter()
        runs = [
            perm_test(m, locks, alpha=0.01, gamma_frozen=1.5, truth=truth,
                      R=10000, seed=123, workers=1)
            for _ in range(3)
        ]
        concurrent = perm_test(
            m, locks, alpha=0.01, gamma_frozen=1.5, truth=truth,
            R=10000, seed=123, workers=4,
        )
        elapsed = time.perf_counter() - start

        p_values = {run.p_value for run in runs} | {concurrent.p_value}
        assert len(p_values) == 1
        assert np.array_equal(runs[0].random_deltas, concurrent.random_deltas)
        assert 1.0 / 10001.0 <= runs[0].p_value <= 1.0
        assert elapsed < 60.0


def test_ground_truth_normalization():
    with criterion("ground-truth normalization"):
        truth = load_truth("carbonated soft drink")
        assert truth.brands[0] == "Coca-Cola"
        assert truth.shares_pct[0] == pytest.approx(27.23, abs=0.01)
        assert truth.shares_pct.sum() == pytest.approx(100.0, abs=1e-9)
