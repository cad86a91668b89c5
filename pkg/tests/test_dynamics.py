import numpy as np
import pytest

from simfield.dynamics import (
    anchor_detect,
    cluster_estimate,
    confinement_check,
    make_trace,
    separation_check,
    stability_assess,
    trace_from_csv,
    trace_to_csv,
)
from simfield.errors import MissingReadouts, OutOfRange, TraceTooShort


def mean_readout(v):
    return float(np.mean(v))


def sin_cancellation_trace(length=500):
    p = np.arange(length)
    v1 = 0.5 + 0.5 * np.sin(p)
    v2 = 0.5 - 0.5 * np.sin(p)
    return make_trace(np.column_stack([v1, v2]), f=mean_readout)


def alternating_trace(length=200):
    ys = np.array([float(p % 2) for p in range(length)])
    return make_trace(ys[:, None], readouts=ys)


class TestMakeTrace:
    def test_coordinates_must_be_in_unit_cube(self):
        with pytest.raises(OutOfRange):
            make_trace([[0.5], [1.2]])

    def test_readout_length_must_match(self):
        with pytest.raises(OutOfRange):
            make_trace([[0.5], [0.5]], readouts=[0.5])

    def test_readouts_require_source(self):
        trace = make_trace([[0.5], [0.5]])
        with pytest.raises(MissingReadouts):
            trace.resolved_readouts()


class TestStabilityAssess:
    def test_constant_trace(self):
        trace = make_trace(np.full((64, 1), 0.5), readouts=np.full(64, 0.5))
        verdict = stability_assess(trace, epsilon=0.01)
        assert verdict.stable
        assert verdict.limit_estimate == 0.5
        assert verdict.tube_violations == 0
        assert verdict.tail_start == 0

    def test_sin_cancellation_is_stable(self):
        verdict = stability_assess(sin_cancellation_trace(), epsilon=0.01)
        assert verdict.stable
        assert abs(verdict.limit_estimate - 0.5) <= 0.01

    def test_alternating_unstable_below_half(self):
        trace = alternating_trace()
        for eps in (0.1, 0.25, 0.49):
            assert not stability_assess(trace, epsilon=eps).stable
        assert stability_assess(trace, epsilon=0.5).stable

    def test_supplied_limit_overrides_tail_mean(self):
        trace = make_trace(np.full((64, 1), 0.5), readouts=np.full(64, 0.5))
        verdict = stability_assess(trace, epsilon=0.2, c=0.4)
        assert verdict.limit_estimate == 0.4

    def test_trace_too_short(self):
        trace = make_trace(np.full((10, 1), 0.5), readouts=np.full(10, 0.5))
        with pytest.raises(TraceTooShort):
            stability_assess(trace, epsilon=0.1)


class TestAnchorDetect:
    def test_constant_coordinate(self):
        trace = make_trace(np.full((64, 2), 0.25))
        report = anchor_detect(trace, tolerance=0.01)
        assert report.all_converged
        assert all(c.oscillation == 0.0 for c in report.coordinates)

    def test_sin_cancellation_has_no_anchor(self):
        report = anchor_detect(sin_cancellation_trace(), tolerance=0.1)
        assert not report.any_converged

    def test_decaying_oscillation_converges(self):
        p = np.arange(500)
        coord = 0.5 + ((-0.9) ** p) * 0.4
        trace = make_trace(coord[:, None])
        report = anchor_detect(trace, tolerance=0.05, tail_window=125)
        assert report.coordinates[0].converged
        assert report.coordinates[0].limit_estimate == pytest.approx(0.5, abs=0.01)


class TestSeparationCheck:
    def test_alternating_levels_flagged(self):
        trace = alternating_trace()
        flagged = separation_check(
            trace, lambda v: v[0] < 0.5, lambda v: v[0] >= 0.5, delta=1.0
        )
        assert flagged

    def test_single_set_tail_not_flagged(self):
        ys = np.concatenate([np.array([0.0, 1.0] * 10), np.ones(100)])
        trace = make_trace(ys[:, None], readouts=ys)
        assert not separation_check(
            trace, lambda v: v[0] < 0.5, lambda v: v[0] >= 0.5, delta=1.0
        )

    def test_flagged_traces_have_wide_tails(self, rng):
        # readout spread across the tail of any flagged trace covers delta
        for _ in range(50):
            low = rng.uniform(0.0, 0.3)
            high = rng.uniform(0.7, 1.0)
            delta = high - low
            ys = np.array([low if p % 2 else high for p in range(100)])
            trace = make_trace(ys[:, None], readouts=ys)
            if separation_check(
                trace, lambda v: v[0] <= low, lambda v: v[0] >= high, delta=delta
            ):
                tail = ys[50:]
                assert tail.max() - tail.min() >= delta

    def test_exclusion_against_stability(self):
        trace = alternating_trace()
        delta = 1.0
        flagged = separation_check(
            trace, lambda v: v[0] < 0.5, lambda v: v[0] >= 0.5, delta=delta
        )
        assert flagged
        assert not stability_assess(trace, epsilon=delta / 2 - 0.01).stable


class TestConfinementCheck:
    def test_constant_confined_from_zero(self):
        trace = make_trace(np.full((20, 1), 0.5), readouts=np.full(20, 0.5))
        assert confinement_check(trace, c=0.5, epsilon=0.05) == 0

    def test_harmonic_approach(self):
        p = np.arange(100)
        ys = 0.5 + 1.0 / (p + 1)
        ys = np.clip(ys, 0.0, 1.0)
        trace = make_trace(ys[:, None], readouts=ys)
        # independent scan over the closed tube |y - 0.5| <= 0.1
        expected = None
        inside = np.abs(ys - 0.5) <= 0.1
        for idx in range(len(ys)):
            if inside[idx:].all():
                expected = idx
                break
        assert expected == 9
        assert confinement_check(trace, c=0.5, epsilon=0.1) == expected

    def test_persistent_violations_return_absent(self):
        trace = alternating_trace()
        assert confinement_check(trace, c=0.0, epsilon=0.25) is None

    def test_tube_equivalence_with_stability(self, rng):
        for _ in range(30):
            length = int(rng.integers(40, 120))
            noise = rng.uniform(-0.04, 0.04, length)
            ys = np.clip(0.5 + noise, 0, 1)
            trace = make_trace(ys[:, None], readouts=ys)
            verdict = stability_assess(trace, epsilon=0.1)
            if verdict.stable:
                idx = confinement_check(
                    trace, c=verdict.limit_estimate, epsilon=0.1
                )
                assert idx is not None
                assert idx <= length - verdict.tail_window


class TestClusterEstimate:
    def test_constant_trace_single_cluster(self):
        trace = make_trace(np.full((40, 2), 0.5))
        clusters = cluster_estimate(trace, radius=0.05)
        assert len(clusters) == 1
        assert clusters[0].count == 20

    def test_sin_cancellation_splits(self):
        clusters = cluster_estimate(sin_cancellation_trace(), radius=0.1)
        assert len(clusters) >= 2

    def test_single_cluster_implies_anchors(self, rng):
        # contracting traces: all tail mass inside one ball
        for _ in range(30):
            target = rng.uniform(0.3, 0.7, 2)
            p = np.arange(80)
            wobble = (0.5 ** p)[:, None] * rng.uniform(-0.2, 0.2, (80, 2))
            samples = np.clip(target[None, :] + wobble, 0, 1)
            trace = make_trace(samples)
            radius = 0.05
            clusters = cluster_estimate(trace, radius=radius)
            if len(clusters) == 1:
                report = anchor_detect(trace, tolerance=2 * radius)
                assert report.all_converged

    def test_radius_must_be_positive(self):
        trace = make_trace(np.full((8, 1), 0.5))
        with pytest.raises(ValueError):
            cluster_estimate(trace, radius=0.0)


class TestTraceCsv:
    def test_round_trip_with_readout_column(self):
        trace = sin_cancellation_trace(60)
        text = trace_to_csv(trace, include_readouts=True)
        again = trace_from_csv(text, readout_column=True)
        assert np.array_equal(again.samples, trace.samples)
        assert np.array_equal(again.readouts, trace.resolved_readouts())

    def test_round_trip_samples_only(self):
        trace = make_trace([[0.1, 0.9], [0.3, 0.7]])
        again = trace_from_csv(trace_to_csv(trace))
        assert np.array_equal(again.samples, trace.samples)
