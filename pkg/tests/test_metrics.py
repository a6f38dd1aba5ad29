import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calibcc.metrics import (
    BaseRateReference,
    MetricsError,
    PerfectReferenceError,
    bin_predictions,
    brier,
    bss,
    correlation,
    ece,
    mce,
    reference_predict,
    reference_update,
    report,
    write_reliability_csv,
)


def brute_force_ece_mce(preds, outcomes, m):
    """Independent oracle: explicit per-sample bin assignment, re-aggregated."""
    bins = [[] for _ in range(m)]
    for p, y in zip(preds, outcomes):
        idx = min(int(p * m), m - 1)
        bins[idx].append((p, y))
    n = len(preds)
    total, worst = 0.0, 0.0
    for bucket in bins:
        if not bucket:
            continue
        mean_conf = sum(p for p, _ in bucket) / len(bucket)
        mean_out = sum(y for _, y in bucket) / len(bucket)
        gap = abs(mean_out - mean_conf)
        total += len(bucket) / n * gap
        worst = max(worst, gap)
    return total, worst


class TestBinning:
    def test_edge_placement(self):
        b = bin_predictions([0.05, 0.95], [1, 0], 10)
        assert b.counts[0] == 1 and b.counts[9] == 1

    def test_last_bin_closed_above(self):
        b = bin_predictions([1.0], [1], 10)
        assert b.counts[9] == 1

    def test_single_bin_means(self):
        b = bin_predictions([0.8] * 4, [1, 1, 1, 0], 10)
        assert np.count_nonzero(b.counts) == 1
        assert b.mean_confidence()[8] == pytest.approx(0.8)
        assert b.mean_outcome()[8] == pytest.approx(0.75)

    def test_length_mismatch(self):
        with pytest.raises(MetricsError):
            bin_predictions([0.5], [1, 0], 10)

    def test_merge_matches_joint_binning(self):
        rng = np.random.default_rng(0)
        p1, p2 = rng.random(50), rng.random(70)
        y1, y2 = rng.integers(0, 2, 50), rng.integers(0, 2, 70)
        merged = bin_predictions(p1, y1, 10).merge(bin_predictions(p2, y2, 10))
        joint = bin_predictions(np.concatenate([p1, p2]), np.concatenate([y1, y2]), 10)
        assert np.array_equal(merged.counts, joint.counts)
        assert merged.conf_sums == pytest.approx(joint.conf_sums)


class TestEceMce:
    def test_single_bin_arithmetic(self):
        b = bin_predictions([0.8] * 4, [1, 1, 1, 0], 10)
        assert ece(b) == pytest.approx(0.05)

    def test_perfect_calibration_is_zero(self):
        preds = [0.25] * 4 + [0.75] * 4
        outcomes = [1, 0, 0, 0, 1, 1, 1, 0]
        b = bin_predictions(preds, outcomes, 10)
        assert ece(b) == pytest.approx(0.0, abs=1e-12)
        assert mce(b) == pytest.approx(0.0, abs=1e-12)

    def test_maximally_wrong(self):
        b = bin_predictions([0.05, 0.95], [1, 0], 10)
        assert ece(b) == pytest.approx(0.95)
        assert mce(b) == pytest.approx(0.95)

    def test_mce_is_max_over_bins(self):
        # bin gaps 0.05 and 0.30; MCE takes the max, ECE the weighted mean
        preds = [0.2] * 4 + [0.6] * 10
        outcomes = [1, 0, 0, 0] + [1] * 9 + [0]
        b = bin_predictions(preds, outcomes, 10)
        assert mce(b) == pytest.approx(0.3)
        assert ece(b) == pytest.approx((4 * 0.05 + 10 * 0.3) / 14)

    @settings(max_examples=200, deadline=None)
    @given(
        data=st.lists(
            st.tuples(st.floats(min_value=0, max_value=1), st.integers(0, 1)), min_size=1, max_size=200
        ),
        m=st.integers(min_value=1, max_value=20),
    )
    def test_matches_brute_force_and_ece_le_mce(self, data, m):
        preds = [p for p, _ in data]
        outcomes = [y for _, y in data]
        b = bin_predictions(preds, outcomes, m)
        expected_ece, expected_mce = brute_force_ece_mce(preds, outcomes, m)
        assert ece(b) == pytest.approx(expected_ece, abs=1e-12)
        assert mce(b) == pytest.approx(expected_mce, abs=1e-12)
        assert 0.0 <= ece(b) <= mce(b) <= 1.0


class TestBrierBss:
    def test_exact_predictions(self):
        assert brier([1.0, 0.0], [1, 0]) == 0.0

    def test_half_vs_one(self):
        assert brier([0.5], [1]) == pytest.approx(0.25)

    def test_arithmetic(self):
        assert brier([0.2, 0.9], [0, 1]) == pytest.approx(0.025)

    def test_bss_cases(self):
        assert bss(0.2, 0.2) == 0.0
        assert bss(0.1, 0.2) == pytest.approx(0.5)
        assert bss(0.3, 0.2) == pytest.approx(-0.5)

    def test_perfect_reference_error(self):
        with pytest.raises(PerfectReferenceError):
            bss(0.1, 0.0)

    @given(
        outcomes=st.lists(st.integers(0, 1), min_size=1, max_size=100),
        rate=st.floats(min_value=0.01, max_value=0.99),
    )
    def test_constant_forecast_brier_closed_form(self, outcomes, rate):
        q = np.mean(outcomes)
        expected = rate**2 - 2 * rate * q + q
        assert brier(np.full(len(outcomes), rate), outcomes) == pytest.approx(expected, abs=1e-12)


class TestBaseRateReference:
    def test_prior_mean(self):
        ref = BaseRateReference.from_mean(0.26, 50)
        assert reference_predict(ref) == pytest.approx(0.26)

    def test_java_rate(self):
        assert reference_predict(BaseRateReference.from_mean(0.2809, 50)) == pytest.approx(0.2809)

    def test_symmetric(self):
        assert reference_predict(BaseRateReference(3.0, 3.0)) == 0.5

    def test_window_update(self):
        ref = BaseRateReference.from_mean(0.26, 50)
        updated = reference_update(ref, [1] * 30 + [0] * 70)
        assert reference_predict(updated) == pytest.approx(43 / 150)

    def test_empty_window_unchanged(self):
        ref = BaseRateReference.from_mean(0.26, 50)
        assert reference_update(ref, []) == ref

    def test_all_ones_strictly_increases(self):
        ref = BaseRateReference.from_mean(0.26, 50)
        assert reference_predict(reference_update(ref, [1] * 10)) > 0.26

    @given(
        prior_mean=st.floats(min_value=0.05, max_value=0.95),
        outcomes=st.lists(st.integers(0, 1), min_size=1, max_size=50),
    )
    def test_posterior_between_prior_and_empirical(self, prior_mean, outcomes):
        ref = BaseRateReference.from_mean(prior_mean, 50)
        empirical = np.mean(outcomes)
        posterior = reference_predict(reference_update(ref, outcomes))
        if empirical == pytest.approx(prior_mean):
            return
        lo, hi = sorted([prior_mean, empirical])
        assert lo < posterior < hi


class TestCorrelation:
    def test_perfect_alignment(self):
        assert correlation([0.9, 0.9, 0.1, 0.1], [1, 1, 0, 0]) == pytest.approx(1.0)

    def test_constant_preds_undefined(self):
        assert correlation([0.5, 0.5], [0, 1]) is None

    def test_perfect_anti_alignment(self):
        assert correlation([0.1, 0.9], [1, 0]) == pytest.approx(-1.0)


class TestReport:
    def test_reference_self_comparison_is_zero_skill(self):
        ref = BaseRateReference.from_mean(0.26, 50)
        outcomes = np.array([1, 0, 0, 1, 0, 0, 0, 1])
        preds = np.full(8, 0.26)
        assert report(preds, outcomes, ref).bss == pytest.approx(0.0)

    def test_discriminating_predictions_have_positive_skill(self):
        rng = np.random.default_rng(5)
        y = rng.integers(0, 2, 500)
        preds = np.where(y == 1, 0.9, 0.1)
        rep = report(preds, y, BaseRateReference.from_mean(0.5, 50))
        assert rep.bss > 0

    def test_degenerate_overconfident(self):
        outcomes = np.zeros(100)
        preds = np.full(100, 1.0)
        rep = report(preds, outcomes, BaseRateReference.from_mean(0.26, 50))
        assert rep.brier == pytest.approx(1.0)
        assert rep.bss == pytest.approx(1 - 1.0 / 0.0676, rel=1e-12)
        assert rep.bss < 0

    def test_invariant_bounds(self):
        rng = np.random.default_rng(9)
        preds = rng.random(300)
        y = rng.integers(0, 2, 300)
        rep = report(preds, y, BaseRateReference.from_mean(0.4, 50))
        assert 0 <= rep.ece <= rep.mce <= 1
        assert 0 <= rep.brier <= 1


def test_reliability_csv_rows(tmp_path):
    b = bin_predictions([0.05, 0.55, 0.55, 0.95], [0, 1, 0, 1], 10)
    path = tmp_path / "rel.csv"
    write_reliability_csv(b, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "bin_low,bin_high,count,mean_confidence,mean_outcome"
    assert len(lines) - 1 == np.count_nonzero(b.counts)
