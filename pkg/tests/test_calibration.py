import math

import numpy as np
import pytest
from sklearn.base import clone

from calibcc.calibration import (
    CalibrationError,
    CalibratorScope,
    PlattCalibrator,
    PlattParams,
    ScopeEmptyError,
    calibrate,
    feature,
    fit_platt,
    fit_scoped,
    load_calibrators,
    nll,
    nll_gradient,
    save_calibrators,
)
from calibcc.labeling import LabeledObservation
from calibcc.telemetry import LanguageTag


def make_obs(conf, label, language="java", user="u1"):
    return LabeledObservation(
        confidence=conf, ratio=float(label), label=label,
        user_id=user, language=LanguageTag(language),
    )


class TestFeature:
    def test_midpoint(self):
        assert feature(0.5) == pytest.approx(0.0, abs=1e-12)

    def test_clamped_at_one(self):
        assert feature(1.0) == pytest.approx(math.log((1 - 1e-6) / 1e-6), rel=1e-9)
        assert feature(1.0) == pytest.approx(13.8155, abs=1e-3)

    def test_inverse_sigmoid_spot(self):
        assert feature(0.2689414) == pytest.approx(-1.0, abs=1e-5)

    def test_out_of_range(self):
        with pytest.raises(CalibrationError):
            feature(0.0)
        with pytest.raises(CalibrationError):
            feature(1.2)

    def test_vectorized(self):
        z = feature(np.array([0.5, 0.2689414]))
        assert z == pytest.approx([0.0, -1.0], abs=1e-5)


class TestCalibrate:
    def test_identity_map(self):
        p = PlattParams.identity()
        assert calibrate(p, 0.73) == pytest.approx(0.73, abs=1e-5)

    def test_constant_map(self):
        p = PlattParams(slope_a=0.0, intercept_b=0.0)
        for conf in (0.1, 0.5, 0.99):
            assert calibrate(p, conf) == pytest.approx(0.5)

    def test_direct_evaluation(self):
        p = PlattParams(slope_a=2.0, intercept_b=-1.0)
        assert calibrate(p, 0.5) == pytest.approx(1 / (1 + math.e), abs=1e-9)

    def test_monotone_for_positive_slope(self):
        p = PlattParams(slope_a=1.7, intercept_b=0.3)
        grid = np.linspace(0.01, 0.99, 50)
        out = calibrate(p, grid)
        assert np.all(np.diff(out) > 0)


def recovery_data(seed=42, n=10000, a=2.0, b=-1.0):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n)
    conf = 1 / (1 + np.exp(-z))
    y = (rng.random(n) < 1 / (1 + np.exp(-(a * z + b)))).astype(float)
    return conf, y


class TestFitPlatt:
    def test_balanced_midpoint(self):
        data = [(0.5, 1), (0.5, 0)] * 20
        p = fit_platt(data)
        assert calibrate(p, 0.5) == pytest.approx(0.5, abs=1e-6)

    def test_all_positive_labels_bounded_by_regularization(self):
        confs = [0.2, 0.4, 0.6, 0.8]
        p = fit_platt([(c, 1) for c in confs], l2=1e-6)
        assert math.isfinite(p.slope_a) and math.isfinite(p.intercept_b)
        for c in confs:
            assert calibrate(p, c) > 0.5

    def test_parameter_recovery(self):
        conf, y = recovery_data()
        p = fit_platt((conf, y))
        assert p.slope_a == pytest.approx(2.0, abs=0.1)
        assert p.intercept_b == pytest.approx(-1.0, abs=0.1)
        assert p.converged

    def test_empty_data_rejected(self):
        with pytest.raises(CalibrationError):
            fit_platt([])

    def test_nonbinary_labels_rejected(self):
        with pytest.raises(CalibrationError):
            fit_platt([(0.5, 0.3)])

    def test_gradient_matches_finite_differences_at_optimum(self):
        conf, y = recovery_data()
        p = fit_platt((conf, y))
        z = np.asarray(feature(conf))
        theta = np.array([p.slope_a, p.intercept_b])
        h = 1e-6
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            fd = (nll(theta + e, z, y) - nll(theta - e, z, y)) / (2 * h)
            analytic = nll_gradient(theta, z, y)[i]
            scale = max(abs(fd), abs(analytic), 1.0)
            assert abs(fd - analytic) / scale < 1e-4

    def test_warm_start_idempotent(self):
        conf, y = recovery_data(n=2000)
        p1 = fit_platt((conf, y))
        p2 = fit_platt((conf, y), init=p1)
        assert abs(p2.slope_a - p1.slope_a) < 1e-8
        assert abs(p2.intercept_b - p1.intercept_b) < 1e-8

    def test_objective_never_increases_from_init(self):
        conf, y = recovery_data(n=2000)
        z = np.asarray(feature(conf))
        init = PlattParams(slope_a=-3.0, intercept_b=4.0)
        p = fit_platt((conf, y), init=init)
        before = nll(np.array([init.slope_a, init.intercept_b]), z, y, 1e-6)
        after = nll(np.array([p.slope_a, p.intercept_b]), z, y, 1e-6)
        assert after <= before + 1e-12

    def test_smoothing_flag_shrinks_extreme_fits(self):
        data = [(c, 1) for c in (0.3, 0.5, 0.7, 0.9)]
        plain = fit_platt(data)
        smoothed = fit_platt(data, smoothing=True)
        assert calibrate(smoothed, 0.9) < calibrate(plain, 0.9)


class TestFitScoped:
    def setup_method(self):
        conf, y = recovery_data(seed=1, n=400)
        self.obs = [
            make_obs(c, int(label), language="python" if i % 2 else "java")
            for i, (c, label) in enumerate(zip(conf, y))
        ]

    def test_language_scope_filters(self):
        p = fit_scoped(self.obs, CalibratorScope("language", "python"))
        n_python = sum(1 for o in self.obs if o.language.value == "python")
        assert p.n_fit == n_python

    def test_general_scope_uses_all(self):
        p = fit_scoped(self.obs, CalibratorScope("general"))
        assert p.n_fit == len(self.obs)
        direct = fit_platt([(o.confidence, o.label) for o in self.obs])
        assert p.slope_a == pytest.approx(direct.slope_a)

    def test_empty_scope_is_error(self):
        with pytest.raises(ScopeEmptyError):
            fit_scoped(self.obs, CalibratorScope("language", "kotlin"))


class TestPersistence:
    def test_roundtrip(self, tmp_path):
        conf, y = recovery_data(n=500)
        calibrators = {
            "general": fit_platt((conf, y)),
            "language:java": PlattParams(slope_a=1.5, intercept_b=-0.5, n_fit=10, converged=True),
        }
        path = tmp_path / "cal.jsonl"
        save_calibrators(calibrators, path)
        loaded = load_calibrators(path)
        assert set(loaded) == set(calibrators)
        for name in calibrators:
            assert loaded[name].slope_a == pytest.approx(calibrators[name].slope_a)
            assert loaded[name].n_fit == calibrators[name].n_fit


class TestPlattCalibratorEstimator:
    def test_fit_transform(self):
        conf, y = recovery_data()
        est = PlattCalibrator().fit(conf, y)
        out = est.transform(np.array([0.5]))
        assert out[0] == pytest.approx(calibrate(est.params_, 0.5))
        assert est.slope_a_ == pytest.approx(2.0, abs=0.1)

    def test_predict_proba_shape_and_sum(self):
        conf, y = recovery_data(n=500)
        proba = PlattCalibrator().fit(conf, y).predict_proba(conf[:10])
        assert proba.shape == (10, 2)
        assert np.allclose(proba.sum(axis=1), 1.0)

    def test_get_params_and_clone(self):
        est = PlattCalibrator(l2=1e-4, smoothing=True)
        assert est.get_params() == {"l2": 1e-4, "max_iter": 100, "smoothing": True}
        assert clone(est).get_params() == est.get_params()

    def test_unfitted_transform_raises(self):
        with pytest.raises(Exception):
            PlattCalibrator().transform([0.5])
