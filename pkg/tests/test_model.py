import json
import warnings

import numpy as np
import pytest

from sindyquad.control import case_a, case_b
from sindyquad.dynamics import planar_derivative
from sindyquad.errors import ConfigError, DataError, DenseModelWarning, RankDeficiencyWarning
from sindyquad.integrate import analytic_derivatives, rollout
from sindyquad.sindy import (LibrarySpec, OptimizerConfig, SparseModel, discover, finite_difference, fit,
                             library_terms, predict_derivative, simulate_model, stlsq, truth_model)


def _published_model():
    labels = [t.label for t in library_terms(LibrarySpec())]
    W = np.zeros((len(labels), 6))
    for lab, j, v in [("y_dot", 0, 1.000), ("z_dot", 1, 1.000), ("phi_dot", 2, 0.993),
                      ("u1*sin(phi)", 3, -5.549), ("1", 4, -9.811), ("u1*cos(phi)", 4, 5.556),
                      ("u2", 5, 4000.000)]:
        W[labels.index(lab), j] = v
    return SparseModel(Omega=W, labels=labels)


class TestTruthModel:
    def test_hover_zero(self, truth, params):
        assert np.allclose(predict_derivative(truth, np.zeros(6), [params.mass * params.gravity, 0]), 0,
                           atol=1e-14)

    def test_matches_planar(self, truth, params, rng):
        for _ in range(50):
            x, u = rng.normal(size=6), rng.normal(size=2)
            assert np.allclose(truth.rhs(x, u), planar_derivative(x, u, params), rtol=1e-13, atol=1e-10)

    def test_simulation_reproduces_rollout(self, truth):
        a = rollout(case_a())
        b = simulate_model(truth, case_a())
        assert np.abs(a.X - b.X).max() < 1e-12

    def test_requires_terms(self):
        with pytest.raises(ConfigError):
            truth_model(spec=LibrarySpec(include_control_times_fourier=False))

    def test_support(self, truth):
        assert truth.support_size == 7


class TestPublishedTable:
    def test_vertical_at_unit_thrust(self):
        d = predict_derivative(_published_model(), np.zeros(6), [1.0, 0.0])
        assert d[4] == pytest.approx(-4.255, abs=1e-12)

    def test_rendering(self):
        eq = _published_model().equations()
        assert eq[5] == "phi_ddot = 4000.000 u2"
        assert eq[4] == "z_ddot = -9.811 + 5.556 u1*cos(phi)"
        assert eq[3] == "y_ddot = -5.549 u1*sin(phi)"


class TestSparseModel:
    def test_json_round_trip(self, fitted, tmp_path):
        p = tmp_path / "m.json"
        fitted.save(p)
        back = SparseModel.load(p)
        assert np.array_equal(back.Omega, fitted.Omega)
        assert back.labels == fitted.labels and back.lam == fitted.lam
        doc = json.loads(p.read_text())
        assert set(doc) >= {"state_names", "control_names", "labels", "lambda", "optimizer",
                            "coefficients", "equations"}
        assert len(doc["coefficients"]) == 51 and len(doc["coefficients"][0]) == 6

    def test_bad_document(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{"labels": []}')
        with pytest.raises(DataError):
            SparseModel.load(p)

    def test_dimension_mismatch(self, truth):
        with pytest.raises(DataError):
            predict_derivative(truth, np.zeros(5), np.zeros(2))

    def test_label_spec_mismatch(self, truth):
        with pytest.raises(DataError):
            SparseModel(Omega=truth.Omega, labels=truth.labels[::-1])


class TestFit:
    def test_requires_derivatives(self, train_c):
        with pytest.raises(DataError):
            fit(train_c)

    def test_case_c_support(self, fitted, truth):
        assert fitted.support() == truth.support()

    def test_case_c_coefficients_near_published(self, fitted):
        # published fit: -5.549, 0.993, 4000.000; this recovery is at least as close
        assert fitted.coefficient("u1*sin(phi)", "y_dot") == pytest.approx(-5.5556, rel=0.02)
        assert fitted.coefficient("phi_dot", "phi") == pytest.approx(1.0, rel=0.007)
        assert fitted.coefficient("u2", "phi_dot") == pytest.approx(4000.0, rel=1e-6)

    def test_analytic_derivatives_exact(self, train_c, truth):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            m = fit(analytic_derivatives(train_c))
        assert m.support() == truth.support()
        assert np.abs(m.Omega - truth.Omega).max() < 1e-6

    def test_row_shuffle_invariant(self, train_c, rng):
        fd = finite_difference(train_c, align="midpoint")
        perm = rng.permutation(fd.m)
        shuf = fd.copy(t=fd.t, X=fd.X[perm], U=fd.U[perm], Xdot=fd.Xdot[perm], X_eval=fd.X_eval[perm])
        a, b = fit(fd), fit(shuf)
        assert a.support() == b.support()
        assert np.allclose(a.Omega, b.Omega, rtol=1e-9, atol=1e-12)

    def test_derivative_accuracy_on_holdout(self, fitted, holdout, params):
        P = np.array([fitted.rhs(x, u) for x, u in zip(holdout.X, holdout.U)])
        Q = np.array([planar_derivative(x, u, params) for x, u in zip(holdout.X, holdout.U)])
        rel = np.linalg.norm(P - Q, axis=0) / np.linalg.norm(Q, axis=0)
        assert rel.max() < 1e-2

    def test_lambda_zero_dense_warning(self, train_c):
        with pytest.warns(DenseModelWarning):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RankDeficiencyWarning)
                discover(train_c, optimizer=OptimizerConfig(lam=0.0))

    def test_straight_line_conditioning_warning(self):
        ss = rollout(case_b(amplitude=0.0), steps=200)
        with pytest.warns(RankDeficiencyWarning, match="near-collinear") as rec:
            m = discover(ss)
        assert m.diagnostics["condition_number"] > 1e11
        assert any("y" in str(w.message) for w in rec)

    def test_case_c_well_conditioned(self, train_c):
        with warnings.catch_warnings():
            warnings.simplefilter("error", RankDeficiencyWarning)
            m = discover(train_c)
        assert m.diagnostics["condition_number"] < 1e8

    def test_stlsq_support_monotone_on_case_c(self, train_c):
        fd = finite_difference(train_c, align="midpoint")
        from sindyquad.sindy import build_library
        Theta = build_library(fd).Theta
        sizes = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for lam in np.arange(21) * 0.05:
                sizes.append(np.count_nonzero(stlsq(Theta, fd.Xdot, lam)))
        assert all(a >= b for a, b in zip(sizes, sizes[1:])), sizes

    def test_forward_alignment_available(self, train_c):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            m = discover(train_c, align="forward")
        assert m.Omega.shape == (51, 6)


def test_optimizer_config_validation():
    with pytest.raises(ConfigError):
        OptimizerConfig(name="lasso")
    with pytest.raises(ConfigError):
        OptimizerConfig(prox="median")
    with pytest.raises(ConfigError):
        OptimizerConfig(kappa=0.0)
