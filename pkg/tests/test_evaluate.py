import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sindyquad.control import PdGains, holdout_diamond
from sindyquad.errors import DataError, SweepFailure
from sindyquad.evaluate import abs_error_trace, compare_to_truth, lambda_sweep, rmse
from sindyquad.sindy import finite_difference

from test_model import _published_model

finite = st.floats(-1e3, 1e3, allow_nan=False)


class TestRmse:
    def test_identical(self):
        a = np.arange(12.0).reshape(4, 3)
        assert np.array_equal(rmse(a, a), np.zeros(3))

    def test_hand_value(self):
        assert rmse(np.array([[0.0], [0.0]]), np.array([[1.0], [1.0]]))[0] == 1.0

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            rmse(np.zeros((3, 2)), np.zeros((3, 3)))

    @settings(max_examples=50, deadline=None)
    @given(arrays(float, (20, 3), elements=finite), arrays(float, (20, 3), elements=finite))
    def test_symmetric_and_permutation_invariant(self, a, b):
        assert np.allclose(rmse(a, b), rmse(b, a))
        perm = np.random.default_rng(0).permutation(20)
        assert np.allclose(rmse(a[perm], b[perm]), rmse(a, b))

    @settings(max_examples=50, deadline=None)
    @given(arrays(float, (15, 2), elements=finite), st.floats(-100, 100))
    def test_constant_offset(self, a, c):
        assert np.allclose(rmse(a, a + c), abs(c), rtol=1e-9, atol=1e-9)


class TestAbsError:
    def test_identical(self):
        a = np.ones((5, 2))
        assert not np.any(abs_error_trace(a, a))

    def test_offset(self):
        a = np.zeros((5, 2))
        assert np.allclose(abs_error_trace(a, a - 0.25), 0.25)

    def test_case_a_bound(self, fitted, rollouts_ab):
        from sindyquad.sindy import simulate_model
        case, ref = rollouts_ab["A"]
        assert abs_error_trace(ref.X, simulate_model(fitted, case).X).max() <= 1e-2


class TestCompare:
    def test_self(self, truth):
        rep = compare_to_truth(truth, truth)
        assert rep.support_match
        assert all(v == 0 for r in rep.rows for v in r.deltas.values())

    def test_published_columns(self, truth):
        rep = compare_to_truth(_published_model(), truth)
        assert rep.support_match
        assert rep.max_rel_delta <= 0.007 + 1e-12

    def test_fitted(self, fitted, truth):
        rep = compare_to_truth(fitted, truth)
        assert rep.support_match
        assert "u1*sin(phi)" in rep.to_text()
        assert '"support_match": true' in rep.to_json()

    def test_missing_and_extra(self, truth):
        m = _published_model()
        m.Omega[m.labels.index("y"), 0] = 0.5
        m.Omega[m.labels.index("u2"), 5] = 0.0
        m._compile()
        row0, row5 = compare_to_truth(m, truth).rows[0], compare_to_truth(m, truth).rows[5]
        assert row0.extra == ["y"] and row5.missing == ["u2"]

    def test_incompatible_names(self, truth):
        from sindyquad.sindy import SparseModel
        other = SparseModel(Omega=truth.Omega, labels=[lab.replace("phi", "th") for lab in truth.labels],
                            state_names=("y", "z", "th", "y_dot", "z_dot", "th_dot"))
        with pytest.raises(DataError):
            compare_to_truth(other, truth)


class TestSweep:
    def test_grid_and_plateau(self, sweep_c):
        assert len(sweep_c.records) == 21
        lo, hi = sweep_c.plateau()
        assert hi - lo >= 0.10 - 1e-12
        assert lo <= 0.45 <= hi

    def test_selection_minimizes_objective(self, sweep_c):
        scores = np.array([r.score for r in sweep_c.records])
        assert sweep_c.selected_record.score == scores.min()
        ties = sweep_c.grid[scores == scores.min()]
        assert sweep_c.selected == ties.max()

    def test_heavy_threshold_underfits(self, sweep_c):
        assert sweep_c.records[-1].score > sweep_c.selected_record.score

    def test_csv(self, sweep_c, tmp_path):
        p = tmp_path / "s.csv"
        sweep_c.write_csv(p)
        lines = p.read_text().splitlines()
        assert lines[0] == ("lambda,rmse_y,rmse_z,rmse_phi,rmse_ydot,rmse_zdot,rmse_phidot,"
                            "support_size,support_match")
        assert len(lines) == 22

    def test_single_point_and_determinism(self, train_c, holdout):
        fd = finite_difference(train_c, align="midpoint")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            a = lambda_sweep(fd, holdout, grid=[0.45], test_case=holdout_diamond())
            b = lambda_sweep(fd, holdout, grid=[0.45], test_case=holdout_diamond())
        assert len(a.records) == 1 and a.selected == 0.45
        assert np.array_equal(a.records[0].rmse, b.records[0].rmse)
        assert a.records[0].support_match

    def test_parallel_matches_serial(self, train_c, holdout):
        fd = finite_difference(train_c, align="midpoint")
        grid = [0.3, 0.45, 0.6]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            a = lambda_sweep(fd, holdout, grid=grid, test_case=holdout_diamond())
            b = lambda_sweep(fd, holdout, grid=grid, test_case=holdout_diamond(), jobs=2)
        assert [r.score for r in a.records] == [r.score for r in b.records]

    def test_open_loop_replay_without_case(self, train_c, holdout):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = lambda_sweep(train_c, holdout, grid=[0.45])
        assert np.all(np.isfinite(res.records[0].rmse))

    def test_all_diverge(self, train_c, holdout):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(SweepFailure) as exc:
                lambda_sweep(train_c, holdout, grid=[0.3, 0.45], test_case=holdout_diamond(),
                             gains=PdGains(kp_phi=1e5, kv_phi=1e3))
        assert len(exc.value.diagnostics) == 2

    def test_rejects_unsorted_grid(self, train_c, holdout):
        with pytest.raises(ValueError):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                lambda_sweep(train_c, holdout, grid=[0.5, 0.4], test_case=holdout_diamond())
