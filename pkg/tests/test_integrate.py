import numpy as np
import pytest

from sindyquad.control import PdGains, case_a, case_c
from sindyquad.dynamics import planar_derivative
from sindyquad.errors import DataError, DivergenceError, NumericalError
from sindyquad.integrate import (CSV_HEADER, SnapshotSet, add_noise, analytic_derivatives, read_csv,
                                 rk4_step, rollout, write_csv)


def _exp_error(dt):
    x = np.array([1.0])
    n = int(round(1.0 / dt))
    for _ in range(n):
        x = rk4_step(lambda v, u: v, x, None, dt)
    return abs(x[0] - np.e)


class TestRk4:
    def test_zero_field(self):
        x = np.array([1.0, -2.0, 3.0])
        assert np.array_equal(rk4_step(lambda v, u: np.zeros_like(v), x, None, 0.1), x)

    def test_taylor_polynomial(self):
        h = 0.1
        expect = 1 + h + h ** 2 / 2 + h ** 3 / 6 + h ** 4 / 24
        got = rk4_step(lambda v, u: v, np.array([1.0]), None, h)[0]
        assert got == pytest.approx(expect, abs=1e-15)
        assert got == pytest.approx(1.1051708333333333, abs=1e-15)
        assert abs(got - np.exp(0.1)) < 1e-7

    def test_convergence_order(self):
        errs = [_exp_error(dt) for dt in (0.1, 0.05, 0.025)]
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all((orders >= 3.8) & (orders <= 4.2)), orders

    def test_non_finite_derivative(self):
        with pytest.raises(NumericalError):
            rk4_step(lambda v, u: v * np.nan, np.array([1.0]), None, 0.1)

    def test_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            rk4_step(lambda v, u: v, np.array([1.0]), None, 0.0)

    def test_free_fall(self, params):
        x = np.array([0.0, 10.0, 0.0, 0.0, 0.0, 0.0])
        dt = 0.01
        for _ in range(100):
            x = rk4_step(lambda v, u: planar_derivative(v, u, params), x, np.zeros(2), dt)
        assert x[1] == pytest.approx(10.0 - 0.5 * params.gravity, abs=1e-8)


class TestRollout:
    def test_case_c_shape(self, train_c):
        assert train_c.X.shape == (1000, 6)
        assert train_c.U.shape == (1000, 2)
        assert train_c.Xdot is None

    def test_timestamps_multiplied(self, train_c):
        assert np.array_equal(train_c.t, np.arange(1000) * 0.05)

    def test_hover(self, params):
        c = case_a(x_d=(0, 0, 0, 0, 0, 0))
        ss = rollout(c, steps=50)
        assert np.array_equal(ss.X, np.zeros_like(ss.X))
        assert np.allclose(ss.U, [params.mass * params.gravity, 0.0], rtol=0, atol=1e-15)

    def test_case_a_final(self):
        ss = rollout(case_a())
        assert np.abs(ss.X[-1] - [0.5, 0.2, 0, 0, 0, 0]).max() < 1e-3

    def test_divergence_names_step(self):
        with pytest.raises(DivergenceError) as exc:
            rollout(case_c(), gains=PdGains(kp_phi=1e5, kv_phi=1e3))
        assert exc.value.step > 0
        assert str(exc.value.step) in str(exc.value)

    def test_needs_two_steps(self):
        with pytest.raises(ValueError):
            rollout(case_a(), steps=1)


class TestNoise:
    def test_zero_sigma_identical(self, train_c):
        assert np.array_equal(add_noise(train_c, 0.0, seed=3).X, train_c.X)

    def test_deterministic(self, train_c):
        a = add_noise(train_c, 1e-3, seed=7)
        b = add_noise(train_c, 1e-3, seed=7)
        c = add_noise(train_c, 1e-3, seed=8)
        assert np.array_equal(a.X, b.X)
        assert not np.array_equal(a.X, c.X)

    def test_std(self, train_c):
        sigma = np.array([0.01, 0, 0, 0, 0, 0])
        noisy = add_noise(train_c, sigma, seed=1)
        d = noisy.X - train_c.X
        assert abs(d[:, 0].std() - 0.01) < 0.001
        assert np.array_equal(d[:, 1:], np.zeros_like(d[:, 1:]))
        assert np.array_equal(noisy.U, train_c.U) and np.array_equal(noisy.t, train_c.t)

    def test_negative_sigma(self, train_c):
        with pytest.raises(ValueError):
            add_noise(train_c, -1.0)


class TestSnapshotIO:
    def test_csv_round_trip_bitwise(self, train_c, tmp_path):
        path = tmp_path / "s.csv"
        write_csv(train_c, path)
        back = read_csv(path)
        assert np.array_equal(back.X, train_c.X)
        assert np.array_equal(back.U, train_c.U)
        assert np.array_equal(back.t, train_c.t)
        assert path.read_text().splitlines()[0] == ",".join(CSV_HEADER)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(DataError, match="header"):
            read_csv(p)

    def test_ragged_row(self, train_c, tmp_path):
        p = tmp_path / "r.csv"
        write_csv(train_c, p)
        lines = p.read_text().splitlines()
        lines[5] = lines[5] + ",1"
        p.write_text("\n".join(lines) + "\n")
        with pytest.raises(DataError, match=":6:"):
            read_csv(p)

    def test_non_numeric(self, tmp_path):
        p = tmp_path / "n.csv"
        p.write_text(",".join(CSV_HEADER) + "\n" + ",".join(["0"] * 9) + "\n" + ",".join(["x"] * 9) + "\n")
        with pytest.raises(DataError, match=":3:"):
            read_csv(p)

    def test_non_uniform(self, train_c, tmp_path):
        p = tmp_path / "u.csv"
        bad = train_c.copy(t=train_c.t.copy())
        bad.t[10] += 0.01
        write_csv(bad, p)
        with pytest.raises(DataError, match="non-uniform"):
            read_csv(p)

    def test_shape_validation(self):
        with pytest.raises(DataError):
            SnapshotSet(t=[0, 1], X=np.zeros((2, 5)), U=np.zeros((2, 2)), dt=1.0)

    def test_analytic_derivatives(self, train_c, params):
        ss = analytic_derivatives(train_c)
        k = 123
        assert np.array_equal(ss.Xdot[k], planar_derivative(train_c.X[k], train_c.U[k], params))
