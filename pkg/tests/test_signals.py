"""Sampled signals: interpolation, jump metadata, CSV round-trip."""

import math

import numpy as np
import pytest

from apev import ApevError, PiecewiseA, PiecewiseB, QuasiPeriodicCos, Signal, WindowError
from apev.signals import PiecewiseLinearIntegral


def make_sin(t0=0.0, t1=10.0, dt=0.01):
    return Signal.from_function(np.sin, t0, t1, dt)


class TestEvaluation:
    def test_nodes_exact(self):
        s = make_sin()
        ts = s.times()
        assert np.allclose(s(ts)[:, 0], np.sin(ts), atol=1e-15)

    def test_linear_between_nodes(self):
        s = Signal(0.0, 1.0, np.array([0.0, 2.0, 4.0]))
        assert s(0.5)[0] == pytest.approx(1.0)
        assert s(1.25)[0] == pytest.approx(2.5)

    def test_outside_window_raises(self):
        s = make_sin()
        with pytest.raises(WindowError):
            s(-0.5)
        with pytest.raises(WindowError):
            s(10.5)

    def test_edge_slack_tolerated(self):
        s = make_sin()
        assert s(10.0 + 1e-12)[0] == pytest.approx(math.sin(10.0), abs=1e-9)

    def test_vector_components(self):
        vals = np.column_stack([np.sin(np.linspace(0, 1, 11)), np.ones(11)])
        s = Signal(0.0, 0.1, vals)
        assert s.dim == 2
        out = s(np.array([0.0, 0.55]))
        assert out.shape == (2, 2)
        assert out[1, 1] == pytest.approx(1.0)


class TestBreaks:
    def test_from_coefficient_declares_breaks(self):
        s = Signal.from_coefficient(PiecewiseB(0.5), 0.0, 10.0, 0.01)
        xs = [b.x for b in s.breaks]
        assert np.allclose(xs, [0.0, math.pi, 2 * math.pi, 3 * math.pi])

    def test_one_sided_values(self):
        s = Signal.from_coefficient(PiecewiseB(0.5), 0.0, 10.0, 0.01)
        br = s.breaks[1]  # at pi
        assert s.eval_one_sided(br.x, "left")[0] == pytest.approx(0.5, abs=1e-12)
        assert s.eval_one_sided(br.x, "right")[0] == pytest.approx(0.0, abs=1e-12)
        # plain interpolation lands strictly between the two limits
        mid = s(br.x)[0]
        assert 0.0 < mid < 0.5

    def test_eval_one_sided_validates(self):
        s = make_sin()
        with pytest.raises(ValueError):
            s.eval_one_sided(1.0, "up")

    def test_shifted(self):
        s = Signal.from_coefficient(PiecewiseA(1.0), -2.0, 2.0, 0.01)
        g = s.shifted(1.0)  # g(t) = s(t + 1)
        assert g.t0 == pytest.approx(-3.0)
        assert g(0.5)[0] == pytest.approx(s(1.5)[0])
        assert g.breaks[0].x == pytest.approx(-1.0)


class TestCSV:
    def test_roundtrip_exact(self, tmp_path):
        s = Signal.from_function(
            lambda ts: np.column_stack([np.sin(ts), np.cos(3 * ts)]), 0.0, 5.0, 0.37
        )
        path = tmp_path / "sig.csv"
        s.to_csv(path)
        back = Signal.from_csv(path)
        assert back.t0 == s.t0
        assert back.dt == pytest.approx(s.dt, rel=1e-15)
        assert np.array_equal(back.samples, s.samples)  # 17 digits round-trip

    def test_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,x1\n0,1\n1,2\n")
        with pytest.raises(ApevError, match="header"):
            Signal.from_csv(path)

    def test_nonuniform_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,x1\n0,1\n1,2\n2.5,3\n")
        with pytest.raises(ApevError, match="uniform"):
            Signal.from_csv(path)


class TestValidation:
    def test_too_short(self):
        with pytest.raises(ApevError):
            Signal(0.0, 1.0, np.array([1.0]))

    def test_bad_dt(self):
        with pytest.raises(ApevError):
            Signal(0.0, -1.0, np.array([1.0, 2.0]))


class TestPiecewiseLinearIntegral:
    def test_matches_trapezoid(self):
        ts = np.linspace(0, 10, 1001)
        g = np.sin(ts) ** 2
        pli = PiecewiseLinearIntegral.from_grid(ts, g)
        want = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(ts) * (g[:-1] + g[1:]))])
        assert np.allclose(pli.cum(ts), want, atol=1e-12)

    def test_partial_panel(self):
        ts = np.array([0.0, 1.0, 2.0])
        g = np.array([0.0, 2.0, 0.0])
        pli = PiecewiseLinearIntegral.from_grid(ts, g)
        # int_0^0.5 of the chord 2t is 0.25
        assert pli.cum(0.5) == pytest.approx(0.25)
        # symmetric tent: 0.75 on each side of the apex
        assert pli.integral(0.5, 1.5) == pytest.approx(1.5)

    def test_jump_handling(self):
        # f = 0 on [0, 1), 1 on [1, 2]; the node at 1 carries the jump
        ts = np.array([0.0, 1.0, 2.0])
        g = np.array([0.0, 1.0, 1.0])
        pli = PiecewiseLinearIntegral.from_grid(ts, g, [(1.0, 0.0, 1.0)])
        assert pli.cum(1.0) == pytest.approx(0.0)
        assert pli.cum(2.0) == pytest.approx(1.0)

    def test_interior_break_inserted(self):
        # f = 1 on [0, 0.4), 3 on (0.4, 1]; break off the grid
        ts = np.array([0.0, 1.0])
        g = np.array([1.0, 3.0])
        pli = PiecewiseLinearIntegral.from_grid(ts, g, [(0.4, 1.0, 3.0)])
        assert pli.cum(1.0) == pytest.approx(0.4 * 1.0 + 0.6 * 3.0)


def test_quasiperiodic_sampled_sup():
    s = Signal.from_coefficient(QuasiPeriodicCos(3.0, 1.0), 0.0, 400.0, 0.005)
    assert s.samples.max() <= 5.0 + 1e-12
    assert s.samples.max() > 4.99
