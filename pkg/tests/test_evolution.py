"""Evolution families: antiderivative cache, decay estimates, dichotomy."""

import math

import numpy as np
import pytest

from apev import (
    ApevError,
    Constant,
    CoefficientAntiderivative,
    EvolutionSystem,
    PiecewiseB,
    QuasiPeriodicCos,
    SineBasis,
    WindowError,
)
from apev.quadrature import integrate_with_breaks


def qp_integral(t, lo):
    # exact antiderivative of 3 + cos t + cos(pi t)
    return (
        3.0 * (t - lo)
        + (math.sin(t) - math.sin(lo))
        + (math.sin(math.pi * t) - math.sin(math.pi * lo)) / math.pi
    )


class TestAntiderivative:
    def test_smooth_exact(self):
        lo, hi = -2.0, 30.0
        anti = CoefficientAntiderivative(QuasiPeriodicCos(3.0, 1.0), lo, hi)
        rng = np.random.default_rng(4)
        ts = rng.uniform(lo, hi, 200)
        want = np.array([qp_integral(t, lo) for t in ts])
        assert np.allclose(anti(ts), want, atol=1e-9)

    def test_jumpy_matches_quadrature(self):
        co = PiecewiseB(0.5)
        lo, hi = -1.0, 12.0
        anti = CoefficientAntiderivative(co, lo, hi)
        for t in [0.5, math.pi, math.pi + 1e-3, 7.0, 11.5]:
            want = integrate_with_breaks(
                co, lo, t, tol=1e-12, breaks=co.discontinuities((lo, t))
            )
            assert anti(t) == pytest.approx(want, abs=1e-9)

    def test_one_sided_slopes_at_jump(self):
        co = PiecewiseB(0.5)
        anti = CoefficientAntiderivative(co, 0.0, 8.0)
        x = math.pi
        left, right = co.limits(x)
        h = 1e-7
        assert (anti(x) - anti(x - h)) / h == pytest.approx(left, abs=1e-5)
        assert (anti(x + h) - anti(x)) / h == pytest.approx(right, abs=1e-5)

    def test_validation(self):
        with pytest.raises(ApevError):
            CoefficientAntiderivative(Constant(1.0), 2.0, 1.0)
        with pytest.raises(ApevError):
            CoefficientAntiderivative(Constant(1.0), 0.0, 1.0, h=0.0)
        anti = CoefficientAntiderivative(Constant(1.0), 0.0, 1.0)
        with pytest.raises(WindowError):
            anti(1.5)

    def test_scalar_and_vector_calls(self):
        anti = CoefficientAntiderivative(Constant(2.0), 0.0, 5.0)
        assert isinstance(anti(1.0), float)
        assert anti(1.0) == pytest.approx(2.0)
        assert np.allclose(anti(np.array([0.0, 2.5])), [0.0, 5.0])


def make_system(**kw):
    basis = kw.pop("basis", SineBasis(6))
    co = kw.pop("coeff", QuasiPeriodicCos(3.0, 1.0))
    return EvolutionSystem(basis, co, kw.pop("t_min", -5.0), kw.pop("t_max", 25.0), **kw)


class TestEvolutionSystem:
    def test_needs_positive_diffusion_inf(self):
        with pytest.raises(ApevError):
            make_system(coeff=Constant(0.0))
        with pytest.raises(ApevError):
            make_system(coeff=QuasiPeriodicCos(1.0, 1.0))  # inf = -1

    def test_zero_order_needs_nonneg_inf(self):
        with pytest.raises(ApevError):
            make_system(zero_order=Constant(-0.5))

    def test_delta_plain(self):
        sys = make_system(basis=SineBasis(4), coeff=Constant(2.0))
        assert sys.delta == pytest.approx(2.0 * math.pi**2)

    def test_delta_with_zero_order(self):
        sys = make_system(coeff=Constant(1.0), zero_order=PiecewiseB(0.5))
        assert sys.delta == pytest.approx(math.pi**2)  # inf of PiecewiseB is 0
        sys2 = make_system(coeff=Constant(1.0), zero_order=Constant(0.5))
        assert sys2.delta == pytest.approx(math.pi**2 + 0.5)

    def test_constant_coefficient_exact(self):
        sys = make_system(basis=SineBasis(3), coeff=Constant(2.0))
        x = np.array([1.0, -1.0, 0.5])
        t, s = 1.7, 0.4
        want = x * np.exp(-sys.basis.lambdas * 2.0 * (t - s))
        assert np.allclose(sys.apply_U(t, s, x), want, atol=1e-12)

    def test_zero_order_exact(self):
        sys = make_system(basis=SineBasis(3), coeff=Constant(1.0), zero_order=Constant(0.5))
        e = sys.mode_exponents(0.3, 2.3)
        assert np.allclose(e, sys.basis.lambdas * 2.0 + 1.0, atol=1e-10)

    def test_semigroup_property(self):
        sys = make_system()
        rng = np.random.default_rng(8)
        for _ in range(20):
            s, r, t = np.sort(rng.uniform(-5.0, 25.0, 3))
            x = rng.standard_normal(6)
            one = sys.apply_U(t, s, x)
            two = sys.apply_U(t, r, sys.apply_U(r, s, x))
            assert np.allclose(one, two, atol=1e-12)

    def test_apply_U_needs_order(self):
        sys = make_system()
        with pytest.raises(ApevError):
            sys.apply_U(0.0, 1.0, np.zeros(6))

    def test_green_kernel(self):
        sys = make_system()
        x = np.ones(6)
        assert np.allclose(sys.green_apply(2.0, 1.0, x), sys.apply_U(2.0, 1.0, x))
        assert np.allclose(sys.green_apply(1.0, 2.0, x), 0.0)

    def test_dichotomy_data(self):
        d = make_system().dichotomy_data()
        assert d.M == 1.0 and d.stable
        assert d.to_dict() == {"M": 1.0, "delta": d.delta, "stable": True}


class TestDichotomyVerification:
    def test_measured_below_one(self):
        sys = make_system()
        assert sys.verify_dichotomy(n_trials=400) <= 1.0 + 1e-9

    def test_with_zero_order(self):
        sys = make_system(coeff=QuasiPeriodicCos(3.0, 1.0), zero_order=PiecewiseB(0.5))
        assert sys.verify_dichotomy(n_trials=400) <= 1.0 + 1e-9

    def test_wrong_delta_exposed(self):
        sys = make_system()
        bad = 3.0 * sys.delta  # above the true decay rate
        assert sys.verify_dichotomy(n_trials=400, delta=bad, max_gap=0.5) > 1.0 + 1e-6


class TestAlphaEstimate:
    def test_envelope_closed_form(self):
        sys = make_system(basis=SineBasis(3), coeff=Constant(1.0))
        alpha, gamma = 0.5, math.pi**2 / 2.0
        lam = sys.basis.lambdas
        rate = lam - gamma
        b = 1.0 - alpha
        want = np.max(lam**alpha * (b / (math.e * rate)) ** b)
        assert sys.alpha_envelope(alpha, gamma) == pytest.approx(float(want), rel=1e-12)

    def test_envelope_validation(self):
        sys = make_system(coeff=Constant(1.0))
        with pytest.raises(ApevError):
            sys.alpha_envelope(1.2, 1.0)
        with pytest.raises(ApevError):
            sys.alpha_envelope(0.5, math.pi**2)  # gamma at the rate: rejected

    def test_measured_below_envelope(self):
        sys = make_system()
        data = sys.verify_alpha_estimate(0.6, sys.delta / 2.0, n_trials=400)
        assert data.measured <= data.m_alpha * (1.0 + 1e-9)
        assert data.measured > 0.0

    def test_measured_below_envelope_with_zero_order(self):
        sys = make_system(zero_order=PiecewiseB(0.5))
        data = sys.verify_alpha_estimate(0.6, sys.delta / 2.0, n_trials=400)
        assert data.measured <= data.m_alpha * (1.0 + 1e-9)

    def test_to_dict(self):
        sys = make_system(coeff=Constant(1.0))
        d = sys.verify_alpha_estimate(0.5, 1.0, n_trials=10).to_dict()
        assert set(d) == {"alpha", "gamma", "mAlpha", "measured"}


class TestBiApDistance:
    def test_autonomous_family_invariant(self):
        sys = make_system(coeff=Constant(1.5), t_min=0.0, t_max=40.0)
        s_vals = np.linspace(1.0, 20.0, 7)
        gaps = np.array([0.1, 1.0, 5.0])
        assert sys.bi_ap_distance(6.0, s_vals, gaps) <= 1e-12

    def test_periodic_zero_order(self):
        sys = make_system(
            coeff=Constant(1.0),
            zero_order=PiecewiseB(0.5),
            t_min=0.0,
            t_max=40.0,
        )
        s_vals = np.linspace(0.5, 20.0, 9)
        gaps = np.array([0.5, 2.0, 6.0])
        period = sys.bi_ap_distance(2.0 * math.pi, s_vals, gaps)
        off = sys.bi_ap_distance(math.pi, s_vals, gaps)
        assert period <= 1e-8
        # strong diffusion damps everything; the defect still separates by
        # orders of magnitude
        assert off > 1e-3
        assert off > 1e3 * max(period, 1e-12)
