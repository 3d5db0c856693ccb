import numpy as np
import pytest

from dyncap.coefficients import eval_a, eval_beta, eval_pc_prime, eval_tau
from dyncap.regularization import RegularizedModel, cut_z


class TestClampAndSquash:
    def test_clamp(self):
        assert cut_z(-0.3) == 0.0
        assert cut_z(0.42) == 0.42
        assert cut_z(7.0) == 1.0

    def test_squash_range(self, ref_params):
        m = RegularizedModel(ref_params, 0.1)
        assert m.z_eps(-1.0) == pytest.approx(0.1)
        assert m.z_eps(0.5) == pytest.approx(0.5)
        assert m.z_eps(2.0) == pytest.approx(0.9)

    def test_invalid_epsilon(self, ref_params):
        for eps in (0.0, 0.5, 0.7, -0.1):
            with pytest.raises(ValueError):
                RegularizedModel(ref_params, eps)


class TestSquashedCoefficients:
    def test_tau_floor_below_zero(self, ref_params, ref_model):
        # constant on the lower tail, equal to the cached floor
        for s in (-3.0, -0.5, 0.0):
            assert ref_model.tau_eps(s) == pytest.approx(
                eval_tau(ref_params, ref_model.epsilon), rel=1e-15)
        assert ref_model.m_tau_eps == eval_tau(ref_params, ref_model.epsilon)

    def test_a_fixed_point(self, ref_params, ref_model):
        assert ref_model.a_eps(0.5) == pytest.approx(
            eval_a(ref_params, 0.5), rel=1e-15)

    def test_pc_constant_on_tail(self, ref_model):
        assert ref_model.pc_prime_eps(-5.0) == ref_model.pc_prime_eps(0.0)
        assert ref_model.pc_prime_eps(7.0) == ref_model.pc_prime_eps(1.0)

    def test_bound_floors(self, ref_params, ref_model):
        s = np.linspace(-1.0, 2.0, 4001)
        a_vals = np.asarray(ref_model.a_eps(s))
        assert np.all(a_vals >= ref_model.m_a_eps * (1.0 - 1e-12))
        assert np.all(a_vals <= ref_model.a_sup * (1.0 + 1e-12))
        tau_vals = np.asarray(ref_model.tau_eps(s))
        assert np.all(tau_vals >= ref_model.m_tau_eps * (1.0 - 1e-12))
        assert np.all(tau_vals <= ref_params.t_m)
        prod = a_vals * (-np.asarray(ref_model.pc_prime_eps(s)))
        assert np.all(prod >= ref_model.m_ap_eps * (1.0 - 1e-12))

    def test_tau_prime_vanishes_outside(self, ref_model):
        assert ref_model.tau_eps_prime(-0.5) == 0.0
        assert ref_model.tau_eps_prime(1.5) == 0.0
        assert ref_model.tau_eps_prime(0.5) > 0.0


class TestTransformedVariable:
    def test_zero_and_lower_tail(self, ref_params):
        m = RegularizedModel(ref_params, 0.1)
        assert m.beta_eps(0.0) == 0.0
        tau_eps = eval_tau(ref_params, 0.1)
        assert m.beta_eps(-2.0) == pytest.approx(-2.0 * tau_eps, rel=1e-14)

    def test_upper_tail_slope(self, ref_params):
        m = RegularizedModel(ref_params, 0.1)
        slope = eval_tau(ref_params, 0.9)
        assert m.beta_eps(2.0) - m.beta_eps(1.5) == pytest.approx(
            0.5 * slope, rel=1e-13)

    def test_linear_bounds_on_unit_interval(self, ref_params, ref_model):
        s = np.linspace(0.0, 1.0, 513)
        beta = np.asarray(ref_model.beta_eps(s))
        assert np.all(beta >= ref_model.m_tau_eps * s - 1e-15)
        assert np.all(beta <= ref_params.t_m * s + 1e-15)

    def test_roundtrip(self, ref_model):
        rng = np.random.default_rng(5)
        s = rng.uniform(-1.0, 2.0, 100)
        back = np.asarray(ref_model.beta_eps_inverse(ref_model.beta_eps(s)))
        assert np.max(np.abs(back - s)) < 1e-10

    def test_inverse_contract(self, ref_model):
        rng = np.random.default_rng(6)
        v = rng.uniform(-2.0, 3.0, 200)
        forward = np.asarray(ref_model.beta_eps(ref_model.beta_eps_inverse(v)))
        assert np.all(np.abs(forward - v) <= 1e-12 * np.maximum(1.0, np.abs(v)))

    @pytest.mark.parametrize("eps", [0.1, 0.01, 1e-4])
    def test_against_quadrature_oracle(self, ref_params, eps):
        m = RegularizedModel(ref_params, eps)
        for s in (0.003, 0.13, 0.5, 0.997):
            oracle = m.beta_eps_quadrature(s)
            assert m.beta_eps(s) == pytest.approx(oracle, rel=1e-11, abs=1e-14)

    def test_convexity_inequality(self, ref_model):
        # beta(s) - beta(r) >= tau(r) (s - r) for every pair
        rng = np.random.default_rng(8)
        s = rng.uniform(-2.0, 3.0, 2000)
        r = rng.uniform(-2.0, 3.0, 2000)
        lhs = (np.asarray(ref_model.beta_eps(s))
               - np.asarray(ref_model.beta_eps(r)))
        rhs = np.asarray(ref_model.tau_eps(r)) * (s - r)
        assert np.all(lhs - rhs >= -1e-12)

    def test_proximity_to_unsquashed(self, ref_params):
        # the squashed primitive tracks the exact one with slope tau(eps)
        # on the negative tail and at rate eps elsewhere; the combined
        # envelope keeps the measured constant bounded as eps shrinks
        s = np.linspace(-1.0, 2.0, 301)
        beta_exact = np.asarray(eval_beta(ref_params, s))
        neg = np.abs(np.minimum(s, 0.0))
        spill = np.maximum(s - 1.0, 0.0)
        ratios = []
        for eps in (1e-1, 1e-2, 1e-3, 1e-4):
            m = RegularizedModel(ref_params, eps)
            diff = np.abs(np.asarray(m.beta_eps(s)) - beta_exact)
            envelope = m.m_tau_eps * neg + eps * (1.0 + spill)
            ratios.append(np.max(diff / envelope))
        assert max(ratios) <= 2.0
        assert max(ratios) <= 2.0 * min(ratios)

    def test_pointwise_squash_limit(self, ref_params):
        # for fixed interior s the squashed coefficients converge monotonely
        for s in (0.25, 0.6):
            gaps_a, gaps_tau = [], []
            for eps in (0.05, 0.01, 0.002, 0.0005):
                m = RegularizedModel(ref_params, eps)
                gaps_a.append(abs(m.a_eps(s) - eval_a(ref_params, s)))
                gaps_tau.append(abs(m.tau_eps(s) - eval_tau(ref_params, s)))
            assert all(np.diff(gaps_a) < 0.0)
            assert all(np.diff(gaps_tau) < 0.0)
            assert gaps_a[-1] < 1e-3 and gaps_tau[-1] < 1e-2


class TestKirchhoffPrimitive:
    def test_zero_and_lower_tail(self, ref_params):
        m = RegularizedModel(ref_params, 0.1)
        assert m.kirchhoff_eps(0.0) == 0.0
        slope = np.sqrt(-eval_pc_prime(ref_params, 0.1))
        assert m.kirchhoff_eps(-0.5) == pytest.approx(-0.5 * slope, rel=1e-14)

    def test_strictly_increasing(self, ref_model):
        s = np.linspace(-0.5, 1.5, 101)
        vals = np.asarray(ref_model.kirchhoff_eps(s))
        assert np.all(np.diff(vals) > 0.0)
