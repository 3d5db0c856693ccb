import numpy as np
import pytest

from dyncap.coefficients import ModelParams
from dyncap.entropy import (EntropyEvaluator, case2_growth_floor,
                            case2_plateau_coefficient, case3_growth_floor,
                            entropy_field, lower_bound_constants, phi_field)
from dyncap.regularization import RegularizedModel


@pytest.fixture(scope="module")
def evaluator(entropy_params):
    return EntropyEvaluator(RegularizedModel(entropy_params, 0.05), 0.5)


class TestClosedForm:
    def test_zero_at_reference(self, evaluator):
        assert evaluator.closed_form(evaluator.s_d) == 0.0
        assert evaluator.phi(evaluator.s_d) == 0.0

    def test_matches_oracle_random_points(self, evaluator):
        rng = np.random.default_rng(17)
        s = rng.uniform(-0.5, 1.5, 60)
        closed = evaluator.closed_form(s)
        oracle = evaluator.quadrature_oracle(s)
        rel = np.abs(closed - oracle) / np.maximum(np.abs(oracle), 1e-300)
        assert np.max(rel) < 1e-8

    def test_matches_oracle_other_reference(self, entropy_params):
        ev = EntropyEvaluator(RegularizedModel(entropy_params, 0.01), 0.37)
        s = np.linspace(-1.0, 2.0, 41)
        closed = ev.closed_form(s)
        oracle = ev.quadrature_oracle(s)
        rel = np.abs(closed - oracle) / np.maximum(np.abs(oracle), 1e-300)
        assert np.max(rel) < 1e-8

    def test_nonnegative_and_convex(self, evaluator):
        s = np.linspace(-1.0, 2.0, 301)
        vals = evaluator.closed_form(s)
        assert np.min(vals) >= 0.0
        eta = 1e-5
        for x in (-0.4, 0.1, 0.62, 1.2):
            second = (evaluator.closed_form(x + eta)
                      - 2.0 * evaluator.closed_form(x)
                      + evaluator.closed_form(x - eta)) / eta**2
            kernel = evaluator.model.tau_over_a_eps(x)
            assert second == pytest.approx(kernel, rel=1e-4)

    def test_ceiling_scaling_of_second_component(self, entropy_params):
        # doubling the relaxation ceiling rescales only the high-corner part
        base = RegularizedModel(entropy_params, 0.05)
        scaled_params = ModelParams(mu=3.5, lam=3.0, gamma=3.0, t_m=4.0,
                                    beta1=3.0, beta2=3.0)
        scaled = RegularizedModel(scaled_params, 0.05)
        for s in (-0.3, 0.2, 0.8, 1.4):
            e1_only = entropy_field(base, s, 0.5) - 2.0 * _component2(base, s)
            diff = entropy_field(scaled, s, 0.5) - entropy_field(base, s, 0.5)
            assert diff == pytest.approx(2.0 * _component2(base, s), rel=1e-10,
                                         abs=1e-12)
            assert np.isfinite(e1_only)

    def test_exponent_guard(self):
        for gamma, lam in ((2.0, 3.0), (3.0, 1.0)):
            params = ModelParams(mu=3.5, lam=lam, gamma=gamma, t_m=2.0,
                                 beta1=min(gamma, 1.0), beta2=min(lam, 1.0))
            model = RegularizedModel(params, 0.05)
            with pytest.raises(ValueError):
                EntropyEvaluator(model, 0.5)

    def test_reference_inside_unit_interval(self, entropy_params):
        model = RegularizedModel(entropy_params, 0.05)
        with pytest.raises(ValueError):
            EntropyEvaluator(model, 0.0)


def _component2(model, s):
    """High-corner entropy component, via the ceiling-linearity trick."""
    p = model.params
    full = entropy_field(model, s, 0.5)
    probe = ModelParams(mu=p.mu, lam=p.lam, gamma=p.gamma, t_m=p.t_m + 1.0,
                        beta1=p.beta1, beta2=p.beta2)
    bumped = entropy_field(RegularizedModel(probe, model.epsilon), s, 0.5)
    return bumped - full


class TestDerivative:
    def test_phi_is_entropy_derivative(self, evaluator):
        eta = 1e-5
        for s in (-0.6, 0.3, 0.7, 1.4):
            fd = (evaluator.closed_form(s + eta)
                  - evaluator.closed_form(s - eta)) / (2.0 * eta)
            assert evaluator.phi(s) == pytest.approx(fd, rel=1e-8, abs=1e-10)

    def test_phi_strictly_monotone(self, evaluator):
        s = np.linspace(-1.0, 2.0, 101)
        assert np.all(np.diff(phi_field(evaluator.model, s, 0.5)) > 0.0)


class TestLowerBound:
    def test_constants_positive_finite(self, entropy_params):
        c_const, d_const = lower_bound_constants(entropy_params, 0.5)
        assert c_const > 0.0
        assert np.isfinite(d_const)

    def test_no_violations_on_grid(self, entropy_params):
        s = np.linspace(-1.0, 2.0, 1000)
        for eps in (0.1, 0.01, 0.001):
            ev = EntropyEvaluator(RegularizedModel(entropy_params, eps), 0.5)
            assert np.all(ev.closed_form(s) >= ev.lower_bound(s))

    def test_nonpositive_at_reference(self, evaluator):
        assert evaluator.lower_bound(evaluator.s_d) <= 0.0


class TestGrowthFloors:
    @pytest.mark.parametrize("eps", [0.1, 0.01])
    def test_case2_quadratic_growth(self, entropy_params, eps):
        model = RegularizedModel(entropy_params, eps)
        s = np.linspace(-1.5, -1e-3, 400)
        ent = entropy_field(model, s, 0.5)
        floor = np.asarray(case2_growth_floor(model, s))
        deficit = np.max(floor - ent)
        margin = max(deficit, 0.0)
        assert np.all(ent >= floor - margin - 1e-9)
        assert np.isfinite(margin)

    @pytest.mark.parametrize("eps", [0.1, 0.01])
    def test_case3_quadratic_growth(self, entropy_params, eps):
        model = RegularizedModel(entropy_params, eps)
        s = np.linspace(1.0 + 1e-3, 2.5, 400)
        ent = entropy_field(model, s, 0.5)
        floor = np.asarray(case3_growth_floor(model, s))
        deficit = float(np.max(floor - ent))
        assert np.isfinite(deficit)
        assert np.all(ent >= floor - max(deficit, 0.0) - 1e-9)

    def test_plateau_ratio_scaling(self, entropy_params):
        # stripped of the squash-slope factor the plateau is an exact
        # power of eps
        gamma = entropy_params.gamma
        eps1, eps2 = 0.01, 0.005
        m1 = RegularizedModel(entropy_params, eps1)
        m2 = RegularizedModel(entropy_params, eps2)
        p1 = case2_plateau_coefficient(m1) * (1.0 - 2.0 * eps1) ** 2
        p2 = case2_plateau_coefficient(m2) * (1.0 - 2.0 * eps2) ** 2
        assert p1 / p2 == pytest.approx((eps1 / eps2) ** (2.0 - gamma),
                                        rel=1e-6)
