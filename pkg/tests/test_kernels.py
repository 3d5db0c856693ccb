import numpy as np
import pytest

from dyncap.kernels import _pykernels
from dyncap.regularization import RegularizedModel

try:
    from dyncap.kernels import _cykernels
except ImportError:
    _cykernels = None

needs_compiled = pytest.mark.skipif(_cykernels is None,
                                    reason="compiled kernels not built")


@pytest.fixture(scope="module")
def beta_args(ref_params):
    model = RegularizedModel(ref_params, 0.03)
    p = ref_params
    return model, (model._knots, model._beta_prefix, model._gx, model._gw,
                   model.epsilon, p.mu, p.gamma, p.lam, p.t_m,
                   model.beta_eps_one, model.m_tau_eps, model._tau_hi)


@needs_compiled
class TestBackendEquivalence:
    def test_coefficient_family(self, ref_params):
        rng = np.random.default_rng(1)
        s = rng.uniform(0.01, 0.99, 5000)
        p = ref_params
        pairs = [
            (_pykernels.eval_a(s, p.mu, p.lam),
             _cykernels.eval_a(s, p.mu, p.lam)),
            (_pykernels.eval_tau(s, p.mu, p.gamma, p.lam, p.t_m),
             _cykernels.eval_tau(s, p.mu, p.gamma, p.lam, p.t_m)),
            (_pykernels.eval_tau_prime(s, p.mu, p.gamma, p.lam, p.t_m),
             _cykernels.eval_tau_prime(s, p.mu, p.gamma, p.lam, p.t_m)),
            (_pykernels.neg_pc_prime(s, p.beta1, p.beta2, 1.0, 1.0),
             _cykernels.neg_pc_prime(s, p.beta1, p.beta2, 1.0, 1.0)),
        ]
        for py_vals, cy_vals in pairs:
            # absolute floor scaled to the function's magnitude: the
            # relaxation derivative crosses zero, where ulp-level pow
            # differences dominate any relative measure
            floor = 1e-13 * float(np.max(np.abs(py_vals)))
            assert np.allclose(py_vals, cy_vals, rtol=1e-12, atol=floor)

    def test_transform_forward_and_inverse(self, beta_args):
        model, args = beta_args
        rng = np.random.default_rng(2)
        s = rng.uniform(-1.0, 2.0, 2000)
        fwd_py = _pykernels.beta_eps_eval(s, *args)
        fwd_cy = _cykernels.beta_eps_eval(s, *args)
        assert np.allclose(fwd_py, fwd_cy, rtol=1e-13, atol=1e-16)
        inv_py = _pykernels.beta_eps_invert(fwd_py, *args, 1e-13)
        inv_cy = _cykernels.beta_eps_invert(fwd_cy, *args, 1e-13)
        assert np.allclose(inv_py, inv_cy, rtol=0.0, atol=1e-11)
        assert np.max(np.abs(inv_py - s)) < 1e-10

    def test_shape_preservation(self, ref_params):
        s = np.linspace(0.1, 0.9, 12).reshape(3, 4)
        out = _cykernels.eval_a(s, ref_params.mu, ref_params.lam)
        assert out.shape == (3, 4)


class TestFallbackContracts:
    def test_inversion_nonconvergence_guard(self, beta_args):
        # a NaN target can never satisfy the convergence test, so the
        # iteration cap must fire instead of spinning forever
        model, args = beta_args
        with pytest.raises(RuntimeError):
            _pykernels.beta_eps_invert(np.array([np.nan]), *args, 1e-13)

    @needs_compiled
    def test_inversion_nonconvergence_guard_compiled(self, beta_args):
        model, args = beta_args
        with pytest.raises(RuntimeError):
            _cykernels.beta_eps_invert(np.array([np.nan]), *args, 1e-13)

    def test_selected_backend_exposes_api(self):
        from dyncap import kernels
        assert kernels.BACKEND in ("python", "cython")
        for name in ("eval_a", "eval_tau", "eval_tau_prime", "neg_pc_prime",
                     "beta_eps_eval", "beta_eps_invert"):
            assert callable(getattr(kernels, name))
