"""Exact coefficient family for the degenerate saturation model.

The model bundles a diffusivity ``a`` that vanishes at both saturation
endpoints, a relaxation coefficient ``tau`` that is monotone increasing
with ``tau(0) = 0``, its primitive ``beta`` (the transformed variable),
and a capillary-pressure derivative with power singularities at both
endpoints.  Everything here is the unregularized family; the squashed
variants live in :mod:`dyncap.regularization`.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .quadrature import PrefixIntegrator


def _as_coeffs(value):
    if np.isscalar(value):
        return (float(value),)
    return tuple(float(c) for c in value)


@dataclass(frozen=True)
class ModelParams:
    """Exponent/coefficient bundle defining the model functions.

    Parameters
    ----------
    mu, lam : float
        Orders of the diffusivity zeros at s=0 and s=1.
    gamma : float
        Degeneracy order of the relaxation coefficient at s=0; mu > gamma.
    t_m : float
        Relaxation ceiling, tau(1) = t_m > 1.
    beta1, beta2 : float
        Orders of the capillary-pressure singularities at s=0 and s=1,
        with 0 < beta1 <= gamma and 0 < beta2 <= lam.
    g_coeffs, h_coeffs : tuple of float
        Polynomial coefficients (low order first) of the strictly positive
        weights in the capillary-pressure derivative.  The default is the
        constant 1 for both.
    """

    mu: float
    lam: float
    gamma: float
    t_m: float
    beta1: float
    beta2: float
    g_coeffs: tuple = (1.0,)
    h_coeffs: tuple = (1.0,)

    def __post_init__(self):
        object.__setattr__(self, "g_coeffs", _as_coeffs(self.g_coeffs))
        object.__setattr__(self, "h_coeffs", _as_coeffs(self.h_coeffs))
        if not (self.mu > 0 and self.lam > 0 and self.gamma >= 0):
            raise ValueError("need mu > 0, lam > 0, gamma >= 0")
        if not self.mu > self.gamma:
            raise ValueError("monotone relaxation needs mu > gamma")
        if not self.t_m > 1.0:
            raise ValueError("relaxation ceiling t_m must exceed 1")
        if not (0.0 < self.beta1 <= self.gamma):
            raise ValueError("need 0 < beta1 <= gamma")
        if not (0.0 < self.beta2 <= self.lam):
            raise ValueError("need 0 < beta2 <= lam")
        probe = np.linspace(0.0, 1.0, 257)
        if np.any(self.g(probe) <= 0.0) or np.any(self.h(probe) <= 0.0):
            raise ValueError("capillary weights must be strictly positive on [0, 1]")

    @property
    def has_constant_weights(self):
        return len(self.g_coeffs) == 1 and len(self.h_coeffs) == 1

    def g(self, s):
        return np.polynomial.polynomial.polyval(np.asarray(s, dtype=float),
                                                self.g_coeffs)

    def h(self, s):
        return np.polynomial.polynomial.polyval(np.asarray(s, dtype=float),
                                                self.h_coeffs)

    def g_prime(self, s):
        der = np.polynomial.polynomial.polyder(self.g_coeffs)
        return np.polynomial.polynomial.polyval(np.asarray(s, dtype=float), der)

    def h_prime(self, s):
        der = np.polynomial.polynomial.polyder(self.h_coeffs)
        return np.polynomial.polynomial.polyval(np.asarray(s, dtype=float), der)


def _scalar_like(template, value):
    if np.isscalar(template) or np.ndim(template) == 0:
        return float(np.asarray(value).reshape(()))
    return value


def eval_a(params, s):
    """Diffusivity s^mu (1-s)^lam / (s^mu + (1-s)^lam); zero at both ends.

    Raises ValueError for arguments outside [0, 1].
    """
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("diffusivity argument outside [0, 1]")
    return _scalar_like(s, kernels.eval_a(arr, params.mu, params.lam))


def eval_a_prime(params, s):
    """Derivative of the diffusivity on the open interval (0, 1)."""
    arr = np.asarray(s, dtype=float)
    p = arr**params.mu
    q = (1.0 - arr) ** params.lam
    pp = params.mu * arr ** (params.mu - 1.0)
    qp = -params.lam * (1.0 - arr) ** (params.lam - 1.0)
    return _scalar_like(s, (pp * q * q + p * p * qp) / (p + q) ** 2)


def eval_tau(params, s):
    """Relaxation coefficient, extended to all of R.

    Monotone nondecreasing: 0 below s=0, the ceiling t_m above s=1.
    """
    arr = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return _scalar_like(
        s, kernels.eval_tau(arr, params.mu, params.gamma, params.lam, params.t_m))


def eval_tau_prime(params, s):
    """Derivative of the relaxation coefficient on (0, 1)."""
    arr = np.asarray(s, dtype=float)
    return _scalar_like(
        s, kernels.eval_tau_prime(arr, params.mu, params.gamma, params.lam,
                                  params.t_m))


def eval_tau_second(params, s):
    """Second derivative of the relaxation coefficient on (0, 1)."""
    arr = np.asarray(s, dtype=float)
    mu, gamma, lam, tm = params.mu, params.gamma, params.lam, params.t_m
    p = arr**mu
    q = (1.0 - arr) ** lam
    pp = mu * arr ** (mu - 1.0)
    qp = -lam * (1.0 - arr) ** (lam - 1.0)
    p2 = mu * (mu - 1.0) * arr ** (mu - 2.0)
    q2 = lam * (lam - 1.0) * (1.0 - arr) ** (lam - 2.0)
    r = arr ** (mu - gamma)
    rp = (mu - gamma) * arr ** (mu - gamma - 1.0)
    r2 = (mu - gamma) * (mu - gamma - 1.0) * arr ** (mu - gamma - 2.0)
    u = tm * p + r * q
    up = tm * pp + rp * q + r * qp
    u2 = tm * p2 + r2 * q + 2.0 * rp * qp + r * q2
    v = p + q
    vp = pp + qp
    v2 = p2 + q2
    tau = u / v
    tau_p = (up * v - u * vp) / (v * v)
    return _scalar_like(s, (u2 - 2.0 * tau_p * vp - tau * v2) / v)


@lru_cache(maxsize=64)
def _beta_integrator(params):
    def integrand(x):
        return kernels.eval_tau(np.clip(x, 0.0, 1.0), params.mu, params.gamma,
                                params.lam, params.t_m)

    return PrefixIntegrator(integrand)


def eval_beta(params, s):
    """Primitive of the relaxation coefficient, extended to all of R.

    Zero below s=0 and affine with slope t_m above s=1; on [0, 1] evaluated
    by cached high-order panel quadrature.  Strictly increasing on [0, 1].
    """
    integ = _beta_integrator(params)
    arr = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.zeros_like(arr)
    hi = arr > 1.0
    mid = (arr >= 0.0) & ~hi
    if np.any(mid):
        out[mid] = integ(arr[mid])
    out[hi] = integ.total + params.t_m * (arr[hi] - 1.0)
    return _scalar_like(s, out.reshape(np.shape(np.asarray(s, dtype=float))))


def eval_pc_prime(params, s):
    """Capillary-pressure derivative on the open interval (0, 1).

    Always negative; blows up to -inf at both endpoints, so endpoint
    arguments raise ValueError.
    """
    arr = np.asarray(s, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError("capillary-pressure derivative is singular outside (0, 1)")
    if params.has_constant_weights:
        neg = kernels.neg_pc_prime(arr, params.beta1, params.beta2,
                                   params.g_coeffs[0], params.h_coeffs[0])
    else:
        neg = (params.g(arr) * arr ** (-params.beta1)
               + params.h(arr) * (1.0 - arr) ** (-params.beta2))
    return _scalar_like(s, -neg)


def eval_pc_second(params, s):
    """Second derivative of the capillary pressure on (0, 1)."""
    arr = np.asarray(s, dtype=float)
    b1, b2 = params.beta1, params.beta2
    out = (-params.g_prime(arr) * arr ** (-b1)
           + params.g(arr) * b1 * arr ** (-b1 - 1.0)
           - params.h_prime(arr) * (1.0 - arr) ** (-b2)
           - params.h(arr) * b2 * (1.0 - arr) ** (-b2 - 1.0))
    return _scalar_like(s, out)


@dataclass(frozen=True)
class SupNormReport:
    """Numerical sup-norm estimates of the six bounded coefficient combinations.

    These are grid maxima with one local refinement pass, not certified
    bounds; ``grid_size`` records the resolution used.
    """

    a_pc_over_tau: float
    a_pc: float
    a_over_tau: float
    a_tau_prime_over_tau: float
    a_tau_sq: float
    sqrt_a_tau_prime_over_tau: float
    grid_size: int

    def as_dict(self):
        return {
            "a_pc_over_tau": self.a_pc_over_tau,
            "a_pc": self.a_pc,
            "a_over_tau": self.a_over_tau,
            "a_tau_prime_over_tau": self.a_tau_prime_over_tau,
            "a_tau_sq": self.a_tau_sq,
            "sqrt_a_tau_prime_over_tau": self.sqrt_a_tau_prime_over_tau,
        }


def _sup_values(params, grid):
    a = eval_a(params, grid)
    tau = eval_tau(params, grid)
    tau_p = eval_tau_prime(params, grid)
    neg_pc = -eval_pc_prime(params, grid)
    return {
        "a_pc_over_tau": a * neg_pc / tau,
        "a_pc": a * neg_pc,
        "a_over_tau": a / tau,
        "a_tau_prime_over_tau": a * tau_p / tau,
        "a_tau_sq": a * tau * tau,
        "sqrt_a_tau_prime_over_tau": np.sqrt(a) * tau_p / tau,
    }


def coefficient_sup_norms(params, grid_size=100_000):
    """Estimate the six sup norms over [0, 1] by dense-grid maximization.

    One refinement pass re-grids a neighbourhood of each grid maximizer.
    Non-finite intermediate values raise ValueError (they indicate the
    coefficient assumptions are violated).
    """
    grid = np.arange(1, grid_size + 1) / (grid_size + 1.0)
    values = _sup_values(params, grid)
    results = {}
    for name, vals in values.items():
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"non-finite values while estimating sup of {name}")
        k = int(np.argmax(vals))
        lo = grid[max(k - 1, 0)]
        hi = grid[min(k + 1, grid_size - 1)]
        fine = np.linspace(lo, hi, 513)
        fine_vals = _sup_values(params, fine)[name]
        if not np.all(np.isfinite(fine_vals)):
            raise ValueError(f"non-finite values while refining sup of {name}")
        results[name] = float(max(vals[k], np.max(fine_vals)))
    return SupNormReport(grid_size=grid_size, **results)
