"""Squash-regularized coefficient family.

All degeneracies of the exact model are removed by composing every
coefficient with the affine squash ``eps + (1 - 2 eps) * clamp(s)``,
whose range is [eps, 1 - eps].  The squashed relaxation coefficient has
the strictly positive floor ``tau(eps)``, so its primitive (the
transformed variable) becomes a global bijection of the real line, with
exact affine tails outside [0, 1].
"""

import numpy as np

from . import kernels
from .coefficients import eval_a, eval_pc_prime, eval_tau, eval_tau_prime
from .quadrature import PrefixIntegrator, gauss_rule, graded_knots

INVERT_TOL = 1e-13


def cut_z(s):
    """Clamp saturation to [0, 1]."""
    arr = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    if np.isscalar(s) or np.ndim(s) == 0:
        return float(arr)
    return arr


def _golden_min(f, lo, hi, tol=1e-12):
    """Golden-section minimum of a scalar function on [lo, hi]."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol * max(1.0, abs(a) + abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _grid_min(f, lo, hi, n):
    grid = np.linspace(lo, hi, n)
    vals = f(grid)
    k = int(np.argmin(vals))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, n - 1)]
    _, refined = _golden_min(lambda x: float(f(x)), a, b)
    return float(min(vals[k], refined))


class RegularizedModel:
    """Exact model plus a squash parameter, with cached evaluation tables.

    Immutable after construction; all evaluations are pure, so instances
    are safe for unrestricted concurrent use.

    Attributes
    ----------
    m_a_eps : float
        Positive floor of the squashed diffusivity.
    m_tau_eps : float
        Floor of the squashed relaxation coefficient; exactly tau(eps).
    m_ap_eps : float
        Floor of diffusivity times negated capillary derivative.
    a_sup : float
        Grid estimate of the diffusivity maximum on [0, 1].
    """

    def __init__(self, params, epsilon, bound_grid=4096):
        if not 0.0 < epsilon < 0.5:
            raise ValueError("squash parameter must lie in (0, 1/2)")
        self.params = params
        self.epsilon = float(epsilon)

        self._knots = np.ascontiguousarray(graded_knots())
        gx, gw = gauss_rule()
        self._gx = np.ascontiguousarray(gx)
        self._gw = np.ascontiguousarray(gw)

        eps = self.epsilon
        self.m_tau_eps = float(eval_tau(params, eps))
        self.tau_sup = params.t_m
        self._tau_hi = float(eval_tau(params, 1.0 - eps))

        # the squashed diffusivity attains its minimum on [eps, 1-eps];
        # unimodality is not assumed, hence grid search plus refinement
        self.m_a_eps = _grid_min(lambda z: eval_a(params, z), eps, 1.0 - eps,
                                 bound_grid)
        self.m_ap_eps = _grid_min(
            lambda z: eval_a(params, z) * (-eval_pc_prime(params, z)),
            eps, 1.0 - eps, bound_grid)
        self.a_sup = -_grid_min(lambda z: -eval_a(params, z), 0.0, 1.0,
                                bound_grid)

        tau_integ = PrefixIntegrator(
            lambda x: eval_tau(params, self._squash(x)), knots=self._knots)
        self._beta_prefix = np.ascontiguousarray(tau_integ.prefix)
        self.beta_eps_one = float(tau_integ.total)

        self._kirchhoff = PrefixIntegrator(
            lambda x: np.sqrt(-eval_pc_prime(params, self._squash(x))),
            knots=self._knots)
        self._kirchhoff_lo = float(np.sqrt(-eval_pc_prime(params, eps)))
        self._kirchhoff_hi = float(np.sqrt(-eval_pc_prime(params, 1.0 - eps)))

    def _squash(self, x):
        # affine image of [0, 1]; callers must pre-clamp general arguments
        return self.epsilon + (1.0 - 2.0 * self.epsilon) * np.asarray(x, dtype=float)

    # -- pointwise squashed coefficients ---------------------------------

    def z_eps(self, s):
        """Affine squash of the clamp; range exactly [eps, 1 - eps]."""
        return self._scalarize(s, self._squash(cut_z(s)))

    def a_eps(self, s):
        return self._scalarize(s, eval_a(self.params, self.z_eps(s)))

    def tau_eps(self, s):
        return self._scalarize(s, eval_tau(self.params, self.z_eps(s)))

    def pc_prime_eps(self, s):
        return self._scalarize(s, eval_pc_prime(self.params, self.z_eps(s)))

    def tau_eps_prime(self, s):
        """Chain-rule derivative of the squashed relaxation coefficient.

        Zero outside [0, 1] where the squash is constant.
        """
        arr = np.asarray(s, dtype=float)
        inside = (arr >= 0.0) & (arr <= 1.0)
        z = self._squash(np.clip(arr, 0.0, 1.0))
        out = eval_tau_prime(self.params, z) * (1.0 - 2.0 * self.epsilon)
        out = np.where(inside, out, 0.0)
        return self._scalarize(s, out)

    def tau_over_a_eps(self, s):
        """Squashed ratio tau/a, i.e. z^(-gamma) + t_m (1-z)^(-lam)."""
        z = np.asarray(self.z_eps(s), dtype=float)
        p = self.params
        out = z ** (-p.gamma) + p.t_m * (1.0 - z) ** (-p.lam)
        return self._scalarize(s, out)

    # -- transformed variable --------------------------------------------

    def beta_eps(self, s):
        """Primitive of the squashed relaxation coefficient on all of R."""
        arr = np.atleast_1d(np.asarray(s, dtype=float))
        p = self.params
        out = kernels.beta_eps_eval(
            arr, self._knots, self._beta_prefix, self._gx, self._gw,
            self.epsilon, p.mu, p.gamma, p.lam, p.t_m,
            self.beta_eps_one, self.m_tau_eps, self._tau_hi)
        return self._scalarize(s, out.reshape(np.shape(np.asarray(s))))

    def beta_eps_inverse(self, v, tol=INVERT_TOL):
        """Inverse of the transformed variable (a global bijection)."""
        arr = np.atleast_1d(np.asarray(v, dtype=float))
        p = self.params
        out = kernels.beta_eps_invert(
            arr, self._knots, self._beta_prefix, self._gx, self._gw,
            self.epsilon, p.mu, p.gamma, p.lam, p.t_m,
            self.beta_eps_one, self.m_tau_eps, self._tau_hi, tol)
        return self._scalarize(v, out.reshape(np.shape(np.asarray(v))))

    def beta_eps_quadrature(self, s, epsrel=1e-13):
        """Adaptive-quadrature oracle for the transformed variable."""
        from scipy.integrate import quad

        def one(x):
            if x < 0.0:
                return self.m_tau_eps * x
            if x > 1.0:
                return self.beta_eps_one + self._tau_hi * (x - 1.0)
            val, _ = quad(lambda t: float(eval_tau(self.params, self._squash(t))),
                          0.0, x, epsabs=1e-15, epsrel=epsrel, limit=200)
            return val

        arr = np.asarray(s, dtype=float)
        if arr.ndim == 0:
            return one(float(arr))
        return np.array([one(float(x)) for x in arr.ravel()]).reshape(arr.shape)

    def kirchhoff_eps(self, s):
        """Primitive of the square root of the negated capillary derivative.

        Strictly increasing through zero at s = 0; affine outside [0, 1]
        where the squashed integrand is constant.
        """
        arr = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty_like(arr)
        lo = arr < 0.0
        hi = arr > 1.0
        mid = ~(lo | hi)
        out[lo] = self._kirchhoff_lo * arr[lo]
        out[hi] = self._kirchhoff.total + self._kirchhoff_hi * (arr[hi] - 1.0)
        if np.any(mid):
            out[mid] = self._kirchhoff(arr[mid])
        return self._scalarize(s, out.reshape(np.shape(np.asarray(s))))

    @staticmethod
    def _scalarize(template, value):
        if np.isscalar(template) or np.ndim(template) == 0:
            return float(np.asarray(value).reshape(()))
        return np.asarray(value)
