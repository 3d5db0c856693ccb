# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of the numpy kernels in ``_pykernels``.

Same signatures and semantics; scalar C loops replace the vectorized
numpy passes, which removes temporary allocations and the masking
overhead of the vectorized Newton inversion.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow

BACKEND = "cython"

cdef int _INVERT_MAX_ITER = 100


cdef inline double _a_s(double s, double mu, double lam) noexcept nogil:
    cdef double p = pow(s, mu)
    cdef double q = pow(1.0 - s, lam)
    return p * q / (p + q)


cdef inline double _tau_s(double s, double mu, double gamma, double lam,
                          double tm) noexcept nogil:
    cdef double p = pow(s, mu)
    cdef double q = pow(1.0 - s, lam)
    return (tm * p + pow(s, mu - gamma) * q) / (p + q)


cdef inline double _tau_prime_s(double s, double mu, double gamma, double lam,
                                double tm) noexcept nogil:
    cdef double p = pow(s, mu)
    cdef double q = pow(1.0 - s, lam)
    cdef double pp = mu * pow(s, mu - 1.0)
    cdef double qp = -lam * pow(1.0 - s, lam - 1.0)
    cdef double r = pow(s, mu - gamma)
    cdef double rp = (mu - gamma) * pow(s, mu - gamma - 1.0)
    cdef double u = tm * p + r * q
    cdef double up = tm * pp + rp * q + r * qp
    cdef double v = p + q
    cdef double vp = pp + qp
    return (up * v - u * vp) / (v * v)


cdef inline double _neg_pc_s(double s, double beta1, double beta2,
                             double g0, double h0) noexcept nogil:
    return g0 * pow(s, -beta1) + h0 * pow(1.0 - s, -beta2)


cdef inline double _tau_squashed(double x, double eps, double mu,
                                 double gamma, double lam,
                                 double tm) noexcept nogil:
    return _tau_s(eps + (1.0 - 2.0 * eps) * x, mu, gamma, lam, tm)


cdef inline Py_ssize_t _panel_of(double x, double[::1] knots) noexcept nogil:
    # rightmost panel with knots[k] <= x (binary search, side="right")
    cdef Py_ssize_t lo = 0
    cdef Py_ssize_t hi = knots.shape[0]
    cdef Py_ssize_t m
    while lo < hi:
        m = (lo + hi) // 2
        if knots[m] <= x:
            lo = m + 1
        else:
            hi = m
    lo -= 1
    if lo < 0:
        lo = 0
    if lo > knots.shape[0] - 2:
        lo = knots.shape[0] - 2
    return lo


cdef inline Py_ssize_t _panel_of_value(double v, double[::1] prefix) noexcept nogil:
    cdef Py_ssize_t lo = 0
    cdef Py_ssize_t hi = prefix.shape[0]
    cdef Py_ssize_t m
    while lo < hi:
        m = (lo + hi) // 2
        if prefix[m] <= v:
            lo = m + 1
        else:
            hi = m
    lo -= 1
    if lo < 0:
        lo = 0
    if lo > prefix.shape[0] - 2:
        lo = prefix.shape[0] - 2
    return lo


cdef inline double _beta_scalar(double s, double[::1] knots, double[::1] prefix,
                                double[::1] gx, double[::1] gw, double eps,
                                double mu, double gamma, double lam, double tm,
                                double beta_one, double tau_lo,
                                double tau_hi) noexcept nogil:
    cdef Py_ssize_t k, j
    cdef double a, h, acc
    if s < 0.0:
        return tau_lo * s
    if s > 1.0:
        return beta_one + tau_hi * (s - 1.0)
    k = _panel_of(s, knots)
    a = knots[k]
    h = s - a
    acc = 0.0
    for j in range(gx.shape[0]):
        acc += gw[j] * _tau_squashed(a + h * gx[j], eps, mu, gamma, lam, tm)
    return prefix[k] + h * acc


def eval_a(s, double mu, double lam):
    arr = np.ascontiguousarray(s, dtype=np.float64)
    shape = arr.shape
    cdef double[::1] x = arr.ravel()
    out = np.empty(x.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(x.shape[0]):
        o[i] = _a_s(x[i], mu, lam)
    return out.reshape(shape)


def eval_tau(s, double mu, double gamma, double lam, double tm):
    arr = np.ascontiguousarray(s, dtype=np.float64)
    shape = arr.shape
    cdef double[::1] x = arr.ravel()
    out = np.empty(x.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(x.shape[0]):
        o[i] = _tau_s(x[i], mu, gamma, lam, tm)
    return out.reshape(shape)


def eval_tau_prime(s, double mu, double gamma, double lam, double tm):
    arr = np.ascontiguousarray(s, dtype=np.float64)
    shape = arr.shape
    cdef double[::1] x = arr.ravel()
    out = np.empty(x.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(x.shape[0]):
        o[i] = _tau_prime_s(x[i], mu, gamma, lam, tm)
    return out.reshape(shape)


def neg_pc_prime(s, double beta1, double beta2, double g0, double h0):
    arr = np.ascontiguousarray(s, dtype=np.float64)
    shape = arr.shape
    cdef double[::1] x = arr.ravel()
    out = np.empty(x.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(x.shape[0]):
        o[i] = _neg_pc_s(x[i], beta1, beta2, g0, h0)
    return out.reshape(shape)


def beta_eps_eval(s, knots, prefix, gx, gw, double eps, double mu,
                  double gamma, double lam, double tm, double beta_one,
                  double tau_lo, double tau_hi):
    arr = np.ascontiguousarray(s, dtype=np.float64)
    shape = arr.shape
    cdef double[::1] x = arr.ravel()
    cdef double[::1] kn = np.ascontiguousarray(knots, dtype=np.float64)
    cdef double[::1] pf = np.ascontiguousarray(prefix, dtype=np.float64)
    cdef double[::1] nx = np.ascontiguousarray(gx, dtype=np.float64)
    cdef double[::1] nw = np.ascontiguousarray(gw, dtype=np.float64)
    out = np.empty(x.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(x.shape[0]):
        o[i] = _beta_scalar(x[i], kn, pf, nx, nw, eps, mu, gamma, lam, tm,
                            beta_one, tau_lo, tau_hi)
    return out.reshape(shape)


def beta_eps_invert(v, knots, prefix, gx, gw, double eps, double mu,
                    double gamma, double lam, double tm, double beta_one,
                    double tau_lo, double tau_hi, double tol):
    arr = np.ascontiguousarray(v, dtype=np.float64)
    shape = arr.shape
    cdef double[::1] x = arr.ravel()
    cdef double[::1] kn = np.ascontiguousarray(knots, dtype=np.float64)
    cdef double[::1] pf = np.ascontiguousarray(prefix, dtype=np.float64)
    cdef double[::1] nx = np.ascontiguousarray(gx, dtype=np.float64)
    cdef double[::1] nw = np.ascontiguousarray(gw, dtype=np.float64)
    out = np.empty(x.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i, k, it
    cdef double vv, left, right, s, f, target, deriv, s_new
    cdef bint converged
    for i in range(x.shape[0]):
        vv = x[i]
        if vv < 0.0:
            o[i] = vv / tau_lo
            continue
        if vv > beta_one:
            o[i] = 1.0 + (vv - beta_one) / tau_hi
            continue
        k = _panel_of_value(vv, pf)
        left = kn[k]
        right = kn[k + 1]
        s = 0.5 * (left + right)
        target = tol * (1.0 if fabs(vv) < 1.0 else fabs(vv))
        converged = False
        for it in range(_INVERT_MAX_ITER):
            f = _beta_scalar(s, kn, pf, nx, nw, eps, mu, gamma, lam, tm,
                             beta_one, tau_lo, tau_hi) - vv
            if f < 0.0:
                left = s
            else:
                right = s
            if fabs(f) <= target:
                converged = True
                break
            deriv = _tau_squashed(s, eps, mu, gamma, lam, tm)
            s_new = s - f / deriv
            if s_new <= left or s_new >= right:
                s_new = 0.5 * (left + right)
            s = s_new
        if not converged:
            raise RuntimeError(
                "transformed-variable inversion did not converge")
        o[i] = s
    return out.reshape(shape)
