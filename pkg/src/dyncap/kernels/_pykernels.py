"""Numpy implementations of the hot evaluation kernels.

These are the fallback backend; `dyncap.kernels` prefers the compiled
Cython twin when it is importable.  Both backends implement the same
signatures and must agree to rounding accuracy (see tests).

All saturation-power coefficients are evaluated in one vectorized pass.
The transformed-variable forward map and its inverse dominate the
implicit time loop: every quadrature point of every nonlinear iteration
needs one inversion, so these two routines are the performance core.
"""

import numpy as np

BACKEND = "python"

_INVERT_MAX_ITER = 100


def eval_a(s, mu, lam):
    """Degenerate diffusivity s^mu (1-s)^lam / (s^mu + (1-s)^lam) on [0, 1]."""
    s = np.asarray(s, dtype=float)
    p = s**mu
    q = (1.0 - s) ** lam
    return p * q / (p + q)


def eval_tau(s, mu, gamma, lam, tm):
    """Relaxation coefficient on [0, 1]; 0 at s=0, tm at s=1."""
    s = np.asarray(s, dtype=float)
    p = s**mu
    q = (1.0 - s) ** lam
    return (tm * p + s ** (mu - gamma) * q) / (p + q)


def eval_tau_prime(s, mu, gamma, lam, tm):
    """Derivative of the relaxation coefficient; valid on (0, 1)."""
    s = np.asarray(s, dtype=float)
    p = s**mu
    q = (1.0 - s) ** lam
    pp = mu * s ** (mu - 1.0)
    qp = -lam * (1.0 - s) ** (lam - 1.0)
    r = s ** (mu - gamma)
    rp = (mu - gamma) * s ** (mu - gamma - 1.0)
    u = tm * p + r * q
    up = tm * pp + rp * q + r * qp
    v = p + q
    vp = pp + qp
    return (up * v - u * vp) / (v * v)


def neg_pc_prime(s, beta1, beta2, g0, h0):
    """Negated capillary-pressure derivative g0/s^beta1 + h0/(1-s)^beta2."""
    s = np.asarray(s, dtype=float)
    return g0 * s ** (-beta1) + h0 * (1.0 - s) ** (-beta2)


def _tau_squashed(x, eps, mu, gamma, lam, tm):
    # x in [0, 1]; argument squashed into [eps, 1-eps]
    return eval_tau(eps + (1.0 - 2.0 * eps) * x, mu, gamma, lam, tm)


def beta_eps_eval(s, knots, prefix, gx, gw, eps, mu, gamma, lam, tm,
                  beta_one, tau_lo, tau_hi):
    """Transformed variable: integral of the squashed relaxation coefficient.

    Affine tails with slopes tau_lo (below 0) and tau_hi (above 1); on
    [0, 1] a cached panel prefix plus a local Gauss panel.
    """
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    lo = s < 0.0
    hi = s > 1.0
    mid = ~(lo | hi)
    out[lo] = tau_lo * s[lo]
    out[hi] = beta_one + tau_hi * (s[hi] - 1.0)
    if np.any(mid):
        sm = s[mid]
        idx = np.clip(np.searchsorted(knots, sm, side="right") - 1,
                      0, len(knots) - 2)
        a = knots[idx]
        h = sm - a
        nodes = a[:, None] + h[:, None] * gx[None, :]
        vals = _tau_squashed(nodes, eps, mu, gamma, lam, tm)
        out[mid] = prefix[idx] + h * np.sum(gw[None, :] * vals, axis=1)
    return out


def beta_eps_invert(v, knots, prefix, gx, gw, eps, mu, gamma, lam, tm,
                    beta_one, tau_lo, tau_hi, tol):
    """Inverse of beta_eps_eval, vectorized safeguarded Newton.

    Tails invert exactly; interior values are bracketed by the panel whose
    prefix straddles v, then refined by Newton with bisection fallback.
    Convergence criterion: |beta(s) - v| <= tol * max(1, |v|).
    """
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    lo = v < 0.0
    hi = v > beta_one
    mid = ~(lo | hi)
    out[lo] = v[lo] / tau_lo
    out[hi] = 1.0 + (v[hi] - beta_one) / tau_hi
    if not np.any(mid):
        return out

    vm = v[mid]
    idx = np.clip(np.searchsorted(prefix, vm, side="right") - 1,
                  0, len(knots) - 2)
    left = knots[idx].copy()
    right = knots[idx + 1].copy()
    s = 0.5 * (left + right)
    target_tol = tol * np.maximum(1.0, np.abs(vm))

    active = np.ones(vm.shape, dtype=bool)
    for _ in range(_INVERT_MAX_ITER):
        sa = s[active]
        fa = beta_eps_eval(sa, knots, prefix, gx, gw, eps, mu, gamma, lam,
                           tm, beta_one, tau_lo, tau_hi) - vm[active]
        # update bracket from the residual sign
        la, ra = left[active], right[active]
        neg = fa < 0.0
        la = np.where(neg, sa, la)
        ra = np.where(neg, ra, sa)
        left[active], right[active] = la, ra

        done = np.abs(fa) <= target_tol[active]
        s_active = sa.copy()
        if not np.all(done):
            deriv = _tau_squashed(sa, eps, mu, gamma, lam, tm)
            step = fa / deriv
            s_new = sa - step
            # fall back to bisection when Newton leaves the bracket
            bad = (s_new <= la) | (s_new >= ra)
            s_new = np.where(bad, 0.5 * (la + ra), s_new)
            s_active = np.where(done, sa, s_new)
        s[active] = s_active

        still = np.zeros_like(active)
        still[active] = ~done
        active = still
        if not np.any(active):
            break
    else:
        raise RuntimeError("transformed-variable inversion did not converge")

    out[mid] = s
    return out
