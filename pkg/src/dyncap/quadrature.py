"""Gauss-Legendre panel quadrature with corner-graded subdivision.

Several model functions are integrals of coefficients that are smooth on
(0, 1) but develop steep boundary layers near 0 and 1 once the saturation
argument is squashed into [eps, 1-eps] with small eps.  Uniform composite
quadrature loses accuracy in those layers, so the panel set is graded
geometrically toward both endpoints: each corner panel has bounded
endpoint ratio, which keeps a fixed-order Gauss rule at machine accuracy
for integrands of the form (c*s + eps)^p.
"""

from functools import lru_cache

import numpy as np

GL_ORDER = 16


@lru_cache(maxsize=8)
def gauss_rule(order=GL_ORDER):
    """Nodes and weights of the Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=8)
def graded_knots(corner_start=1e-12, ratio=1.25, interior_step=1.0 / 256):
    """Panel endpoints on [0, 1], geometrically refined toward 0 and 1.

    The first interior knot sits at ``corner_start``; successive knots grow
    by ``ratio`` until they reach the uniformly spaced middle section.
    """
    geo = [corner_start]
    while geo[-1] * ratio < 0.5:
        geo.append(geo[-1] * ratio)
    geo = np.array(geo)
    middle = np.arange(interior_step, 0.5, interior_step)
    left = np.concatenate(([0.0], geo, middle))
    knots = np.concatenate((left, [0.5], np.sort(1.0 - left)))
    knots = np.unique(knots)
    return knots


def panel_nodes(knots, order=GL_ORDER):
    """All quadrature nodes/weights for the panel decomposition.

    Returns arrays of shape (n_panels, order).
    """
    gx, gw = gauss_rule(order)
    a = knots[:-1][:, None]
    h = np.diff(knots)[:, None]
    return a + h * gx[None, :], h * gw[None, :]


class PrefixIntegrator:
    """Evaluates F(s) = integral of f from 0 to s for s in [0, 1].

    Panel integrals are cached as prefix sums at the knots; an evaluation
    adds the local Gauss panel over the partial interval, so the result is
    exact to quadrature accuracy for any s (no interpolation error).  For a
    positive integrand F is strictly increasing, which downstream inversion
    relies on.
    """

    def __init__(self, f, knots=None, order=GL_ORDER):
        self.f = f
        self.knots = graded_knots() if knots is None else np.asarray(knots)
        self.order = order
        nodes, weights = panel_nodes(self.knots, order)
        panel_ints = np.sum(weights * f(nodes), axis=1)
        self.prefix = np.concatenate(([0.0], np.cumsum(panel_ints)))
        self.gx, self.gw = gauss_rule(order)

    @property
    def total(self):
        """Integral over the whole unit interval."""
        return self.prefix[-1]

    def __call__(self, s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any(s_arr < 0.0) or np.any(s_arr > 1.0):
            raise ValueError("prefix integrator argument outside [0, 1]")
        idx = np.searchsorted(self.knots, s_arr, side="right") - 1
        idx = np.clip(idx, 0, len(self.knots) - 2)
        a = self.knots[idx]
        h = s_arr - a
        local_nodes = a[:, None] + h[:, None] * self.gx[None, :]
        local = np.sum(self.gw[None, :] * self.f(local_nodes), axis=1) * h
        out = self.prefix[idx] + local
        if np.isscalar(s) or np.ndim(s) == 0:
            return float(out[0])
        return out.reshape(np.shape(s))


def fixed_quad(f, a, b, order=GL_ORDER):
    """Single-panel Gauss-Legendre integral of f over [a, b]."""
    gx, gw = gauss_rule(order)
    h = b - a
    return h * float(np.sum(gw * f(a + h * gx)))
