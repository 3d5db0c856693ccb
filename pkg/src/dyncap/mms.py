"""Manufactured-solution verification of the Galerkin integrator.

A smooth target field (sinusoidal bump around a constant boundary value,
decaying in time) is injected through an extra volume source, computed
analytically from the model's coefficient derivatives.  Convergence
ladders then measure the observed spatial and temporal orders of the
recovered saturation error.
"""

from dataclasses import dataclass

import numpy as np

from .coefficients import (eval_a, eval_a_prime, eval_pc_prime,
                           eval_pc_second, eval_tau, eval_tau_prime,
                           eval_tau_second)
from .fem import Mesh1D, ProblemData, constant_field
from .stepping import GalerkinSolver, StepperOptions

__all__ = ["ManufacturedField", "manufactured_data", "spatial_convergence",
           "temporal_convergence", "l2_error"]


@dataclass(frozen=True)
class ManufacturedField:
    """Target saturation s_c + amp * sin(pi * (x - x0) / L) * exp(-rate * t)."""

    s_center: float
    amplitude: float
    rate: float
    x_left: float
    x_right: float

    def __post_init__(self):
        if not (0.0 < self.s_center - abs(self.amplitude)
                and self.s_center + abs(self.amplitude) < 1.0):
            raise ValueError("manufactured field must stay inside (0, 1)")

    @property
    def wavenumber(self):
        return np.pi / (self.x_right - self.x_left)

    def value(self, x, t):
        k = self.wavenumber
        return (self.s_center + self.amplitude
                * np.sin(k * (np.asarray(x, dtype=float) - self.x_left))
                * np.exp(-self.rate * t))

    def derivatives(self, x, t):
        """Partial derivatives (t, x, xx, xt, xxt) of the target field."""
        k = self.wavenumber
        x = np.asarray(x, dtype=float)
        sin = np.sin(k * (x - self.x_left))
        cos = np.cos(k * (x - self.x_left))
        amp_t = self.amplitude * np.exp(-self.rate * t)
        s_t = -self.rate * amp_t * sin
        s_x = amp_t * k * cos
        s_xx = -amp_t * k * k * sin
        s_xt = -self.rate * amp_t * k * cos
        s_xxt = self.rate * amp_t * k * k * sin
        return s_t, s_x, s_xx, s_xt, s_xxt


def manufactured_source(model, fld):
    """Analytic volume source that makes the target solve the equation.

    Residual of the strong form: S_t minus the divergence of the
    squashed-diffusivity flux of the mixed derivative, plus the capillary
    part.  All coefficient derivatives are chain-ruled through the affine
    squash (the target stays inside (0, 1), where the squash slope is
    constant).
    """
    params = model.params
    c = 1.0 - 2.0 * model.epsilon

    def source(x, t):
        s = fld.value(x, t)
        s_t, s_x, s_xx, s_xt, s_xxt = fld.derivatives(x, t)
        z = model.epsilon + c * np.asarray(s, dtype=float)
        a = eval_a(params, z)
        a_p = eval_a_prime(params, z) * c
        tau = eval_tau(params, z)
        tau_p = eval_tau_prime(params, z) * c
        tau_pp = eval_tau_second(params, z) * c * c
        pc = eval_pc_prime(params, z)
        apc_p = (eval_a_prime(params, z) * eval_pc_prime(params, z)
                 + eval_a(params, z) * eval_pc_second(params, z)) * c

        w_x = tau_p * s_x * s_t + tau * s_xt
        w_xx = (tau_pp * s_x * s_x * s_t + tau_p * (s_xx * s_t + 2.0 * s_x * s_xt)
                + tau * s_xxt)
        mixed_div = a_p * s_x * w_x + a * w_xx
        capillary_div = apc_p * s_x * s_x + a * pc * s_xx
        return s_t - mixed_div + capillary_div

    return source


def manufactured_data(model, fld, t_final):
    """Problem data whose exact solution is the manufactured field."""
    return ProblemData(
        s_d=constant_field(fld.s_center),
        s_i=lambda x: fld.value(x, 0.0),
        t_final=t_final,
        source=manufactured_source(model, fld))


def l2_error(mesh, model, state, exact_fn):
    """Element-quadrature L2 norm of recovered saturation minus a field."""
    err = state.s_quad - np.asarray(
        exact_fn(mesh.quad_x.ravel())).reshape(mesh.quad_x.shape)
    return float(np.sqrt(np.sum(mesh.quad_w * err * err)))


def _observed_orders(hs, errors):
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    pair = list(np.log(errors[:-1] / errors[1:]) / np.log(hs[:-1] / hs[1:]))
    if len(hs) >= 2:
        slope = float(np.polyfit(np.log(hs), np.log(errors), 1)[0])
    else:
        slope = float("nan")
    return pair, slope


def spatial_convergence(params, epsilon, fld, t_final, elements_ladder,
                        dt_coarse, quad_order=5):
    """Mesh-halving ladder at fixed squash parameter.

    The step size is scaled with h^2 so the first-order time error stays
    subordinate to the second-order spatial error being measured.
    """
    from .regularization import RegularizedModel

    model = RegularizedModel(params, epsilon)
    rows = []
    base_n = elements_ladder[0]
    for n_el in elements_ladder:
        mesh = Mesh1D.uniform(fld.x_left, fld.x_right, n_el,
                              left_bc="dirichlet", right_bc="dirichlet",
                              quad_order=quad_order)
        data = manufactured_data(model, fld, t_final)
        dt = dt_coarse * (base_n / n_el) ** 2
        solver = GalerkinSolver(mesh, data, model, StepperOptions(dt=dt))
        result = solver.run()
        err = l2_error(mesh, model, result.state,
                       lambda x: fld.value(x, t_final))
        rows.append({"elements": n_el, "h": (fld.x_right - fld.x_left) / n_el,
                     "dt": dt, "error": err})
    orders, slope = _observed_orders([r["h"] for r in rows],
                                     [r["error"] for r in rows])
    return {"rows": rows, "orders": orders, "slope": slope}


def temporal_convergence(params, epsilon, fld, t_final, dt_ladder,
                         n_elements, quad_order=5):
    """Step-halving ladder on a fixed fine mesh."""
    from .regularization import RegularizedModel

    model = RegularizedModel(params, epsilon)
    mesh = Mesh1D.uniform(fld.x_left, fld.x_right, n_elements,
                          left_bc="dirichlet", right_bc="dirichlet",
                          quad_order=quad_order)
    data = manufactured_data(model, fld, t_final)
    rows = []
    for dt in dt_ladder:
        solver = GalerkinSolver(mesh, data, model, StepperOptions(dt=dt))
        result = solver.run()
        err = l2_error(mesh, model, result.state,
                       lambda x: fld.value(x, t_final))
        rows.append({"dt": dt, "error": err})
    orders, slope = _observed_orders([r["dt"] for r in rows],
                                     [r["error"] for r in rows])
    return {"rows": rows, "orders": orders, "slope": slope}
