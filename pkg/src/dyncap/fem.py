"""Piecewise-linear Galerkin discretization on a 1-D mesh.

The unknown is the nodal vector of transformed-variable values
``u = beta_eps(S)``: the discrete field is the linear interpolant of u,
lifted by the nodal values of ``beta_eps(S_D)``, and the saturation is
recovered pointwise through the inverse transform.  Hat functions
attached to non-Dirichlet nodes span the trial space, so the assembled
operators are tridiagonal.
"""

from dataclasses import dataclass, field as dataclass_field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solveh_banded

from .quadrature import gauss_rule


def constant_field(value):
    """Space-time field with a constant value and zero derivatives."""
    v = float(value)
    return lambda x, t: np.full_like(np.asarray(x, dtype=float), v)


def zero_field(x, t):
    return np.zeros_like(np.asarray(x, dtype=float))


class Mesh1D:
    """Interval mesh with boundary roles and a per-element Gauss rule."""

    def __init__(self, nodes, left_bc="dirichlet", right_bc="neumann",
                 quad_order=5):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("mesh needs at least two nodes")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("mesh nodes must be strictly increasing")
        for bc in (left_bc, right_bc):
            if bc not in ("dirichlet", "neumann"):
                raise ValueError(f"unknown boundary role {bc!r}")
        if left_bc != "dirichlet" and right_bc != "dirichlet":
            raise ValueError("at least one boundary node must be Dirichlet")

        self.nodes = nodes
        self.n_nodes = nodes.size
        self.left_bc = left_bc
        self.right_bc = right_bc
        self.quad_order = int(quad_order)

        self.dirichlet_nodes = tuple(
            i for i, bc in ((0, left_bc), (self.n_nodes - 1, right_bc))
            if bc == "dirichlet")
        self.neumann_nodes = tuple(
            i for i, bc in ((0, left_bc), (self.n_nodes - 1, right_bc))
            if bc == "neumann")

        # boundary Dirichlet nodes leave a contiguous dof range
        self.dof_start = 1 if left_bc == "dirichlet" else 0
        self.dof_stop = self.n_nodes - 1 if right_bc == "dirichlet" else self.n_nodes
        self.n_dofs = self.dof_stop - self.dof_start

        self.h = np.diff(nodes)
        gx, gw = gauss_rule(self.quad_order)
        self.ref_x = gx
        self.shape0 = 1.0 - gx
        self.shape1 = gx
        self.quad_x = nodes[:-1, None] + self.h[:, None] * gx[None, :]
        self.quad_w = self.h[:, None] * gw[None, :]

    @classmethod
    def uniform(cls, x_left, x_right, n_elements, **kwargs):
        return cls(np.linspace(x_left, x_right, n_elements + 1), **kwargs)

    def dof_slice(self):
        return slice(self.dof_start, self.dof_stop)


@dataclass
class ProblemData:
    """Data fields of one initial-boundary-value problem.

    ``s_d`` is the boundary/lift saturation field with analytic partial
    derivatives; ``s_i`` the initial saturation; ``r0`` and ``sigma`` the
    boundary-flux factors (the flux is their product, with ``sigma``
    compactly supported inside (0, 1)); ``source`` is an optional volume
    source used by the manufactured-solution harness.
    """

    s_d: Callable
    s_i: Callable
    t_final: float
    s_d_t: Callable = zero_field
    s_d_x: Callable = zero_field
    s_d_xt: Callable = zero_field
    r0: Callable = zero_field
    sigma: Optional[Callable] = None
    source: Optional[Callable] = None

    def sigma_at(self, s):
        if self.sigma is None:
            return np.zeros_like(np.asarray(s, dtype=float))
        return self.sigma(s)

    def validate(self, mesh, n_time_samples=7):
        """Spot checks of the data assumptions on a sampling grid."""
        xs = np.linspace(mesh.nodes[0], mesh.nodes[-1], 129)
        for t in np.linspace(0.0, self.t_final, n_time_samples):
            sd = np.asarray(self.s_d(xs, t))
            if np.any(sd <= 0.0) or np.any(sd >= 1.0):
                raise ValueError("boundary saturation must stay inside (0, 1)")
        si = np.asarray(self.s_i(xs))
        if np.any(si < 0.0) or np.any(si > 1.0):
            raise ValueError("initial saturation must lie in [0, 1]")
        if self.sigma is not None:
            ends = np.asarray(self.sigma(np.array([0.0, 1.0])))
            if np.any(ends != 0.0):
                raise ValueError("flux cutoff must vanish at the endpoints")


@dataclass
class GalerkinState:
    """Accepted solver state: time, coefficients, and cached fields."""

    t: float
    gamma: np.ndarray
    u_nodal: np.ndarray
    s_nodal: np.ndarray
    u_quad: np.ndarray = dataclass_field(repr=False, default=None)
    s_quad: np.ndarray = dataclass_field(repr=False, default=None)
    grad_u_el: np.ndarray = dataclass_field(repr=False, default=None)

    def __post_init__(self):
        if not np.all(np.isfinite(self.gamma)):
            raise FloatingPointError("non-finite Galerkin coefficients")


@dataclass
class AssembledSystem:
    """Tridiagonal operators of the nonlinear ODE system.

    ``a_*`` is symmetric positive definite, ``b_*`` symmetric; ``f`` is
    the load.  Bands are indexed by dof.
    """

    a_diag: np.ndarray
    a_off: np.ndarray
    b_diag: np.ndarray
    b_off: np.ndarray
    f: np.ndarray

    def a_matvec(self, v):
        return _tri_matvec(self.a_diag, self.a_off, v)

    def b_matvec(self, v):
        return _tri_matvec(self.b_diag, self.b_off, v)

    def a_dense(self):
        return _tri_dense(self.a_diag, self.a_off)

    def b_dense(self):
        return _tri_dense(self.b_diag, self.b_off)


def _tri_matvec(diag, off, v):
    out = diag * v
    if off.size:
        out[:-1] += off * v[1:]
        out[1:] += off * v[:-1]
    return out


def _tri_dense(diag, off):
    n = diag.size
    mat = np.zeros((n, n))
    mat[np.arange(n), np.arange(n)] = diag
    if off.size:
        mat[np.arange(n - 1), np.arange(1, n)] = off
        mat[np.arange(1, n), np.arange(n - 1)] = off
    return mat


def solve_tridiag_spd(diag, off, rhs):
    """Cholesky banded solve of a symmetric positive definite tridiagonal."""
    ab = np.zeros((2, diag.size))
    ab[0, 1:] = off
    ab[1, :] = diag
    return solveh_banded(ab, rhs)


def lift_nodal(mesh, data, model, t):
    """Transformed boundary-datum values at the mesh nodes."""
    return np.asarray(model.beta_eps(data.s_d(mesh.nodes, t)))


def state_from_gamma(mesh, data, model, t, gamma):
    """Build the full state (nodal and quadrature caches) from coefficients."""
    u = lift_nodal(mesh, data, model, t)
    u[mesh.dof_slice()] += gamma
    s_nodal = np.asarray(model.beta_eps_inverse(u))
    u_quad = (mesh.shape0[None, :] * u[:-1, None]
              + mesh.shape1[None, :] * u[1:, None])
    s_quad = np.asarray(model.beta_eps_inverse(u_quad.ravel())).reshape(u_quad.shape)
    grad_u_el = np.diff(u) / mesh.h
    return GalerkinState(t=float(t), gamma=np.asarray(gamma, dtype=float),
                         u_nodal=u, s_nodal=s_nodal, u_quad=u_quad,
                         s_quad=s_quad, grad_u_el=grad_u_el)


def recover_saturation(mesh, data, model, state, x):
    """Saturation at arbitrary coordinates via the inverse transform."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < mesh.nodes[0]) or np.any(xa > mesh.nodes[-1]):
        raise ValueError("coordinate outside the mesh")
    u = np.interp(xa, mesh.nodes, state.u_nodal)
    out = model.beta_eps_inverse(u)
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(np.asarray(out).reshape(()))
    return np.asarray(out)


def _scatter_tridiag(mesh, w00, w01, w11):
    """Accumulate element 2x2 blocks into node-indexed bands."""
    n = mesh.n_nodes
    diag = np.zeros(n)
    off = np.zeros(n - 1)
    np.add.at(diag, np.arange(n - 1), w00)
    np.add.at(diag, np.arange(1, n), w11)
    off += w01
    return diag, off


def assemble(mesh, data, model, state, include_source=True):
    """Assemble the ODE-system operators at the given state.

    The stiffness-like block weights the basis gradients with the squashed
    diffusivity; the mass-like block carries 1 over the squashed
    relaxation coefficient; the second operator adds the capillary factor.
    The load collects the three boundary-datum terms, the Neumann flux,
    and the optional manufactured source.
    """
    t = state.t
    s_q = state.s_quad
    qw = mesh.quad_w
    inv_h2 = 1.0 / (mesh.h * mesh.h)

    a_q = np.asarray(model.a_eps(s_q.ravel())).reshape(s_q.shape)
    tau_q = np.asarray(model.tau_eps(s_q.ravel())).reshape(s_q.shape)
    pc_q = np.asarray(model.pc_prime_eps(s_q.ravel())).reshape(s_q.shape)

    # gradient-gradient blocks: grad(N0) = -1/h, grad(N1) = 1/h
    stiff_w = np.sum(qw * a_q, axis=1) * inv_h2
    b_w = np.sum(qw * a_q * pc_q / tau_q, axis=1) * inv_h2

    n0, n1 = mesh.shape0[None, :], mesh.shape1[None, :]
    inv_tau = 1.0 / tau_q
    m00 = np.sum(qw * inv_tau * n0 * n0, axis=1)
    m01 = np.sum(qw * inv_tau * n0 * n1, axis=1)
    m11 = np.sum(qw * inv_tau * n1 * n1, axis=1)

    a_diag, a_off = _scatter_tridiag(mesh, stiff_w + m00, -stiff_w + m01,
                                     stiff_w + m11)
    b_diag, b_off = _scatter_tridiag(mesh, b_w, -b_w, b_w)

    # load: boundary-datum fields at quadrature points
    xq = mesh.quad_x
    sd = np.asarray(data.s_d(xq.ravel(), t)).reshape(xq.shape)
    sd_t = np.asarray(data.s_d_t(xq.ravel(), t)).reshape(xq.shape)
    sd_x = np.asarray(data.s_d_x(xq.ravel(), t)).reshape(xq.shape)
    sd_xt = np.asarray(data.s_d_xt(xq.ravel(), t)).reshape(xq.shape)
    tau_sd = np.asarray(model.tau_eps(sd.ravel())).reshape(sd.shape)
    taup_sd = np.asarray(model.tau_eps_prime(sd.ravel())).reshape(sd.shape)

    grad_dtlift = taup_sd * sd_x * sd_t + tau_sd * sd_xt
    f_grad = -a_q * grad_dtlift + a_q * pc_q * (tau_sd / tau_q) * sd_x
    f_mass = -(tau_sd / tau_q) * sd_t
    if include_source and data.source is not None:
        f_mass = f_mass + np.asarray(data.source(xq.ravel(), t)).reshape(xq.shape)

    grad_n0 = -1.0 / mesh.h
    grad_n1 = 1.0 / mesh.h
    f0 = np.sum(qw * (f_mass * n0), axis=1) + np.sum(qw * f_grad, axis=1) * grad_n0
    f1 = np.sum(qw * (f_mass * n1), axis=1) + np.sum(qw * f_grad, axis=1) * grad_n1

    f_nodes = np.zeros(mesh.n_nodes)
    np.add.at(f_nodes, np.arange(mesh.n_nodes - 1), f0)
    np.add.at(f_nodes, np.arange(1, mesh.n_nodes), f1)

    for b in mesh.neumann_nodes:
        xb = mesh.nodes[b]
        flux = float(np.asarray(data.r0(np.array([xb]), t))[0]
                     * data.sigma_at(np.array([state.s_nodal[b]]))[0])
        f_nodes[b] -= flux

    sl = mesh.dof_slice()
    lo, hi = sl.start, sl.stop
    return AssembledSystem(
        a_diag=a_diag[lo:hi], a_off=a_off[lo:hi - 1],
        b_diag=b_diag[lo:hi], b_off=b_off[lo:hi - 1],
        f=f_nodes[lo:hi])


def project_initial(mesh, data, model):
    """Orthogonal projection of the initial transformed offset.

    Solves the hat-function mass system for the best L2 approximation of
    beta_eps(S_i) - beta_eps(S_D(., 0)) and returns the state at t = 0.
    """
    n0, n1 = mesh.shape0[None, :], mesh.shape1[None, :]
    qw = mesh.quad_w
    m00 = np.sum(qw * n0 * n0, axis=1)
    m01 = np.sum(qw * n0 * n1, axis=1)
    m11 = np.sum(qw * n1 * n1, axis=1)
    diag, off = _scatter_tridiag(mesh, m00, m01, m11)

    xq = mesh.quad_x
    offset = (np.asarray(model.beta_eps(data.s_i(xq.ravel())))
              - np.asarray(model.beta_eps(data.s_d(xq.ravel(), 0.0)))).reshape(xq.shape)
    r0 = np.sum(qw * offset * n0, axis=1)
    r1 = np.sum(qw * offset * n1, axis=1)
    rhs = np.zeros(mesh.n_nodes)
    np.add.at(rhs, np.arange(mesh.n_nodes - 1), r0)
    np.add.at(rhs, np.arange(1, mesh.n_nodes), r1)

    sl = mesh.dof_slice()
    lo, hi = sl.start, sl.stop
    gamma = solve_tridiag_spd(diag[lo:hi], off[lo:hi - 1], rhs[lo:hi])
    return state_from_gamma(mesh, data, model, 0.0, gamma)
