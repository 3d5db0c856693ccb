"""Implicit time integration of the Galerkin ODE system.

Backward Euler with a lagged-coefficient fixed point: each inner
iteration assembles the operators at the current iterate and solves the
symmetric positive definite system (A/dt - B).  A finite-difference
Newton pass takes over when the fixed point stalls; a step whose
nonlinear residual never meets the tolerance is rejected and retried
with half the increment, down to a hard floor.
"""

from dataclasses import dataclass, field

import numpy as np

from .fem import (GalerkinState, assemble, project_initial, solve_tridiag_spd,
                  state_from_gamma)

__all__ = ["StepperOptions", "StepRejected", "RunFailure", "GalerkinSolver",
           "SolveResult"]


class StepRejected(RuntimeError):
    """Nonlinear iteration did not converge for this step size."""


class RunFailure(RuntimeError):
    """Time marching failed even at the minimum step size."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class StepperOptions:
    dt: float
    dt_min: float = 1e-10
    tol_nl: float = 1e-10
    max_iters: int = 50
    newton_iters: int = 10
    newton_fd_step: float = 1e-7


@dataclass
class SolveResult:
    """Final state plus the accepted-step history of the march."""

    state: GalerkinState
    times: list = field(default_factory=list)
    n_steps: int = 0
    n_rejected: int = 0
    trajectory: list = field(default_factory=list)


class GalerkinSolver:
    """Couples mesh, data and the squashed model into a time marcher.

    States are value-semantic; the solver holds no mutable per-step data,
    so independent instances can run concurrently.
    """

    def __init__(self, mesh, data, model, options):
        data.validate(mesh)
        self.mesh = mesh
        self.data = data
        self.model = model
        self.options = options

    def initial_state(self):
        return project_initial(self.mesh, self.data, self.model)

    def _residual(self, system, gamma, gamma_old, dt):
        res = (system.a_matvec(gamma - gamma_old) / dt
               - system.b_matvec(gamma) - system.f)
        scale = max(1.0, float(np.linalg.norm(system.f))
                    + float(np.linalg.norm(system.a_matvec(gamma_old))) / dt)
        return float(np.linalg.norm(res)) / scale

    def _fixed_point_solve(self, state, dt):
        t_new = state.t + dt
        gamma_old = state.gamma
        gamma = gamma_old.copy()
        best = None
        for _ in range(self.options.max_iters):
            iterate = state_from_gamma(self.mesh, self.data, self.model,
                                       t_new, gamma)
            system = assemble(self.mesh, self.data, self.model, iterate)
            res = self._residual(system, gamma, gamma_old, dt)
            if best is None or res < best[0]:
                best = (res, iterate)
            if res <= self.options.tol_nl:
                return iterate
            diag = system.a_diag / dt - system.b_diag
            off = system.a_off / dt - system.b_off
            rhs = system.a_matvec(gamma_old) / dt + system.f
            gamma = solve_tridiag_spd(diag, off, rhs)
        return None

    def _newton_solve(self, state, dt):
        t_new = state.t + dt
        gamma_old = state.gamma
        gamma = gamma_old.copy()
        n = gamma.size

        def residual_vec(g):
            st = state_from_gamma(self.mesh, self.data, self.model, t_new, g)
            sy = assemble(self.mesh, self.data, self.model, st)
            vec = sy.a_matvec(g - gamma_old) / dt - sy.b_matvec(g) - sy.f
            return vec, st, sy

        for _ in range(self.options.newton_iters):
            vec, st, sy = residual_vec(gamma)
            res = self._residual(sy, gamma, gamma_old, dt)
            if res <= self.options.tol_nl:
                return st
            jac = np.empty((n, n))
            for j in range(n):
                h = self.options.newton_fd_step * max(1.0, abs(gamma[j]))
                pert = gamma.copy()
                pert[j] += h
                jac[:, j] = (residual_vec(pert)[0] - vec) / h
            try:
                delta = np.linalg.solve(jac, -vec)
            except np.linalg.LinAlgError:
                return None
            gamma = gamma + delta
            if not np.all(np.isfinite(gamma)):
                return None
        vec, st, sy = residual_vec(gamma)
        if self._residual(sy, gamma, gamma_old, dt) <= self.options.tol_nl:
            return st
        return None

    def step(self, state, dt):
        """Advance one backward-Euler step; raises StepRejected on failure."""
        if dt <= 0.0:
            raise ValueError("step size must be positive")
        accepted = self._fixed_point_solve(state, dt)
        if accepted is None:
            accepted = self._newton_solve(state, dt)
        if accepted is None:
            raise StepRejected(f"nonlinear iteration failed at dt={dt:g}")
        return accepted

    def run(self, record=None, store_trajectory=False, t_final=None):
        """March to the horizon on the nominal grid, halving on rejection.

        ``record(prev, new, dt)`` is called for every accepted (sub)step.
        """
        t_end = self.data.t_final if t_final is None else t_final
        n_nominal = max(1, int(round(t_end / self.options.dt)))
        targets = t_end * np.arange(1, n_nominal + 1) / n_nominal

        state = self.initial_state()
        result = SolveResult(state=state, times=[0.0])
        if store_trajectory:
            result.trajectory.append(state)

        for target in targets:
            dt_try = target - state.t
            while state.t < target - 1e-14 * t_end:
                dt_try = min(dt_try, target - state.t)
                try:
                    new_state = self.step(state, dt_try)
                except StepRejected:
                    result.n_rejected += 1
                    dt_try *= 0.5
                    if dt_try < self.options.dt_min:
                        result.state = state
                        raise RunFailure(
                            f"step size underflow at t={state.t:g}",
                            partial=result)
                    continue
                if record is not None:
                    record(state, new_state, new_state.t - state.t)
                state = new_state
                result.times.append(state.t)
                result.n_steps += 1
                if store_trajectory:
                    result.trajectory.append(state)

        result.state = state
        return result
