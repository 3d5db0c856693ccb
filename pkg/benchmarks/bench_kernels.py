#!/usr/bin/env python3
"""Benchmark the compiled kernel extension against the numpy fallback.

Times the coefficient-family evaluations and the transformed-variable
forward/inverse maps on representative array sizes, then a short
implicit solve through whichever backend is selected at import.

Usage:
    python benchmarks/bench_kernels.py [--size 200000] [--repeats 5]
"""

import argparse
import time

import numpy as np

from dyncap.coefficients import ModelParams
from dyncap.kernels import _pykernels
from dyncap.regularization import RegularizedModel

try:
    from dyncap.kernels import _cykernels
except ImportError:
    _cykernels = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backend(impl, model, s_mid, s_wide, v_wide, repeats):
    p = model.params
    args = (p.mu, p.gamma, p.lam, p.t_m)
    beta_args = (model._knots, model._beta_prefix, model._gx, model._gw,
                 model.epsilon, p.mu, p.gamma, p.lam, p.t_m,
                 model.beta_eps_one, model.m_tau_eps, model._tau_hi)
    rows = {}
    rows["eval_a"] = timeit(lambda: impl.eval_a(s_mid, p.mu, p.lam), repeats)
    rows["eval_tau"] = timeit(lambda: impl.eval_tau(s_mid, *args), repeats)
    rows["eval_tau_prime"] = timeit(
        lambda: impl.eval_tau_prime(s_mid, *args), repeats)
    rows["neg_pc_prime"] = timeit(
        lambda: impl.neg_pc_prime(s_mid, p.beta1, p.beta2, 1.0, 1.0), repeats)
    rows["beta_eps_eval"] = timeit(
        lambda: impl.beta_eps_eval(s_wide, *beta_args), repeats)
    rows["beta_eps_invert"] = timeit(
        lambda: impl.beta_eps_invert(v_wide, *beta_args, 1e-13), repeats)
    return rows


def bench_solve():
    from dyncap.fem import Mesh1D, ProblemData, constant_field
    from dyncap.stepping import GalerkinSolver, StepperOptions

    params = ModelParams(mu=5.7, lam=6.0, gamma=5.6, t_m=2.0,
                         beta1=5.5, beta2=5.5)
    model = RegularizedModel(params, 0.05)
    mesh = Mesh1D.uniform(0.0, 1.0, 64, left_bc="dirichlet",
                          right_bc="neumann")
    data = ProblemData(
        s_d=constant_field(0.9),
        s_i=lambda x: np.full_like(np.asarray(x, dtype=float), 0.3),
        t_final=0.01)
    solver = GalerkinSolver(mesh, data, model, StepperOptions(dt=2e-4))
    t0 = time.perf_counter()
    result = solver.run()
    return time.perf_counter() - t0, result.n_steps


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=200_000)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    params = ModelParams(mu=5.7, lam=6.0, gamma=5.6, t_m=2.0,
                         beta1=5.5, beta2=5.5)
    model = RegularizedModel(params, 0.05)
    rng = np.random.default_rng(0)
    s_mid = 0.05 + 0.9 * rng.random(args.size)
    s_wide = -0.5 + 2.0 * rng.random(args.size)
    v_wide = np.asarray(model.beta_eps(s_wide))

    backends = [("python", _pykernels)]
    if _cykernels is not None:
        backends.append(("cython", _cykernels))

    results = {name: bench_backend(impl, model, s_mid, s_wide, v_wide,
                                   args.repeats)
               for name, impl in backends}

    names = list(results["python"].keys())
    header = f"{'kernel':<18}" + "".join(f"{n:>12}" for n, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(f"arrays of {args.size} points, best of {args.repeats}")
    print(header)
    for key in names:
        line = f"{key:<18}"
        for name, _ in backends:
            line += f"{results[name][key] * 1e3:>10.2f}ms"
        if len(backends) == 2:
            line += f"{results['python'][key] / results['cython'][key]:>9.1f}x"
        print(line)

    elapsed, steps = bench_solve()
    from dyncap.kernels import BACKEND
    print(f"\nimplicit solve (64 elements, {steps} steps) with "
          f"{BACKEND} backend: {elapsed:.2f}s")
    if _cykernels is None:
        print("compiled backend unavailable; fallback only")


if __name__ == "__main__":
    main()
