"""Experiment runner.

Subcommands: ``check`` (hypothesis margins), ``run`` (single transient
with diagnostics), ``sweep`` (squash-parameter ladder with scaling
report), ``mms`` (manufactured-solution convergence orders), and
``entropy-verify`` (closed form against quadrature plus the lower
bound).  Exit codes: 0 success, 1 runtime failure, 2 config or
hypothesis error.
"""

import argparse
import math
import os
import sys

import numpy as np

from .config import ConfigError, load_config
from .diagnostics import (DiagnosticsReport, epsilon_scaling_study,
                          summary_json, write_csv, write_profiles)
from .entropy import EntropyEvaluator
from .mms import ManufacturedField, spatial_convergence, temporal_convergence
from .regularization import RegularizedModel
from .stepping import GalerkinSolver, RunFailure

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _sanitize(obj):
    """Replace NaN/inf with None so JSON artifacts stay strict."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _ensure_outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def cmd_check(cfg, args):
    report = cfg.hypothesis_report()
    payload = report.as_dict()
    payload["entropy_required"] = cfg.entropy_enabled
    ok = cfg.hypotheses_pass(report)
    payload["gate_pass"] = ok
    if args.json:
        print(summary_json(_sanitize(payload)))
    else:
        print(f"hypothesis check (n={report.n}"
              + (f", p={report.p:g}" if report.p else "") + ")")
        print(f"  {'layer':<14}{'inequality':<22}{'margin':>14}  pass")
        for c in report.checks:
            print(f"  {c.layer:<14}{c.name:<22}{c.margin:>14.6g}  "
                  f"{'yes' if c.passed else 'NO'}")
        if report.m0_interval:
            lo, hi = report.m0_interval
            print(f"  mixed-derivative exponent window: ({lo:g}, {hi:.6g}), "
                  f"default {report.m0_default:.6g}")
        else:
            print("  mixed-derivative exponent window: empty")
        if not cfg.entropy_enabled:
            print("  (entropy layer informational: entropy diagnostics are off)")
        print(f"overall: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_CONFIG


def _run_one(cfg, eps, outdir, tag=""):
    model = RegularizedModel(cfg.params, eps)
    mesh = cfg.build_mesh()
    data = cfg.build_data()
    solver = GalerkinSolver(mesh, data, model, cfg.stepper)
    report = DiagnosticsReport(mesh, data, model, m0=cfg.resolve_m0(),
                               entropy_enabled=cfg.entropy_enabled)
    state0 = solver.initial_state()
    report.start(state0)
    profiles = [(0.0, state0.s_nodal.copy())]
    counter = {"n": 0}

    def record(prev, new, dt):
        report.record_step(prev, new, dt)
        counter["n"] += 1
        if counter["n"] % cfg.profile_stride == 0:
            profiles.append((new.t, new.s_nodal.copy()))

    failure = None
    try:
        result = solver.run(record=record)
        final = result.state
    except RunFailure as exc:
        failure = str(exc)
        final = exc.partial.state if exc.partial else state0
    if not profiles or profiles[-1][0] != final.t:
        profiles.append((final.t, final.s_nodal.copy()))

    rows = report.rows
    stride = max(1, cfg.csv_stride)
    kept = rows[::stride]
    if rows and kept[-1] is not rows[-1]:
        kept = kept + [rows[-1]]
    subreport_rows, report.rows = report.rows, kept
    write_csv(report, os.path.join(outdir, f"diagnostics{tag}.csv"))
    report.rows = subreport_rows

    write_profiles(os.path.join(outdir, f"profiles{tag}.csv"),
                   [t for t, _ in profiles], mesh.nodes,
                   [p for _, p in profiles])
    summary = {"epsilon": eps, "failure": failure}
    summary.update(report.summary())
    summary_json(_sanitize(summary),
                 os.path.join(outdir, f"summary{tag}.json"))
    return (EXIT_OK if failure is None else EXIT_RUNTIME), summary, report


def cmd_run(cfg, args):
    if len(cfg.eps_list) != 1:
        print("run expects a single epsilon; use sweep for a ladder",
              file=sys.stderr)
        return EXIT_CONFIG
    if not cfg.hypotheses_pass():
        print("hypothesis check failed; run `dyncap check` for margins",
              file=sys.stderr)
        return EXIT_CONFIG
    outdir = _ensure_outdir(args)
    code, summary, _ = _run_one(cfg, cfg.eps_list[0], outdir)
    if args.json:
        print(summary_json(_sanitize(summary)))
    else:
        print(f"run finished: t={summary.get('t_final', 0.0):g}, "
              f"failure={summary['failure']}")
    return code


def cmd_sweep(cfg, args):
    if not cfg.hypotheses_pass():
        print("hypothesis check failed; run `dyncap check` for margins",
              file=sys.stderr)
        return EXIT_CONFIG
    outdir = _ensure_outdir(args)
    mesh = cfg.build_mesh()
    data = cfg.build_data()
    study = epsilon_scaling_study(
        cfg.params, mesh, data, cfg.stepper, cfg.eps_list,
        m0=cfg.resolve_m0(), entropy_enabled=cfg.entropy_enabled,
        threads=max(1, args.threads))
    for eps, report in study.reports.items():
        tag = f"_eps{eps:g}".replace(".", "p")
        write_csv(report, os.path.join(outdir, f"diagnostics{tag}.csv"))
    payload = _sanitize(study.as_dict())
    summary_json(payload, os.path.join(outdir, "scaling.json"))
    if args.json:
        print(summary_json(payload))
    else:
        print(f"sweep over eps={study.eps_values}")
        for name, ratio in study.ae_ratios.items():
            print(f"  {name:<28} last/first={ratio['last_over_first']:.4g} "
                  f"max/min={ratio['max_over_min']:.4g}")
        for name, fit in study.slopes.items():
            if fit is None:
                print(f"  {name:<28} slope: not applicable")
            else:
                print(f"  {name:<28} slope={fit['slope']:.3f} "
                      f"+/- {fit['stderr']:.3f}")
        if study.failures:
            print(f"  failures: {study.failures}")
    return EXIT_RUNTIME if study.failures else EXIT_OK


def cmd_mms(cfg, args):
    if not cfg.hypotheses_pass():
        print("hypothesis check failed; run `dyncap check` for margins",
              file=sys.stderr)
        return EXIT_CONFIG
    outdir = _ensure_outdir(args)
    opts = cfg.mms
    fld = ManufacturedField(s_center=opts["s_center"],
                            amplitude=opts["amplitude"], rate=opts["rate"],
                            x_left=cfg.x_left, x_right=cfg.x_right)
    eps = cfg.eps_list[0]
    ladder = [opts["elements"] * 2**k for k in range(opts["spatial_levels"])]
    dt_ladder = [opts["dt_base"] / 2**k for k in range(opts["temporal_levels"])]
    try:
        spatial = spatial_convergence(cfg.params, eps, fld, opts["t_final"],
                                      ladder, opts["dt_coarse"],
                                      quad_order=cfg.quad_order)
        temporal = temporal_convergence(cfg.params, eps, fld, opts["t_final"],
                                        dt_ladder, opts["temporal_elements"],
                                        quad_order=cfg.quad_order)
    except RunFailure as exc:
        print(f"mms solver failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    payload = _sanitize({"spatial": spatial, "temporal": temporal,
                         "epsilon": eps})
    summary_json(payload, os.path.join(outdir, "mms.json"))
    if args.json:
        print(summary_json(payload))
    else:
        def table(study, label, col):
            print(label)
            for row in study["rows"]:
                print(f"  {col}={row[col]:<12g} error={row['error']:.6e}")
            orders = ", ".join(f"{o:.3f}" for o in study["orders"]) or "n/a"
            slope = study["slope"]
            slope_txt = f"{slope:.3f}" if slope == slope else "n/a"
            print(f"  observed orders: {orders}  (fit {slope_txt})")
        table(spatial, "spatial refinement", "h")
        table(temporal, "temporal refinement", "dt")
    return EXIT_OK


def cmd_entropy_verify(cfg, args):
    outdir = _ensure_outdir(args)
    data = cfg.build_data()
    x_mid = 0.5 * (cfg.x_left + cfg.x_right)
    s_d = float(np.asarray(data.s_d(np.array([x_mid]), 0.0))[0])
    grid = np.linspace(-1.0, 2.0, 200)
    results = []
    worst_rel = 0.0
    violations = 0
    for eps in cfg.eps_list:
        model = RegularizedModel(cfg.params, eps)
        ev = EntropyEvaluator(model, s_d)
        closed = ev.closed_form(grid)
        oracle = ev.quadrature_oracle(grid)
        rel = float(np.max(np.abs(closed - oracle)
                           / np.maximum(np.abs(oracle), 1e-300)))
        bad = int(np.sum(closed < ev.lower_bound(grid)))
        worst_rel = max(worst_rel, rel)
        violations += bad
        results.append({"epsilon": eps, "max_rel_error": rel,
                        "lower_bound_violations": bad})
    ok = worst_rel < 1e-8 and violations == 0
    payload = _sanitize({"reference_saturation": s_d, "results": results,
                         "max_rel_error": worst_rel,
                         "lower_bound_violations": violations, "pass": ok})
    summary_json(payload, os.path.join(outdir, "entropy_verify.json"))
    if args.json:
        print(summary_json(payload))
    else:
        print(f"entropy closed form vs oracle: max rel error {worst_rel:.3e}")
        print(f"lower-bound violations: {violations}")
        print(f"verdict: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_RUNTIME


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dyncap",
        description="degenerate saturation-equation solver and diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "check": "evaluate hypothesis margins and the exponent window",
        "run": "single transient run with diagnostics artifacts",
        "sweep": "squash-parameter ladder with scaling report",
        "mms": "manufactured-solution convergence orders",
        "entropy-verify": "entropy closed form vs quadrature and lower bound",
    }
    for name, help_text in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to config file")
        p.add_argument("--out", default="dyncap_out",
                       help="artifact directory")
        p.add_argument("--json", action="store_true",
                       help="print machine-readable summary")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for sweep runs")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    dispatch = {
        "check": cmd_check,
        "run": cmd_run,
        "sweep": cmd_sweep,
        "mms": cmd_mms,
        "entropy-verify": cmd_entropy_verify,
    }
    return dispatch[args.command](cfg, args)


if __name__ == "__main__":
    sys.exit(main())
