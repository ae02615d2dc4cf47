"""Command-line front end: run, check, certify, plot.

Exit code 0 only when every requested check passes; configuration problems
exit with 2.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errorframe import xi_bound
from .simharness import (
    attach_plot_context,
    check_invariants,
    emit_outputs,
    load_scenario,
    read_log_csv,
    run_monte_carlo,
    run_scenario,
    write_log_csv,
)
from .tube import (
    CertificationError,
    ConfigurationError,
    TubeParameters,
    estimate_constants,
    save_tube_artifact,
    tighten_sets,
)
from .errorframe import ErrorConstraintSet


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario, seed_override=args.seed)
    out_dir = Path(args.out)
    if args.runs == 1:
        log = run_scenario(scenario)
        attach_plot_context(log, scenario)
        emit_outputs(log, out_dir)
        report = check_invariants(log, scenario)
        print(report.summary())
        if log.error:
            print(f"run error: {log.error}")
        return 0 if report.ok and log.error is None else 1
    logs = run_monte_carlo(args.scenario, args.runs, base_seed=args.seed)
    all_ok = True
    for i, log in enumerate(logs):
        seed = scenario.seed + i if args.seed is None else args.seed + i
        sub = out_dir / f"run_{i:03d}"
        sc_i = load_scenario(args.scenario, seed_override=seed)
        attach_plot_context(log, sc_i)
        emit_outputs(log, sub)
        report = check_invariants(log, sc_i)
        ok = report.ok and log.error is None
        all_ok &= ok
        print(f"run {i:03d} (seed {seed}): {'PASS' if ok else 'FAIL'}")
        if not ok:
            print(report.summary())
    return 0 if all_ok else 1


def _cmd_check(args) -> int:
    scenario = load_scenario(args.scenario)
    log = read_log_csv(args.log)
    report = check_invariants(log, scenario)
    print(report.summary())
    return 0 if report.ok else 1


def _cmd_certify(args) -> int:
    scenario = load_scenario(args.scenario)
    domain = scenario.tube.domain
    L1, L2, j_lower = estimate_constants(
        domain,
        scenario.velocity_box,
        scenario.reference,
        samples=args.samples,
        seed=args.cert_seed,
    )
    omega_bar = scenario.disturbance.total_bound
    xi = xi_bound(domain.ed_min, omega_bar)
    params = TubeParameters.certify(
        L1, L2, j_lower, xi, domain, margin=args.margin
    )
    print(
        f"L1={L1:.6g} L2={L2:.6g} J_lower={j_lower:.6g} xi_tilde={xi:.6g}\n"
        f"sigma={params.sigma:.6g} rho_tilde={params.rho_tilde:.6g} "
        f"(input shrink sigma*rho={params.sigma * params.rho_tilde:.6g})"
    )
    tighten_sets(
        ErrorConstraintSet(epsilon=scenario.epsilon), scenario.velocity_box, params
    )
    save_tube_artifact(args.out, params)
    print(f"wrote {args.out}")
    return 0


def _cmd_plot(args) -> int:
    log = read_log_csv(args.log)
    if args.scenario is not None:
        attach_plot_context(log, load_scenario(args.scenario))
    emit_outputs(log, args.out)
    print(f"wrote plots to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tubempc",
        description="Tube-based NMPC simulator for an underactuated underwater vehicle",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and emit logs, plots and a report")
    p.add_argument("scenario")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--runs", type=int, default=1)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("check", help="re-check the invariants of a CSV log")
    p.add_argument("log")
    p.add_argument("scenario")
    p.set_defaults(fn=_cmd_check)

    p = sub.add_parser("certify", help="estimate tube constants and write an artifact")
    p.add_argument("scenario")
    p.add_argument("--out", required=True)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--seed", dest="cert_seed", type=int, default=0)
    p.add_argument("--margin", type=float, default=2.0)
    p.set_defaults(fn=_cmd_certify)

    p = sub.add_parser("plot", help="re-plot an existing CSV log")
    p.add_argument("log")
    p.add_argument("--out", required=True)
    p.add_argument("--scenario", default=None)
    p.set_defaults(fn=_cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigurationError, CertificationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
