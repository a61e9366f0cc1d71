"""Command line interface.

Subcommands: validate, constants, solve, sweep, oracle. Exit codes:
0 success, 1 validation failure, 2 oracle non-convergence, 3 I/O or schema
error. Numeric output is CSV (UTF-8, LF).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .constants import choose_gammas, compute_agent_constants, constants_csv_rows
from .experiment import run_experiment, summarize
from .instances import InstanceError, load_instance
from .model import validate_problem
from .oracle import OracleError, best_reference
from .sim import EarlyStop

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_ORACLE = 2
EXIT_IO = 3


def _load(path: str):
    try:
        return load_instance(path)
    except InstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_IO)


def cmd_validate(args) -> int:
    inst = _load(args.instance)
    report = validate_problem(inst.problem, slater_candidate=inst.slater_candidate)
    print(report)
    return EXIT_OK if report.ok else EXIT_VALIDATION


def cmd_constants(args) -> int:
    inst = _load(args.instance)
    table = compute_agent_constants(inst.problem, phi_denominator=args.phi_denominator)
    table = choose_gammas(table, args.Q, safety=args.safety, scale=args.scale)
    text = "\n".join(constants_csv_rows(table, args.Q)) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _reference_or_exit(problem, max_iters):
    try:
        return best_reference(problem, max_iters=max_iters)
    except OracleError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_ORACLE)


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    report = validate_problem(inst.problem, slater_candidate=inst.slater_candidate)
    if not report.ok:
        print(report, file=sys.stderr)
        return EXIT_VALIDATION
    reference = _reference_or_exit(inst.problem, args.oracle_iters)
    early = None if args.no_early_stop else EarlyStop(dist_rtol=1e-4, s_target=1e-6)
    runs = run_experiment(
        inst.problem,
        mode=args.mode,
        q_list=(args.Q_target,) if args.mode == "async" else (),
        gamma_safety=args.safety,
        gamma_scale=args.scale,
        seeds=(args.seed,),
        horizon=args.horizon,
        early_stop=early,
        out_dir=args.out,
        collect_trace=args.trace,
        reference=reference,
        instance_name=inst.name or Path(args.instance).stem,
    )
    print(summarize(runs))
    for run in runs:
        if run.record_path:
            print(f"wrote {run.record_path}")
        if run.trace_path:
            print(f"wrote {run.trace_path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    inst = _load(args.instance)
    report = validate_problem(inst.problem, slater_candidate=inst.slater_candidate)
    if not report.ok:
        print(report, file=sys.stderr)
        return EXIT_VALIDATION
    reference = _reference_or_exit(inst.problem, args.oracle_iters)
    early = None if args.no_early_stop else EarlyStop(dist_rtol=1e-4, s_target=1e-6)
    q_list = [int(v) for v in args.Q_list.split(",") if v]
    scales = [float(v) for v in args.scale.split(",") if v]
    seeds = [int(v) for v in args.seeds.split(",") if v]
    name = inst.name or Path(args.instance).stem
    all_runs = []
    for scale in scales:
        all_runs += run_experiment(
            inst.problem, mode="async", q_list=q_list,
            gamma_safety=args.safety, gamma_scale=scale, seeds=seeds,
            horizon=args.horizon, early_stop=early, out_dir=args.out,
            reference=reference, instance_name=name,
        )
        if args.with_sync:
            all_runs += run_experiment(
                inst.problem, mode="sync", gamma_safety=args.safety,
                gamma_scale=scale, seeds=seeds[:1], horizon=args.horizon,
                early_stop=early, out_dir=args.out, reference=reference,
                instance_name=name,
            )
    print(summarize(all_runs))
    if args.out:
        print(f"records under {args.out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = _load(args.instance)
    try:
        ref = best_reference(inst.problem, tol=args.tol, max_iters=args.oracle_iters)
    except OracleError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    print(f"method: {ref.method}")
    print(f"f_star: {ref.f_star!r}")
    print(f"x_star: {np.array2string(ref.x_star, max_line_width=100)}")
    for key, val in ref.residuals.items():
        print(f"{key}: {val!r}")
    if ref.iterations:
        print(f"iterations: {ref.iterations}")
        print(f"max_dual_norm: {ref.max_dual_norm!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="asyncdual",
                                 description="asynchronous distributed dual ascent toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check blanket assumptions on an instance file")
    p.add_argument("instance")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("constants", help="dump step-size constants as CSV")
    p.add_argument("instance")
    p.add_argument("--Q", type=int, required=True)
    p.add_argument("--safety", type=float, default=0.99)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--phi-denominator", choices=("owner", "neighbor"), default="owner")
    p.add_argument("--out")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("solve", help="run one experiment (sync or async)")
    p.add_argument("instance")
    p.add_argument("--mode", choices=("sync", "async"), required=True)
    p.add_argument("--Q-target", type=int, default=1)
    p.add_argument("--safety", type=float, default=0.99)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=int, default=200_000)
    p.add_argument("--oracle-iters", type=int, default=2_000_000)
    p.add_argument("--no-early-stop", action="store_true")
    p.add_argument("--trace", action="store_true", help="also write the tau trace CSV")
    p.add_argument("--out", help="output directory for CSV files")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="Q sweep over schedule presets")
    p.add_argument("instance")
    p.add_argument("--Q-list", default="1,25,50,100")
    p.add_argument("--scale", default="1")
    p.add_argument("--seeds", default="0")
    p.add_argument("--safety", type=float, default=0.99)
    p.add_argument("--horizon", type=int, default=200_000)
    p.add_argument("--oracle-iters", type=int, default=2_000_000)
    p.add_argument("--no-early-stop", action="store_true")
    p.add_argument("--with-sync", action="store_true", help="add the synchronous baseline")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="solve the instance with the reference oracle")
    p.add_argument("instance")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--oracle-iters", type=int, default=2_000_000)
    p.set_defaults(func=cmd_oracle)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    except InstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OracleError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    return code


if __name__ == "__main__":
    sys.exit(main())
