"""Experiment orchestration: Q sweeps, step-size scaling, CSV emission.

For each target asynchrony class a schedule preset is generated, dry-run to
measure the exact realized Q (the timeline never depends on iterate values,
so the dry pass is exact), step sizes are chosen from the realized Q, and
the run record is written as CSV. The x axis of the records is the global
event counter; the avg_updates column carries the computation burden
(cumulative updates per agent).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .constants import ConstantsTable, choose_gammas, compute_agent_constants
from .model import Graph, Problem
from .oracle import OracleError, ReferenceSolution, best_reference
from .packed import pack_problem
from .record import RunRecord
from .sim import (
    AgentSchedule,
    EarlyStop,
    LinkSchedule,
    ScheduleConfig,
    Trace,
    build_schedule,
    run_async,
    trace_timeline,
)

__all__ = ["ExperimentRun", "schedule_preset", "run_experiment", "run_sync_experiment"]

DEFAULT_Q_LIST = (1, 25, 50, 100)


@dataclass
class ExperimentRun:
    mode: str
    q_target: Optional[int]
    realized_Q: Optional[int]
    seed: int
    gamma_scale: float
    admissible: Optional[bool]
    outcome: str  # converged | ran | diverged
    final_dist: float
    record: RunRecord
    trace: Optional[Trace] = None
    record_path: Optional[Path] = None
    trace_path: Optional[Path] = None


def schedule_preset(graph: Graph, q_target: int, seed: int = 0, horizon: int = 0) -> ScheduleConfig:
    """Heuristic schedule aiming at a given asynchrony class.

    q_target == 1 is the exact synchronous special case (all periods one, no
    delays). Larger targets mix heterogeneous periods, phase offsets,
    compute times and bounded link delays; the realized Q is measured on the
    timeline and is the authoritative value for step sizes.
    """
    if q_target < 1:
        raise ValueError("q_target must be >= 1")
    N = graph.agent_count
    if q_target == 1:
        return ScheduleConfig.for_graph(graph, periods=1, horizon=horizon, rng_seed=seed)
    rng = np.random.default_rng(seed * 1_000_003 + q_target)
    p_max = max(2, min(6, q_target // 6))
    periods = rng.integers(1, p_max + 1, size=N)
    phases = np.array([int(rng.integers(0, p)) for p in periods])
    computes = np.array([int(rng.integers(0, min(2, p))) for p in periods])
    d_hi = max(1, int(q_target))  # calibrated: realized Q lands near the target class
    agents = tuple(
        AgentSchedule(int(p), int(o), int(c)) for p, o, c in zip(periods, phases, computes)
    )
    links = {}
    for i in range(N):
        for j in graph.neighbors(i):
            if i == j:
                continue
            dmax = int(rng.integers(max(1, d_hi // 2), d_hi + 1))
            links[(i, j)] = LinkSchedule(
                delay_min=0,
                delay_max=dmax,
                drop_probability=0.05,
                max_consecutive_drops=2,
            )
    return ScheduleConfig(agents=agents, links=links, rng_seed=seed, horizon=horizon)


def _outcome(res, early_stop: Optional[EarlyStop], dist0: Optional[float]) -> tuple[str, float]:
    final_dist = float(res.record.dist[-1]) if len(res.record) else math.nan
    if res.diverged:
        return "diverged", final_dist
    if (
        early_stop is not None
        and early_stop.dist_rtol is not None
        and dist0 is not None
        and math.isfinite(final_dist)
        and final_dist <= early_stop.dist_rtol * dist0
    ):
        return "converged", final_dist
    return "ran", final_dist


def run_sync_experiment(
    problem: Problem,
    horizon: int,
    reference: ReferenceSolution,
    gamma_safety: float = 0.99,
    gamma_scale: float = 1.0,
    seed: int = 0,
    backend: Optional[str] = None,
    instance_name: str = "",
) -> ExperimentRun:
    """Synchronous baseline: common step gamma = scale * safety / max_i phi_i."""
    table = compute_agent_constants(problem)
    phi_max = float(np.max(table.phi)) if table.agent_count else 0.0
    gamma = gamma_scale * gamma_safety / phi_max if phi_max > 0 else 1.0
    packed = pack_problem(problem)
    kern = kernels.get_backend(backend)
    out = kern.run_sync(packed, gamma, np.zeros(problem.m_total), int(horizon),
                        tol=None, record=True, xstar=reference.x_star)
    K = int(out["iterations"])
    meta = {
        "instance": instance_name,
        "mode": "sync",
        "Q": "n/a",
        "seed": seed,
        "gamma_safety": gamma_safety,
        "gamma_scale": gamma_scale,
        "admissible": gamma_scale * gamma_safety < 1.0,
        "horizon": int(horizon),
        "realized_horizon": K,
        "realized_Q": "n/a",
        "q0": out["q0"],
        "dist0": float(np.linalg.norm(
            packed_initial_dist(problem, reference.x_star)
        )),
    }
    record = RunRecord(
        metadata=meta,
        avg_updates=np.arange(1, K + 1, dtype=float),
        dist=out["dist"],
        dual=out["dual"],
        feas=out["feas"],
        residual=out["snorm"],
    )
    final_dist = float(record.dist[-1]) if K else math.nan
    outcome = "diverged" if out["diverged"] else "ran"
    return ExperimentRun(
        mode="sync", q_target=None, realized_Q=None, seed=seed,
        gamma_scale=gamma_scale, admissible=meta["admissible"],
        outcome=outcome, final_dist=final_dist, record=record,
    )


def packed_initial_dist(problem: Problem, xstar: np.ndarray) -> np.ndarray:
    x0 = np.concatenate([c.argmin(np.zeros(c.dim)) for c in problem.costs])
    return x0 - xstar


def run_experiment(
    problem: Problem,
    mode: str = "async",
    q_list: Sequence[int] = DEFAULT_Q_LIST,
    gamma_safety: float = 0.99,
    gamma_scale: float = 1.0,
    seeds: Sequence[int] = (0,),
    horizon: int = 200_000,
    schedule: Optional[ScheduleConfig] = None,
    early_stop: Optional[EarlyStop] = EarlyStop(dist_rtol=1e-4, s_target=1e-6),
    out_dir=None,
    collect_trace: bool = False,
    reference: Optional[ReferenceSolution] = None,
    backend: Optional[str] = None,
    instance_name: str = "",
    phi_denominator: str = "owner",
) -> list[ExperimentRun]:
    """Run the Q sweep (or the synchronous baseline) against the oracle.

    Per target Q: build the preset schedule, measure the realized Q on a dry
    pass, choose step sizes from the realized Q at the given safety/scale,
    execute, and emit one RunRecord CSV per run.
    """
    if mode not in ("sync", "async"):
        raise ValueError("mode must be 'sync' or 'async'")
    if reference is None:
        reference = best_reference(problem, backend=backend)
    out_dir = Path(out_dir) if out_dir is not None else None
    runs: list[ExperimentRun] = []

    if mode == "sync":
        for seed in seeds:
            run = run_sync_experiment(
                problem, horizon, reference, gamma_safety, gamma_scale,
                seed=seed, backend=backend, instance_name=instance_name,
            )
            if out_dir is not None:
                run.record_path = run.record.write_csv(
                    out_dir / _run_name(instance_name, "sync", None, seed, gamma_scale)
                )
            runs.append(run)
        return runs

    base_table = compute_agent_constants(problem, phi_denominator=phi_denominator)
    for q_target in q_list:
        for seed in seeds:
            config = schedule if schedule is not None else schedule_preset(
                problem.graph, int(q_target), seed=seed, horizon=horizon
            )
            timeline = build_schedule(config)
            dry = trace_timeline(timeline, collect_events=False, backend=backend)
            q_real = int(dry.realized_Q)
            table = choose_gammas(base_table, q_real, safety=gamma_safety, scale=gamma_scale)
            res = run_async(
                problem, table, timeline,
                reference=reference,
                early_stop=early_stop,
                collect_events=collect_trace,
                backend=backend,
                metadata={"instance": instance_name, "q_target": int(q_target)},
            )
            outcome, final_dist = _outcome(res, early_stop, res.dist0)
            run = ExperimentRun(
                mode="async", q_target=int(q_target), realized_Q=q_real, seed=int(seed),
                gamma_scale=gamma_scale, admissible=table.admissible,
                outcome=outcome, final_dist=final_dist,
                record=res.record, trace=res.trace if collect_trace else None,
            )
            if out_dir is not None:
                run.record_path = res.record.write_csv(
                    out_dir / _run_name(instance_name, "async", q_target, seed, gamma_scale)
                )
                if collect_trace and res.trace.events is not None:
                    run.trace_path = res.trace.write_csv(
                        out_dir / _run_name(instance_name, "trace", q_target, seed, gamma_scale)
                    )
            runs.append(run)
    return runs


def _run_name(instance: str, kind: str, q_target, seed, scale) -> str:
    stem = instance or "instance"
    q_part = f"_Q{q_target}" if q_target is not None else ""
    scale_part = f"_scale{scale:g}" if scale != 1.0 else ""
    return f"{stem}_{kind}{q_part}_seed{seed}{scale_part}.csv"


def summarize(runs: list[ExperimentRun]) -> str:
    lines = []
    for run in runs:
        q = f"Q_target={run.q_target} realized_Q={run.realized_Q}" if run.mode == "async" else "sync"
        adm = "admissible" if run.admissible else "outside-theory"
        lines.append(
            f"{run.mode:5s} {q:28s} seed={run.seed} scale={run.gamma_scale:g} [{adm}] "
            f"{run.outcome:9s} final_dist={run.final_dist:.3e}"
        )
    return "\n".join(lines)
