"""Quick check: single Q=1 async run on 14-bus after the lambda fix."""
import time

import numpy as np

import asyncdual as ad
from asyncdual.experiment import schedule_preset
from asyncdual.instances import ieee14_instance
from asyncdual.oracle import reference_solve
from asyncdual.sim import EarlyStop, build_schedule, run_async, trace_timeline
from asyncdual.constants import choose_gammas, compute_agent_constants

inst = ieee14_instance()
prob = inst.problem
ref = reference_solve(prob, tol=1e-10)
print("ref iters:", ref.iterations)

table = compute_agent_constants(prob)
for qt in (1, 25, 50, 100):
    cfg = schedule_preset(prob.graph, qt, seed=0, horizon=200_000)
    t0 = time.time()
    tl = build_schedule(cfg)
    t_build = time.time() - t0
    t0 = time.time()
    dry = trace_timeline(tl, collect_events=False)
    t_dry = time.time() - t0
    tab = choose_gammas(table, dry.realized_Q)
    t0 = time.time()
    res = run_async(prob, tab, tl, reference=ref,
                    early_stop=EarlyStop(dist_rtol=1e-4, s_target=1e-6))
    t_run = time.time() - t0
    rec = res.record
    print(f"Qt={qt}: realized={dry.realized_Q} rows={len(rec)} "
          f"final_dist={rec.dist[-1]:.2e} (target {1e-4*res.dist0:.2e}) "
          f"min(dual-q0)={np.min(rec.dual)-res.q0:.2e} l3={res.min_lemma3_margin:.1e} "
          f"build={t_build:.1f}s dry={t_dry:.1f}s run={t_run:.1f}s")
