"""Dev calibration: check 14-bus conditioning and Q-sweep convergence budget."""
import time

import numpy as np

import asyncdual as ad
from asyncdual.experiment import run_experiment, schedule_preset, summarize
from asyncdual.instances import ieee14_instance
from asyncdual.oracle import reference_solve
from asyncdual.sim import EarlyStop, build_schedule, trace_timeline

inst = ieee14_instance()
prob = inst.problem
rep = ad.validate_problem(prob, slater_candidate=inst.slater_candidate)
print(rep)
assert rep.ok

t0 = time.time()
ref = reference_solve(prob, tol=1e-10)
print(f"reference: iters={ref.iterations} in {time.time()-t0:.2f}s f*={ref.f_star:.6f} "
      f"maxQP={ref.x_star[0::2].max():.3f} caps ok={np.all(ref.x_star[0::2] < [c.hi[0] for c in prob.costs])}")
print("P* =", np.round(ref.x_star[0::2], 4))
print("sum P* =", ref.x_star[0::2].sum(), "sum Pd =", sum(x/100 for x in [0,21.7,94.2,47.8,7.6,11.2,0,0,29.5,9,3.5,6.1,13.5,14.9]))

table = ad.compute_agent_constants(prob)
print("phi max:", table.phi.max(), "ell+xi max:", (table.ell + table.xi).max())
for Q in (1, 25, 50, 100):
    gmx = min(ad.step_size_bound(table, i, Q) for i in range(14))
    print(f"Q={Q}: min gamma_max = {gmx:.3e}")

# async sweep with early stop
t0 = time.time()
runs = run_experiment(prob, mode="async", q_list=(1, 25, 50, 100), seeds=(0,),
                      horizon=200_000, reference=ref,
                      early_stop=EarlyStop(dist_rtol=1e-4, s_target=1e-6))
print(summarize(runs))
for r in runs:
    print(f"  Q={r.q_target}: realized {r.realized_Q}, rows {len(r.record)}, "
          f"min dual-q0 {np.min(r.record.dual - r.record.metadata['q0']):.2e}")
print(f"sweep took {time.time()-t0:.1f}s")
