"""Dev smoke test: scalar instance, sync oracle, small async run."""
import numpy as np

import asyncdual as ad
from asyncdual.sim import trace_timeline

# scalar instance: min 0.5 x^2 s.t. x = 1 (single agent, self coupling)
g = ad.Graph(1)
cost = ad.LocalCost.quadratic_diag([1.0], [0.0])
blk = ad.CouplingBlock(0, 0, np.zeros((0, 1)), [], np.array([[1.0]]), [1.0])
prob = ad.Problem(g, [cost], [blk])

q0, grad0 = ad.dual_value_and_gradient(prob, np.zeros(1))
print("q(0) =", q0, "grad q(0) =", grad0)  # expect 0, -1

ref = ad.kkt_solve(prob)
print("kkt x*,f*,y*:", ref.x_star, ref.f_star, ref.y_star)  # expect 1, 0.5, -1

ref2 = ad.reference_solve(prob)
print("longrun:", ref2.x_star, ref2.f_star, ref2.y_star, ref2.iterations)

# constants
table = ad.compute_agent_constants(prob)
print("theta, phi, ell, xi:", table.theta, table.phi, table.ell, table.xi)
print("gamma_max(Q=1):", ad.step_size_bound(table, 0, 1))  # rho/(3.5 theta^2) = 1/3.5

table = ad.choose_gammas(table, Q=1)
cfg = ad.ScheduleConfig.for_graph(prob.graph, periods=1, horizon=200)
tl = ad.build_schedule(cfg)
tr = trace_timeline(tl)
print("dry realized Q:", tr.realized_Q, "max stale:", tr.max_staleness)

res = ad.run_async(prob, table, tl, reference=ref, collect_events=True)
print("final dist:", res.record.dist[-1], "dual tail:", res.record.dual[-1],
      "q0:", res.q0, "min l3 margin:", res.min_lemma3_margin)
print("trace Q:", res.trace.realized_Q)
print(res.record.to_csv_text().splitlines()[:14])
