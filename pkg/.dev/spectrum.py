"""Dev: dual Hessian spectrum and box margins vs susceptance scale/setpoint."""
import numpy as np

import asyncdual as ad
from asyncdual import instances as inst_mod
from asyncdual.constants import choose_gammas, compute_agent_constants
from asyncdual.oracle import reference_solve


def build(scale, setpoint):
    lines = [(a - 1, b - 1, scale / x) for (a, b, x) in inst_mod.IEEE14_BRANCH_REACTANCE]
    demands = [d / 100.0 for d in inst_mod.IEEE14_DEMAND_MW]
    caps = [inst_mod.IEEE14_GEN_CAP_MW.get(b, inst_mod.IEEE14_NONGEN_CAP_MW) / 100.0
            for b in range(1, 15)]
    costs = [1.0] * 14
    linear = [-c * setpoint for c in costs]
    return ad.instances.gen_dc_opf_instance(lines, demands, caps, costs, 1.0, linear)


for scale in (0.05, 0.03, 0.02):
    for setpoint in (0.05, 0.1):
        prob = build(scale, setpoint)
        ref = reference_solve(prob, tol=1e-10, max_iters=500_000)
        P = ref.x_star[0::2]
        caps = np.array([c.hi[0] for c in prob.costs])
        table = compute_agent_constants(prob)
        # dual Hessian on the interior face: A H^-1 A^T
        A, b = prob.equality_matrix()
        H = np.diag(np.concatenate([c.diag for c in prob.costs]))
        Hd = A @ np.linalg.inv(H) @ A.T
        for Q in (60, 95):
            g = np.array([ad.step_size_bound(table, i, Q) * 0.99 for i in range(14)])
            GH = np.diag(g) @ Hd
            ev = np.linalg.eigvals(GH).real
            rate = ev.min()
            print(f"scale={scale} sp={setpoint} Q={Q}: ref_iters={ref.iterations} "
                  f"minP={P.min():.4f} maxP/cap={np.max(P/caps):.3f} "
                  f"rate~{rate:.2e} -> k(1e-6)~{np.log(1e6)/rate:.2e}")
