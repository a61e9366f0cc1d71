"""Dev: tune schedule preset parameters for realized-Q targeting."""
import numpy as np

from asyncdual.instances import ieee14_instance
from asyncdual.sim import AgentSchedule, LinkSchedule, ScheduleConfig, build_schedule, trace_timeline

inst = ieee14_instance()
graph = inst.problem.graph


def preset(graph, q_target, seed, horizon, d_coeff, p_cap=6, drop=0.05):
    N = graph.agent_count
    rng = np.random.default_rng(seed * 1_000_003 + q_target)
    p_max = max(2, min(p_cap, q_target // 6))
    periods = rng.integers(1, p_max + 1, size=N)
    phases = np.array([int(rng.integers(0, p)) for p in periods])
    computes = np.array([int(rng.integers(0, min(2, p))) for p in periods])
    d_hi = max(1, int(d_coeff * q_target))
    agents = tuple(AgentSchedule(int(p), int(o), int(c)) for p, o, c in zip(periods, phases, computes))
    links = {}
    for i in range(N):
        for j in graph.neighbors(i):
            if i != j:
                dmax = int(rng.integers(max(1, d_hi // 2), d_hi + 1))
                links[(i, j)] = LinkSchedule(0, dmax, drop, 2)
    return ScheduleConfig(agents=agents, links=links, rng_seed=seed, horizon=horizon)


for coeff in (0.5, 0.75, 0.9, 1.0):
    row = []
    for qt in (25, 50, 100):
        vals = []
        for seed in (0, 1, 2):
            cfg = preset(graph, qt, seed, 20000, coeff)
            tl = build_schedule(cfg)
            tr = trace_timeline(tl, collect_events=False)
            vals.append(tr.realized_Q)
        row.append(f"Qt={qt}->{vals}")
    print(f"d_coeff={coeff}: " + "  ".join(row))
