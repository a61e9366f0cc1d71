"""Deterministic discrete-event engine for the partially asynchronous model.

Agents run on local clocks (period, phase, compute time); completed updates
broadcast (y_i, g-blocks) to the neighbors over links with bounded seeded
random delays and bounded drop runs. An external event counter k advances
once per simulated tick that carries at least one completion; completions
sharing a tick share one k and read pre-tick state.

Visibility rule: every effect at tick t (delivery, committed update) is
visible to reads at ticks strictly greater than t. Updates with a positive
compute time snapshot their mailbox at the start tick; deliveries landing
during the compute window apply to the next update.

The realized timeline depends only on the schedule configuration, never on
iterate values, so the asynchrony level Q can be measured exactly on a
numeric-free dry pass before any step size is chosen.
"""

from __future__ import annotations

import math
import types
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .constants import ConstantsTable
from .model import Problem
from .packed import PackedProblem, pack_problem
from .record import RunRecord

__all__ = [
    "AgentSchedule",
    "LinkSchedule",
    "ScheduleConfig",
    "Timeline",
    "Trace",
    "TraceEvents",
    "EarlyStop",
    "RunResult",
    "build_schedule",
    "trace_timeline",
    "measure_Q",
    "run_async",
]


@dataclass(frozen=True)
class AgentSchedule:
    """Local clock of one agent, in simulated ticks."""

    update_period: int
    phase_offset: int = 0
    compute_time: int = 0

    def validate(self, i: int) -> None:
        if self.update_period < 1:
            raise ValueError(f"agent {i}: update_period must be >= 1")
        if self.phase_offset < 0 or self.compute_time < 0:
            raise ValueError(f"agent {i}: phase_offset and compute_time must be >= 0")
        if self.compute_time >= self.update_period:
            raise ValueError(
                f"agent {i}: compute_time must be < update_period (one update in flight at a time)"
            )


@dataclass(frozen=True)
class LinkSchedule:
    """Directed link behavior (sender -> receiver), delays in ticks."""

    delay_min: int = 0
    delay_max: int = 0
    drop_probability: float = 0.0
    max_consecutive_drops: int = 0

    def validate(self, key) -> None:
        if not (0 <= self.delay_min <= self.delay_max):
            raise ValueError(f"link {key}: need 0 <= delay_min <= delay_max")
        if not (0.0 <= self.drop_probability < 1.0):
            raise ValueError(f"link {key}: drop_probability must be in [0, 1)")
        if self.max_consecutive_drops < 0:
            raise ValueError(f"link {key}: max_consecutive_drops must be >= 0")


@dataclass(frozen=True)
class ScheduleConfig:
    """Asynchrony specification: clocks, link behavior, seed and horizon.

    ``links`` is keyed by directed pairs (sender, receiver) and must contain
    both directions of every communication edge; the pairs define the graph
    the timeline serves.
    """

    agents: tuple[AgentSchedule, ...]
    links: dict[tuple[int, int], LinkSchedule]
    rng_seed: int = 0
    horizon: int = 0

    @property
    def agent_count(self) -> int:
        return len(self.agents)

    def validate(self) -> None:
        N = self.agent_count
        if N < 1:
            raise ValueError("need at least one agent")
        for i, a in enumerate(self.agents):
            a.validate(i)
        for (s, r), lc in self.links.items():
            if s == r:
                raise ValueError(f"link ({s},{r}): self links are implicit")
            if not (0 <= s < N and 0 <= r < N):
                raise ValueError(f"link ({s},{r}) out of range")
            if (r, s) not in self.links:
                raise ValueError(f"link ({s},{r}) declared without its reverse ({r},{s})")
            lc.validate((s, r))
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")

    def neighbor_lists(self) -> list[tuple[int, ...]]:
        N = self.agent_count
        nbrs = [{i} for i in range(N)]
        for (s, r) in self.links:
            nbrs[s].add(r)
            nbrs[r].add(s)
        return [tuple(sorted(x)) for x in nbrs]

    @classmethod
    def for_graph(
        cls,
        graph,
        periods=1,
        phases=0,
        computes=0,
        delay_range=(0, 0),
        drop_probability=0.0,
        max_consecutive_drops=0,
        rng_seed: int = 0,
        horizon: int = 0,
    ) -> "ScheduleConfig":
        """Uniform (or per-agent sequence) schedule over a model Graph."""
        N = graph.agent_count

        def per_agent(v):
            if np.isscalar(v):
                return [int(v)] * N
            return [int(t) for t in v]

        agents = tuple(
            AgentSchedule(p, o, c)
            for p, o, c in zip(per_agent(periods), per_agent(phases), per_agent(computes))
        )
        link = LinkSchedule(int(delay_range[0]), int(delay_range[1]),
                            float(drop_probability), int(max_consecutive_drops))
        links = {}
        for i in range(N):
            for j in graph.neighbors(i):
                if i != j:
                    links[(i, j)] = link
        return cls(agents=agents, links=links, rng_seed=int(rng_seed), horizon=int(horizon))


@dataclass
class Timeline:
    """Packed, value-independent realization of a ScheduleConfig.

    Counters k index ticks that carry completions; ops group g holds the
    snapshots and deliveries executed after the commits of counter g-1 and
    before the commits of counter g. Message payload buffers are assigned
    ring positions per link; byte offsets are resolved against a concrete
    problem at run time.
    """

    config: ScheduleConfig
    N: int
    L: int
    pairs: list  # (owner, source), sorted; owner receives from source
    K: int
    counter_tick: np.ndarray
    comp_indptr: np.ndarray
    comp_agent: np.ndarray
    comp_tick: np.ndarray
    comp_snap: np.ndarray
    comp_nb_indptr: np.ndarray
    cmsg_indptr: np.ndarray
    msg_link: np.ndarray
    msg_stamp: np.ndarray
    msg_ring_pos: np.ndarray
    msg_deliver_tick: np.ndarray
    ring_size: np.ndarray
    ops_indptr: np.ndarray
    ops_kind: np.ndarray
    ops_arg: np.ndarray
    nb_indptr: np.ndarray
    nb_mb_link: np.ndarray
    nb_source: np.ndarray
    self_link: np.ndarray

    @property
    def completion_count(self) -> int:
        return int(self.comp_agent.shape[0])

    def update_counters(self, K_real: Optional[int] = None) -> list[np.ndarray]:
        """Per-agent sorted global counters at which the agent completes."""
        K_real = self.K if K_real is None else K_real
        cend = int(self.comp_indptr[K_real])
        counters = np.repeat(np.arange(self.K, dtype=np.int64), np.diff(self.comp_indptr))
        out = []
        for i in range(self.N):
            mask = self.comp_agent[:cend] == i
            out.append(counters[:cend][mask])
        return out


def _cap_drop_runs(proposals: np.ndarray, max_run: int) -> np.ndarray:
    """Sequential drop-run capping, vectorized.

    A proposed drop is honored only while the current run of consecutive
    drops is shorter than max_run; the message that would exceed the cap is
    force-delivered, which resets the run.
    """
    if max_run <= 0 or proposals.size == 0:
        return np.zeros_like(proposals, dtype=bool)
    idx = np.arange(proposals.size)
    last_keep = np.maximum.accumulate(np.where(~proposals, idx, -1))
    pos = idx - last_keep - 1  # 0-based position within a run of proposed drops
    forced = proposals & ((pos + 1) % (max_run + 1) == 0)
    return proposals & ~forced


def build_schedule(config: ScheduleConfig) -> Timeline:
    """Deterministic timeline for a schedule configuration.

    Depends only on the configuration (clock parameters, link parameters,
    seed, horizon); iterate values never enter.
    """
    config.validate()
    N = config.agent_count
    K = int(config.horizon)
    rng = np.random.default_rng(config.rng_seed)

    nbrs = config.neighbor_lists()
    pairs = sorted((i, j) for i in range(N) for j in nbrs[i])
    pair_index = {pq: k for k, pq in enumerate(pairs)}
    L = len(pairs)
    self_link = np.array([pair_index[(i, i)] for i in range(N)], dtype=np.int64)
    nb_indptr = np.zeros(N + 1, dtype=np.int64)
    nb_mb_link = np.zeros(L, dtype=np.int64)
    nb_source = np.zeros(L, dtype=np.int64)
    pos = 0
    for i in range(N):
        for j in nbrs[i]:
            nb_mb_link[pos] = pair_index[(i, j)]
            nb_source[pos] = j
            pos += 1
        nb_indptr[i + 1] = pos

    periods = np.array([a.update_period for a in config.agents], dtype=np.int64)
    phases = np.array([a.phase_offset for a in config.agents], dtype=np.int64)
    computes = np.array([a.compute_time for a in config.agents], dtype=np.int64)

    empty64 = np.zeros(0, dtype=np.int64)
    if K == 0:
        return Timeline(
            config=config, N=N, L=L, pairs=pairs, K=0,
            counter_tick=empty64, comp_indptr=np.zeros(1, dtype=np.int64),
            comp_agent=empty64, comp_tick=empty64,
            comp_snap=np.zeros(0, dtype=np.uint8),
            comp_nb_indptr=np.zeros(1, dtype=np.int64),
            cmsg_indptr=np.zeros(1, dtype=np.int64),
            msg_link=empty64, msg_stamp=empty64, msg_ring_pos=empty64,
            msg_deliver_tick=empty64, ring_size=np.ones(L, dtype=np.int64),
            ops_indptr=np.zeros(1, dtype=np.int64),
            ops_kind=np.zeros(0, dtype=np.uint8), ops_arg=empty64,
            nb_indptr=nb_indptr, nb_mb_link=nb_mb_link, nb_source=nb_source,
            self_link=self_link,
        )

    # completion ticks: enough to cover K distinct counter ticks
    first = phases + computes
    t_guess = int(first.max() + (K + 1) * int(periods.min()) + 1)
    agent_ticks = []
    for i in range(N):
        cnt = (t_guess - int(first[i])) // int(periods[i]) + 1
        agent_ticks.append(first[i] + periods[i] * np.arange(cnt, dtype=np.int64))
    counter_tick = np.unique(np.concatenate(agent_ticks))[:K]
    if counter_tick.shape[0] < K:
        raise RuntimeError("internal: completion tick generation fell short")
    t_last = int(counter_tick[-1])

    ca, ct = [], []
    for i in range(N):
        ts = agent_ticks[i][agent_ticks[i] <= t_last]
        ca.append(np.full(ts.shape, i, dtype=np.int64))
        ct.append(ts)
    ca = np.concatenate(ca)
    ct = np.concatenate(ct)
    ck = np.searchsorted(counter_tick, ct)
    order = np.lexsort((ca, ck))
    comp_agent = ca[order]
    comp_tick = ct[order]
    comp_counter = ck[order]
    C = int(comp_agent.shape[0])
    comp_indptr = np.zeros(K + 1, dtype=np.int64)
    np.cumsum(np.bincount(comp_counter, minlength=K), out=comp_indptr[1:])
    comp_snap = (computes[comp_agent] > 0).astype(np.uint8)
    degs = np.array([len(nbrs[i]) for i in range(N)], dtype=np.int64)
    comp_nb_indptr = np.zeros(C + 1, dtype=np.int64)
    np.cumsum(degs[comp_agent], out=comp_nb_indptr[1:])

    # raw outgoing messages, grouped by completion, destinations in sorted order
    out_counts = degs - 1
    max_out = int(out_counts.max()) if N else 0
    out_table = np.zeros((N, max(max_out, 1)), dtype=np.int64)
    for i in range(N):
        outs = [j for j in nbrs[i] if j != i]
        out_table[i, :len(outs)] = outs
    msg_counts = out_counts[comp_agent]
    raw_indptr = np.zeros(C + 1, dtype=np.int64)
    np.cumsum(msg_counts, out=raw_indptr[1:])
    M_raw = int(raw_indptr[-1])
    rep = np.repeat(np.arange(C, dtype=np.int64), msg_counts)
    pos_in = np.arange(M_raw, dtype=np.int64) - raw_indptr[rep]
    raw_sender = comp_agent[rep]
    raw_dest = out_table[raw_sender, pos_in]
    raw_send_tick = comp_tick[rep]
    raw_stamp = comp_counter[rep] + 1

    link_table = np.full((N, N), -1, dtype=np.int64)
    for idx, (o, s) in enumerate(pairs):
        link_table[o, s] = idx
    raw_link = link_table[raw_dest, raw_sender]

    delay = np.zeros(M_raw, dtype=np.int64)
    dropped = np.zeros(M_raw, dtype=bool)
    for key in sorted(config.links):
        lc = config.links[key]
        s, r = key
        idx = np.where((raw_sender == s) & (raw_dest == r))[0]
        if lc.delay_max > 0 or lc.delay_min > 0:
            delay[idx] = rng.integers(lc.delay_min, lc.delay_max + 1, size=idx.size)
        if lc.drop_probability > 0.0:
            prop = rng.random(idx.size) < lc.drop_probability
            dropped[idx] = _cap_drop_runs(prop, lc.max_consecutive_drops)
    raw_deliver = raw_send_tick + delay

    keep = (~dropped) & (raw_deliver < t_last)
    msg_rep = rep[keep]
    msg_link = raw_link[keep]
    msg_stamp = raw_stamp[keep]
    msg_send_tick = raw_send_tick[keep]
    msg_deliver_tick = raw_deliver[keep]
    M = int(msg_link.shape[0])

    cmsg_indptr = np.zeros(C + 1, dtype=np.int64)
    np.cumsum(np.bincount(msg_rep, minlength=C), out=cmsg_indptr[1:])

    # ring positions per link: reuse a slot only after its delivery has passed
    msg_ring_pos = np.zeros(M, dtype=np.int64)
    ring_size = np.ones(L, dtype=np.int64)
    for lk in range(L):
        idx = np.where(msg_link == lk)[0]
        nmsg = idx.size
        if nmsg == 0:
            continue
        st = msg_send_tick[idx]
        dt = msg_deliver_tick[idx]
        R = 1
        while R < nmsg and not np.all(dt[:-R] < st[R:]):
            R += 1
        ring_size[lk] = R
        msg_ring_pos[idx] = np.arange(nmsg, dtype=np.int64) % R

    # pre-counter ops: snapshots at update start ticks, deliveries at arrival ticks
    snap_mask = computes[comp_agent] > 0
    snap_idx = np.where(snap_mask)[0]
    snap_tick = comp_tick[snap_idx] - computes[comp_agent[snap_idx]]
    op_tick = np.concatenate([snap_tick, msg_deliver_tick])
    op_kind = np.concatenate([
        np.zeros(snap_idx.size, dtype=np.uint8),
        np.ones(M, dtype=np.uint8),
    ])
    op_arg = np.concatenate([comp_agent[snap_idx], np.arange(M, dtype=np.int64)])
    op_group = np.searchsorted(counter_tick, op_tick, side="right")
    keep_ops = op_group < K
    op_tick, op_kind, op_arg, op_group = (
        op_tick[keep_ops], op_kind[keep_ops], op_arg[keep_ops], op_group[keep_ops]
    )
    order = np.lexsort((op_arg, op_kind, op_tick, op_group))
    op_kind = op_kind[order]
    op_arg = op_arg[order]
    op_group = op_group[order]
    ops_indptr = np.zeros(K + 1, dtype=np.int64)
    np.cumsum(np.bincount(op_group, minlength=K), out=ops_indptr[1:])

    return Timeline(
        config=config, N=N, L=L, pairs=pairs, K=K,
        counter_tick=counter_tick,
        comp_indptr=comp_indptr, comp_agent=comp_agent, comp_tick=comp_tick,
        comp_snap=comp_snap, comp_nb_indptr=comp_nb_indptr,
        cmsg_indptr=cmsg_indptr,
        msg_link=msg_link, msg_stamp=msg_stamp, msg_ring_pos=msg_ring_pos,
        msg_deliver_tick=msg_deliver_tick, ring_size=ring_size,
        ops_indptr=ops_indptr, ops_kind=op_kind, ops_arg=op_arg,
        nb_indptr=nb_indptr, nb_mb_link=nb_mb_link, nb_source=nb_source,
        self_link=self_link,
    )


# ---------------------------------------------------------------------------
# traces


@dataclass
class TraceEvents:
    """Detailed per-completion staleness stamps (tau per neighbor)."""

    comp_agent: np.ndarray
    comp_counter: np.ndarray
    comp_tick: np.ndarray
    comp_nb_indptr: np.ndarray
    nb_indptr: np.ndarray
    nb_source: np.ndarray
    taus: np.ndarray

    def __iter__(self):
        """Yield (k, tick, agent, neighbor, tau) rows in event order."""
        for c in range(self.comp_agent.shape[0]):
            i = int(self.comp_agent[c])
            base = int(self.comp_nb_indptr[c])
            a0, a1 = int(self.nb_indptr[i]), int(self.nb_indptr[i + 1])
            for t in range(a1 - a0):
                yield (
                    int(self.comp_counter[c]),
                    int(self.comp_tick[c]),
                    i,
                    int(self.nb_source[a0 + t]),
                    int(self.taus[base + t]),
                )


@dataclass
class Trace:
    """Realized event log: counters, per-agent update counters, staleness."""

    K: int
    horizon: int
    counter_tick: np.ndarray
    update_counters: list[np.ndarray]
    update_counts: np.ndarray
    max_staleness: int
    events: Optional[TraceEvents] = None
    realized_Q: Optional[int] = None

    def to_csv_text(self) -> str:
        if self.events is None:
            raise ValueError("trace was collected without detailed events")
        lines = ["k,tick,agent,neighbor,tau"]
        for (k, tick, agent, neighbor, tau) in self.events:
            lines.append(f"{k},{tick},{agent},{neighbor},{tau}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        from pathlib import Path

        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv_text())
        return path


def measure_Q(trace: Trace) -> int:
    """Smallest Q satisfying both partial-asynchronism clauses on the trace.

    (i) every counter window of length Q inside the trace intersects every
    agent's update set; (ii) staleness k - tau never exceeds Q. An agent with
    no update in the trace makes Q unbounded, which is an error.
    """
    if trace.K <= 0:
        raise ValueError("cannot measure Q on an empty trace")
    gap = 0
    for i, arr in enumerate(trace.update_counters):
        if arr.size == 0:
            raise ValueError(f"agent {i} never updates within the trace; Q is unbounded")
        g = int(arr[0])
        if arr.size > 1:
            g = max(g, int(np.max(np.diff(arr))) - 1)
        g = max(g, trace.K - 1 - int(arr[-1]))
        gap = max(gap, g)
    return max(1, gap + 1, int(trace.max_staleness))


def _make_trace(timeline: Timeline, K_real: int, max_stale: int, taus, collect_events: bool) -> Trace:
    update_counters = timeline.update_counters(K_real)
    counts = np.array([arr.size for arr in update_counters], dtype=np.int64)
    events = None
    if collect_events and taus is not None:
        cend = int(timeline.comp_indptr[K_real])
        counters = np.repeat(
            np.arange(timeline.K, dtype=np.int64), np.diff(timeline.comp_indptr)
        )[:cend]
        events = TraceEvents(
            comp_agent=timeline.comp_agent[:cend],
            comp_counter=counters,
            comp_tick=timeline.comp_tick[:cend],
            comp_nb_indptr=timeline.comp_nb_indptr[: cend + 1],
            nb_indptr=timeline.nb_indptr,
            nb_source=timeline.nb_source,
            taus=taus,
        )
    trace = Trace(
        K=K_real,
        horizon=timeline.K,
        counter_tick=timeline.counter_tick[:K_real],
        update_counters=update_counters,
        update_counts=counts,
        max_staleness=int(max_stale),
        events=events,
    )
    if K_real > 0 and all(arr.size for arr in update_counters):
        trace.realized_Q = measure_Q(trace)
    return trace


def trace_timeline(
    timeline: Timeline,
    horizon: Optional[int] = None,
    collect_events: bool = True,
    backend: Optional[str] = None,
) -> Trace:
    """Numeric-free dry pass: realize the staleness stamps and measure Q."""
    K_run = timeline.K if horizon is None else min(int(horizon), timeline.K)
    kern = kernels.get_backend(backend)
    out = kern.dry_stamps(timeline, collect_events, K_run)
    return _make_trace(timeline, K_run, out["max_stale"], out["taus"], collect_events)


# ---------------------------------------------------------------------------
# the asynchronous run


@dataclass(frozen=True)
class EarlyStop:
    """Stop once dist <= target and the s-norm stayed below s_target over the
    trailing tail_frac of the realized horizon."""

    dist_rtol: Optional[float] = None
    dist_atol: Optional[float] = None
    s_target: Optional[float] = None
    tail_frac: float = 0.01


@dataclass
class RunResult:
    trace: Trace
    record: RunRecord
    x: np.ndarray
    y: np.ndarray
    update_counts: np.ndarray
    min_lemma3_margin: float
    max_ynorm: float
    q0: float
    dist0: Optional[float]
    diverged: bool
    stopped_early: bool
    x_history: Optional[np.ndarray] = None
    y_history: Optional[np.ndarray] = None


def initial_iterates(problem: Problem) -> tuple[np.ndarray, np.ndarray]:
    """Algorithm initialization: x_i = argmin f_i, y_i = 0."""
    x0 = np.concatenate(
        [problem.costs[i].argmin(np.zeros(int(problem.n[i]))) for i in range(problem.agent_count)]
    ) if problem.agent_count else np.zeros(0)
    return x0, np.zeros(problem.m_total)


def _check_match(problem: Problem, packed: PackedProblem, timeline: Timeline) -> None:
    if timeline.N != problem.agent_count:
        raise ValueError(
            f"timeline has {timeline.N} agents, problem has {problem.agent_count}"
        )
    if timeline.pairs != packed.pairs:
        raise ValueError("timeline link structure does not match the problem graph")


def run_async(
    problem: Problem,
    constants: ConstantsTable,
    timeline: Timeline,
    horizon: Optional[int] = None,
    reference=None,
    early_stop: Optional[EarlyStop] = None,
    collect_events: bool = False,
    keep_history: bool = False,
    backend: Optional[str] = None,
    metadata: Optional[dict] = None,
) -> RunResult:
    """Execute the asynchronous dual ascent over a realized timeline.

    ``reference`` (a ReferenceSolution or a primal vector) enables the
    distance-to-optimum column and relative early stopping. Determinism
    contract: identical (problem, timeline, constants, backend) reproduce
    identical results byte for byte.
    """
    if constants.gamma is None:
        raise ValueError("constants.gamma is not set; call choose_gammas first")
    packed = pack_problem(problem)
    _check_match(problem, packed, timeline)
    gamma = np.asarray(constants.gamma, dtype=float)
    for i in range(problem.agent_count):
        if problem.m[i] > 0 and not math.isfinite(gamma[i]):
            raise ValueError(f"agent {i} has dual rows but a non-finite step size")
    gamma = np.where(np.isfinite(gamma), gamma, 0.0)

    K_run = timeline.K if horizon is None else min(int(horizon), timeline.K)
    xstar = None
    if reference is not None:
        xstar = np.asarray(getattr(reference, "x_star", reference), dtype=float)
        if xstar.shape[0] != problem.n_total:
            raise ValueError("reference primal point has the wrong dimension")

    x0, _ = initial_iterates(problem)
    dist0 = float(np.linalg.norm(x0 - xstar)) if xstar is not None else None
    dist_target = None
    s_target = None
    tail_frac = 0.01
    if early_stop is not None:
        cands = []
        if early_stop.dist_rtol is not None:
            if dist0 is None:
                raise ValueError("relative early stop needs a reference solution")
            cands.append(early_stop.dist_rtol * dist0)
        if early_stop.dist_atol is not None:
            cands.append(early_stop.dist_atol)
        dist_target = min(cands) if cands else None
        s_target = early_stop.s_target
        tail_frac = early_stop.tail_frac

    # resolve message payload slots against the problem dimensions
    m_src = np.array([int(problem.m[j]) for (_, j) in timeline.pairs], dtype=np.int64)
    m_own = np.array([int(problem.m[i]) for (i, _) in timeline.pairs], dtype=np.int64)
    slot_width = m_src + m_own
    pool_base = np.concatenate([[0], np.cumsum(timeline.ring_size * slot_width)]).astype(np.int64)
    msg_slot = pool_base[timeline.msg_link] + timeline.msg_ring_pos * slot_width[timeline.msg_link]
    tlrun = types.SimpleNamespace(
        K=timeline.K,
        L=timeline.L,
        comp_indptr=timeline.comp_indptr,
        comp_agent=timeline.comp_agent,
        comp_snap=timeline.comp_snap,
        comp_nb_indptr=timeline.comp_nb_indptr,
        cmsg_indptr=timeline.cmsg_indptr,
        msg_link=timeline.msg_link,
        msg_stamp=timeline.msg_stamp,
        msg_slot=msg_slot.astype(np.int64),
        slot_pool=int(pool_base[-1]),
        ops_indptr=timeline.ops_indptr,
        ops_kind=timeline.ops_kind,
        ops_arg=timeline.ops_arg,
        nb_indptr=timeline.nb_indptr,
        nb_mb_link=timeline.nb_mb_link,
        self_link=timeline.self_link,
    )

    kern = kernels.get_backend(backend)
    out = kern.run_timeline(
        packed,
        tlrun,
        gamma,
        K_run=K_run,
        xstar=xstar,
        dist_target=dist_target,
        s_target=s_target,
        tail_frac=tail_frac,
        collect_taus=collect_events,
        keep_history=keep_history,
    )

    K_real = int(out["K_real"])
    trace = _make_trace(timeline, K_real, out["max_stale"], out["taus"], collect_events)
    meta = dict(metadata or {})
    meta.setdefault("mode", "async")
    meta.setdefault("Q", constants.Q if constants.Q is not None else "n/a")
    meta.setdefault("seed", timeline.config.rng_seed)
    meta.setdefault("gamma_safety", constants.safety)
    meta.setdefault("gamma_scale", constants.scale)
    meta.setdefault("admissible", constants.admissible)
    meta.setdefault("horizon", K_run)
    meta.setdefault("realized_horizon", K_real)
    meta.setdefault("realized_Q", trace.realized_Q)
    meta.setdefault("q0", out["q0"])
    meta.setdefault("dist0", dist0 if dist0 is not None else math.nan)
    record = RunRecord(
        metadata=meta,
        avg_updates=out["cum_updates"].astype(float) / problem.agent_count,
        dist=out["dist"],
        dual=out["dual"],
        feas=out["feas"],
        residual=out["snorm"],
    )
    return RunResult(
        trace=trace,
        record=record,
        x=out["x"],
        y=out["y"],
        update_counts=out["update_counts"],
        min_lemma3_margin=out["min_lemma3_margin"],
        max_ynorm=out["max_ynorm"],
        q0=out["q0"],
        dist0=dist0,
        diverged=bool(out["diverged"]),
        stopped_early=K_real < K_run,
        x_history=out.get("x_hist"),
        y_history=out.get("y_hist"),
    )
