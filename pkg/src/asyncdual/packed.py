"""Flat array views of a Problem for the numeric kernels.

Both kernel backends (compiled and numpy) consume the same packed layout:
per-agent block offsets, a directed link table covering every ordered
neighbor pair (owner, source) including self pairs, flattened coupling
matrices, and the dense stacked constraint map used for per-event metrics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import Problem

__all__ = ["PackedProblem", "pack_problem"]


@dataclass
class PackedProblem:
    N: int
    n_total: int
    m_total: int
    n_off: np.ndarray  # int64[N+1]
    m_off: np.ndarray  # int64[N+1]
    p: np.ndarray      # int64[N] inequality row counts

    # costs
    is_diag: np.ndarray   # uint8[N]
    h: np.ndarray         # float64[n_total], diagonal entries (1.0 for dense agents)
    q_lin: np.ndarray     # float64[n_total]
    lo: np.ndarray        # float64[n_total]
    hi: np.ndarray        # float64[n_total]
    hfull: np.ndarray     # flattened dense Hessians
    hinv: np.ndarray      # flattened dense inverses
    hfull_off: np.ndarray  # int64[N+1]

    # directed links: every (owner, source) with source in N_owner, sorted
    L: int
    link_owner: np.ndarray   # int64[L]
    link_source: np.ndarray  # int64[L]
    G_flat: np.ndarray       # row-major (m_owner, n_source) per link
    G_off: np.ndarray        # int64[L+1]
    e_flat: np.ndarray       # offsets col(d, -b) per link
    e_off: np.ndarray        # int64[L+1]

    # per-agent neighbor rows: for agent i, aligned arrays of
    #   mailbox link (owner=i, source=j) and transposed block link (owner=j, source=i)
    nb_indptr: np.ndarray   # int64[N+1]
    nb_mb_link: np.ndarray  # int64[L]
    nb_T_link: np.ndarray   # int64[L]

    # mailbox buffer offsets (per link)
    mb_y_off: np.ndarray  # int64[L+1], slice sizes m_source
    mb_g_off: np.ndarray  # int64[L+1], slice sizes m_owner
    self_link: np.ndarray  # int64[N], index of link (i, i)

    # dense stacked map for metrics: g(x) = G_all x + e_all
    G_all: np.ndarray
    e_all: np.ndarray
    ineq_mask: np.ndarray  # uint8[m_total]

    def link_index(self, owner: int, source: int) -> int:
        idx = self._pair_index.get((owner, source))
        if idx is None:
            raise KeyError(f"no directed link ({owner},{source})")
        return idx

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.link_owner.tolist(), self.link_source.tolist()))


def pack_problem(problem: Problem) -> PackedProblem:
    N = problem.agent_count
    n_off = problem.n_offsets.copy()
    m_off = problem.m_offsets.copy()
    n_total, m_total = problem.n_total, problem.m_total

    is_diag = np.zeros(N, dtype=np.uint8)
    h = np.ones(n_total)
    q_lin = np.zeros(n_total)
    lo = np.full(n_total, -np.inf)
    hi = np.full(n_total, np.inf)
    hfull_sizes = np.zeros(N, dtype=np.int64)
    for i, cost in enumerate(problem.costs):
        sl = problem.x_slice(i)
        q_lin[sl] = cost.linear
        if cost.is_diag:
            is_diag[i] = 1
            h[sl] = cost.diag
            if cost.has_box:
                lo[sl] = cost.lo
                hi[sl] = cost.hi
        else:
            hfull_sizes[i] = cost.dim * cost.dim
    hfull_off = np.concatenate([[0], np.cumsum(hfull_sizes)]).astype(np.int64)
    hfull = np.zeros(int(hfull_off[-1]))
    hinv = np.zeros(int(hfull_off[-1]))
    for i, cost in enumerate(problem.costs):
        if not cost.is_diag:
            H = cost.full
            hfull[hfull_off[i]:hfull_off[i + 1]] = H.ravel()
            hinv[hfull_off[i]:hfull_off[i + 1]] = np.linalg.inv(H).ravel()

    pairs = sorted(problem.graph.directed_pairs())
    L = len(pairs)
    link_owner = np.array([a for a, _ in pairs], dtype=np.int64)
    link_source = np.array([b for _, b in pairs], dtype=np.int64)
    pair_index = {pq: k for k, pq in enumerate(pairs)}

    G_sizes = np.zeros(L, dtype=np.int64)
    e_sizes = np.zeros(L, dtype=np.int64)
    for k, (i, j) in enumerate(pairs):
        G_sizes[k] = int(problem.m[i]) * int(problem.n[j])
        e_sizes[k] = int(problem.m[i])
    G_off = np.concatenate([[0], np.cumsum(G_sizes)]).astype(np.int64)
    e_off = np.concatenate([[0], np.cumsum(e_sizes)]).astype(np.int64)
    G_flat = np.zeros(int(G_off[-1]))
    e_flat = np.zeros(int(e_off[-1]))
    for k, (i, j) in enumerate(pairs):
        blk = problem.blocks.get((i, j))
        if blk is not None and blk.m:
            G_flat[G_off[k]:G_off[k + 1]] = blk.stacked_matrix().ravel()
            e_flat[e_off[k]:e_off[k + 1]] = blk.offset()

    nb_indptr = np.zeros(N + 1, dtype=np.int64)
    nb_mb_link = np.zeros(L, dtype=np.int64)
    nb_T_link = np.zeros(L, dtype=np.int64)
    pos = 0
    for i in range(N):
        for j in problem.graph.neighbors(i):
            nb_mb_link[pos] = pair_index[(i, j)]
            nb_T_link[pos] = pair_index[(j, i)]
            pos += 1
        nb_indptr[i + 1] = pos
    assert pos == L

    mb_y_sizes = np.array([int(problem.m[j]) for (_, j) in pairs], dtype=np.int64)
    mb_y_off = np.concatenate([[0], np.cumsum(mb_y_sizes)]).astype(np.int64)
    mb_g_off = e_off.copy()
    self_link = np.array([pair_index[(i, i)] for i in range(N)], dtype=np.int64)

    G_all, e_all = problem.global_matrix()
    packed = PackedProblem(
        N=N,
        n_total=n_total,
        m_total=m_total,
        n_off=n_off,
        m_off=m_off,
        p=problem.p.astype(np.int64).copy(),
        is_diag=is_diag,
        h=h,
        q_lin=q_lin,
        lo=lo,
        hi=hi,
        hfull=hfull,
        hinv=hinv,
        hfull_off=hfull_off,
        L=L,
        link_owner=link_owner,
        link_source=link_source,
        G_flat=G_flat,
        G_off=G_off,
        e_flat=e_flat,
        e_off=e_off,
        nb_indptr=nb_indptr,
        nb_mb_link=nb_mb_link,
        nb_T_link=nb_T_link,
        mb_y_off=mb_y_off,
        mb_g_off=mb_g_off,
        self_link=self_link,
        G_all=np.ascontiguousarray(G_all),
        e_all=e_all.copy(),
        ineq_mask=problem.ineq_mask().astype(np.uint8),
    )
    packed._pair_index = pair_index
    return packed
