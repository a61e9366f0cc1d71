"""Constraint-coupled strongly convex programs over an undirected agent network.

The program minimizes a sum of per-agent quadratic costs subject to shared
affine constraints: agent ``i`` owns ``p_i`` inequality rows and ``r_i``
equality rows, each a sum of affine blocks in the neighbors' variables.
This module holds the problem data types, the per-agent argmin oracle, the
dual function, the dual-cone projection and structural validation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

__all__ = [
    "Graph",
    "LocalCost",
    "CouplingBlock",
    "Problem",
    "DualPoint",
    "Check",
    "ValidationReport",
    "DimensionError",
    "validate_problem",
    "eval_coupling",
    "project_omega",
    "project_omega_stacked",
    "local_argmin",
    "aggregated_dual_term",
    "dual_value_and_gradient",
    "coupling_lipschitz",
    "spectral_norm_power",
]


class DimensionError(ValueError):
    """An array does not match the dimensions declared by the problem."""


def _vector(v, size: Optional[int], name: str) -> np.ndarray:
    out = np.atleast_1d(np.asarray(v, dtype=float))
    if out.ndim != 1:
        raise DimensionError(f"{name} must be a vector, got shape {out.shape}")
    if size is not None and out.shape[0] != size:
        raise DimensionError(f"{name} has length {out.shape[0]}, expected {size}")
    return out


def _matrix(M, rows: Optional[int], cols: Optional[int], name: str) -> np.ndarray:
    out = np.asarray(M, dtype=float)
    if out.ndim != 2:
        out = out.reshape((rows if rows is not None else -1, cols if cols is not None else -1))
    if rows is not None and out.shape[0] != rows:
        raise DimensionError(f"{name} has {out.shape[0]} rows, expected {rows}")
    if cols is not None and out.shape[1] != cols:
        raise DimensionError(f"{name} has {out.shape[1]} columns, expected {cols}")
    return out


# ---------------------------------------------------------------------------
# graph


class Graph:
    """Undirected communication graph; every agent carries a self-loop."""

    def __init__(self, agent_count: int, edges: Iterable[tuple[int, int]] = ()):
        if agent_count < 1:
            raise ValueError("agent_count must be positive")
        self.agent_count = int(agent_count)
        norm = set()
        for (a, b) in edges:
            a, b = int(a), int(b)
            if not (0 <= a < agent_count and 0 <= b < agent_count):
                raise ValueError(f"edge ({a},{b}) out of range for {agent_count} agents")
            norm.add((min(a, b), max(a, b)))
        for i in range(agent_count):
            norm.add((i, i))
        self.edges = frozenset(norm)
        nbrs: list[list[int]] = [[] for _ in range(agent_count)]
        for (a, b) in norm:
            nbrs[a].append(b)
            if a != b:
                nbrs[b].append(a)
        self._neighbors = tuple(tuple(sorted(ns)) for ns in nbrs)

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self._neighbors[i]

    def is_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def directed_pairs(self) -> list[tuple[int, int]]:
        """All ordered pairs (i, j) with j in N_i, self-pairs included."""
        return [(i, j) for i in range(self.agent_count) for j in self.neighbors(i)]

    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in self.neighbors(u):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.agent_count

    @classmethod
    def path(cls, agent_count: int) -> "Graph":
        return cls(agent_count, [(i, i + 1) for i in range(agent_count - 1)])

    @classmethod
    def complete(cls, agent_count: int) -> "Graph":
        return cls(agent_count, [(i, j) for i in range(agent_count) for j in range(i + 1, agent_count)])

    def __repr__(self) -> str:
        plain = sorted(e for e in self.edges if e[0] != e[1])
        return f"Graph(N={self.agent_count}, edges={plain})"


# ---------------------------------------------------------------------------
# local cost


class LocalCost:
    """Positive-definite quadratic cost ``0.5 x'Hx + q'x`` with an optional box domain.

    A box domain is only allowed together with a diagonal Hessian: that keeps
    the shifted argmin a componentwise clamp, so agent updates stay closed
    form with no inner solver.
    """

    def __init__(self, linear, diag=None, full=None, lo=None, hi=None):
        if (diag is None) == (full is None):
            raise ValueError("exactly one of diag/full Hessian must be given")
        self.linear = _vector(linear, None, "linear")
        self.dim = self.linear.shape[0]
        if diag is not None:
            self.diag = _vector(diag, self.dim, "diag")
            self.full = None
        else:
            self.diag = None
            self.full = _matrix(full, self.dim, self.dim, "full")
            if not np.allclose(self.full, self.full.T, rtol=1e-12, atol=1e-12):
                raise ValueError("full Hessian must be symmetric")
        if (lo is None) != (hi is None):
            raise ValueError("box bounds must be given together")
        if lo is not None:
            if self.diag is None:
                raise ValueError("box domains require a diagonal Hessian")
            self.lo = _vector(lo, self.dim, "lo")
            self.hi = _vector(hi, self.dim, "hi")
            if not np.all(self.lo < self.hi):
                raise ValueError("box must have nonempty interior (lo < hi componentwise)")
        else:
            self.lo = None
            self.hi = None
        self._rho: Optional[float] = None

    @property
    def is_diag(self) -> bool:
        return self.diag is not None

    @property
    def has_box(self) -> bool:
        return self.lo is not None

    @property
    def rho(self) -> float:
        """Strong convexity modulus: smallest Hessian eigenvalue."""
        if self._rho is None:
            if self.diag is not None:
                self._rho = float(np.min(self.diag))
            else:
                self._rho = float(np.linalg.eigvalsh(self.full)[0])
        return self._rho

    def hessian_matrix(self) -> np.ndarray:
        return np.diag(self.diag) if self.diag is not None else self.full.copy()

    def value(self, x) -> float:
        x = _vector(x, self.dim, "x")
        if self.diag is not None:
            quad = 0.5 * float(np.dot(self.diag * x, x))
        else:
            quad = 0.5 * float(x @ self.full @ x)
        return quad + float(np.dot(self.linear, x))

    def argmin(self, lam) -> np.ndarray:
        """Unique minimizer of ``f(x) + <lam, x>`` over the domain."""
        lam = _vector(lam, self.dim, "lam")
        if self.rho <= 0.0:
            raise ValueError("Hessian is not positive definite (rho <= 0)")
        if self.diag is not None:
            x = -(self.linear + lam) / self.diag
            if self.lo is not None:
                x = np.clip(x, self.lo, self.hi)
            return x
        return np.linalg.solve(self.full, -(self.linear + lam))

    @classmethod
    def quadratic_diag(cls, diag, linear, lo=None, hi=None) -> "LocalCost":
        return cls(linear, diag=diag, lo=lo, hi=hi)

    @classmethod
    def quadratic(cls, hessian, linear) -> "LocalCost":
        H = np.asarray(hessian, dtype=float)
        if H.ndim <= 1:
            return cls(linear, diag=np.atleast_1d(H))
        return cls(linear, full=H)


# ---------------------------------------------------------------------------
# coupling blocks


class CouplingBlock:
    """Affine contribution of agent ``source``'s variable to agent ``owner``'s rows.

    Inequality part ``C x + d`` (p rows) and equality part ``A x - b`` (r rows).
    """

    def __init__(self, owner: int, source: int, C, d, A, b):
        self.owner = int(owner)
        self.source = int(source)
        self.C = np.asarray(C, dtype=float).reshape(-1, 1) if np.asarray(C).ndim == 1 else np.asarray(C, dtype=float)
        self.d = _vector(d, None, "d") if np.size(d) else np.zeros(0)
        self.A = np.asarray(A, dtype=float).reshape(-1, 1) if np.asarray(A).ndim == 1 else np.asarray(A, dtype=float)
        self.b = _vector(b, None, "b") if np.size(b) else np.zeros(0)
        if self.C.shape[0] != self.d.shape[0]:
            raise DimensionError(f"block ({owner},{source}): C has {self.C.shape[0]} rows but d has {self.d.shape[0]}")
        if self.A.shape[0] != self.b.shape[0]:
            raise DimensionError(f"block ({owner},{source}): A has {self.A.shape[0]} rows but b has {self.b.shape[0]}")
        if self.C.shape[0] and self.A.shape[0] and self.C.shape[1] != self.A.shape[1]:
            raise DimensionError(f"block ({owner},{source}): C and A disagree on the source dimension")

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def r(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.p + self.r

    @property
    def n(self) -> int:
        if self.C.shape[0]:
            return self.C.shape[1]
        if self.A.shape[0]:
            return self.A.shape[1]
        return 0

    def stacked_matrix(self) -> np.ndarray:
        """The stacked map [C; A] of shape (m, n_source)."""
        n = self.n
        return np.vstack([self.C.reshape(self.p, n), self.A.reshape(self.r, n)])

    def offset(self) -> np.ndarray:
        """Constant term of g: col(d, -b)."""
        return np.concatenate([self.d, -self.b])

    def value(self, x_source) -> np.ndarray:
        x = _vector(x_source, None, "x_source")
        if self.m == 0:
            return np.zeros(0)
        if x.shape[0] != self.n:
            raise DimensionError(
                f"block ({self.owner},{self.source}) expects x of length {self.n}, got {x.shape[0]}"
            )
        return self.stacked_matrix() @ x + self.offset()

    @classmethod
    def zero(cls, owner: int, source: int, p: int, r: int, n: int) -> "CouplingBlock":
        return cls(owner, source, np.zeros((p, n)), np.zeros(p), np.zeros((r, n)), np.zeros(r))


# ---------------------------------------------------------------------------
# problem


class Problem:
    """A coupled program: graph + per-agent costs + affine coupling blocks.

    ``couplings`` may omit blocks; a missing block for (i, j in N_i) counts as
    identically zero and is materialized with the agent's declared row counts.
    Row counts p_i, r_i are inferred from the declared blocks owned by i
    (zero if agent i owns none).
    """

    def __init__(self, graph: Graph, costs: Sequence[LocalCost], couplings: Iterable[CouplingBlock]):
        N = graph.agent_count
        if len(costs) != N:
            raise DimensionError(f"expected {N} costs, got {len(costs)}")
        self.graph = graph
        self.costs = tuple(costs)
        self.n = np.array([c.dim for c in costs], dtype=np.int64)

        declared: dict[tuple[int, int], CouplingBlock] = {}
        for blk in couplings:
            i, j = blk.owner, blk.source
            if not (0 <= i < N and 0 <= j < N):
                raise DimensionError(f"coupling block ({i},{j}) out of range")
            if j not in graph.neighbors(i):
                raise DimensionError(f"coupling block ({i},{j}) declared for a non-edge")
            if (i, j) in declared:
                raise DimensionError(f"duplicate coupling block ({i},{j})")
            declared[(i, j)] = blk

        p = np.zeros(N, dtype=np.int64)
        r = np.zeros(N, dtype=np.int64)
        for (i, j), blk in declared.items():
            if blk.m and blk.n != self.n[j]:
                raise DimensionError(
                    f"coupling block ({i},{j}) maps a vector of length {blk.n}, agent {j} has n={self.n[j]}"
                )
        for i in range(N):
            owned = [blk for (a, _), blk in declared.items() if a == i]
            if owned:
                ps = {blk.p for blk in owned}
                rs = {blk.r for blk in owned}
                if len(ps) > 1 or len(rs) > 1:
                    raise DimensionError(f"agent {i} owns blocks with inconsistent row counts")
                p[i], r[i] = owned[0].p, owned[0].r
        self.p = p
        self.r = r
        self.m = p + r

        self.blocks: dict[tuple[int, int], CouplingBlock] = {}
        for i in range(N):
            if self.m[i] == 0:
                continue
            for j in graph.neighbors(i):
                blk = declared.get((i, j))
                if blk is None:
                    blk = CouplingBlock.zero(i, j, int(p[i]), int(r[i]), int(self.n[j]))
                self.blocks[(i, j)] = blk

        self.n_offsets = np.concatenate([[0], np.cumsum(self.n)]).astype(np.int64)
        self.m_offsets = np.concatenate([[0], np.cumsum(self.m)]).astype(np.int64)
        self.n_total = int(self.n_offsets[-1])
        self.m_total = int(self.m_offsets[-1])
        self._global: Optional[tuple[np.ndarray, np.ndarray]] = None

    @property
    def agent_count(self) -> int:
        return self.graph.agent_count

    def block(self, i: int, j: int) -> Optional[CouplingBlock]:
        return self.blocks.get((i, j))

    def x_slice(self, i: int) -> slice:
        return slice(int(self.n_offsets[i]), int(self.n_offsets[i + 1]))

    def y_slice(self, i: int) -> slice:
        return slice(int(self.m_offsets[i]), int(self.m_offsets[i + 1]))

    def split_primal(self, x) -> list[np.ndarray]:
        x = _vector(x, self.n_total, "x")
        return [x[self.x_slice(i)] for i in range(self.agent_count)]

    def split_dual(self, y) -> list[np.ndarray]:
        y = _vector(y, self.m_total, "y")
        return [y[self.y_slice(i)] for i in range(self.agent_count)]

    def global_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense stacked constraint map: g(x) = G x + e, rows grouped by owner."""
        if self._global is None:
            G = np.zeros((self.m_total, self.n_total))
            e = np.zeros(self.m_total)
            for (i, j), blk in self.blocks.items():
                if blk.m == 0:
                    continue
                G[self.y_slice(i), self.x_slice(j)] += blk.stacked_matrix()
                e[self.y_slice(i)] += blk.offset()
            self._global = (G, e)
        return self._global

    def equality_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Global equality system A x = b stacked over agents (rows grouped by owner)."""
        R = int(np.sum(self.r))
        A = np.zeros((R, self.n_total))
        b = np.zeros(R)
        row = 0
        for i in range(self.agent_count):
            ri = int(self.r[i])
            if ri == 0:
                continue
            for j in self.graph.neighbors(i):
                blk = self.blocks.get((i, j))
                if blk is not None and blk.r:
                    A[row:row + ri, self.x_slice(j)] += blk.A
                    b[row:row + ri] += blk.b
            row += ri
        return A, b

    def ineq_mask(self) -> np.ndarray:
        """Boolean mask over stacked dual coordinates: True on inequality rows."""
        mask = np.zeros(self.m_total, dtype=bool)
        for i in range(self.agent_count):
            off = int(self.m_offsets[i])
            mask[off:off + int(self.p[i])] = True
        return mask

    def primal_cost(self, x) -> float:
        return float(sum(c.value(xi) for c, xi in zip(self.costs, self.split_primal(x))))

    def constraint_values(self, x) -> np.ndarray:
        G, e = self.global_matrix()
        return G @ _vector(x, self.n_total, "x") + e

    def feasibility_norms(self, x) -> tuple[float, float]:
        """(norm of positive part of inequality rows, norm of equality residual)."""
        v = self.constraint_values(x)
        mask = self.ineq_mask()
        return float(np.linalg.norm(np.maximum(v[mask], 0.0))), float(np.linalg.norm(v[~mask]))


# ---------------------------------------------------------------------------
# dual points


@dataclass
class DualPoint:
    """Per-agent dual blocks; the first p_i entries of block i are the inequality multipliers."""

    blocks: tuple[np.ndarray, ...]

    @classmethod
    def zeros(cls, problem: Problem) -> "DualPoint":
        return cls(tuple(np.zeros(int(problem.m[i])) for i in range(problem.agent_count)))

    @classmethod
    def from_stacked(cls, problem: Problem, y) -> "DualPoint":
        return cls(tuple(np.array(b) for b in problem.split_dual(y)))

    def stacked(self) -> np.ndarray:
        if not self.blocks:
            return np.zeros(0)
        return np.concatenate(self.blocks)

    def in_omega(self, problem: Problem, tol: float = 0.0) -> bool:
        for i, blk in enumerate(self.blocks):
            pi = int(problem.p[i])
            if pi and np.min(blk[:pi]) < -tol:
                return False
        return True


def _stacked_dual(problem: Problem, y) -> np.ndarray:
    if isinstance(y, DualPoint):
        return y.stacked()
    return _vector(y, problem.m_total, "y")


# ---------------------------------------------------------------------------
# operations


def eval_coupling(problem: Problem, i: int, j: int, x_j) -> np.ndarray:
    """g_{i,j}(x_j) = col(C x + d, A x - b); zero when j is not a neighbor of i."""
    blk = problem.blocks.get((i, j))
    if blk is None:
        x = _vector(x_j, None, "x_j")
        if x.shape[0] != problem.n[j]:
            raise DimensionError(f"x_j has length {x.shape[0]}, agent {j} has n={problem.n[j]}")
        return np.zeros(int(problem.m[i]))
    return blk.value(x_j)


def project_omega(problem: Problem, i: int, v) -> np.ndarray:
    """Project onto Omega_i: clamp the first p_i entries at zero, leave the rest."""
    v = _vector(v, int(problem.m[i]), "v")
    out = v.copy()
    pi = int(problem.p[i])
    if pi:
        np.maximum(out[:pi], 0.0, out=out[:pi])
    return out


def project_omega_stacked(problem: Problem, y) -> np.ndarray:
    y = _stacked_dual(problem, y).copy()
    mask = problem.ineq_mask()
    y[mask] = np.maximum(y[mask], 0.0)
    return y


def local_argmin(problem: Problem, i: int, aggregated_dual_term) -> np.ndarray:
    """Minimizer of f_i(x) + <x, lam>; lam is the caller-aggregated dual term."""
    return problem.costs[i].argmin(aggregated_dual_term)


def aggregated_dual_term(problem: Problem, i: int, y) -> np.ndarray:
    """lam_i = sum over j in N_i of G_{j,i}' y_j (blocks owned by the neighbors)."""
    y = _stacked_dual(problem, y)
    lam = np.zeros(int(problem.n[i]))
    for j in problem.graph.neighbors(i):
        blk = problem.blocks.get((j, i))
        if blk is not None and blk.m:
            lam += blk.stacked_matrix().T @ y[problem.y_slice(j)]
    return lam


def dual_value_and_gradient(problem: Problem, y) -> tuple[float, np.ndarray]:
    """Value and gradient of the concave dual q at y.

    q(y) = min_x f(x) + <g(x), y>; the gradient block i is
    sum over j in N_i of g_{i,j}(x*_j(y)) by the envelope theorem.
    """
    y = _stacked_dual(problem, y)
    xs = [local_argmin(problem, i, aggregated_dual_term(problem, i, y))
          for i in range(problem.agent_count)]
    grad = np.zeros(problem.m_total)
    for i in range(problem.agent_count):
        gi = np.zeros(int(problem.m[i]))
        for j in problem.graph.neighbors(i):
            blk = problem.blocks.get((i, j))
            if blk is not None and blk.m:
                gi += blk.value(xs[j])
        grad[problem.y_slice(i)] = gi
    value = sum(problem.costs[i].value(xs[i]) for i in range(problem.agent_count))
    value += float(np.dot(grad, y))
    return float(value), grad


def spectral_norm_power(M, rtol: float = 1e-10, max_iters: int = 10000) -> float:
    """Largest singular value by power iteration on M'M, safeguarded.

    Deterministic start vector; falls back to a dense SVD if the iteration
    has not met the relative tolerance within max_iters.
    """
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    n = M.shape[1]
    v = np.ones(n) + 1e-3 * np.arange(n)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iters):
        w = M.T @ (M @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v_new = w / nw
        sigma_new = float(np.sqrt(nw))
        if abs(sigma_new - sigma) <= rtol * max(sigma_new, 1e-300):
            return sigma_new
        sigma, v = sigma_new, v_new
    return float(np.linalg.norm(M, 2))


def coupling_lipschitz(problem: Problem, i: int, j: int, method: str = "auto") -> float:
    """Tight Lipschitz constant of g_{i,j}: the spectral norm of [C; A]."""
    blk = problem.blocks.get((i, j))
    if blk is None or blk.m == 0 or blk.n == 0:
        return 0.0
    M = blk.stacked_matrix()
    if method == "power" or (method == "auto" and min(M.shape) > 128):
        return spectral_norm_power(M)
    return float(np.linalg.norm(M, 2))


# ---------------------------------------------------------------------------
# validation


@dataclass
class Check:
    name: str
    status: str  # PASS | FAIL | WARN
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.status != "FAIL" for c in self.checks)

    def add(self, name: str, status: str, detail: str = "") -> None:
        self.checks.append(Check(name, status, detail))

    def __str__(self) -> str:
        width = max((len(c.name) for c in self.checks), default=0)
        return "\n".join(f"{c.name.ljust(width)}  {c.status}  {c.detail}".rstrip() for c in self.checks)


def _dependent_rows(A: np.ndarray, tol: float) -> list[int]:
    """Indices of rows outside a maximal independent set (QR with pivoting on A')."""
    from scipy.linalg import qr

    if A.shape[0] == 0:
        return []
    _, Rfac, piv = qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(Rfac)) if Rfac.size else np.zeros(0)
    ref = diag[0] if diag.size else 0.0
    rank = int(np.sum(diag > tol * max(ref, 1e-300)))
    return sorted(int(k) for k in piv[rank:])


def validate_problem(
    problem: Problem,
    slater_candidate=None,
    rank_rtol: float = 1e-10,
    eq_tol: float = 1e-8,
) -> ValidationReport:
    """Check the blanket regularity conditions; structural dimension errors are
    raised at construction, everything here is reported as PASS/FAIL/WARN."""
    rep = ValidationReport()

    rhos = [c.rho for c in problem.costs]
    bad = [i for i, rho in enumerate(rhos) if rho <= 0.0]
    if bad:
        rep.add("strong_convexity", "FAIL", f"non-positive-definite Hessian for agents {bad}")
    else:
        rep.add("strong_convexity", "PASS", f"min rho = {min(rhos):.6g}")

    g = problem.graph
    sym_ok = all(g.is_edge(j, i) for (i, j) in g.directed_pairs())
    loops_ok = all(i in g.neighbors(i) for i in range(g.agent_count))
    rep.add("graph_structure", "PASS" if (sym_ok and loops_ok) else "FAIL",
            "undirected with self-loops" if (sym_ok and loops_ok) else "missing symmetry or self-loops")

    A, _ = problem.equality_matrix()
    R = A.shape[0]
    if R == 0:
        rep.add("equality_rank", "PASS", "no equality rows")
    else:
        sv = np.linalg.svd(A, compute_uv=False)
        rank = int(np.sum(sv > rank_rtol * sv[0]))
        if rank == R:
            rep.add("equality_rank", "PASS", f"rank {rank} of {R} rows")
        else:
            dep = _dependent_rows(A, rank_rtol)
            rep.add("equality_rank", "FAIL", f"rank {rank} < {R}; dependent rows {dep}")

    if slater_candidate is None:
        rep.add("slater", "WARN", "no candidate point supplied; interior-point condition not checked")
        return rep

    xbar = _vector(slater_candidate, problem.n_total, "slater_candidate")
    box_margin = np.inf
    for i, cost in enumerate(problem.costs):
        if cost.has_box:
            xi = xbar[problem.x_slice(i)]
            box_margin = min(box_margin, float(np.min(xi - cost.lo)), float(np.min(cost.hi - xi)))
    v = problem.constraint_values(xbar)
    mask = problem.ineq_mask()
    ineq_margin = float(-np.max(v[mask])) if np.any(mask) else np.inf
    eq_resid = float(np.max(np.abs(v[~mask]))) if np.any(~mask) else 0.0

    ok = True
    details = []
    if box_margin <= 0.0:
        ok = False
        details.append(f"box margin {box_margin:.3g} (must be > 0)")
    elif np.isfinite(box_margin):
        details.append(f"box margin {box_margin:.3g}")
    if ineq_margin <= 0.0 and np.any(mask):
        ok = False
        details.append(f"inequality margin {ineq_margin:.3g} (strictness required)")
    elif np.any(mask):
        details.append(f"inequality margin {ineq_margin:.3g}")
    if eq_resid > eq_tol:
        ok = False
        details.append(f"equality residual {eq_resid:.3g} > tol {eq_tol:g}")
    else:
        details.append(f"equality residual {eq_resid:.3g}")
    rep.add("slater", "PASS" if ok else "FAIL", "; ".join(details))
    return rep
