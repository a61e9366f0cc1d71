"""Instance generators (consensus, DC optimal power flow) and instance file I/O.

Instance files are JSON: agents (dimension, Hessian, linear term, optional
box), coupling blocks, an optional strictly feasible candidate point, and
metadata. Floats round-trip losslessly (shortest-repr serialization);
unbounded box entries are stored as null.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .model import CouplingBlock, Graph, LocalCost, Problem

__all__ = [
    "Instance",
    "InstanceError",
    "gen_consensus_instance",
    "gen_dc_opf_instance",
    "dc_opf_slater_candidate",
    "save_instance",
    "load_instance",
    "ieee14_instance",
    "ieee14_path",
]

FORMAT_NAME = "asyncdual-instance"
FORMAT_VERSION = 1

_KNOWN_TOP = {"format", "version", "name", "description", "agents", "couplings", "slater_candidate"}
_KNOWN_AGENT = {"n", "hessian", "linear", "box"}
_KNOWN_COUPLING = {"owner", "source", "C", "d", "A", "b"}


class InstanceError(ValueError):
    """Schema violation or unreadable instance file."""


@dataclass
class Instance:
    problem: Problem
    slater_candidate: Optional[np.ndarray] = None
    name: str = ""
    description: str = ""


# ---------------------------------------------------------------------------
# generators


def gen_consensus_instance(local_minimizers, weights, graph: Graph) -> Problem:
    """Consensus reformulation of min_z sum_i w_i/2 (z - z_i)^2.

    Equality couplings realize the reduced Laplacian system L_{-1} x = 0:
    Laplacian row i is owned by agent i for i >= 1, agent 0 owns no rows.
    Connectedness makes the stacked equality matrix full row rank.
    """
    z = np.asarray(local_minimizers, dtype=float)
    w = np.asarray(weights, dtype=float)
    N = graph.agent_count
    if z.shape != (N,) or w.shape != (N,):
        raise ValueError("need one minimizer and one weight per agent")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    if not graph.is_connected():
        raise ValueError("consensus instance needs a connected graph")

    costs = [LocalCost.quadratic_diag([w[i]], [-w[i] * z[i]]) for i in range(N)]
    blocks = []
    for i in range(1, N):
        deg = len(graph.neighbors(i)) - 1  # self-loop excluded from the Laplacian degree
        for j in graph.neighbors(i):
            if j == i:
                blocks.append(CouplingBlock(i, i, np.zeros((0, 1)), [], [[float(deg)]], [0.0]))
            else:
                blocks.append(CouplingBlock(i, j, np.zeros((0, 1)), [], [[-1.0]], [0.0]))
    return Problem(graph, costs, blocks)


def _lines_to_matrix(lines, N: int) -> np.ndarray:
    B = np.zeros((N, N))
    for item in lines:
        if len(item) != 3:
            raise ValueError("each line is (bus_a, bus_b, susceptance)")
        a, b, s = int(item[0]), int(item[1]), float(item[2])
        if a == b or not (0 <= a < N and 0 <= b < N):
            raise ValueError(f"bad line ({a},{b})")
        if s <= 0:
            raise ValueError(f"line ({a},{b}) needs a positive susceptance")
        B[a, b] += s
        B[b, a] += s
    return B


def gen_dc_opf_instance(
    lines,
    demands,
    caps,
    cost_coeffs,
    phase_regularization: float = 1e-3,
    linear_costs=None,
) -> Problem:
    """DC optimal power flow as a coupled program.

    Bus i holds x_i = (P_i, psi_i): generated power and voltage phase. Bus i
    owns one equality row, the DC power balance
    P_i - sum_j B_{ij} (psi_i - psi_j) = P^d_i, and a box 0 <= P_i <= cap_i.
    The phase coordinate carries a quadratic regularization (coefficient
    ``phase_regularization``) to keep every local cost strongly convex; it
    perturbs the classical OPF solution and is a documented knob.
    """
    Pd = np.asarray(demands, dtype=float)
    cap = np.asarray(caps, dtype=float)
    c = np.asarray(cost_coeffs, dtype=float)
    N = Pd.shape[0]
    if cap.shape != (N,) or c.shape != (N,):
        raise ValueError("demands, caps and cost coefficients must share the bus count")
    if phase_regularization <= 0:
        raise ValueError("phase_regularization must be positive")
    if np.any(c <= 0):
        raise ValueError("quadratic cost coefficients must be positive")
    if np.any(cap <= 0) or np.any(Pd < 0):
        raise ValueError("caps must be positive and demands nonnegative")
    if not (np.sum(Pd) < np.sum(cap)):
        raise ValueError("total demand must be strictly below total capacity")
    B = _lines_to_matrix(lines, N)
    graph = Graph(N, [(a, b) for a in range(N) for b in range(a + 1, N) if B[a, b] > 0])
    if not graph.is_connected():
        raise ValueError("the line network must be connected")

    ql = np.zeros(N) if linear_costs is None else np.asarray(linear_costs, dtype=float)
    eps = float(phase_regularization)
    costs = [
        LocalCost.quadratic_diag(
            [c[i], eps], [ql[i], 0.0],
            lo=[0.0, -np.inf], hi=[cap[i], np.inf],
        )
        for i in range(N)
    ]
    blocks = []
    for i in range(N):
        for j in graph.neighbors(i):
            if j == i:
                row = np.array([[1.0, -float(np.sum(B[i]))]])
                blocks.append(CouplingBlock(i, i, np.zeros((0, 2)), [], row, [Pd[i]]))
            else:
                blocks.append(CouplingBlock(i, j, np.zeros((0, 2)), [], [[0.0, B[i, j]]], [0.0]))
    return Problem(graph, costs, blocks)


def dc_opf_slater_candidate(lines, demands, caps) -> np.ndarray:
    """Strictly feasible point for the DC-OPF instance: dispatch proportional
    to capacity (strictly interior) with phases balancing the flows."""
    Pd = np.asarray(demands, dtype=float)
    cap = np.asarray(caps, dtype=float)
    N = Pd.shape[0]
    B = _lines_to_matrix(lines, N)
    total = float(np.sum(Pd))
    share = 0.5 if total == 0.0 else total / float(np.sum(cap))
    P = cap * share
    if total == 0.0:
        P = np.minimum(cap * 0.5, 1e-3)
    L = np.diag(np.sum(B, axis=1)) - B
    psi = np.linalg.lstsq(L, P - Pd, rcond=None)[0]
    x = np.zeros(2 * N)
    x[0::2] = P
    x[1::2] = psi
    return x


# ---------------------------------------------------------------------------
# file I/O


def _floats(arr) -> list:
    return [float(v) for v in np.asarray(arr, dtype=float).ravel()]


def _matrix_rows(M: np.ndarray) -> list:
    return [[float(v) for v in row] for row in np.asarray(M, dtype=float)]


def _bound_out(v: float) -> Optional[float]:
    return None if not np.isfinite(v) else float(v)


def _bound_in(v, default: float) -> float:
    return default if v is None else float(v)


def save_instance(
    problem: Problem,
    path,
    slater_candidate=None,
    name: str = "",
    description: str = "",
) -> Path:
    agents = []
    for cost in problem.costs:
        entry = {"n": cost.dim, "linear": _floats(cost.linear)}
        if cost.is_diag:
            entry["hessian"] = {"diag": _floats(cost.diag)}
        else:
            entry["hessian"] = {"full": _matrix_rows(cost.full)}
        if cost.has_box:
            entry["box"] = {
                "lo": [_bound_out(v) for v in cost.lo],
                "hi": [_bound_out(v) for v in cost.hi],
            }
        agents.append(entry)
    couplings = []
    for (i, j) in sorted(problem.blocks):
        blk = problem.blocks[(i, j)]
        couplings.append({
            "owner": i,
            "source": j,
            "C": _matrix_rows(blk.C.reshape(blk.p, blk.n)),
            "d": _floats(blk.d),
            "A": _matrix_rows(blk.A.reshape(blk.r, blk.n)),
            "b": _floats(blk.b),
        })
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "name": name,
        "description": description,
        "agents": agents,
        "couplings": couplings,
    }
    if slater_candidate is not None:
        doc["slater_candidate"] = _floats(slater_candidate)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=1, allow_nan=False)
        fh.write("\n")
    return path


def _expect(cond: bool, where: str, message: str) -> None:
    if not cond:
        raise InstanceError(f"{where}: {message}")


def load_instance(path) -> Instance:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InstanceError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path} is not valid JSON: {exc}") from exc

    _expect(isinstance(doc, dict), str(path), "top level must be an object")
    _expect(doc.get("format") == FORMAT_NAME, "format", f"expected {FORMAT_NAME!r}")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise InstanceError(f"version: unsupported instance format version {version!r}")
    for key in doc:
        if key not in _KNOWN_TOP:
            warnings.warn(f"{path}: ignoring unknown field {key!r}", stacklevel=2)

    agents = doc.get("agents")
    _expect(isinstance(agents, list) and agents, "agents", "must be a nonempty list")
    costs = []
    for idx, entry in enumerate(agents):
        where = f"agents[{idx}]"
        _expect(isinstance(entry, dict), where, "must be an object")
        for key in entry:
            if key not in _KNOWN_AGENT:
                warnings.warn(f"{path}: ignoring unknown field {where}.{key}", stacklevel=2)
        n = entry.get("n")
        _expect(isinstance(n, int) and n >= 1, f"{where}.n", "must be a positive integer")
        hess = entry.get("hessian")
        _expect(isinstance(hess, dict) and ("diag" in hess) != ("full" in hess),
                f"{where}.hessian", "must hold exactly one of 'diag'/'full'")
        linear = entry.get("linear")
        _expect(isinstance(linear, list) and len(linear) == n, f"{where}.linear",
                f"must be a list of length {n}")
        lo = hi = None
        if "box" in entry:
            box = entry["box"]
            _expect(isinstance(box, dict) and "lo" in box and "hi" in box,
                    f"{where}.box", "must hold 'lo' and 'hi'")
            _expect(len(box["lo"]) == n and len(box["hi"]) == n, f"{where}.box",
                    f"bounds must have length {n}")
            lo = [_bound_in(v, -np.inf) for v in box["lo"]]
            hi = [_bound_in(v, np.inf) for v in box["hi"]]
        try:
            if "diag" in hess:
                _expect(len(hess["diag"]) == n, f"{where}.hessian.diag", f"must have length {n}")
                costs.append(LocalCost.quadratic_diag(hess["diag"], linear, lo=lo, hi=hi))
            else:
                _expect(lo is None, f"{where}.box", "box domains require a diagonal Hessian")
                costs.append(LocalCost(linear, full=np.asarray(hess["full"], dtype=float)))
        except (ValueError, TypeError) as exc:
            raise InstanceError(f"{where}: {exc}") from exc

    N = len(costs)
    couplings_doc = doc.get("couplings", [])
    _expect(isinstance(couplings_doc, list), "couplings", "must be a list")
    blocks = []
    edges = set()
    for idx, entry in enumerate(couplings_doc):
        where = f"couplings[{idx}]"
        _expect(isinstance(entry, dict), where, "must be an object")
        for key in entry:
            if key not in _KNOWN_COUPLING:
                warnings.warn(f"{path}: ignoring unknown field {where}.{key}", stacklevel=2)
        for key in ("owner", "source"):
            v = entry.get(key)
            _expect(isinstance(v, int) and 0 <= v < N, f"{where}.{key}",
                    f"must be an agent index below {N}")
        i, j = entry["owner"], entry["source"]
        nj = costs[j].dim
        try:
            blk = CouplingBlock(
                i, j,
                np.asarray(entry.get("C", []), dtype=float).reshape(-1, nj) if entry.get("C") else np.zeros((0, nj)),
                entry.get("d", []),
                np.asarray(entry.get("A", []), dtype=float).reshape(-1, nj) if entry.get("A") else np.zeros((0, nj)),
                entry.get("b", []),
            )
        except (ValueError, TypeError) as exc:
            raise InstanceError(f"{where}: {exc}") from exc
        blocks.append(blk)
        edges.add((min(i, j), max(i, j)))

    graph = Graph(N, edges)
    try:
        problem = Problem(graph, costs, blocks)
    except ValueError as exc:
        raise InstanceError(f"couplings: {exc}") from exc

    # strictness: an owner with declared rows must declare every neighbor block
    declared = {(blk.owner, blk.source) for blk in blocks}
    for i in range(N):
        if problem.m[i] == 0:
            continue
        for j in graph.neighbors(i):
            if (i, j) not in declared:
                raise InstanceError(
                    f"couplings: missing coupling block ({i},{j}) for a declared edge"
                )

    slater = doc.get("slater_candidate")
    if slater is not None:
        _expect(isinstance(slater, list) and len(slater) == problem.n_total,
                "slater_candidate", f"must be a list of length {problem.n_total}")
        slater = np.asarray(slater, dtype=float)
    return Instance(
        problem=problem,
        slater_candidate=slater,
        name=str(doc.get("name", "")),
        description=str(doc.get("description", "")),
    )


# ---------------------------------------------------------------------------
# bundled IEEE 14-bus data
#
# Topology and branch reactances follow the standard public IEEE 14-bus test
# case; loads are the standard values in per unit on a 100 MVA base.
# Susceptances are the inverted reactances scaled by IEEE14_SUSCEPTANCE_SCALE
# and the quadratic costs are simplified (uniform coefficients, synthetic
# caps on non-generator buses) so that the Theorem-style step sizes converge
# within the test budget; the instance file records this in its description.

IEEE14_BRANCH_REACTANCE = [
    (1, 2, 0.05917), (1, 5, 0.22304), (2, 3, 0.19797), (2, 4, 0.17632),
    (2, 5, 0.17388), (3, 4, 0.17103), (4, 5, 0.04211), (4, 7, 0.20912),
    (4, 9, 0.55618), (5, 6, 0.25202), (6, 11, 0.19890), (6, 12, 0.25581),
    (6, 13, 0.13027), (7, 8, 0.17615), (7, 9, 0.11001), (9, 10, 0.08450),
    (9, 14, 0.27038), (10, 11, 0.19207), (12, 13, 0.19988), (13, 14, 0.34802),
]
IEEE14_DEMAND_MW = [0.0, 21.7, 94.2, 47.8, 7.6, 11.2, 0.0, 0.0, 29.5, 9.0, 3.5, 6.1, 13.5, 14.9]
IEEE14_GEN_CAP_MW = {1: 332.4, 2: 140.0, 3: 100.0, 6: 100.0, 8: 100.0}
IEEE14_SUSCEPTANCE_SCALE = 0.03
IEEE14_NONGEN_CAP_MW = 60.0
IEEE14_PHASE_REG = 1.0
IEEE14_BASELOAD_PU = 0.05


def ieee14_inputs():
    """Generator inputs for the bundled 14-bus instance (per unit, 100 MVA).

    Every bus carries a small baseline auxiliary load on top of the standard
    values so that each bus dispatches strictly inside its generation box at
    the optimum; exactly active bounds make the dual tail semismooth and
    blow the convergence budget.
    """
    lines = [
        (a - 1, b - 1, IEEE14_SUSCEPTANCE_SCALE / x) for (a, b, x) in IEEE14_BRANCH_REACTANCE
    ]
    demands = [d / 100.0 + IEEE14_BASELOAD_PU for d in IEEE14_DEMAND_MW]
    caps = [
        IEEE14_GEN_CAP_MW.get(bus, IEEE14_NONGEN_CAP_MW) / 100.0 for bus in range(1, 15)
    ]
    costs = [1.0] * 14
    return lines, demands, caps, costs


def ieee14_instance() -> Instance:
    """Build the bundled 14-bus DC-OPF instance from its frozen inputs."""
    lines, demands, caps, costs = ieee14_inputs()
    problem = gen_dc_opf_instance(lines, demands, caps, costs,
                                  phase_regularization=IEEE14_PHASE_REG)
    slater = dc_opf_slater_candidate(lines, demands, caps)
    return Instance(
        problem=problem,
        slater_candidate=slater,
        name="ieee14-dcopf",
        description=(
            "DC optimal power flow on the IEEE 14-bus topology. Standard branch "
            "reactances and loads (100 MVA base); susceptances scaled by "
            f"{IEEE14_SUSCEPTANCE_SCALE} and simplified uniform quadratic costs with "
            "synthetic caps on non-generator buses, chosen so the theoretical step "
            "sizes converge within the test budget."
        ),
    )


def ieee14_path() -> Path:
    """Path of the bundled 14-bus instance file."""
    return Path(resources.files("asyncdual").joinpath("data/ieee14.json"))
