"""Independent ground-truth solvers and numeric checkers.

Two-oracle policy: a direct KKT solve for equality-only instances without
boxes, and a long-run synchronous dual ascent for everything else. The two
agree on their common domain, which the tests exploit. Finite differences of
the dual value check the envelope-theorem gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from . import kernels
from .constants import compute_agent_constants
from .model import Problem, dual_value_and_gradient
from .packed import pack_problem

__all__ = [
    "ReferenceSolution",
    "OracleError",
    "kkt_solve",
    "reference_solve",
    "best_reference",
    "finite_diff_gradient",
]


class OracleError(RuntimeError):
    """Reference solve failed; carries the best residual reached."""

    def __init__(self, message: str, residual: float = math.nan):
        super().__init__(message)
        self.residual = residual


@dataclass
class ReferenceSolution:
    x_star: np.ndarray
    y_star: np.ndarray
    f_star: float
    method: str  # "kkt" | "long-run"
    residuals: dict = field(default_factory=dict)
    iterations: int = 0
    max_dual_norm: float = 0.0


def _kkt_applicable(problem: Problem) -> bool:
    if int(np.sum(problem.p)) != 0:
        return False
    return not any(c.has_box for c in problem.costs)


def kkt_solve(problem: Problem) -> ReferenceSolution:
    """Direct solve of the equality-constrained optimality system.

    Applicable when there are no inequality rows and no box domains; the
    symmetric indefinite system [H A'; A 0] [x; nu] = [-q; b] delivers the
    primal solution and one dual solution.
    """
    if not _kkt_applicable(problem):
        raise OracleError("kkt_solve needs an equality-only instance without boxes")
    n = problem.n_total
    H = scipy.linalg.block_diag(*[c.hessian_matrix() for c in problem.costs]) if n else np.zeros((0, 0))
    q = np.concatenate([c.linear for c in problem.costs]) if n else np.zeros(0)
    A, b = problem.equality_matrix()
    R = A.shape[0]
    KKT = np.zeros((n + R, n + R))
    KKT[:n, :n] = H
    KKT[:n, n:] = A.T
    KKT[n:, :n] = A
    rhs = np.concatenate([-q, b])
    try:
        sol = scipy.linalg.solve(KKT, rhs, assume_a="sym")
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise OracleError(f"singular KKT system (rank failure?): {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise OracleError("singular KKT system (non-finite solution)")
    x = sol[:n]
    nu = sol[n:]
    stat = float(np.linalg.norm(H @ x + q + A.T @ nu)) if n else 0.0
    feas = float(np.linalg.norm(A @ x - b)) if R else 0.0
    return ReferenceSolution(
        x_star=x,
        y_star=nu.copy(),
        f_star=problem.primal_cost(x),
        method="kkt",
        residuals={"stationarity": stat, "primal_feasibility": feas},
        iterations=0,
        max_dual_norm=float(np.linalg.norm(nu)),
    )


def reference_solve(
    problem: Problem,
    tol: float = 1e-10,
    max_iters: int = 2_000_000,
    y0=None,
    gamma: Optional[float] = None,
    backend: Optional[str] = None,
) -> ReferenceSolution:
    """Long-run synchronous dual ascent until the projected-step residual
    ||proj(y + gamma grad q(y)) - y|| / gamma falls below tol.

    Handles boxes and inequality couplings; raises OracleError (with the
    best residual) on non-convergence within max_iters.
    """
    packed = pack_problem(problem)
    if problem.m_total == 0:
        x = np.concatenate([c.argmin(np.zeros(c.dim)) for c in problem.costs])
        return ReferenceSolution(
            x_star=x, y_star=np.zeros(0), f_star=problem.primal_cost(x),
            method="long-run", residuals={"dual_ascent_residual": 0.0,
                                          "primal_feasibility": problem.feasibility_norms(x)[1]},
        )
    if gamma is None:
        table = compute_agent_constants(problem)
        phi_max = float(np.max(table.phi))
        gamma = 0.99 / phi_max if phi_max > 0 else 1.0
    y_start = np.zeros(problem.m_total) if y0 is None else np.asarray(y0, dtype=float)
    kern = kernels.get_backend(backend)
    out = kern.run_sync(packed, gamma, y_start, int(max_iters), float(tol), record=False)
    if not out["converged"]:
        raise OracleError(
            f"dual ascent did not reach tol={tol:g} within {max_iters} iterations "
            f"(best residual {out['residual']:.3e})",
            residual=float(out["residual"]),
        )
    x = out["x"]
    ineq_viol, eq_resid = problem.feasibility_norms(x)
    return ReferenceSolution(
        x_star=x,
        y_star=out["y"],
        f_star=problem.primal_cost(x),
        method="long-run",
        residuals={
            "dual_ascent_residual": float(out["residual"]),
            "primal_feasibility": ineq_viol + eq_resid,
            "dual_value": float(out["dual_value"]),
        },
        iterations=int(out["iterations"]),
        max_dual_norm=float(out["max_ynorm"]),
    )


def best_reference(problem: Problem, tol: float = 1e-10, max_iters: int = 2_000_000,
                   backend: Optional[str] = None) -> ReferenceSolution:
    """KKT solve whenever applicable, long-run dual ascent otherwise."""
    if _kkt_applicable(problem):
        return kkt_solve(problem)
    return reference_solve(problem, tol=tol, max_iters=max_iters, backend=backend)


def finite_diff_gradient(problem: Problem, y, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of the dual value, coordinate by coordinate.

    The caller keeps y in the region of interest (for inequality blocks,
    offset y >= h so both evaluation points stay in Omega).
    """
    y = np.asarray(y, dtype=float)
    grad = np.zeros_like(y)
    for t in range(y.shape[0]):
        yp = y.copy()
        ym = y.copy()
        yp[t] += h
        ym[t] -= h
        qp, _ = dual_value_and_gradient(problem, yp)
        qm, _ = dual_value_and_gradient(problem, ym)
        grad[t] = (qp - qm) / (2.0 * h)
    return grad
