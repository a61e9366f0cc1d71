"""Per-agent step-size constants and admissible step sizes.

Each agent's bound is computed from one- and two-hop neighborhood data only,
so the step-size choice is decentralized once the asynchrony level Q is
known. The four constants per agent i (pairwise coupling norms theta_{i,j},
strong convexity moduli rho_j):

    theta_i = sqrt(sum_{j in N_i} theta_{j,i}^2)
    phi_i   = sum_{j in N_i} theta_j^2 / rho_i
    ell_i   = sum_{j in N_i} theta_{i,j} * theta_j / rho_j
    xi_i    = sum_{j in N_i} sum_{l in N_j} theta_{l,j} * theta_j / rho_j

and the admissible step range is 1/gamma_i > phi_i/2 + (3/2) Q (ell_i + xi_i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .model import Problem, coupling_lipschitz

__all__ = [
    "ConstantsTable",
    "compute_theta_pairs",
    "compute_agent_constants",
    "step_size_bound",
    "choose_gammas",
    "constants_csv_rows",
]


@dataclass(frozen=True)
class ConstantsTable:
    """Step-size constants per agent; gamma stays None until choose_gammas runs."""

    theta_pairs: np.ndarray  # (N, N); theta_pairs[i, j] = norm of block (i owner, j source)
    rho: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    ell: np.ndarray
    xi: np.ndarray
    phi_denominator: str = "owner"
    Q: Optional[int] = None
    safety: Optional[float] = None
    scale: Optional[float] = None
    gamma: Optional[np.ndarray] = None
    admissible: Optional[bool] = None

    @property
    def agent_count(self) -> int:
        return self.theta.shape[0]

    def gamma_max(self, i: int, Q: int) -> float:
        return step_size_bound(self, i, Q)


def compute_theta_pairs(problem: Problem) -> np.ndarray:
    """Pairwise coupling Lipschitz constants; zero off the neighbor structure."""
    N = problem.agent_count
    out = np.zeros((N, N))
    for i in range(N):
        for j in problem.graph.neighbors(i):
            out[i, j] = coupling_lipschitz(problem, i, j)
    return out


def compute_agent_constants(
    problem: Problem,
    theta_pairs: Optional[np.ndarray] = None,
    phi_denominator: str = "owner",
) -> ConstantsTable:
    """Evaluate the four per-agent constants from neighborhood data.

    The loops below deliberately touch only N_i (and N_j for j in N_i); that
    locality is part of the contract and is asserted by the tests.

    ``phi_denominator`` selects the modulus in phi_i: "owner" uses rho_i as
    printed in the source formula, "neighbor" uses rho_j. Do not change the
    default without revisiting the admissibility guarantees.
    """
    if phi_denominator not in ("owner", "neighbor"):
        raise ValueError("phi_denominator must be 'owner' or 'neighbor'")
    N = problem.agent_count
    if theta_pairs is None:
        theta_pairs = compute_theta_pairs(problem)
    theta_pairs = np.asarray(theta_pairs, dtype=float)
    if theta_pairs.shape != (N, N):
        raise ValueError(f"theta_pairs must be ({N},{N})")
    for i in range(N):
        for j in problem.graph.neighbors(i):
            if not np.isfinite(theta_pairs[i, j]):
                raise ValueError(f"missing/invalid theta entry for edge ({i},{j})")

    rho = np.array([c.rho for c in problem.costs], dtype=float)
    nbrs = [problem.graph.neighbors(i) for i in range(N)]

    theta = np.zeros(N)
    for i in range(N):
        theta[i] = math.sqrt(sum(theta_pairs[j, i] ** 2 for j in nbrs[i]))

    phi = np.zeros(N)
    ell = np.zeros(N)
    xi = np.zeros(N)
    for i in range(N):
        for j in nbrs[i]:
            denom = rho[i] if phi_denominator == "owner" else rho[j]
            phi[i] += theta[j] ** 2 / denom
            ell[i] += theta_pairs[i, j] * theta[j] / rho[j]
            xi[i] += sum(theta_pairs[l, j] for l in nbrs[j]) * theta[j] / rho[j]

    return ConstantsTable(
        theta_pairs=theta_pairs,
        rho=rho,
        theta=theta,
        phi=phi,
        ell=ell,
        xi=xi,
        phi_denominator=phi_denominator,
    )


def step_size_bound(constants: ConstantsTable, i: int, Q: int) -> float:
    """Largest admissible step for agent i at asynchrony level Q (open bound).

    Returns +inf for a fully decoupled agent (zero denominator). Strictly
    decreasing in Q whenever ell_i + xi_i > 0.
    """
    if Q < 1:
        raise ValueError("Q must be a positive integer")
    denom = 0.5 * constants.phi[i] + 1.5 * Q * (constants.ell[i] + constants.xi[i])
    if denom == 0.0:
        return math.inf
    return 1.0 / denom


def choose_gammas(
    constants: ConstantsTable,
    Q: int,
    safety: float = 0.99,
    scale: float = 1.0,
) -> ConstantsTable:
    """Set gamma_i = scale * safety * gamma_max_i(Q).

    The admissibility bound is strict, so the run is guaranteed admissible
    only when scale * safety < 1; the flag records that. scale > 1 is the
    demonstration knob for running beyond the guaranteed range.
    """
    if not (0.0 < safety <= 1.0):
        raise ValueError("safety must be in (0, 1]")
    if scale <= 0.0:
        raise ValueError("scale must be positive")
    N = constants.agent_count
    gamma = np.zeros(N)
    for i in range(N):
        gmax = step_size_bound(constants, i, Q)
        gamma[i] = scale * safety * gmax if math.isfinite(gmax) else math.inf
    return replace(
        constants,
        Q=int(Q),
        safety=float(safety),
        scale=float(scale),
        gamma=gamma,
        admissible=bool(scale * safety < 1.0),
    )


def constants_csv_rows(constants: ConstantsTable, Q: Optional[int] = None) -> list[str]:
    """Rows for the constants dump: agent, theta, phi, ell, xi, gamma_max, gamma."""
    Q_eff = Q if Q is not None else constants.Q
    lines = ["agent,theta,phi,ell,xi,gamma_max,gamma"]
    for i in range(constants.agent_count):
        gmax = step_size_bound(constants, i, Q_eff) if Q_eff else float("nan")
        gam = constants.gamma[i] if constants.gamma is not None else float("nan")
        lines.append(
            f"{i},{constants.theta[i]!r},{constants.phi[i]!r},{constants.ell[i]!r},"
            f"{constants.xi[i]!r},{gmax!r},{gam!r}"
        )
    return lines
