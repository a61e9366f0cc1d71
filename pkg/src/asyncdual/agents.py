"""Per-agent update rules: the asynchronous step, holds, the synchronous
baseline, and the projected-step residual diagnostic.

These are the object-level reference semantics; the simulator's packed
kernels implement the same maps and are cross-checked against this module in
the tests. An agent's update consumes one atomic snapshot of its mailbox:
stale neighbor duals feed the argmin, stale sender-evaluated g-blocks feed
the projected dual step.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .constants import ConstantsTable
from .model import (
    Problem,
    aggregated_dual_term,
    eval_coupling,
    local_argmin,
    project_omega,
)

__all__ = [
    "MailboxEntry",
    "AgentState",
    "initial_agent_states",
    "async_agent_update",
    "outgoing_payloads",
    "deliver_message",
    "hold_step",
    "sync_iteration",
    "update_residual",
]


@dataclass(frozen=True)
class MailboxEntry:
    """Last received data of one neighbor: its dual block, the sender-evaluated
    coupling value g_{i,j}(x_j), and the event counter stamping both."""

    y_stale: np.ndarray
    g_stale: np.ndarray
    origin_counter: int


@dataclass
class AgentState:
    x: np.ndarray
    y: np.ndarray
    mailbox: dict[int, MailboxEntry]


def initial_agent_states(problem: Problem) -> list[AgentState]:
    """y_i = 0, x_i = argmin f_i; mailboxes seeded with the true initial values."""
    xs = [problem.costs[i].argmin(np.zeros(int(problem.n[i]))) for i in range(problem.agent_count)]
    states = []
    for i in range(problem.agent_count):
        mailbox = {}
        for j in problem.graph.neighbors(i):
            mailbox[j] = MailboxEntry(
                y_stale=np.zeros(int(problem.m[j])),
                g_stale=eval_coupling(problem, i, j, xs[j]),
                origin_counter=0,
            )
        states.append(AgentState(x=xs[i].copy(), y=np.zeros(int(problem.m[i])), mailbox=mailbox))
    return states


def _stale_dual_term(problem: Problem, i: int, mailbox: Mapping[int, MailboxEntry]) -> np.ndarray:
    lam = np.zeros(int(problem.n[i]))
    for j in problem.graph.neighbors(i):
        try:
            entry = mailbox[j]
        except KeyError:
            raise ValueError(f"agent {i} is missing the mailbox entry for neighbor {j}") from None
        blk = problem.blocks.get((j, i))
        if blk is not None and blk.m:
            lam += blk.stacked_matrix().T @ entry.y_stale
    return lam


def _stale_gradient(problem: Problem, i: int, mailbox: Mapping[int, MailboxEntry]) -> np.ndarray:
    gsum = np.zeros(int(problem.m[i]))
    for j in problem.graph.neighbors(i):
        try:
            gsum += mailbox[j].g_stale
        except KeyError:
            raise ValueError(f"agent {i} is missing the mailbox entry for neighbor {j}") from None
    return gsum


def async_agent_update(problem: Problem, constants: ConstantsTable, i: int, state: AgentState) -> AgentState:
    """One asynchronous step from the mailbox snapshot.

    x+ = argmin f_i + <., sum_j G_{j,i}' y_j_stale>
    y+ = proj(y + gamma_i * sum_j g_stale_j)
    """
    if constants.gamma is None:
        raise ValueError("constants.gamma is not set")
    lam = _stale_dual_term(problem, i, state.mailbox)
    gsum = _stale_gradient(problem, i, state.mailbox)
    x_new = local_argmin(problem, i, lam)
    y_new = project_omega(problem, i, state.y + constants.gamma[i] * gsum)
    return AgentState(x=x_new, y=y_new, mailbox=state.mailbox)


def outgoing_payloads(problem: Problem, i: int, state: AgentState) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Sender-evaluated payloads after an update: neighbor l gets (y_i, g_{l,i}(x_i)).

    The receiver never sees x_i nor the coupling blocks of other agents.
    """
    out = {}
    for l in problem.graph.neighbors(i):
        if l != i:
            out[l] = (state.y.copy(), eval_coupling(problem, l, i, state.x))
    return out


def deliver_message(state: AgentState, j: int, y_stale, g_stale, origin_counter: int) -> AgentState:
    """Mailbox write honoring freshness: only strictly newer data replaces an entry."""
    current = state.mailbox.get(j)
    if current is not None and origin_counter <= current.origin_counter:
        return state
    mailbox = dict(state.mailbox)
    mailbox[j] = MailboxEntry(
        y_stale=np.asarray(y_stale, dtype=float).copy(),
        g_stale=np.asarray(g_stale, dtype=float).copy(),
        origin_counter=int(origin_counter),
    )
    return AgentState(x=state.x, y=state.y, mailbox=mailbox)


def hold_step(state: AgentState) -> AgentState:
    """Inactive counters leave the iterates untouched (deliveries may still land)."""
    return state


def sync_iteration(problem: Problem, gamma: float, x, y) -> tuple[np.ndarray, np.ndarray]:
    """One synchronous round: fresh duals into the argmin, fresh primals into
    the dual step, two information exchanges per counter."""
    y = np.asarray(y, dtype=float)
    x_new = np.concatenate([
        local_argmin(problem, i, aggregated_dual_term(problem, i, y))
        for i in range(problem.agent_count)
    ]) if problem.agent_count else np.zeros(0)
    y_new = np.zeros(problem.m_total)
    for i in range(problem.agent_count):
        gi = np.zeros(int(problem.m[i]))
        for j in problem.graph.neighbors(i):
            blk = problem.blocks.get((i, j))
            if blk is not None and blk.m:
                gi += blk.value(x_new[problem.x_slice(j)])
        y_new[problem.y_slice(i)] = project_omega(
            problem, i, y[problem.y_slice(i)] + gamma * gi
        )
    return x_new, y_new


def update_residual(
    problem: Problem,
    constants: ConstantsTable,
    i: int,
    state: AgentState,
    was_active: bool,
) -> np.ndarray:
    """Projected-step residual s_i: zero on hold counters."""
    if not was_active:
        return np.zeros(int(problem.m[i]))
    if constants.gamma is None:
        raise ValueError("constants.gamma is not set")
    gamma = float(constants.gamma[i])
    if gamma == 0.0 or not np.isfinite(gamma):
        raise ValueError(f"agent {i}: residual undefined for gamma={gamma}")
    gsum = _stale_gradient(problem, i, state.mailbox)
    stepped = project_omega(problem, i, state.y + gamma * gsum)
    return (stepped - state.y) / gamma
