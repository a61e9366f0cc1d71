"""Asynchronous distributed dual ascent for constraint-coupled convex programs.

Library + deterministic discrete-event simulator + experiment harness:
per-agent quadratic costs with affine coupling constraints, the projected
dual ascent in synchronous and partially asynchronous form, decentralized
step-size bounds, ground-truth oracles, instance generators (consensus,
DC optimal power flow) and CSV experiment records.
"""

from .model import (
    Graph,
    LocalCost,
    CouplingBlock,
    Problem,
    DualPoint,
    ValidationReport,
    validate_problem,
    eval_coupling,
    project_omega,
    local_argmin,
    aggregated_dual_term,
    dual_value_and_gradient,
    coupling_lipschitz,
)
from .constants import (
    ConstantsTable,
    compute_theta_pairs,
    compute_agent_constants,
    step_size_bound,
    choose_gammas,
)
from .agents import (
    AgentState,
    MailboxEntry,
    initial_agent_states,
    async_agent_update,
    outgoing_payloads,
    hold_step,
    sync_iteration,
    update_residual,
)
from .sim import (
    AgentSchedule,
    LinkSchedule,
    ScheduleConfig,
    Timeline,
    Trace,
    EarlyStop,
    RunResult,
    build_schedule,
    trace_timeline,
    measure_Q,
    run_async,
)
from .oracle import (
    ReferenceSolution,
    OracleError,
    kkt_solve,
    reference_solve,
    best_reference,
    finite_diff_gradient,
)
from .record import RunRecord
from . import kernels

__version__ = "0.1.0"


def kernel_backend() -> str:
    """Name of the kernel backend in use ("cy" compiled, "py" fallback)."""
    return kernels.active_backend_name()
