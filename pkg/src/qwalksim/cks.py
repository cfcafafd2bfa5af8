"""Chebyshev-series quantum linear solver (CKS method) on the walk.

The inverse of A/s is approximated by f(x) = (1 - (1 - x^2)^b) / x,
whose Chebyshev expansion has coefficients a_j = 4 (-1)^j P[X >= b+j+1]
with X ~ Binomial(2b, 1/2). Each odd-order Chebyshev term is produced
by walk powers: tau_j carries T_{2j+1}(A/s) b in its flag-zero part and
is advanced iteratively by Tdag W^2 T. The weighted running sum of the
tau states is accumulated as one merged sparse state, from which the
flag-zero success rate and the fidelity to the classical solution are
read per step.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from .errors import LayoutError, NormError, SimulationError
from .semiquantum import QramImage
from .state import SparseState
from .walk import (
    WalkContext,
    flag_zero_mass,
    flag_zero_vector,
    load_input,
    new_walk_state,
    reflection_p,
    t_tilde,
    t_tilde_adjoint,
    walk_swap,
    walk_w,
)

#: Convergence rule: stop once p and F both move less than this for
#: STOP_WINDOW consecutive steps.
STOP_TOL = 1e-9
STOP_WINDOW = 10


@dataclass(frozen=True)
class ChebyshevPlan:
    """Expansion order and coefficients for one (kappa, epsilon)."""

    kappa: float
    epsilon: float
    b: int
    j0: int
    coeffs: np.ndarray  # a_0 .. a_j0, alternating sign

    def __post_init__(self):
        if self.coeffs.shape != (self.j0 + 1,):
            raise SimulationError("coefficient table must cover j = 0..j0")


def chebyshev_plan(kappa: float, epsilon: float, force_b: int | None = None) -> ChebyshevPlan:
    """Build the plan: b = ceil(kappa^2 ln(kappa/eps)), j0 =
    ceil(sqrt(b ln(4b/eps))) capped at b-1 (coefficients vanish beyond),
    a_j = 4 (-1)^j P[X >= b+j+1] for X ~ Binomial(2b, 1/2).

    The binomial tails are evaluated through the regularized incomplete
    beta function, which stays accurate for b up to 1e8 and beyond.
    ``force_b`` overrides b for small-order symbolic checks.
    """
    if kappa < 1.0:
        raise SimulationError(f"condition number must be >= 1, got {kappa}")
    if not 0.0 < epsilon < 1.0:
        raise SimulationError(f"epsilon must lie in (0, 1), got {epsilon}")
    if force_b is not None:
        b = int(force_b)
        if b < 1:
            raise SimulationError("b must be positive")
    else:
        b = math.ceil(kappa * kappa * math.log(kappa / epsilon))
    j0 = min(math.ceil(math.sqrt(b * math.log(4.0 * b / epsilon))), b - 1)
    j = np.arange(j0 + 1)
    tails = binom.sf(b + j, 2 * b, 0.5)  # P[X >= b+j+1]
    coeffs = 4.0 * np.where(j % 2 == 0, 1.0, -1.0) * tails
    return ChebyshevPlan(float(kappa), float(epsilon), b, int(j0), coeffs)


@dataclass
class StepRecord:
    j: int
    p: float
    f: float | None
    branches: int
    millis: float


@dataclass
class SolverRun:
    """Iteration state: current tau, accumulated sum, and the trace."""

    tau: SparseState
    acc: SparseState
    ctx: WalkContext
    plan: ChebyshevPlan
    per_step: list[StepRecord] = field(default_factory=list)
    walk_steps: int = 0
    converged_at: int | None = None


def _apply_v(state: SparseState, ctx: WalkContext) -> None:
    # V = Tdag S T: one conjugated swap, the walk step minus its
    # reflection.
    t_tilde(state, ctx)
    walk_swap(state, ctx)
    t_tilde_adjoint(state, ctx)


def start_run(image: QramImage, sidecar: dict, b_vec: np.ndarray, plan: ChebyshevPlan,
              prune_tol: float = 1e-12) -> SolverRun:
    """Prepare tau_0 = Tdag W T |b, 0> and an empty accumulator."""
    b_vec = np.asarray(b_vec, dtype=np.float64)
    if abs(np.linalg.norm(b_vec) - 1.0) > 1e-9:
        raise NormError("input vector must be normalized")
    tau, ctx = new_walk_state(image, sidecar, prune_tol=prune_tol)
    load_input(tau, ctx, b_vec)
    # Tdag W T = V P; P is the identity on |b, 0> but applied for the
    # uniform step structure.
    reflection_p(tau, ctx)
    _apply_v(tau, ctx)
    acc = tau.copy()
    acc.replace_branches(acc._values[:, :0].copy(), acc._amps[:0].copy())
    return SolverRun(tau=tau, acc=acc, ctx=ctx, plan=plan, walk_steps=1)


def tau_step(run: SolverRun) -> None:
    """Advance tau_{j-1} to tau_j = Tdag W^2 T tau_{j-1}.

    Executed as (V P)^2 with V = Tdag S T: the inner Tdag T pairs of
    the literal composition cancel exactly and are not replayed.
    """
    for _ in range(2):
        reflection_p(run.tau, run.ctx)
        _apply_v(run.tau, run.ctx)
    run.walk_steps += 2


def accumulate(run: SolverRun, a_j: float) -> None:
    """acc += a_j * tau, merging branches with identical register
    values and pruning the fully cancelled ones."""
    acc, tau = run.acc, run.tau
    if [(r.uid, r.width) for r in acc.registers] != [(r.uid, r.width) for r in tau.registers]:
        raise LayoutError("accumulator and tau no longer share a register layout")
    vals = np.concatenate([acc._values, tau._values], axis=1)
    amps = np.concatenate([acc._amps, a_j * tau._amps])
    if amps.shape[0]:
        order = np.lexsort(vals[::-1])
        vals = vals[:, order]
        amps = amps[order]
        if amps.shape[0] > 1:
            changed = np.any(vals[:, 1:] != vals[:, :-1], axis=0)
            starts = np.concatenate([[0], np.nonzero(changed)[0] + 1])
        else:
            starts = np.array([0])
        merged = np.add.reduceat(amps, starts)
        vals = vals[:, starts]
        keep = np.abs(merged) > acc.prune_tol
        vals, merged = vals[:, keep], merged[keep]
    else:
        merged = amps
    acc.replace_branches(vals, merged)
    acc.note_op()


def success_rate(state: SparseState, ctx: WalkContext) -> float:
    """Probability that the non-row registers all measure zero."""
    total = state.norm()
    if total <= 0.0:
        raise NormError("success rate of a zero-norm state is undefined")
    return flag_zero_mass(state, ctx) / total


def fidelity(state: SparseState, ctx: WalkContext, target: np.ndarray) -> float:
    """Squared overlap of the renormalized flag-zero component with the
    normalized classical solution."""
    target = np.asarray(target, dtype=np.float64)
    target = target / np.linalg.norm(target)
    v = flag_zero_vector(state, ctx)
    mass = float(np.sum(np.abs(v) ** 2))
    if mass <= 0.0:
        raise NormError("state has no flag-zero mass")
    overlap = np.vdot(np.concatenate([target, np.zeros(v.shape[0] - target.shape[0])]), v)
    return float(abs(overlap) ** 2 / mass)


def cks_solve(
    image: QramImage,
    sidecar: dict,
    b_vec: np.ndarray,
    plan: ChebyshevPlan,
    max_steps: int | None = None,
    target: np.ndarray | None = None,
    prune_tol: float = 1e-12,
) -> SolverRun:
    """Run the accumulation up to ``max_steps`` (default: the full
    horizon j0), stopping early once p and F have both moved by less
    than 1e-9 for 10 consecutive steps."""
    horizon = plan.j0 if max_steps is None else int(max_steps)
    if horizon > plan.j0:
        raise SimulationError(f"max_steps {horizon} exceeds the plan horizon {plan.j0}")
    run = start_run(image, sidecar, b_vec, plan, prune_tol=prune_tol)
    prev_p = prev_f = None
    streak = 0
    for j in range(horizon + 1):
        t0 = time.perf_counter()
        if j > 0:
            tau_step(run)
        accumulate(run, float(plan.coeffs[j]))
        p = success_rate(run.acc, run.ctx)
        f = fidelity(run.acc, run.ctx, target) if target is not None else None
        ms = (time.perf_counter() - t0) * 1e3
        run.per_step.append(StepRecord(j, p, f, run.tau.num_branches, ms))
        if prev_p is not None:
            dp = abs(p - prev_p)
            df = abs(f - prev_f) if (f is not None and prev_f is not None) else 0.0
            streak = streak + 1 if (dp < STOP_TOL and df < STOP_TOL) else 0
            if streak >= STOP_WINDOW:
                run.converged_at = j
                break
        prev_p, prev_f = p, f
    return run
