"""The outer interior-point loop: PCG-driven Newton steps with a ratio test
line search and a residual-triggered barrier schedule."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .kkt import (BoundIndexMap, FullDirection, IterateState, KktOperator,
                  Residuals, apply_doubly_augmented, assemble_rhs,
                  build_operator, compute_residuals, jacobi_diagonal,
                  recover_directions)
from .linalg import PcgBreakdownError, PcgConfig, PcgResult, pcg
from .model import QpProblem


class InteriorityError(RuntimeError):
    """A step left the strictly positive region; indicates gamma >= 1 or a corrupted direction."""


class SolveStatus(enum.Enum):
    CONVERGED = "converged"
    ITERATION_LIMIT = "iteration_limit"
    LINEAR_SOLVER_FAILURE = "linear_solver_failure"


@dataclass(frozen=True)
class IpmConfig:
    gamma: float = 0.99
    mu_init: float = 1.0
    mu_tol: float = 1e-6
    mu_shrink: float = 10.0
    max_iters: int = 200
    pcg: PcgConfig = field(default_factory=PcgConfig)

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.mu_init <= 0 or self.mu_tol <= 0:
            raise ValueError("barrier parameters must be positive")
        if self.mu_shrink <= 1.0:
            raise ValueError("mu_shrink must exceed 1")


@dataclass(frozen=True)
class TraceRecord:
    iter: int
    mu: float
    primal_inf: float
    dual_inf: float
    compl_inf: float
    cg_iters: int
    cg_resid: float
    alpha_x: float
    alpha_lam: float


@dataclass(frozen=True)
class SolveReport:
    x: np.ndarray
    state: IterateState
    status: SolveStatus
    trace: list[TraceRecord]
    objective: float
    iterations: int
    wall_time: float


def initialize(problem: QpProblem, cfg: IpmConfig,
               bmap: BoundIndexMap | None = None) -> IterateState:
    """Starting point: box midpoints where available, unit slacks/multipliers."""
    if bmap is None:
        bmap = BoundIndexMap.from_problem(problem)
    lo, hi = problem.var_bounds.lower, problem.var_bounds.upper
    x = np.zeros(problem.n)
    both = np.isfinite(lo) & np.isfinite(hi)
    only_lo = np.isfinite(lo) & ~np.isfinite(hi)
    only_hi = ~np.isfinite(lo) & np.isfinite(hi)
    x[both] = 0.5 * (lo[both] + hi[both])
    x[only_lo] = lo[only_lo] + 1.0
    x[only_hi] = hi[only_hi] - 1.0

    ax = problem.a.csr @ x

    def slack(gap):
        return np.maximum(1.0, np.abs(gap))

    return IterateState(
        x=x,
        s_lA=slack(ax[bmap.lin_lower] - problem.lin_bounds.lower[bmap.lin_lower]),
        s_uA=slack(problem.lin_bounds.upper[bmap.lin_upper] - ax[bmap.lin_upper]),
        s_lx=slack(x[bmap.var_lower] - lo[bmap.var_lower]),
        s_ux=slack(hi[bmap.var_upper] - x[bmap.var_upper]),
        lam_e=np.zeros(problem.m_eq),
        lam_lA=np.ones(bmap.m_lin_lower),
        lam_uA=np.ones(bmap.m_lin_upper),
        lam_lx=np.ones(len(bmap.var_lower)),
        lam_ux=np.ones(len(bmap.var_upper)),
        mu=cfg.mu_init,
    )


def _ratio(values: np.ndarray, deltas: np.ndarray) -> float:
    neg = deltas < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-values[neg] / deltas[neg]))


def step_lengths(state: IterateState, direction: FullDirection,
                 gamma: float) -> tuple[float, float]:
    """Largest steps in [0, 1] keeping slacks and inequality multipliers positive.

    lam_e is excluded: its sign is unrestricted.
    """
    slack_ratio = min(
        _ratio(state.s_lA, direction.ds_lA),
        _ratio(state.s_uA, direction.ds_uA),
        _ratio(state.s_lx, direction.ds_lx),
        _ratio(state.s_ux, direction.ds_ux),
    )
    lam_ratio = min(
        _ratio(state.lam_lA, direction.d_lam_lA),
        _ratio(state.lam_uA, direction.d_lam_uA),
        _ratio(state.lam_lx, direction.d_lam_lx),
        _ratio(state.lam_ux, direction.d_lam_ux),
    )
    return min(1.0, gamma * slack_ratio), min(1.0, gamma * lam_ratio)


def apply_step(state: IterateState, direction: FullDirection,
               alpha_x: float, alpha_lam: float) -> IterateState:
    """Move x and slacks by alpha_x, all multipliers by alpha_lam."""
    new = IterateState(
        x=state.x + alpha_x * direction.dx,
        s_lA=state.s_lA + alpha_x * direction.ds_lA,
        s_uA=state.s_uA + alpha_x * direction.ds_uA,
        s_lx=state.s_lx + alpha_x * direction.ds_lx,
        s_ux=state.s_ux + alpha_x * direction.ds_ux,
        lam_e=state.lam_e + alpha_lam * direction.d_lam_e,
        lam_lA=state.lam_lA + alpha_lam * direction.d_lam_lA,
        lam_uA=state.lam_uA + alpha_lam * direction.d_lam_uA,
        lam_lx=state.lam_lx + alpha_lam * direction.d_lam_lx,
        lam_ux=state.lam_ux + alpha_lam * direction.d_lam_ux,
        mu=state.mu,
    )
    if new.min_interior() <= 0.0:
        raise InteriorityError("step left the strict interior")
    return new


def infeasibilities(res: Residuals) -> tuple[float, float, float]:
    """Euclidean norms of the primal, dual and complementarity blocks."""
    primal = float(np.linalg.norm(np.concatenate(
        [res.r_lA, res.r_uA, res.r_lx, res.r_ux])))
    dual = float(np.linalg.norm(res.r_H))
    compl = float(np.linalg.norm(np.concatenate(
        [res.r_c1, res.r_c2, res.r_c3, res.r_c4])))
    return primal, dual, compl


def update_barrier(mu: float, residual_norm: float,
                   cfg: IpmConfig) -> tuple[float, bool]:
    """Shrink mu when the full residual norm drops below it; terminate below mu_tol."""
    if residual_norm < mu:
        if mu < cfg.mu_tol:
            return mu, True
        return mu / cfg.mu_shrink, False
    return mu, False


DirectionSolver = Callable[[KktOperator, np.ndarray, PcgConfig], PcgResult]


def _pcg_direction(op: KktOperator, rhs: np.ndarray, cfg: PcgConfig) -> PcgResult:
    inv_diag = 1.0 / jacobi_diagonal(op)
    return pcg(lambda v: apply_doubly_augmented(op, v),
               lambda v: inv_diag * v, rhs, cfg)


def solve(problem: QpProblem, cfg: IpmConfig | None = None,
          direction_solver: DirectionSolver = _pcg_direction,
          verbose: bool = False) -> SolveReport:
    """Run the interior-point loop to convergence or an iteration limit.

    direction_solver is a hook for substituting the linear solver (used by
    tests to compare PCG against a dense factorization).
    """
    if cfg is None:
        cfg = IpmConfig()
    t0 = time.perf_counter()
    bmap = BoundIndexMap.from_problem(problem)
    state = initialize(problem, cfg, bmap)
    res = compute_residuals(problem, state, bmap)
    trace: list[TraceRecord] = []
    status = SolveStatus.ITERATION_LIMIT

    for it in range(1, cfg.max_iters + 1):
        op = build_operator(problem, state, bmap)
        rhs = assemble_rhs(op, res, state)
        try:
            cg = direction_solver(op, rhs, cfg.pcg)
        except PcgBreakdownError as exc:
            cg = exc.result
        dx, d_lam_a = op.split(cg.solution)
        if not np.all(np.isfinite(cg.solution)):
            status = SolveStatus.LINEAR_SOLVER_FAILURE
            break
        direction = recover_directions(op, dx, d_lam_a, res, state)

        alpha_x, alpha_lam = step_lengths(state, direction, cfg.gamma)
        state = apply_step(state, direction, alpha_x, alpha_lam)
        res = compute_residuals(problem, state, bmap)
        primal, dual, compl = infeasibilities(res)
        trace.append(TraceRecord(
            iter=it, mu=state.mu, primal_inf=primal, dual_inf=dual,
            compl_inf=compl, cg_iters=cg.iterations,
            cg_resid=cg.final_residual_norm,
            alpha_x=alpha_x, alpha_lam=alpha_lam))
        if verbose:
            print(f"iter {it:4d}  mu {state.mu:9.3e}  primal {primal:9.3e}  "
                  f"dual {dual:9.3e}  compl {compl:9.3e}  cg {cg.iterations:5d}  "
                  f"alpha ({alpha_x:.3f}, {alpha_lam:.3f})")

        new_mu, terminate = update_barrier(state.mu, res.norm(), cfg)
        if terminate:
            status = SolveStatus.CONVERGED
            break
        if new_mu != state.mu:
            state.mu = new_mu
            res = compute_residuals(problem, state, bmap)

    return SolveReport(
        x=state.x.copy(), state=state, status=status, trace=trace,
        objective=problem.objective(state.x), iterations=len(trace),
        wall_time=time.perf_counter() - t0)
