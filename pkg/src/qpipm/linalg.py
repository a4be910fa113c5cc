"""Vector kernels: sparse products, preconditioned CG, dense pivoted solve."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .model import DimensionError, SparseMatrix


class PcgBreakdownError(RuntimeError):
    """Nonpositive curvature p'(Op p) <= 0: the operator is not SPD.

    Carries the best iterate found so far so the caller can decide whether
    to continue with it.
    """

    def __init__(self, result: "PcgResult"):
        super().__init__("PCG breakdown: operator is not positive definite")
        self.result = result


class SingularMatrixError(RuntimeError):
    """Pivot magnitude below the singularity threshold in dense_solve."""


@dataclass(frozen=True)
class PcgConfig:
    tol: float = 1e-7
    max_iters: int = 5000
    tol_is_relative: bool = True

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass(frozen=True)
class PcgResult:
    solution: np.ndarray
    iterations: int
    final_residual_norm: float
    converged: bool


def spmv(m: SparseMatrix, x: np.ndarray) -> np.ndarray:
    """y = M x."""
    x = np.asarray(x, dtype=np.float64)
    if len(x) != m.n_cols:
        raise DimensionError(f"vector length {len(x)} != n_cols {m.n_cols}")
    return m.csr @ x


def spmv_transpose(m: SparseMatrix, x: np.ndarray) -> np.ndarray:
    """y = M' x."""
    x = np.asarray(x, dtype=np.float64)
    if len(x) != m.n_rows:
        raise DimensionError(f"vector length {len(x)} != n_rows {m.n_rows}")
    return m.csr.T @ x


def pcg(apply_op: Callable[[np.ndarray], np.ndarray],
        apply_prec: Callable[[np.ndarray], np.ndarray],
        rhs: np.ndarray,
        cfg: PcgConfig,
        x0: Optional[np.ndarray] = None,
        callback: Optional[Callable[[int, np.ndarray, float], None]] = None) -> PcgResult:
    """Preconditioned conjugate gradients on an SPD operator.

    Convergence is measured on the UNpreconditioned residual ||rhs - Op x||_2,
    relative to ||rhs||_2 when cfg.tol_is_relative. The recurrence residual
    drives the loop; on acceptance the true residual is recomputed explicitly
    and the iteration restarts if drift pushed it back above the threshold.
    Returns the best iterate seen (by residual norm).

    Raises PcgBreakdownError when p'(Op p) <= 0 is encountered.
    """
    rhs = np.asarray(rhs, dtype=np.float64)
    threshold = cfg.tol * (np.linalg.norm(rhs) if cfg.tol_is_relative else 1.0)

    if x0 is None:
        x = np.zeros_like(rhs)
        r = rhs.copy()
    else:
        x = np.array(x0, dtype=np.float64)
        r = rhs - apply_op(x)
    rnorm = np.linalg.norm(r)
    best_x, best_rnorm = x.copy(), rnorm
    if rnorm <= threshold:
        return PcgResult(x, 0, rnorm, True)

    z = apply_prec(r)
    p = z.copy()
    rz = float(r @ z)
    for k in range(1, cfg.max_iters + 1):
        op_p = apply_op(p)
        pap = float(p @ op_p)
        if pap <= 0:
            raise PcgBreakdownError(PcgResult(best_x, k - 1, best_rnorm, False))
        alpha = rz / pap
        x += alpha * p
        r -= alpha * op_p
        rnorm = np.linalg.norm(r)
        if callback is not None:
            callback(k, x.copy(), rnorm)
        if rnorm < best_rnorm:
            best_x, best_rnorm = x.copy(), rnorm
        if rnorm <= threshold:
            true_r = rhs - apply_op(x)
            true_norm = np.linalg.norm(true_r)
            if true_norm <= threshold:
                return PcgResult(x, k, true_norm, True)
            # recurrence drifted: restart from the explicit residual
            r = true_r
            rnorm = true_norm
            if rnorm < best_rnorm:
                best_x, best_rnorm = x.copy(), rnorm
            z = apply_prec(r)
            p = z.copy()
            rz = float(r @ z)
            continue
        z = apply_prec(r)
        rz_next = float(r @ z)
        beta = rz_next / rz
        rz = rz_next
        p = z + beta * p

    true_norm = np.linalg.norm(rhs - apply_op(best_x))
    return PcgResult(best_x, cfg.max_iters, true_norm, true_norm <= threshold)


def dense_solve(m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Gaussian elimination with partial pivoting.

    Signals singularity when a pivot magnitude falls below 1e-14 * max|m|.
    Intended as the small-scale reference oracle, not a production path.
    """
    a = np.array(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError("matrix must be square")
    n = a.shape[0]
    x = np.array(rhs, dtype=np.float64)
    if len(x) != n:
        raise DimensionError("right-hand side length mismatch")
    if n == 0:
        return x
    max_abs = np.abs(a).max()
    if max_abs == 0.0:
        raise SingularMatrixError("zero matrix")
    pivot_tol = 1e-14 * max_abs

    for k in range(n):
        piv = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[piv, k]) < pivot_tol:
            raise SingularMatrixError(f"pivot {a[piv, k]:.3e} below threshold at column {k}")
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            x[[k, piv]] = x[[piv, k]]
        factors = a[k + 1:, k] / a[k, k]
        a[k + 1:, k + 1:] -= np.outer(factors, a[k, k + 1:])
        x[k + 1:] -= factors * x[k]

    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x
