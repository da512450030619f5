"""Full-step Newton iteration on the KKT conditions of equality-constrained NLPs.

The solvers in this package all reduce to the same primitive: a square
primal-dual root-finding problem ``r(x) = 0`` whose Jacobian ``S(x)`` is a
symmetric indefinite KKT matrix.  This module provides

  - :class:`KktProblem`: the residual/matrix callback pair,
  - :func:`solve_kkt_linear`: a dense pivoted factorization for the
    saddle-point linear systems,
  - :func:`newton_solve`: the full-step Newton driver with a relative
    step-norm convergence test,
  - :func:`jacobian_check`: central finite differences for validating that
    ``matrix_fn`` really is the Jacobian of ``residual_fn``.

No line search or trust region is used: the target problems are solved from
cold or warm starts inside the local convergence area, and a full step
preserves the quadratic convergence rate that the tests assert.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg


class LinearSolveSingular(Exception):
    """The KKT matrix is numerically singular (e.g. redundant constraints)."""


class Diverged(Exception):
    """Newton iterates left the representable range (non-finite or huge)."""


class DimensionMismatch(ValueError):
    """An input vector or matrix has an inconsistent dimension."""


@dataclass(frozen=True)
class KktProblem:
    """A square primal-dual system r(x) = 0 with Jacobian S(x).

    ``matrix_fn`` must return the exact Jacobian of ``residual_fn``; this is
    testable with :func:`jacobian_check`.  Callbacks must be pure so that
    independent solves can run concurrently.
    """

    dim: int
    residual_fn: Callable[[np.ndarray], np.ndarray]
    matrix_fn: Callable[[np.ndarray], np.ndarray]
    description: str = ""


@dataclass(frozen=True)
class NewtonSettings:
    """Convergence controls: iterate until ||dx|| <= rel_tol * ||x||."""

    rel_tol: float = 1e-12
    max_iterations: int = 50
    record_trace: bool = False

    def __post_init__(self) -> None:
        if self.rel_tol <= 0.0:
            raise ValueError("rel_tol must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass
class NewtonResult:
    """Outcome of a Newton run, with per-iteration norms for convergence studies."""

    x_star: np.ndarray
    iterations: int
    converged: bool
    step_norms: list[float] = field(default_factory=list)
    residual_norms: list[float] = field(default_factory=list)
    iterates: list[np.ndarray] | None = None


_DIVERGENCE_NORM = 1e12


def solve_kkt_linear(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a dense (symmetric indefinite) linear system by pivoted LU.

    Partial pivoting handles the zero diagonal blocks of saddle-point
    matrices.  A pivot below ``1e-14 * max|S|`` raises
    :class:`LinearSolveSingular`, which callers interpret as rank deficiency
    (typically redundant constraints).
    """
    matrix = np.asarray(matrix, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = matrix.shape[0]
    if matrix.shape != (n, n):
        raise DimensionMismatch(f"matrix must be square, got {matrix.shape}")
    if rhs.shape != (n,):
        raise DimensionMismatch(f"rhs has dimension {rhs.shape}, expected ({n},)")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(matrix, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if np.min(pivots) <= 1e-14 * np.max(np.abs(matrix)):
        raise LinearSolveSingular(
            f"pivot {np.min(pivots):.3e} below threshold for {n}x{n} KKT matrix"
        )
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def newton_solve(
    problem: KktProblem,
    x0: np.ndarray,
    settings: NewtonSettings | None = None,
) -> NewtonResult:
    """Run a full-step Newton iteration on ``problem`` starting from ``x0``.

    Each iteration solves ``S(x) dx = -r(x)`` and applies the full step.  The
    run stops as soon as ``||dx|| <= rel_tol * ||x||`` (plain ``||dx|| <=
    rel_tol`` at ``x = 0``); otherwise it stops unconverged when the iteration
    budget is exhausted.  Non-finite iterates or ``||x|| > 1e12`` raise
    :class:`Diverged`; singular KKT matrices raise
    :class:`LinearSolveSingular`.
    """
    if settings is None:
        settings = NewtonSettings()
    x = np.array(x0, dtype=float)
    if x.shape != (problem.dim,):
        raise DimensionMismatch(
            f"x0 has dimension {x.shape}, expected ({problem.dim},)"
        )

    result = NewtonResult(x_star=x, iterations=0, converged=False)
    if settings.record_trace:
        result.iterates = [x.copy()]

    for k in range(1, settings.max_iterations + 1):
        r = problem.residual_fn(x)
        if not np.all(np.isfinite(r)):
            raise Diverged(f"non-finite residual at iteration {k}")
        rnorm = float(np.linalg.norm(r))
        if rnorm == 0.0:  # exactly at a root; no step needed
            result.converged = True
            break
        result.residual_norms.append(rnorm)

        dx = solve_kkt_linear(problem.matrix_fn(x), -r)
        x = x + dx
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > _DIVERGENCE_NORM:
            raise Diverged(f"iterate blew up at iteration {k}")

        step = float(np.linalg.norm(dx))
        result.step_norms.append(step)
        if settings.record_trace:
            result.iterates.append(x.copy())
        result.iterations = k

        norm_x = float(np.linalg.norm(x))
        threshold = settings.rel_tol * norm_x if norm_x > 0.0 else settings.rel_tol
        if step <= threshold:
            result.converged = True
            break

    result.x_star = x
    return result


def jacobian_check(
    problem: KktProblem,
    x: np.ndarray,
    step: float = 1e-6,
) -> float:
    """Max relative discrepancy between matrix_fn and finite differences.

    Central differences of ``residual_fn`` are compared entrywise against
    ``matrix_fn``; the returned value is
    ``max_ij |S_ij - fd_ij| / (1 + |S_ij|)``.  Callers assert a threshold.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    analytic = np.asarray(problem.matrix_fn(x), dtype=float)
    fd = np.empty_like(analytic)
    for j in range(problem.dim):
        xp = x.copy()
        xm = x.copy()
        xp[j] += step
        xm[j] -= step
        fd[:, j] = (problem.residual_fn(xp) - problem.residual_fn(xm)) / (2.0 * step)
    return float(np.max(np.abs(analytic - fd) / (1.0 + np.abs(analytic))))
