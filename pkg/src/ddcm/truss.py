"""Single nonlinear truss element and the measurement-enumeration solver.

The element carries six coordinates (both end positions), a quadratic
Green-Lagrange strain map, linear support constraints, and a constant
null-space basis.  For one fixed measurement pair the distance-minimizing
problem is a smooth equality-constrained NLP whose KKT system is solved by
full-step Newton; sweeping over a whole measurement set and taking the best
converged pair solves the enumeration problem, either cold-started per pair
or warm-started along the data ordering.

Primal-dual unknown layout (dimension 15):

    x = (q[0:6], e, s, lam, mu, nu[0:5])

with q the end coordinates, (e, s) the continuous strain/stress pair, lam
the compatibility multiplier, mu the reduced balance multiplier, and nu the
support-constraint multipliers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .laws import DataSet, PhasePoint
from .newton import (
    DimensionMismatch,
    Diverged,
    KktProblem,
    LinearSolveSingular,
    NewtonResult,
    NewtonSettings,
    newton_solve,
)

_Q = slice(0, 6)
_E, _S, _LAM, _MU = 6, 7, 8, 9
_NU = slice(10, 15)
DIM = 15


@dataclass(frozen=True)
class TrussModel:
    """Element data: strain quadratic form, supports, null basis, load, weight.

    Invariants: E_mat symmetric, H_mat @ N_mat = 0, N_mat full column rank.
    """

    E_mat: np.ndarray
    e_ref: float
    H_mat: np.ndarray
    h_ref: np.ndarray
    N_mat: np.ndarray
    f_ext: np.ndarray
    c_weight: float = 1.0

    def __post_init__(self) -> None:
        if not np.allclose(self.E_mat, self.E_mat.T):
            raise ValueError("E_mat must be symmetric")
        if np.max(np.abs(self.H_mat @ self.N_mat)) != 0.0:
            raise ValueError("N_mat must span the kernel of H_mat")
        if np.linalg.matrix_rank(self.N_mat) != self.N_mat.shape[1]:
            raise ValueError("N_mat must have full column rank")


def unit_truss(load: float = 20.0, c_weight: float = 1.0) -> TrussModel:
    """Unit-length element along the z axis, loaded longitudinally at the free end.

    The first five coordinates are fixed to zero; the free end coordinate is
    the last one, equal to 1 in the stress-free state.  With this scaling the
    strain is e(q) = (q6^2 - 1)/2 and the equilibrium under a longitudinal
    load P reduces to (q6^3 - q6)/2 = P.
    """
    eye = np.eye(3)
    E_mat = np.block([[eye, -eye], [-eye, eye]])
    H_mat = np.hstack([np.eye(5), np.zeros((5, 1))])
    N_mat = np.zeros((6, 1))
    N_mat[5, 0] = 1.0
    f_ext = np.zeros(6)
    f_ext[5] = load
    return TrussModel(E_mat, 0.5, H_mat, np.zeros(5), N_mat, f_ext, c_weight)


def stress_free_coordinates() -> np.ndarray:
    q = np.zeros(6)
    q[5] = 1.0
    return q


def truss_strain(model: TrussModel, q: np.ndarray) -> float:
    """Axial Green-Lagrange strain e(q) = q^T E q / 2 - e_ref."""
    q = np.asarray(q, dtype=float)
    if q.shape != (6,):
        raise DimensionMismatch("q must have six entries")
    return float(0.5 * q @ model.E_mat @ q - model.e_ref)


def cold_start_state(model: TrussModel) -> np.ndarray:
    """Stress-free configuration with zero states and multipliers."""
    x = np.zeros(DIM)
    x[_Q] = stress_free_coordinates()
    return x


def fixnlp_residual(model: TrussModel, x: np.ndarray, data_pair: PhasePoint) -> np.ndarray:
    """KKT residual for one fixed measurement pair.

    Blocks, in unknown order: stationarity in q, e, s; compatibility,
    reduced balance, support constraints.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (DIM,):
        raise DimensionMismatch(f"state has shape {x.shape}, expected ({DIM},)")
    if data_pair.dim != 1:
        raise DimensionMismatch("truss data pairs are scalar")
    q = x[_Q]
    e, s, lam, mu = x[_E], x[_S], x[_LAM], x[_MU]
    nu = x[_NU]
    c = model.c_weight
    Eq = model.E_mat @ q
    en = (model.E_mat @ model.N_mat).ravel()

    r = np.empty(DIM)
    r[_Q] = -lam * Eq + s * mu * en + model.H_mat.T @ nu
    r[_E] = c * (e - data_pair.strain[0]) + lam
    r[_S] = (s - data_pair.stress[0]) / c + mu * (q @ en)
    r[_LAM] = e - truss_strain(model, q)
    r[_MU] = s * (en @ q) - model.N_mat[:, 0] @ model.f_ext
    r[_NU] = model.H_mat @ q - model.h_ref
    return r


def fixnlp_matrix(model: TrussModel, x: np.ndarray) -> np.ndarray:
    """Symmetric indefinite KKT matrix (independent of e, nu, and the data pair)."""
    x = np.asarray(x, dtype=float)
    q = x[_Q]
    s, lam, mu = x[_S], x[_LAM], x[_MU]
    c = model.c_weight
    Eq = model.E_mat @ q
    en = (model.E_mat @ model.N_mat).ravel()

    S = np.zeros((DIM, DIM))
    S[_Q, _Q] = -lam * model.E_mat
    S[_Q, _S] = mu * en
    S[_S, _Q] = mu * en
    S[_Q, _LAM] = -Eq
    S[_LAM, _Q] = -Eq
    S[_Q, _MU] = s * en
    S[_MU, _Q] = s * en
    S[_Q, _NU] = model.H_mat.T
    S[_NU, _Q] = model.H_mat
    S[_E, _E] = c
    S[_E, _LAM] = 1.0
    S[_LAM, _E] = 1.0
    S[_S, _S] = 1.0 / c
    S[_S, _MU] = q @ en
    S[_MU, _S] = en @ q
    return S


def fixnlp_problem(model: TrussModel, data_pair: PhasePoint) -> KktProblem:
    return KktProblem(
        dim=DIM,
        residual_fn=lambda x: fixnlp_residual(model, x, data_pair),
        matrix_fn=lambda x: fixnlp_matrix(model, x),
        description=f"truss fixNLP at data pair ({data_pair.strain[0]:g}, {data_pair.stress[0]:g})",
    )


def pair_cost(model: TrussModel, x: np.ndarray, data_pair: PhasePoint) -> float:
    c = model.c_weight
    return float(
        0.5 * c * (x[_E] - data_pair.strain[0]) ** 2
        + 0.5 / c * (x[_S] - data_pair.stress[0]) ** 2
    )


class StartMode(str, Enum):
    COLD = "cold"
    WARM_ASCENDING = "warm-asc"
    WARM_DESCENDING = "warm-desc"


@dataclass
class PairResult:
    """Per-pair enumeration outcome; q, e, s are unpacked converged values."""

    index: int  # 0-based position in the dataset
    strain: float
    stress: float
    converged: bool
    iterations: int
    cost: float
    x: np.ndarray

    @property
    def free_coordinate(self) -> float:
        return float(self.x[5])

    @property
    def e(self) -> float:
        return float(self.x[_E])

    @property
    def s(self) -> float:
        return float(self.x[_S])


@dataclass
class SweepResult:
    mode: StartMode
    pairs: list[PairResult]
    best_index: int | None  # 0-based argmin of cost over converged pairs

    @property
    def best(self) -> PairResult | None:
        return None if self.best_index is None else self.pairs[self.best_index]

    def save_csv(self, path: str | Path) -> None:
        """One row per pair: index is 1-based to match data-pair numbering."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "strain", "stress", "converged", "iterations", "cost", "q", "e", "s"])
            for p in self.pairs:
                writer.writerow(
                    [p.index + 1, format(p.strain, ".17g"), format(p.stress, ".17g"),
                     int(p.converged), p.iterations, format(p.cost, ".17g"),
                     format(p.free_coordinate, ".17g"), format(p.e, ".17g"), format(p.s, ".17g")]
                )


def solve_fixnlp(
    model: TrussModel,
    data_pair: PhasePoint,
    x0: np.ndarray | None = None,
    settings: NewtonSettings | None = None,
) -> NewtonResult:
    if x0 is None:
        x0 = cold_start_state(model)
    return newton_solve(fixnlp_problem(model, data_pair), x0, settings)


def dcnlp_enumerate(
    model: TrussModel,
    data: DataSet,
    start: StartMode = StartMode.WARM_ASCENDING,
    settings: NewtonSettings | None = None,
) -> SweepResult:
    """Solve the fixed-pair NLP for every measurement and locate the best pair.

    Cold mode restarts every pair from the stress-free state; warm modes chain
    the previous converged solution through the data in ascending or
    descending strain order (the first solve of a warm sweep is cold).  Solver
    failures are recorded per pair and never abort the sweep.  The best pair
    is the converged cost argmin, ties broken by the lowest index.
    """
    if len(data) == 0:
        raise ValueError("dataset is empty")
    if settings is None:
        settings = NewtonSettings(rel_tol=1e-10)

    order = range(len(data)) if start != StartMode.WARM_DESCENDING else range(len(data) - 1, -1, -1)
    cold = cold_start_state(model)
    guess = cold.copy()
    results: dict[int, PairResult] = {}
    for i in order:
        pair = data.pair(i)
        x0 = cold if start == StartMode.COLD else guess
        converged, iterations, x = False, settings.max_iterations, x0
        try:
            run = newton_solve(fixnlp_problem(model, pair), x0, settings)
            converged, iterations, x = run.converged, run.iterations, run.x_star
        except (LinearSolveSingular, Diverged):
            pass
        cost = pair_cost(model, x, pair) if converged else float("nan")
        results[i] = PairResult(i, data.strains[i], data.stresses[i], converged, iterations, cost, np.asarray(x))
        if converged and start != StartMode.COLD:
            guess = np.array(x)

    pairs = [results[i] for i in range(len(data))]
    converged_idx = [i for i, p in enumerate(pairs) if p.converged]
    best = min(converged_idx, key=lambda i: (pairs[i].cost, i)) if converged_idx else None
    return SweepResult(start, pairs, best)
