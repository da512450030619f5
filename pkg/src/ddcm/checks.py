"""Finite-difference consistency suites for every analytic derivative operator.

Each check draws seeded random states, compares an analytic Jacobian (or
second-derivative contraction) against central finite differences of the map
one level below, and records the worst relative discrepancy.  The CLI exposes
these as ``check-derivatives``; the test suite asserts the same thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import beam
from .assembly import apply_benchmark_loads, approx_problem, build_quarter_arc, cold_start_vector, layout_of
from .laws import LawKind, ManifoldLaw, PhasePoint, g_eval, g_hessian_contract, g_jacobians
from .newton import jacobian_check
from .truss import DIM as TRUSS_DIM
from .truss import fixnlp_problem, unit_truss


@dataclass(frozen=True)
class CheckResult:
    name: str
    worst: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.worst < self.threshold


def fd_jacobian(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central finite-difference Jacobian of a vector map."""
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[j] += step
        xm[j] -= step
        cols.append((np.asarray(f(xp)) - np.asarray(f(xm))) / (2.0 * step))
    return np.stack(cols, axis=-1)


def _rel_err(analytic: np.ndarray, fd: np.ndarray) -> float:
    return float(np.max(np.abs(analytic - fd) / (1.0 + np.abs(analytic))))


def _random_law(rng: np.random.Generator, kind: LawKind) -> ManifoldLaw:
    dim = 6
    a = rng.uniform(0.5, 2.0, dim)
    if kind in (LawKind.LINEAR_EXPLICIT, LawKind.LINEAR_IMPLICIT):
        b = c = np.zeros(dim)
    else:
        b = rng.uniform(-1.0, 1.0, dim)
        c = rng.uniform(-1.0, 1.0, dim)
    return ManifoldLaw(kind, a, b, c)


def check_law_jacobians(seed: int = 0, points: int = 10) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for kind in LawKind:
        law = _random_law(rng, kind)
        for _ in range(points):
            z = rng.uniform(-1.0, 1.0, 12)

            def g_of(z_vec: np.ndarray) -> np.ndarray:
                return g_eval(law, PhasePoint(z_vec[:6], z_vec[6:]))

            de_g, ds_g = g_jacobians(law, PhasePoint(z[:6], z[6:]))
            worst = max(worst, _rel_err(np.hstack([de_g, ds_g]), fd_jacobian(g_of, z)))
    return CheckResult("law jacobians vs FD of g", worst, 1e-6)


def check_law_hessians(seed: int = 1, points: int = 10) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for kind in LawKind:
        law = _random_law(rng, kind)
        for _ in range(points):
            z = rng.uniform(-1.0, 1.0, 12)
            xi = rng.uniform(-1.0, 1.0, 6)

            def contractions(z_vec: np.ndarray) -> np.ndarray:
                de_g, ds_g = g_jacobians(law, PhasePoint(z_vec[:6], z_vec[6:]))
                return np.concatenate([de_g.T @ xi, ds_g.T @ xi])

            blocks = g_hessian_contract(law, PhasePoint(z[:6], z[6:]), xi)
            analytic = np.block([[blocks[0], blocks[1]], [blocks[2], blocks[3]]])
            worst = max(worst, _rel_err(analytic, fd_jacobian(contractions, z)))
    return CheckResult("law hessian contractions vs FD of jacobians", worst, 1e-6)


def _random_element(rng: np.random.Generator) -> beam.ElementState:
    qa, qb = rng.uniform(-1.0, 1.0, (2, 12))
    return beam.ElementState(beam.NodeState.from_vector(qa), beam.NodeState.from_vector(qb), 0.05)


def check_beam_element_ops(seed: int = 2, points: int = 10) -> CheckResult:
    rng = np.random.default_rng(seed)
    gamma_ref = np.zeros(3)
    omega_ref = np.zeros(3)
    worst = 0.0

    def element_of(q: np.ndarray) -> beam.ElementState:
        return beam.ElementState(beam.NodeState.from_vector(q[:12]), beam.NodeState.from_vector(q[12:]), 0.05)

    for _ in range(points):
        q = rng.uniform(-1.0, 1.0, 24)
        elem = element_of(q)
        a = rng.uniform(-1.0, 1.0, 24)
        s = rng.uniform(-1.0, 1.0, 6)

        strain_of = lambda qv: beam.element_strain(element_of(qv), gamma_ref, omega_ref)
        worst = max(worst, _rel_err(beam.b_matrix(elem), fd_jacobian(strain_of, q)))
        ba_of = lambda qv: beam.b_matrix(element_of(qv)) @ a
        worst = max(worst, _rel_err(beam.b_matrix_derivative(elem, a), fd_jacobian(ba_of, q)))
        bts_of = lambda qv: beam.b_matrix(element_of(qv)).T @ s
        worst = max(worst, _rel_err(beam.geometric_stiffness(elem, s), fd_jacobian(bts_of, q)))
    return CheckResult("beam element operators vs FD", worst, 1e-6)


def check_beam_node_ops(seed: int = 3, points: int = 10) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(points):
        q = rng.uniform(-1.0, 1.0, 12)
        nu = rng.uniform(-1.0, 1.0, 6)
        a = rng.uniform(-1.0, 1.0, 12)
        b = rng.uniform(-1.0, 1.0, 6)

        h_of = lambda qv: beam.orthonormality_residual(beam.NodeState.from_vector(qv))
        worst = max(worst, _rel_err(beam.orthonormality_jacobian(beam.NodeState.from_vector(q)), fd_jacobian(h_of, q)))
        htnu_of = lambda qv: beam.orthonormality_jacobian(beam.NodeState.from_vector(qv)).T @ nu
        worst = max(worst, _rel_err(beam.constraint_hessian(nu), fd_jacobian(htnu_of, q)))
        nta_of = lambda qv: beam.null_space_basis(beam.NodeState.from_vector(qv)).T @ a
        worst = max(worst, _rel_err(beam.w1_matrix(a), fd_jacobian(nta_of, q)))
        nb_of = lambda qv: beam.null_space_basis(beam.NodeState.from_vector(qv)) @ b
        worst = max(worst, _rel_err(beam.w2_matrix(b), fd_jacobian(nb_of, q)))
    return CheckResult("beam nodal constraint operators vs FD", worst, 1e-6)


def check_truss_kkt(seed: int = 4, points: int = 10) -> CheckResult:
    rng = np.random.default_rng(seed)
    model = unit_truss()
    worst = 0.0
    for _ in range(points):
        pair = PhasePoint(rng.uniform(-3.0, 3.0, 1), rng.uniform(-3.0, 3.0, 1))
        problem = fixnlp_problem(model, pair)
        x = rng.uniform(-2.0, 2.0, TRUSS_DIM)
        worst = max(worst, jacobian_check(problem, x))
    return CheckResult("truss KKT matrix vs FD of residual", worst, 1e-5)


def check_global_kkt(seed: int = 5, points: int = 10, n_elements: int = 4) -> CheckResult:
    rng = np.random.default_rng(seed)
    structure = apply_benchmark_loads(build_quarter_arc(max(n_elements, 1))) if n_elements >= 20 else build_quarter_arc(n_elements)
    problem = approx_problem(structure)
    x0 = cold_start_vector(structure)
    dim = layout_of(structure).dim
    worst = 0.0
    for _ in range(points):
        x = x0 + 0.2 * rng.standard_normal(dim)
        worst = max(worst, jacobian_check(problem, x))
    return CheckResult(f"global KKT matrix vs FD ({structure.n_elements} elements)", worst, 1e-5)


def run_derivative_checks(seed: int = 0, points: int = 10) -> list[CheckResult]:
    return [
        check_law_jacobians(seed, points),
        check_law_hessians(seed + 1, points),
        check_beam_element_ops(seed + 2, points),
        check_beam_node_ops(seed + 3, points),
        check_truss_kkt(seed + 4, points),
        check_global_kkt(seed + 5, points),
    ]
