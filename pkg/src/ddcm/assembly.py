"""Global manifold-constrained equilibrium problem for a beam structure.

The structure is a chain of two-node beam elements with fully fixed end
nodes.  Unknowns are grouped element-major then node-major:

    per element:   e_m, s_m, e, s, lam, xi   (6 components each)
    per free node: q (12), mu (6), nu (6)

where (e_m, s_m) is the strain/stress point constrained onto the
constitutive manifold, (e, s) the continuous strain/stress state, lam the
compatibility multipliers, xi the manifold multipliers, mu the reduced
balance multipliers, and nu the orthonormality multipliers.  Fixed nodes are
frozen at their reference coordinates and carry no constraints or
multipliers, which avoids redundancy between prescribed directors and the
orthonormality conditions.

Each element contributes through its single Gauss point with weight equal to
its reference arc length; the weight multiplies the element-level rows (cost,
compatibility, manifold) and the internal-force contribution to the nodal
balance, matching the integral form of the discrete equations.  The stress
distribution and all per-element outputs refer to that Gauss point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import beam
from .beam import ElementState, NodeState
from .laws import LawKind, ManifoldLaw, PhasePoint, g_eval, g_hessian_contract, g_jacobians
from .newton import DimensionMismatch, KktProblem, NewtonResult, NewtonSettings, newton_solve


class RankDeficientConstraints(Exception):
    """The constraint Jacobian lost row rank (degenerate director triad)."""


DEFAULT_N_ELEMENTS = 20


# ---------------------------------------------------------------------------
# Structure definition and builders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Structure:
    """Reference geometry, supports, loads, law, and cost weight of one model.

    Node and element indices are 0-based internally; file formats and reports
    use 1-based numbering along the arc.
    """

    nodes: tuple[NodeState, ...]
    elements: tuple[tuple[int, int], ...]
    lengths: np.ndarray
    fixed_nodes: frozenset[int]
    loads: np.ndarray  # (n_nodes, 3) point forces
    law: ManifoldLaw
    weight_c: np.ndarray  # (6, 6) SPD cost weight
    gamma_ref: np.ndarray  # (n_elements, 3)
    omega_ref: np.ndarray  # (n_elements, 3)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def free_nodes(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n_nodes) if i not in self.fixed_nodes)

    def element_state(self, k: int, coords: np.ndarray) -> ElementState:
        ia, ib = self.elements[k]
        return ElementState(
            NodeState.from_vector(coords[ia]),
            NodeState.from_vector(coords[ib]),
            float(self.lengths[k]),
        )

    def reference_coordinates(self) -> np.ndarray:
        """(n_nodes, 12) array of reference nodal vectors."""
        return np.array([n.to_vector() for n in self.nodes])

    def element_reference_strain(self, k: int) -> np.ndarray:
        return np.concatenate([self.gamma_ref[k], self.omega_ref[k]])


def _reference_strains(
    nodes: tuple[NodeState, ...],
    elements: tuple[tuple[int, int], ...],
    lengths: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    gamma_ref = np.empty((len(elements), 3))
    omega_ref = np.empty((len(elements), 3))
    for k, (ia, ib) in enumerate(elements):
        kin = beam.ElementKinematics.from_element(ElementState(nodes[ia], nodes[ib], float(lengths[k])))
        gamma_ref[k] = beam.gamma_strain(kin)
        omega_ref[k] = beam.omega_strain(kin)
    return gamma_ref, omega_ref


def make_structure(
    nodes,
    elements,
    lengths,
    fixed_nodes,
    loads,
    law: ManifoldLaw,
    weight_c: np.ndarray | None = None,
) -> Structure:
    """Assemble a Structure, deriving reference strains from the geometry."""
    nodes = tuple(nodes)
    elements = tuple((int(a), int(b)) for a, b in elements)
    lengths = np.asarray(lengths, dtype=float)
    loads = np.asarray(loads, dtype=float)
    if loads.shape != (len(nodes), 3):
        raise DimensionMismatch("loads must be an (n_nodes, 3) array")
    if law.dim != 6:
        raise DimensionMismatch("beam structures need a six-component law")
    if weight_c is None:
        weight_c = np.eye(6)
    weight_c = np.asarray(weight_c, dtype=float)
    gamma_ref, omega_ref = _reference_strains(nodes, elements, lengths)
    return Structure(
        nodes, elements, lengths, frozenset(int(i) for i in fixed_nodes),
        loads, law, weight_c, gamma_ref, omega_ref,
    )


def quarter_arc_radius() -> float:
    return 2.0 / np.pi


def build_quarter_arc(n_elements: int, law: ManifoldLaw | None = None) -> Structure:
    """Quarter circular arc of unit arc length, uniformly discretized.

    Nodes lie on p(t) = R (1 - cos t, sin t, 0) with R = 2/pi and t uniform in
    [0, pi/2]; the first node sits at the origin.  Reference directors: d3 is
    the unit tangent, d1 = (0, 0, 1), d2 = d3 x d1.  Both end nodes are fully
    fixed; every element has reference arc length 1/n_elements.  Loads start
    at zero.
    """
    if n_elements < 1:
        raise ValueError("need at least one element")
    if law is None:
        from .laws import beam_law_preset

        law = beam_law_preset("verification")
    radius = quarter_arc_radius()
    theta = np.linspace(0.0, 0.5 * np.pi, n_elements + 1)
    nodes = []
    for t in theta:
        pos = radius * np.array([1.0 - np.cos(t), np.sin(t), 0.0])
        d3 = np.array([np.sin(t), np.cos(t), 0.0])
        d1 = np.array([0.0, 0.0, 1.0])
        d2 = np.cross(d3, d1)
        nodes.append(NodeState(pos, d1, d2, d3))
    elements = [(k, k + 1) for k in range(n_elements)]
    lengths = np.full(n_elements, 1.0 / n_elements)
    loads = np.zeros((n_elements + 1, 3))
    return make_structure(nodes, elements, lengths, {0, n_elements}, loads, law)


def apply_benchmark_loads(structure: Structure) -> Structure:
    """Apply the combined vertical/horizontal point loads of the arc benchmark.

    1-based node bands: 2-4 get (-10, 0, -20) N, 8-14 get (7.5, -7.5, 15) N,
    18-20 get (0, 10, -20) N.
    """
    if structure.n_nodes < 21:
        raise ValueError("benchmark loads address nodes up to 20; structure is too small")
    loads = np.zeros_like(structure.loads)
    for node in range(1, 4):  # nodes 2-4
        loads[node] = (-10.0, 0.0, -20.0)
    for node in range(7, 14):  # nodes 8-14
        loads[node] = (7.5, -7.5, 15.0)
    for node in range(17, 20):  # nodes 18-20
        loads[node] = (0.0, 10.0, -20.0)
    return replace(structure, loads=loads)


# ---------------------------------------------------------------------------
# Unknown vector layout
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VariableLayout:
    """Slice bookkeeping for the element-major/node-major unknown vector."""

    n_elements: int
    free_nodes: tuple[int, ...]

    EM, SM, E, S, LAM, XI = range(6)  # element sub-block ids

    @property
    def n_free(self) -> int:
        return len(self.free_nodes)

    @property
    def dim(self) -> int:
        return 36 * self.n_elements + 24 * self.n_free

    def element_block(self, k: int, which: int) -> slice:
        base = 36 * k + 6 * which
        return slice(base, base + 6)

    def _node_pos(self, node: int) -> int:
        return self.free_nodes.index(node)

    def q_slice(self, node: int) -> slice:
        base = 36 * self.n_elements + 24 * self._node_pos(node)
        return slice(base, base + 12)

    def mu_slice(self, node: int) -> slice:
        base = 36 * self.n_elements + 24 * self._node_pos(node) + 12
        return slice(base, base + 6)

    def nu_slice(self, node: int) -> slice:
        base = 36 * self.n_elements + 24 * self._node_pos(node) + 18
        return slice(base, base + 6)

    def q_indices(self) -> np.ndarray:
        """x-indices of all free nodal coordinates, node-major (12 per node)."""
        return np.concatenate([np.arange(self.q_slice(n).start, self.q_slice(n).stop) for n in self.free_nodes])

    def element_views(self, x: np.ndarray) -> tuple[np.ndarray, ...]:
        """Views (n_elements, 6) for the six element sub-blocks."""
        body = x[: 36 * self.n_elements].reshape(self.n_elements, 6, 6)
        return tuple(body[:, which, :] for which in range(6))


def layout_of(structure: Structure) -> VariableLayout:
    return VariableLayout(structure.n_elements, structure.free_nodes)


def cold_start_vector(structure: Structure) -> np.ndarray:
    """Stress-free state: reference coordinates, zero states and multipliers."""
    lay = layout_of(structure)
    x = np.zeros(lay.dim)
    ref = structure.reference_coordinates()
    for n in structure.free_nodes:
        x[lay.q_slice(n)] = ref[n]
    return x


def _global_coordinates(structure: Structure, lay: VariableLayout, x: np.ndarray) -> np.ndarray:
    coords = structure.reference_coordinates()
    for n in structure.free_nodes:
        coords[n] = x[lay.q_slice(n)]
    return coords


def _loads_12(structure: Structure) -> np.ndarray:
    f = np.zeros((structure.n_nodes, 12))
    f[:, 0:3] = structure.loads
    return f


def _element_free_maps(structure: Structure, lay: VariableLayout):
    """Per element: local (0..23) positions of free coordinates and x-indices."""
    maps = []
    for ia, ib in structure.elements:
        loc: list[int] = []
        glob: list[int] = []
        for offset, node in ((0, ia), (12, ib)):
            if node in structure.fixed_nodes:
                continue
            sl = lay.q_slice(node)
            loc.extend(range(offset, offset + 12))
            glob.extend(range(sl.start, sl.stop))
        maps.append((np.array(loc, dtype=int), np.array(glob, dtype=int)))
    return maps


def _null_basis_mu(structure: Structure, coords: np.ndarray, mu_of) -> np.ndarray:
    """Per node, N(q_n) mu_n as a (n_nodes, 12) array (zero at fixed nodes)."""
    out = np.zeros((structure.n_nodes, 12))
    for n in structure.free_nodes:
        basis = beam.null_space_basis(NodeState.from_vector(coords[n]))
        out[n] = basis @ mu_of(n)
    return out


# ---------------------------------------------------------------------------
# Residual and KKT matrix
# ---------------------------------------------------------------------------


def approx_residual(structure: Structure, x: np.ndarray) -> np.ndarray:
    lay = layout_of(structure)
    x = np.asarray(x, dtype=float)
    if x.shape != (lay.dim,):
        raise DimensionMismatch(f"state has shape {x.shape}, expected ({lay.dim},)")
    em, sm, e, s, lam, xi = lay.element_views(x)
    coords = _global_coordinates(structure, lay, x)
    C = structure.weight_c
    Ci = np.linalg.inv(C)
    law = structure.law

    r = np.zeros(lay.dim)
    f_int = np.zeros((structure.n_nodes, 12))
    nmu = _null_basis_mu(structure, coords, lambda n: x[lay.mu_slice(n)])

    b_mats = []
    for k in range(structure.n_elements):
        elem = structure.element_state(k, coords)
        w = beam.element_quadrature(elem)
        ia, ib = structure.elements[k]
        B = beam.b_matrix(elem)
        b_mats.append(B)
        bts = B.T @ s[k]
        f_int[ia] += w * bts[:12]
        f_int[ib] += w * bts[12:]

        point = PhasePoint(em[k], sm[k])
        dge, dgs = g_jacobians(law, point)
        nmu_e = np.concatenate([nmu[ia], nmu[ib]])
        strain = beam.element_strain(elem, structure.gamma_ref[k], structure.omega_ref[k])

        r[lay.element_block(k, lay.EM)] = w * (-C @ (e[k] - em[k]) + dge.T @ xi[k])
        r[lay.element_block(k, lay.SM)] = w * (-Ci @ (s[k] - sm[k]) + dgs.T @ xi[k])
        r[lay.element_block(k, lay.E)] = w * (C @ (e[k] - em[k]) + lam[k])
        r[lay.element_block(k, lay.S)] = w * (Ci @ (s[k] - sm[k]) + B @ nmu_e)
        r[lay.element_block(k, lay.LAM)] = w * (e[k] - strain)
        r[lay.element_block(k, lay.XI)] = w * g_eval(law, point)

    balance = f_int - _loads_12(structure)

    # stationarity in q: strain term, stress term, then nodal constraint terms
    rq = np.zeros((structure.n_nodes, 12))
    for k in range(structure.n_elements):
        elem = structure.element_state(k, coords)
        w = beam.element_quadrature(elem)
        ia, ib = structure.elements[k]
        contrib = -w * (b_mats[k].T @ lam[k])
        nmu_e = np.concatenate([nmu[ia], nmu[ib]])
        contrib += w * (beam.geometric_stiffness(elem, s[k]) @ nmu_e)
        rq[ia] += contrib[:12]
        rq[ib] += contrib[12:]

    for n in structure.free_nodes:
        node = NodeState.from_vector(coords[n])
        mu_n = x[lay.mu_slice(n)]
        nu_n = x[lay.nu_slice(n)]
        rq[n] += beam.w2_matrix(mu_n).T @ balance[n]
        rq[n] += beam.orthonormality_jacobian(node).T @ nu_n
        r[lay.q_slice(n)] = rq[n]
        r[lay.mu_slice(n)] = beam.null_space_basis(node).T @ balance[n]
        r[lay.nu_slice(n)] = beam.orthonormality_residual(node)
    return r


def approx_kkt_matrix(structure: Structure, x: np.ndarray) -> np.ndarray:
    lay = layout_of(structure)
    x = np.asarray(x, dtype=float)
    em, sm, e, s, lam, xi = lay.element_views(x)
    coords = _global_coordinates(structure, lay, x)
    C = structure.weight_c
    Ci = np.linalg.inv(C)
    law = structure.law
    eye6 = np.eye(6)
    free_maps = _element_free_maps(structure, lay)
    qx = lay.q_indices()
    nq = qx.size

    S = np.zeros((lay.dim, lay.dim))
    u2_stress = np.zeros((nq, nq))  # d(f_int)/dq on the free subspace
    u2_lambda = np.zeros((nq, nq))
    f_int = np.zeros((structure.n_nodes, 12))
    nmu = _null_basis_mu(structure, coords, lambda n: x[lay.mu_slice(n)])
    qpos = {n: 12 * lay.free_nodes.index(n) for n in structure.free_nodes}

    for k in range(structure.n_elements):
        elem = structure.element_state(k, coords)
        w = beam.element_quadrature(elem)
        ia, ib = structure.elements[k]
        B = beam.b_matrix(elem)
        bts = B.T @ s[k]
        f_int[ia] += w * bts[:12]
        f_int[ib] += w * bts[12:]

        em_sl = lay.element_block(k, lay.EM)
        sm_sl = lay.element_block(k, lay.SM)
        e_sl = lay.element_block(k, lay.E)
        s_sl = lay.element_block(k, lay.S)
        lam_sl = lay.element_block(k, lay.LAM)
        xi_sl = lay.element_block(k, lay.XI)

        point = PhasePoint(em[k], sm[k])
        dge, dgs = g_jacobians(law, point)
        hee, hes, hse, hss = g_hessian_contract(law, point, xi[k])

        S[em_sl, em_sl] = w * (C + hee)
        S[em_sl, sm_sl] = w * hes
        S[sm_sl, em_sl] = w * hse
        S[sm_sl, sm_sl] = w * (Ci + hss)
        S[em_sl, e_sl] = -w * C
        S[e_sl, em_sl] = -w * C
        S[sm_sl, s_sl] = -w * Ci
        S[s_sl, sm_sl] = -w * Ci
        S[em_sl, xi_sl] = w * dge.T
        S[xi_sl, em_sl] = w * dge
        S[sm_sl, xi_sl] = w * dgs.T
        S[xi_sl, sm_sl] = w * dgs
        S[e_sl, e_sl] = w * C
        S[e_sl, lam_sl] = w * eye6
        S[lam_sl, e_sl] = w * eye6
        S[s_sl, s_sl] = w * Ci

        loc, glob = free_maps[k]
        S[lam_sl, glob] = -w * B[:, loc]
        S[glob, lam_sl] = -w * B[:, loc].T

        nmu_e = np.concatenate([nmu[ia], nmu[ib]])
        w2_pair = np.zeros((24, 24))
        for offset, node in ((0, ia), (12, ib)):
            if node in structure.fixed_nodes:
                continue
            w2_pair[offset : offset + 12, offset : offset + 12] = beam.w2_matrix(x[lay.mu_slice(node)])
        s_q = w * (beam.b_matrix_derivative(elem, nmu_e) + B @ w2_pair)
        S[s_sl, glob] += s_q[:, loc]
        S[glob, s_sl] += s_q[:, loc].T

        for offset, node in ((0, ia), (12, ib)):
            if node in structure.fixed_nodes:
                continue
            basis = beam.null_space_basis(NodeState.from_vector(coords[node]))
            block = w * (B[:, offset : offset + 12] @ basis)
            S[s_sl, lay.mu_slice(node)] += block
            S[lay.mu_slice(node), s_sl] += block.T

        u2s = beam.geometric_stiffness(elem, s[k])
        u2l = beam.geometric_stiffness(elem, lam[k])
        sub = np.array([qpos[n] + i for n in (ia, ib) if n not in structure.fixed_nodes for i in range(12)])
        u2_stress[np.ix_(sub, sub)] += w * u2s[np.ix_(loc, loc)]
        u2_lambda[np.ix_(sub, sub)] += w * u2l[np.ix_(loc, loc)]

    balance = f_int - _loads_12(structure)

    w2_blk = np.zeros((nq, nq))
    v_blk = np.zeros((nq, nq))
    for n in structure.free_nodes:
        sl = slice(qpos[n], qpos[n] + 12)
        w2_blk[sl, sl] = beam.w2_matrix(x[lay.mu_slice(n)])
        v_blk[sl, sl] = beam.constraint_hessian(x[lay.nu_slice(n)])
    coupling = u2_stress @ w2_blk
    s_qq = -u2_lambda + coupling + coupling.T + v_blk
    S[np.ix_(qx, qx)] += s_qq

    for n in structure.free_nodes:
        node = NodeState.from_vector(coords[n])
        H = beam.orthonormality_jacobian(node)
        S[lay.nu_slice(n), lay.q_slice(n)] = H
        S[lay.q_slice(n), lay.nu_slice(n)] = H.T
        rows = slice(qpos[n], qpos[n] + 12)
        mu_q = beam.null_space_basis(node).T @ u2_stress[rows, :]
        mu_q[:, rows.start : rows.stop] += beam.w1_matrix(balance[n])
        S[lay.mu_slice(n), qx] += mu_q
        S[np.ix_(qx, np.arange(lay.mu_slice(n).start, lay.mu_slice(n).stop))] += mu_q.T
    return S


def approx_problem(structure: Structure) -> KktProblem:
    return KktProblem(
        dim=layout_of(structure).dim,
        residual_fn=lambda x: approx_residual(structure, x),
        matrix_fn=lambda x: approx_kkt_matrix(structure, x),
        description=f"manifold NLP, {structure.n_elements} elements",
    )


# ---------------------------------------------------------------------------
# Solving and post-processing
# ---------------------------------------------------------------------------


@dataclass
class BeamSolution:
    structure: Structure
    x: np.ndarray
    newton: NewtonResult

    @property
    def layout(self) -> VariableLayout:
        return layout_of(self.structure)

    @property
    def iterations(self) -> int:
        return self.newton.iterations

    def coordinates(self) -> np.ndarray:
        """(n_nodes, 12) deformed coordinates, fixed nodes at reference."""
        return _global_coordinates(self.structure, self.layout, self.x)

    def node_state(self, n: int) -> NodeState:
        return NodeState.from_vector(self.coordinates()[n])

    def element_values(self, which: int) -> np.ndarray:
        return self.layout.element_views(self.x)[which].copy()

    def strains(self) -> np.ndarray:
        return self.element_values(VariableLayout.E)

    def residual_norm(self) -> float:
        return float(np.linalg.norm(approx_residual(self.structure, self.x)))


def solve_structure(structure: Structure, settings: NewtonSettings | None = None) -> BeamSolution:
    """Newton from the stress-free cold start; raises on solver failure."""
    if settings is None:
        settings = NewtonSettings(rel_tol=1e-12)
    result = newton_solve(approx_problem(structure), cold_start_vector(structure), settings)
    return BeamSolution(structure, result.x_star, result)


def stress_distribution(solution: BeamSolution) -> np.ndarray:
    """(n_elements, 6) stress resultants, consecutive along the arc."""
    return solution.element_values(VariableLayout.S)


@dataclass(frozen=True)
class SymmetryReport:
    """Mirror-pair classification of the stress distribution.

    Components 3, 4, 5 (axial force, both transversal moments) are compared
    directly between mirror elements; components 1, 2, 6 (transversal forces,
    torsion moment) with flipped sign.
    """

    symmetric_defect: float
    antisymmetric_defect: float
    max_abs_stress: float

    def passes(self, rel_tol: float = 1e-6) -> bool:
        scale = rel_tol * self.max_abs_stress
        return self.symmetric_defect <= scale and self.antisymmetric_defect <= scale


_SYMMETRIC_COMPONENTS = (2, 3, 4)
_ANTISYMMETRIC_COMPONENTS = (0, 1, 5)


def symmetry_diagnostics(solution: BeamSolution) -> SymmetryReport:
    s = stress_distribution(solution)
    mirrored = s[::-1]
    sym = float(np.max(np.abs(s[:, _SYMMETRIC_COMPONENTS] - mirrored[:, _SYMMETRIC_COMPONENTS])))
    anti = float(np.max(np.abs(s[:, _ANTISYMMETRIC_COMPONENTS] + mirrored[:, _ANTISYMMETRIC_COMPONENTS])))
    return SymmetryReport(sym, anti, float(np.max(np.abs(s))))


def null_space_projector(node: NodeState) -> np.ndarray:
    """Orthogonal projector onto ker H(q) at one node."""
    H = beam.orthonormality_jacobian(node)
    gram = H @ H.T
    if np.linalg.cond(gram) > 1e12:
        raise RankDeficientConstraints("constraint Jacobian is rank deficient")
    return np.eye(12) - H.T @ np.linalg.solve(gram, H)


def recover_multipliers(structure: Structure, coords: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Constraint-force multipliers chi = -(H H^T)^-1 H (f_int - f) per free node.

    ``coords`` is the (n_nodes, 12) nodal coordinate array and ``s`` the
    (n_elements, 6) stress array; the return value has one 6-vector per free
    node, ordered like Structure.free_nodes.
    """
    f_int = np.zeros((structure.n_nodes, 12))
    for k in range(structure.n_elements):
        elem = structure.element_state(k, coords)
        w = beam.element_quadrature(elem)
        ia, ib = structure.elements[k]
        bts = beam.b_matrix(elem).T @ s[k]
        f_int[ia] += w * bts[:12]
        f_int[ib] += w * bts[12:]
    balance = f_int - _loads_12(structure)

    chi = np.empty((len(structure.free_nodes), 6))
    for j, n in enumerate(structure.free_nodes):
        H = beam.orthonormality_jacobian(NodeState.from_vector(coords[n]))
        gram = H @ H.T
        if np.linalg.cond(gram) > 1e12:
            raise RankDeficientConstraints(f"rank-deficient constraints at node {n + 1}")
        chi[j] = -np.linalg.solve(gram, H @ balance[n])
    return chi


# ---------------------------------------------------------------------------
# File formats (1-based indices; see README)
# ---------------------------------------------------------------------------


def structure_to_json(structure: Structure) -> dict:
    return {
        "nodes": [
            {"pos": n.phi0.tolist(), "d1": n.d1.tolist(), "d2": n.d2.tolist(), "d3": n.d3.tolist()}
            for n in structure.nodes
        ],
        "elements": [[a + 1, b + 1] for a, b in structure.elements],
        "lengths": structure.lengths.tolist(),
        "fixed": [n + 1 for n in sorted(structure.fixed_nodes)],
        "loads": [
            {"node": i + 1, "force": structure.loads[i].tolist()}
            for i in range(structure.n_nodes)
            if np.any(structure.loads[i] != 0.0)
        ],
        "law": {
            "kind": structure.law.kind.value,
            "a": structure.law.a.tolist(),
            "b": structure.law.b.tolist(),
            "c": structure.law.c.tolist(),
        },
        "weight": "identity" if np.array_equal(structure.weight_c, np.eye(6)) else structure.weight_c.tolist(),
    }


def structure_from_json(doc: dict) -> Structure:
    nodes = [NodeState(np.array(n["pos"]), np.array(n["d1"]), np.array(n["d2"]), np.array(n["d3"])) for n in doc["nodes"]]
    elements = [(a - 1, b - 1) for a, b in doc["elements"]]
    if "lengths" in doc:
        lengths = np.asarray(doc["lengths"], dtype=float)
    else:
        lengths = np.array([float(np.linalg.norm(nodes[b].phi0 - nodes[a].phi0)) for a, b in elements])
    loads = np.zeros((len(nodes), 3))
    for entry in doc.get("loads", []):
        loads[entry["node"] - 1] = entry["force"]
    law_doc = doc["law"]
    law = ManifoldLaw(LawKind(law_doc["kind"]), np.array(law_doc["a"]), np.array(law_doc["b"]), np.array(law_doc["c"]))
    weight = doc.get("weight", "identity")
    weight_c = np.eye(6) if weight == "identity" else np.asarray(weight, dtype=float)
    fixed = {n - 1 for n in doc["fixed"]}
    return make_structure(nodes, elements, lengths, fixed, loads, law, weight_c)


def solution_to_json(solution: BeamSolution) -> dict:
    lay = solution.layout
    coords = solution.coordinates()
    em, sm, e, s, lam, xi = lay.element_views(solution.x)
    nodes = []
    for n in range(solution.structure.n_nodes):
        entry = {
            "phi0": coords[n, 0:3].tolist(),
            "d1": coords[n, 3:6].tolist(),
            "d2": coords[n, 6:9].tolist(),
            "d3": coords[n, 9:12].tolist(),
            "fixed": n in solution.structure.fixed_nodes,
        }
        if n in solution.structure.free_nodes:
            entry["mu"] = solution.x[lay.mu_slice(n)].tolist()
            entry["nu"] = solution.x[lay.nu_slice(n)].tolist()
        nodes.append(entry)
    elements = [
        {
            "e_manifold": em[k].tolist(),
            "s_manifold": sm[k].tolist(),
            "e": e[k].tolist(),
            "s": s[k].tolist(),
            "lambda": lam[k].tolist(),
            "xi": xi[k].tolist(),
        }
        for k in range(solution.structure.n_elements)
    ]
    return {
        "nodes": nodes,
        "elements": elements,
        "converged": solution.newton.converged,
        "iterations": solution.newton.iterations,
        "step_norms": solution.newton.step_norms,
        "residual_norms": solution.newton.residual_norms,
    }


def solution_vector_from_json(structure: Structure, doc: dict) -> np.ndarray:
    """Rebuild the unknown vector from a solution document for re-evaluation."""
    lay = layout_of(structure)
    x = np.zeros(lay.dim)
    for k, entry in enumerate(doc["elements"]):
        x[lay.element_block(k, lay.EM)] = entry["e_manifold"]
        x[lay.element_block(k, lay.SM)] = entry["s_manifold"]
        x[lay.element_block(k, lay.E)] = entry["e"]
        x[lay.element_block(k, lay.S)] = entry["s"]
        x[lay.element_block(k, lay.LAM)] = entry["lambda"]
        x[lay.element_block(k, lay.XI)] = entry["xi"]
    for n in structure.free_nodes:
        entry = doc["nodes"][n]
        x[lay.q_slice(n)] = entry["phi0"] + entry["d1"] + entry["d2"] + entry["d3"]
        x[lay.mu_slice(n)] = entry["mu"]
        x[lay.nu_slice(n)] = entry["nu"]
    return x


def save_json(doc: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=1))


def load_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def save_stress_csv(solution: BeamSolution, path: str | Path) -> None:
    """Per-element stress resultants, 1-based element index, along the arc."""
    s = stress_distribution(solution)
    with open(path, "w") as fh:
        fh.write("element,s1,s2,s3,s4,s5,s6\n")
        for k in range(s.shape[0]):
            fh.write(str(k + 1) + "," + ",".join(format(v, ".17g") for v in s[k]) + "\n")


def save_trace_csv(result: NewtonResult, path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write("iteration,step_norm,residual_norm\n")
        for i, (dx, rn) in enumerate(zip(result.step_norms, result.residual_norms), start=1):
            fh.write(f"{i},{format(dx, '.17g')},{format(rn, '.17g')}\n")
