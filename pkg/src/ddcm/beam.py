"""Element-level machinery of the geometrically exact three-director beam.

Each node carries twelve coordinates: the centroid position and three
directors that span the cross-section frame (orthonormality is imposed by
nodal constraints, not by construction).  Two-node elements are integrated
with a single midpoint Gauss point, so a field evaluates to the average of
its nodal values and its arc-length derivative to the directed nodal
difference divided by the reference element length.

Strain measures at the Gauss point:

    gamma_i = d_i . phi0'        (shear 1, 2; elongation 3)
    omega_1 = (d3 . d2' - d2 . d3') / 2      (bending; cyclic for 2, 3)

Both are quadratic forms of the 24 nodal coordinates.  The module builds the
six constant symmetric 24x24 forms G_i once per element length and derives
everything from them:

    strain_i(q)  = q^T G_i q / 2  -  reference offset
    B(q)         = rows q^T G_i          (strain Jacobian)
    dq(B(q) a)   = rows a^T G_i          (constant, B is linear in q)
    dq(B(q)^T s) = sum_i s_i G_i         (symmetric geometric stiffness)

This one rule replaces entry-by-entry transcription of the block operator
matrices; correctness is certified by finite-difference tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .newton import DimensionMismatch

NODE_DIM = 12
ELEMENT_DIM = 24
N_STRAIN = 6

_PHI = slice(0, 3)
_D = (slice(3, 6), slice(6, 9), slice(9, 12))


def hat(v: np.ndarray) -> np.ndarray:
    """Skew matrix of a 3-vector: hat(v) @ w == cross(v, w)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


@dataclass(frozen=True)
class NodeState:
    """Position and director triad of one node."""

    phi0: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray

    def __post_init__(self) -> None:
        for name in ("phi0", "d1", "d2", "d3"):
            vec = np.asarray(getattr(self, name), dtype=float)
            if vec.shape != (3,):
                raise DimensionMismatch(f"{name} must be a 3-vector")
            object.__setattr__(self, name, vec)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.phi0, self.d1, self.d2, self.d3])

    @staticmethod
    def from_vector(q: np.ndarray) -> "NodeState":
        q = np.asarray(q, dtype=float)
        if q.shape != (NODE_DIM,):
            raise DimensionMismatch("nodal vector must have twelve entries")
        return NodeState(q[_PHI], q[_D[0]], q[_D[1]], q[_D[2]])


@dataclass(frozen=True)
class ElementState:
    """Two nodes plus the reference arc length of the segment between them."""

    node_a: NodeState
    node_b: NodeState
    length_ref: float

    def __post_init__(self) -> None:
        if self.length_ref <= 0.0:
            raise ValueError("length_ref must be positive")

    def coordinates(self) -> np.ndarray:
        return np.concatenate([self.node_a.to_vector(), self.node_b.to_vector()])


@dataclass(frozen=True)
class ElementKinematics:
    """Gauss-point values: midpoint average q_mid and directed difference dq_mid."""

    q_mid: np.ndarray
    dq_mid: np.ndarray

    @staticmethod
    def from_element(element: ElementState) -> "ElementKinematics":
        qa = element.node_a.to_vector()
        qb = element.node_b.to_vector()
        return ElementKinematics(0.5 * (qa + qb), (qb - qa) / element.length_ref)


def gamma_strain(kin: ElementKinematics) -> np.ndarray:
    """Shear/elongation vector: directors dotted with the axis derivative."""
    dphi = kin.dq_mid[_PHI]
    return np.array([kin.q_mid[d] @ dphi for d in _D])


def omega_strain(kin: ElementKinematics) -> np.ndarray:
    """Bending/torsion vector from cyclic director/derivative brackets."""
    d = [kin.q_mid[s] for s in _D]
    dd = [kin.dq_mid[s] for s in _D]
    return 0.5 * np.array(
        [
            d[2] @ dd[1] - d[1] @ dd[2],
            d[0] @ dd[2] - d[2] @ dd[0],
            d[1] @ dd[0] - d[0] @ dd[1],
        ]
    )


def _strain_forms(length_ref: float) -> np.ndarray:
    """The six symmetric 24x24 forms G_i with strain_i = q^T G_i q / 2."""
    mid = np.hstack([0.5 * np.eye(NODE_DIM), 0.5 * np.eye(NODE_DIM)])
    dif = np.hstack([-np.eye(NODE_DIM), np.eye(NODE_DIM)]) / length_ref
    sel = [np.zeros((3, NODE_DIM)) for _ in range(4)]
    for i, block in enumerate((_PHI, *_D)):
        sel[i][:, block] = np.eye(3)
    p_phi, p1, p2, p3 = sel

    forms = np.empty((N_STRAIN, ELEMENT_DIM, ELEMENT_DIM))
    for i, p_dir in enumerate((p1, p2, p3)):
        a = mid.T @ p_dir.T @ p_phi @ dif
        forms[i] = a + a.T
    cyclic = ((p3, p2), (p1, p3), (p2, p1))
    for i, (pu, pv) in enumerate(cyclic):
        a = 0.5 * mid.T @ (pu.T @ pv - pv.T @ pu) @ dif
        forms[3 + i] = a + a.T
    return forms


_FORMS_CACHE: dict[float, np.ndarray] = {}


def strain_forms(length_ref: float) -> np.ndarray:
    if length_ref not in _FORMS_CACHE:
        _FORMS_CACHE[length_ref] = _strain_forms(length_ref)
    return _FORMS_CACHE[length_ref]


def strain_from_coordinates(q_e: np.ndarray, length_ref: float, strain_ref: np.ndarray) -> np.ndarray:
    """Strain vector from a raw 24-coordinate element vector."""
    q_mid = 0.5 * (q_e[:NODE_DIM] + q_e[NODE_DIM:])
    dq_mid = (q_e[NODE_DIM:] - q_e[:NODE_DIM]) / length_ref
    kin = ElementKinematics(q_mid, dq_mid)
    return np.concatenate([gamma_strain(kin), omega_strain(kin)]) - strain_ref


def element_strain(element: ElementState, gamma_ref: np.ndarray, omega_ref: np.ndarray) -> np.ndarray:
    """Six-component strain vector (gamma - gamma_ref; omega - omega_ref)."""
    kin = ElementKinematics.from_element(element)
    return np.concatenate([gamma_strain(kin) - gamma_ref, omega_strain(kin) - omega_ref])


def b_matrix(element: ElementState) -> np.ndarray:
    """Strain Jacobian B(q), 6x24; exactly linear in the nodal coordinates."""
    q = element.coordinates()
    return strain_forms(element.length_ref) @ q


def b_matrix_derivative(element: ElementState, a: np.ndarray) -> np.ndarray:
    """Derivative of B(q) a with respect to q, for a fixed 24-vector a.

    Because B is linear in q this is constant and equals the B matrix rows
    evaluated at a.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (ELEMENT_DIM,):
        raise DimensionMismatch("direction must be a 24-vector")
    return strain_forms(element.length_ref) @ a


def geometric_stiffness(element: ElementState, s: np.ndarray) -> np.ndarray:
    """Derivative of B(q)^T s with respect to q: the symmetric 24x24 stress term."""
    s = np.asarray(s, dtype=float)
    if s.shape != (N_STRAIN,):
        raise DimensionMismatch("stress resultant must be a 6-vector")
    return np.einsum("i,ijk->jk", s, strain_forms(element.length_ref))


def element_quadrature(element: ElementState) -> float:
    """Single midpoint Gauss point; the weight is the reference arc length."""
    return element.length_ref


# ---------------------------------------------------------------------------
# Nodal constraint machinery (director orthonormality)
# ---------------------------------------------------------------------------


def orthonormality_residual(node: NodeState) -> np.ndarray:
    """Six constraint values h(q); zero exactly for an orthonormal triad."""
    d1, d2, d3 = node.d1, node.d2, node.d3
    return 0.5 * np.array(
        [
            d1 @ d1 - 1.0,
            d2 @ d2 - 1.0,
            d3 @ d3 - 1.0,
            2.0 * (d2 @ d3),
            2.0 * (d1 @ d3),
            2.0 * (d1 @ d2),
        ]
    )


def orthonormality_jacobian(node: NodeState) -> np.ndarray:
    """Constraint Jacobian H(q), 6x12."""
    H = np.zeros((N_STRAIN, NODE_DIM))
    H[0, _D[0]] = node.d1
    H[1, _D[1]] = node.d2
    H[2, _D[2]] = node.d3
    H[3, _D[1]] = node.d3
    H[3, _D[2]] = node.d2
    H[4, _D[0]] = node.d3
    H[4, _D[2]] = node.d1
    H[5, _D[0]] = node.d2
    H[5, _D[1]] = node.d1
    return H


def constraint_hessian(nu: np.ndarray) -> np.ndarray:
    """Derivative of H(q)^T nu: constant extra stiffness from the constraints."""
    nu = np.asarray(nu, dtype=float)
    if nu.shape != (6,):
        raise DimensionMismatch("nu must be a 6-vector")
    V = np.zeros((NODE_DIM, NODE_DIM))
    couplings = {(0, 0): nu[0], (1, 1): nu[1], (2, 2): nu[2],
                 (1, 2): nu[3], (0, 2): nu[4], (0, 1): nu[5]}
    eye = np.eye(3)
    for (i, j), value in couplings.items():
        V[_D[i], _D[j]] += value * eye
        if i != j:
            V[_D[j], _D[i]] += value * eye
    return V


def null_space_basis(node: NodeState) -> np.ndarray:
    """Basis N(q) of ker H(q), 12x6: translations plus hat-operator rotations.

    H(q) N(q) = 0 holds identically (for any directors), because each product
    row pairs a director with a cross product involving it.
    """
    N = np.zeros((NODE_DIM, N_STRAIN))
    N[_PHI, 0:3] = np.eye(3)
    for i, block in enumerate(_D):
        N[block, 3:6] = hat((node.d1, node.d2, node.d3)[i]).T
    return N


def w1_matrix(a: np.ndarray) -> np.ndarray:
    """Derivative of N(q)^T a with respect to q, for a fixed nodal 12-vector a."""
    a = np.asarray(a, dtype=float)
    if a.shape != (NODE_DIM,):
        raise DimensionMismatch("a must be a nodal 12-vector")
    W = np.zeros((N_STRAIN, NODE_DIM))
    for block in _D:
        W[3:6, block] = -hat(a[block])
    return W


def w2_matrix(b: np.ndarray) -> np.ndarray:
    """Derivative of N(q) b with respect to q, for a fixed reduced 6-vector b."""
    b = np.asarray(b, dtype=float)
    if b.shape != (N_STRAIN,):
        raise DimensionMismatch("b must be a 6-vector")
    W = np.zeros((NODE_DIM, NODE_DIM))
    rot = hat(b[3:6])
    for block in _D:
        W[block, block] = rot
    return W
