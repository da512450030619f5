"""Implicit constitutive manifolds g(e, s) = 0 and synthetic measurement sets.

A constitutive manifold is the zero set of a residual map g acting on a
strain/stress pair.  The families implemented here are componentwise
decoupled cubic polynomials, either with explicitly defined stress,

    g_i = s_i - a_i e_i - (b_i/2) e_i^2 - (c_i/3) e_i^3,

or with implicitly defined stress (the mirrored form in s),

    g_i = e_i - a_i s_i - (b_i/2) s_i^2 - (c_i/3) s_i^3.

Linear kinds are the same with b = c = 0.  The module provides the residual,
its two Jacobians, the second-derivative contractions needed by the KKT
matrix of the manifold-constrained solver, a physical-consistency probe, a
symmetry probe, and a deterministic synthetic data generator for the
measurement-enumeration solver.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .newton import DimensionMismatch


class UnsupportedLaw(ValueError):
    """Operation not defined for this law kind."""


class SingularJacobian(Exception):
    """Both manifold Jacobians are singular at the requested point."""


class LawKind(str, Enum):
    LINEAR_EXPLICIT = "linear-explicit"
    LINEAR_IMPLICIT = "linear-implicit"
    POLY_EXPLICIT = "poly-explicit"
    POLY_IMPLICIT = "poly-implicit"

    @property
    def explicit(self) -> bool:
        return self in (LawKind.LINEAR_EXPLICIT, LawKind.POLY_EXPLICIT)


@dataclass(frozen=True)
class ManifoldLaw:
    """Componentwise-decoupled polynomial constitutive manifold.

    ``a`` are the (positive) linear coefficients, ``b`` the quadratic and
    ``c`` the cubic ones; for explicit kinds the polynomial acts on strain,
    for implicit kinds on stress.  Linear kinds must have b = c = 0.
    """

    kind: LawKind
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self) -> None:
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if not (self.a.shape == self.b.shape == self.c.shape):
            raise DimensionMismatch("coefficient arrays must share one shape")
        if np.any(self.a <= 0.0):
            raise ValueError("linear coefficients a must be positive")
        if self.kind in (LawKind.LINEAR_EXPLICIT, LawKind.LINEAR_IMPLICIT):
            if np.any(self.b != 0.0) or np.any(self.c != 0.0):
                raise ValueError("linear law kinds require b = c = 0")

    @property
    def dim(self) -> int:
        return self.a.shape[0]


def linear_law(a, implicit: bool = False) -> ManifoldLaw:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    kind = LawKind.LINEAR_IMPLICIT if implicit else LawKind.LINEAR_EXPLICIT
    return ManifoldLaw(kind, a, np.zeros_like(a), np.zeros_like(a))


def polynomial_law(a, b, c, implicit: bool = False) -> ManifoldLaw:
    kind = LawKind.POLY_IMPLICIT if implicit else LawKind.POLY_EXPLICIT
    return ManifoldLaw(kind, np.asarray(a, dtype=float), np.asarray(b, dtype=float), np.asarray(c, dtype=float))


@dataclass(frozen=True)
class PhasePoint:
    """A paired strain/stress point in phase space."""

    strain: np.ndarray
    stress: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "strain", np.atleast_1d(np.asarray(self.strain, dtype=float)))
        object.__setattr__(self, "stress", np.atleast_1d(np.asarray(self.stress, dtype=float)))
        if self.strain.shape != self.stress.shape:
            raise DimensionMismatch("strain and stress must have equal dimension")
        if not (np.all(np.isfinite(self.strain)) and np.all(np.isfinite(self.stress))):
            raise ValueError("phase point entries must be finite")

    @property
    def dim(self) -> int:
        return self.strain.shape[0]


@dataclass(frozen=True)
class DataSet:
    """Ordered measurement set: strain/stress pairs stored ascending by strain."""

    strains: np.ndarray
    stresses: np.ndarray

    def __post_init__(self) -> None:
        strains = np.asarray(self.strains, dtype=float)
        stresses = np.asarray(self.stresses, dtype=float)
        if strains.shape != stresses.shape or strains.ndim != 1:
            raise DimensionMismatch("dataset needs matching 1-d strain/stress arrays")
        order = np.argsort(strains, kind="stable")
        object.__setattr__(self, "strains", strains[order])
        object.__setattr__(self, "stresses", stresses[order])

    def __len__(self) -> int:
        return self.strains.shape[0]

    def pair(self, index: int) -> PhasePoint:
        """0-based access; external reports use 1-based pair numbers."""
        return PhasePoint(self.strains[index : index + 1], self.stresses[index : index + 1])

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["strain", "stress"])
            for e, s in zip(self.strains, self.stresses):
                writer.writerow([format(e, ".17g"), format(s, ".17g")])

    @staticmethod
    def load_csv(path: str | Path) -> "DataSet":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["strain", "stress"]:
            raise ValueError(f"{path}: expected header 'strain,stress'")
        data = np.array([[float(r[0]), float(r[1])] for r in rows[1:]])
        return DataSet(data[:, 0], data[:, 1])


def _check_point(law: ManifoldLaw, point: PhasePoint) -> None:
    if point.dim != law.dim:
        raise DimensionMismatch(f"law dim {law.dim} vs point dim {point.dim}")


def _poly(law: ManifoldLaw, t: np.ndarray) -> np.ndarray:
    # shared evaluation path so that g_eval cancels stress_from_strain exactly
    return law.a * t + 0.5 * law.b * t**2 + law.c / 3.0 * t**3


def _poly_slope(law: ManifoldLaw, t: np.ndarray) -> np.ndarray:
    return law.a + law.b * t + law.c * t**2


def _poly_curvature(law: ManifoldLaw, t: np.ndarray) -> np.ndarray:
    return law.b + 2.0 * law.c * t


def g_eval_batch(law: ManifoldLaw, strain: np.ndarray, stress: np.ndarray) -> np.ndarray:
    """Manifold residual for (..., dim)-shaped strain/stress arrays."""
    if law.kind.explicit:
        return stress - _poly(law, strain)
    return strain - _poly(law, stress)


def g_jacobian_diagonals(law: ManifoldLaw, strain: np.ndarray, stress: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Diagonals of (dg/de, dg/ds), broadcast over leading axes."""
    if law.kind.explicit:
        de = -_poly_slope(law, strain)
        return de, np.ones_like(de)
    ds = -_poly_slope(law, stress)
    return np.ones_like(ds), ds


def g_hessian_diagonals(
    law: ManifoldLaw, strain: np.ndarray, stress: np.ndarray, xi: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Diagonals of the only nonzero second-derivative contractions of xi . g.

    Returns (d/de [dg/de]^T xi, d/ds [dg/ds]^T xi); the cross blocks vanish
    for the componentwise polynomial families.
    """
    if law.kind.explicit:
        dee = -_poly_curvature(law, strain) * xi
        return dee, np.zeros_like(dee)
    dss = -_poly_curvature(law, stress) * xi
    return np.zeros_like(dss), dss


def g_eval(law: ManifoldLaw, point: PhasePoint) -> np.ndarray:
    """Manifold residual g(e, s); zero exactly on the manifold."""
    _check_point(law, point)
    return g_eval_batch(law, point.strain, point.stress)


def g_jacobians(law: ManifoldLaw, point: PhasePoint) -> tuple[np.ndarray, np.ndarray]:
    """Return (dg/de, dg/ds) as diagonal matrices."""
    _check_point(law, point)
    de, ds = g_jacobian_diagonals(law, point.strain, point.stress)
    return np.diag(de), np.diag(ds)


def g_hessian_contract(
    law: ManifoldLaw, point: PhasePoint, xi: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Second-derivative contractions of xi . g(e, s).

    Returns the four blocks
    (d/de [dg/de]^T xi,  d/ds [dg/de]^T xi,  d/de [dg/ds]^T xi,  d/ds [dg/ds]^T xi).
    For the polynomial families only one block is nonzero: the strain-strain
    block for explicit kinds, the stress-stress block for implicit kinds.
    """
    _check_point(law, point)
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (law.dim,):
        raise DimensionMismatch(f"xi has shape {xi.shape}, expected ({law.dim},)")
    zero = np.zeros((law.dim, law.dim))
    dee, dss = g_hessian_diagonals(law, point.strain, point.stress, xi)
    return np.diag(dee), zero, zero, np.diag(dss)


@dataclass(frozen=True)
class ConsistencyReport:
    """Nonzero roots of g(e, 0) = 0 and g(0, s) = 0 inside the search box."""

    strain_roots: list[tuple[int, float]]
    stress_roots: list[tuple[int, float]]

    @property
    def consistent(self) -> bool:
        return not self.strain_roots and not self.stress_roots


def _spurious_roots(a: float, b: float, c: float, box: tuple[float, float]) -> list[float]:
    # roots of a + (b/2) t + (c/3) t^2 = 0, excluding t = 0
    lo, hi = box
    if c != 0.0:
        disc = (0.5 * b) ** 2 - 4.0 * (c / 3.0) * a
        if disc < 0.0:
            return []
        sq = np.sqrt(disc)
        candidates = [(-0.5 * b + sq) / (2.0 * c / 3.0), (-0.5 * b - sq) / (2.0 * c / 3.0)]
    elif b != 0.0:
        candidates = [-2.0 * a / b]
    else:
        return []
    return [t for t in candidates if t != 0.0 and lo <= t <= hi]


def consistency_check(law: ManifoldLaw, search_box: tuple[float, float] = (-100.0, 100.0)) -> ConsistencyReport:
    """Probe physical consistency: g(e, 0) = 0 should force e = 0 and vice versa.

    The cubic families can have spurious nonzero roots; they are reported,
    never rejected, because prescribed laws are used as given.
    """
    strain_roots: list[tuple[int, float]] = []
    stress_roots: list[tuple[int, float]] = []
    for i in range(law.dim):
        a, b, c = law.a[i], law.b[i], law.c[i]
        if law.kind.explicit:
            # g_i(e, 0) = -e (a + b/2 e + c/3 e^2); g_i(0, s) = s has only s = 0
            strain_roots += [(i, t) for t in _spurious_roots(a, b, c, search_box)]
        else:
            stress_roots += [(i, t) for t in _spurious_roots(a, b, c, search_box)]
    return ConsistencyReport(strain_roots, stress_roots)


def _solve_well_conditioned(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray | None:
    """np.linalg.solve guarded by a conditioning test; None when singular."""
    if matrix.size == 0 or np.linalg.cond(matrix) > 1e12:
        return None
    return np.linalg.solve(matrix, rhs)


def symmetry_defect(de_g: np.ndarray, ds_g: np.ndarray) -> float:
    """Norm of skew([dg/ds]^-1 [dg/de]), falling back to the mirrored form.

    Zero for materials with symmetric tangent properties; any diagonal law
    returns zero exactly.
    """
    de_g = np.asarray(de_g, dtype=float)
    ds_g = np.asarray(ds_g, dtype=float)
    for first, second in ((ds_g, de_g), (de_g, ds_g)):
        ratio = _solve_well_conditioned(first, second)
        if ratio is not None:
            return float(np.linalg.norm(0.5 * (ratio - ratio.T)))
    raise SingularJacobian("both manifold Jacobians are singular at this point")


def symmetry_check(law: ManifoldLaw, point: PhasePoint) -> float:
    de_g, ds_g = g_jacobians(law, point)
    return symmetry_defect(de_g, ds_g)


def stress_from_strain(law: ManifoldLaw, strain: np.ndarray) -> np.ndarray:
    """Closed-form stress of an explicit law."""
    if not law.kind.explicit:
        raise UnsupportedLaw("closed-form stress needs an explicit law kind")
    return _poly(law, np.asarray(strain, dtype=float))


def generate_synthetic_data(
    law: ManifoldLaw,
    n: int,
    strain_range: tuple[float, float],
    noise_fraction: float = 0.0,
    seed: int = 0,
) -> DataSet:
    """Sample an explicit scalar law on a uniform strain grid.

    Strains are ``n`` uniformly spaced values over ``strain_range``; stresses
    come from the closed-form law, then get multiplicative uniform noise in
    ``[1 - noise_fraction, 1 + noise_fraction]`` from a seeded generator, so
    the same seed always reproduces the same set bit for bit.  Strains stay
    exact; only stresses are perturbed.
    """
    if law.dim != 1:
        raise UnsupportedLaw("synthetic data generation is for scalar laws")
    if not law.kind.explicit:
        raise UnsupportedLaw("implicit laws would need root-finding; not supported here")
    if n < 2:
        raise ValueError("need at least two pairs")
    if noise_fraction < 0.0:
        raise ValueError("noise_fraction must be nonnegative")
    strains = np.linspace(strain_range[0], strain_range[1], n)
    stresses = stress_from_strain(law, strains)
    if noise_fraction > 0.0:
        rng = np.random.default_rng(seed)
        stresses = stresses * rng.uniform(1.0 - noise_fraction, 1.0 + noise_fraction, size=n)
    return DataSet(strains, stresses)


# ---------------------------------------------------------------------------
# Law presets for the beam experiments (six strain/stress components)
# ---------------------------------------------------------------------------

# Diagonal stiffnesses: shear, shear, axial (N); bending, bending, torsion (N m^2).
_BEAM_STIFFNESS = np.array([75.0, 75.0, 100.0, 100.0, 100.0, 200.0])


def beam_law_preset(name: str) -> ManifoldLaw:
    """Named constitutive presets used by the beam experiments and the CLI."""
    a = _BEAM_STIFFNESS
    a_inv = 1.0 / a
    zero = np.zeros_like(a)
    presets = {
        "verification": lambda: linear_law(a),
        "explicit-antisym": lambda: polynomial_law(a, zero, a.copy()),
        "explicit-nonsym": lambda: polynomial_law(a, 0.85 * a, zero),
        "implicit-antisym": lambda: polynomial_law(a_inv, np.zeros_like(a), 0.0005 * a_inv, implicit=True),
        "implicit-nonsym": lambda: polynomial_law(a_inv, 0.015 * a_inv, np.zeros_like(a), implicit=True),
    }
    try:
        return presets[name]()
    except KeyError:
        raise UnsupportedLaw(f"unknown law preset {name!r}; options: {sorted(presets)}") from None


LAW_PRESETS = ("verification", "explicit-antisym", "explicit-nonsym", "implicit-antisym", "implicit-nonsym")
