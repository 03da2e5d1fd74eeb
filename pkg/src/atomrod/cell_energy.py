"""Cell energies on 3x8 corner matrices.

A full cell energy is frame indifferent, vanishes exactly on rigid cells and
is C^2 around the rotated reference states.  Partial energies, used for
surface and end cells, additionally depend only on the corner columns listed
in their type set.

The concrete model is a harmonic mass-spring energy: every unordered
nearest-neighbour pair inside the type set contributes (k1/8)(|d| - 1)^2 and
every face-diagonal pair (k2/4)(|d| - sqrt(2))^2.  These per-cell weights make
the assembled lattice energy reproduce a plain pairwise spring energy with
spring constants k1, k2: interior edges are shared by four cells and interior
diagonals by two, boundary pairs are completed by the surface and end cells.
An optional penalty, active only near improperly rotated reference states,
removes the spurious reflected minima of pure pair potentials.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .directions import (
    DIAG_LENGTH,
    EDGE_LENGTH,
    FULL_TYPE,
    REF_MATRIX,
    obeys_lateral_pairing,
    pairs_within,
)
from .errors import NumericalError, ValidationError

# squared Frobenius norm of the reference cell matrix
_REF_SQ = float(np.sum(REF_MATRIX**2))  # = 6


def vec_cell(mat: np.ndarray) -> np.ndarray:
    """Column-major vectorisation of a 3x8 cell matrix."""
    return np.asarray(mat, dtype=float).flatten(order="F")


def unvec_cell(v: np.ndarray) -> np.ndarray:
    return np.asarray(v, dtype=float).reshape(8, 3).T


@lru_cache(maxsize=512)
def spring_pair_table(
    type_set: frozenset[int], k1: float, k2: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(pairs, rest, weight) arrays for the springs inside a type set.

    Cached; callers must not mutate the returned arrays.
    """
    edges, diags = pairs_within(type_set)
    pairs = np.vstack([edges, diags]).astype(np.int64)
    rest = np.concatenate([np.full(len(edges), EDGE_LENGTH), np.full(len(diags), DIAG_LENGTH)])
    weight = np.concatenate([np.full(len(edges), k1 / 8.0), np.full(len(diags), k2 / 4.0)])
    return pairs, rest, weight


def _spring_sum(y: np.ndarray, pairs, rest, weight) -> float:
    total = 0.0
    for (i, j), l0, w in zip(pairs, rest, weight):
        d = y[:, i] - y[:, j]
        total += w * (np.sqrt(d @ d) - l0) ** 2
    return total


def improper_distance(y: np.ndarray) -> float:
    """Frobenius distance from the centred cell to the reflected reference orbit.

    The orbit is {O @ REF_MATRIX + translations, O in O(3) with det O = -1};
    the minimiser is an orthogonal Procrustes problem solved by SVD.
    """
    yc = y - y.mean(axis=1, keepdims=True)
    m = yc @ REF_MATRIX.T
    s = np.linalg.svd(m, compute_uv=False)
    if np.linalg.det(m) < 0.0:
        best = s[0] + s[1] + s[2]
    else:
        best = s[0] + s[1] - s[2]
    d2 = float(np.sum(yc * yc)) + _REF_SQ - 2.0 * best
    return float(np.sqrt(max(d2, 0.0)))


@dataclass(frozen=True)
class SpringModel:
    """Harmonic springs on cell edges (k1) and face diagonals (k2).

    With ``penalty_strength > 0`` the reflected reference states acquire
    positive energy, so zero energy occurs exactly at rigid cells.  With
    ``surface_springs`` off, the surface and end energies are the trivial
    (zero) partial energies; boundary springs then carry reduced weight, which
    is the natural choice when the section widens and surface terms do not
    survive in the limit.
    """

    k1: float = 1.0
    k2: float = 1.0
    penalty_strength: float = 1.0
    penalty_radius: float = 0.5
    surface_springs: bool = True

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValidationError("spring stiffnesses must be positive")
        if self.penalty_strength < 0 or self.penalty_radius <= 0:
            raise ValidationError("penalty parameters must be non-negative / positive")

    @property
    def smooth_radius(self) -> float:
        # conservative radius around the rotated reference states in which the
        # energy is smooth; the reflected orbit sits at distance 2*sqrt(2)
        return 0.5 * (2.0 * np.sqrt(2.0) - self.penalty_radius)

    def penalty(self, y: np.ndarray) -> float:
        if self.penalty_strength == 0.0:
            return 0.0
        gap = self.penalty_radius - improper_distance(np.asarray(y, dtype=float))
        if gap <= 0.0:
            return 0.0
        return self.penalty_strength * gap * gap

    def w_cell(self, y: np.ndarray) -> float:
        y = np.asarray(y, dtype=float)
        pairs, rest, weight = spring_pair_table(FULL_TYPE, self.k1, self.k2)
        return _spring_sum(y, pairs, rest, weight) + self.penalty(y)

    def w_surf(self, type_set: frozenset[int], y: np.ndarray) -> float:
        type_set = frozenset(type_set)
        if not obeys_lateral_pairing(type_set):
            raise ValidationError(f"surface type {sorted(type_set)} violates axial pairing")
        if not self.surface_springs:
            return 0.0
        return _spring_sum(np.asarray(y, dtype=float), *spring_pair_table(type_set, self.k1, self.k2))

    def w_end(self, type_set: frozenset[int], y: np.ndarray) -> float:
        if not self.surface_springs:
            return 0.0
        return _spring_sum(
            np.asarray(y, dtype=float), *spring_pair_table(frozenset(type_set), self.k1, self.k2)
        )

    def w_total(self, type_set: frozenset[int], y: np.ndarray) -> float:
        """Full energy for the interior type, surface energy otherwise."""
        if frozenset(type_set) == FULL_TYPE:
            return self.w_cell(y)
        return self.w_surf(type_set, y)

    def quadratic_form(self, type_set: frozenset[int] = FULL_TYPE) -> "CellQuadraticForm":
        """Exact reference Hessian of the spring energy for one type set.

        The penalty vanishes identically near the proper reference orbit, so
        it does not contribute.
        """
        type_set = frozenset(type_set)
        if not self.surface_springs and type_set != FULL_TYPE:
            return CellQuadraticForm(matrix=np.zeros((24, 24)), type_set=type_set)
        pairs, rest, weight = spring_pair_table(type_set, self.k1, self.k2)
        h = np.zeros((24, 24))
        for (i, j), l0, w in zip(pairs, rest, weight):
            n = (REF_MATRIX[:, i] - REF_MATRIX[:, j]) / l0
            block = 2.0 * w * np.outer(n, n)
            si, sj = slice(3 * i, 3 * i + 3), slice(3 * j, 3 * j + 3)
            h[si, si] += block
            h[sj, sj] += block
            h[si, sj] -= block
            h[sj, si] -= block
        return CellQuadraticForm(matrix=h, type_set=frozenset(type_set))


@dataclass(frozen=True, eq=False)
class CellQuadraticForm:
    """Symmetric PSD 24x24 form acting on vectorised 3x8 perturbations."""

    matrix: np.ndarray
    type_set: frozenset[int]

    def value(self, v: np.ndarray) -> float:
        x = vec_cell(v) if np.ndim(v) == 2 else np.asarray(v, dtype=float)
        return float(x @ self.matrix @ x)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.T))


def translation_basis() -> np.ndarray:
    """(3, 24) vectorised basis of constant-column cell matrices."""
    basis = np.zeros((3, 24))
    for r in range(3):
        v = np.zeros((3, 8))
        v[r, :] = 1.0
        basis[r] = vec_cell(v)
    return basis


def rotation_basis() -> np.ndarray:
    """(3, 24) vectorised basis of skew matrices applied to the reference cell."""
    basis = np.zeros((3, 24))
    gens = [
        np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]),
        np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]),
        np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
    ]
    for r, g in enumerate(gens):
        basis[r] = vec_cell(g @ REF_MATRIX)
    return basis


def restricted_eigenvalues(form: CellQuadraticForm) -> np.ndarray:
    """Eigenvalues of the form on the orthogonal complement of translations
    and infinitesimal rotations of the reference cell."""
    null = np.vstack([translation_basis(), rotation_basis()])
    q, _ = np.linalg.qr(null.T)  # (24, 6) orthonormal
    proj = np.eye(24) - q @ q.T
    # orthonormal basis of the complement
    w, v = np.linalg.eigh(proj)
    comp = v[:, w > 0.5]
    sub = comp.T @ form.matrix @ comp
    return np.linalg.eigvalsh(0.5 * (sub + sub.T))


def hessian_at_reference(
    w,
    type_set: frozenset[int] = FULL_TYPE,
    step: float = 1e-4,
    psd_tol: float = 1e-8,
    check_smoothness: bool = True,
) -> CellQuadraticForm:
    """Reference Hessian of a cell energy by central second differences.

    ``w`` maps a 3x8 matrix to an energy.  A Richardson check at step/2 warns
    when the two Hessians disagree by more than 1e-6, which indicates the
    energy is not C^2 near the reference.  Raises NumericalError when the
    symmetrised Hessian has an eigenvalue below ``-psd_tol``.
    """

    def assemble(h: float) -> np.ndarray:
        hess = np.zeros((24, 24))
        for a in range(24):
            ea = unvec_cell(np.eye(24)[a])
            for b in range(a, 24):
                eb = unvec_cell(np.eye(24)[b])
                fpp = w(REF_MATRIX + h * ea + h * eb)
                fpm = w(REF_MATRIX + h * ea - h * eb)
                fmp = w(REF_MATRIX - h * ea + h * eb)
                fmm = w(REF_MATRIX - h * ea - h * eb)
                val = (fpp - fpm - fmp + fmm) / (4.0 * h * h)
                hess[a, b] = val
                hess[b, a] = val
        return hess

    hess = assemble(step)
    if check_smoothness:
        finer = assemble(step / 2.0)
        gap = float(np.max(np.abs(hess - finer)))
        if gap > 1e-6 * (1.0 + float(np.max(np.abs(finer)))):
            warnings.warn(
                f"second differences at steps {step} and {step / 2} disagree by {gap:.2e}; "
                "energy may not be C^2 at the reference",
                stacklevel=2,
            )
        hess = finer
    hess = 0.5 * (hess + hess.T)
    eigs = np.linalg.eigvalsh(hess)
    scale = max(1.0, float(eigs[-1]))
    if eigs[0] < -psd_tol * scale:
        raise NumericalError(
            f"reference Hessian is indefinite: min eigenvalue {eigs[0]:.3e}"
        )
    return CellQuadraticForm(matrix=hess, type_set=frozenset(type_set))
