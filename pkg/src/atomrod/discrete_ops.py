"""Difference operators on lattice deformations and rotation diagnostics.

All operators act in atomic units (unit spacing).  A cell is addressed by its
centre; corner values are ordered by the fixed corner labels 1..8.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .directions import AXIAL_SIGNS, CORNER_OFFSETS, REF_MATRIX
from .errors import ValidationError
from .lattice import CellGroup, RodLattice


@dataclass(frozen=True)
class SkewParam:
    """Bending curvatures and torsion, the coordinates of a skew 3x3 matrix."""

    kappa2: float
    kappa3: float
    tau: float

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.kappa2, self.kappa3, self.tau])

    @property
    def matrix(self) -> np.ndarray:
        k2, k3, t = self.kappa2, self.kappa3, self.tau
        return np.array([[0.0, -k2, -k3], [k2, 0.0, -t], [k3, t, 0.0]])

    @classmethod
    def from_matrix(cls, a: np.ndarray) -> "SkewParam":
        a = np.asarray(a, dtype=float)
        if not np.allclose(a, -a.T, atol=1e-10):
            raise ValidationError("matrix is not skew-symmetric")
        return cls(kappa2=float(a[1, 0]), kappa3=float(a[2, 0]), tau=float(a[2, 1]))

    @classmethod
    def from_vector(cls, v) -> "SkewParam":
        v = np.asarray(v, dtype=float).reshape(3)
        return cls(kappa2=float(v[0]), kappa3=float(v[1]), tau=float(v[2]))


@dataclass(frozen=True, eq=False)
class LatticeDeformation:
    """Deformed positions of every rod node, in atomic units."""

    lattice: RodLattice
    positions: np.ndarray  # (N, 3)

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions, dtype=float)
        if pos.shape != (self.lattice.n_nodes, 3):
            raise ValidationError(
                f"positions must have shape ({self.lattice.n_nodes}, 3), got {pos.shape}"
            )
        if not np.all(np.isfinite(pos)):
            raise ValidationError("positions must be finite")
        object.__setattr__(self, "positions", pos)

    @classmethod
    def identity(cls, lattice: RodLattice) -> "LatticeDeformation":
        return cls(lattice, lattice.node_coords.copy())

    def transformed(self, rot: np.ndarray, shift: np.ndarray) -> "LatticeDeformation":
        return LatticeDeformation(self.lattice, self.positions @ np.asarray(rot).T + shift)


def gather_cells(defm: LatticeDeformation, group: CellGroup) -> np.ndarray:
    """(n, 8, 3) corner positions of all cells in a group.

    Ghost corners (index -1) are filled with their reference coordinates;
    type-restricted energies never read them.
    """
    idx = group.corner_nodes
    pos = defm.positions[np.clip(idx, 0, None)]
    ghost = idx < 0
    if np.any(ghost):
        ref = group.centers[:, None, :] + CORNER_OFFSETS[None, :, :]
        pos = pos.copy()
        pos[ghost] = ref[ghost]
    return np.ascontiguousarray(pos)


def _find_cell(lattice: RodLattice, center) -> tuple[CellGroup, int]:
    center = np.asarray(center, dtype=float).reshape(3)
    for group in lattice.groups:
        hit = np.where(np.all(np.abs(group.centers - center) < 1e-9, axis=1))[0]
        if len(hit):
            return group, int(hit[0])
    raise ValidationError(f"no cell centred at {center}")


def cell_values(defm: LatticeDeformation, center) -> np.ndarray:
    """(8, 3) deformed corner positions of the cell centred at ``center``."""
    group, i = _find_cell(defm.lattice, center)
    return gather_cells(defm, group)[i]


def centered_matrix(values: np.ndarray) -> np.ndarray:
    """Discrete gradient of one cell: corner columns minus their mean."""
    y = np.asarray(values, dtype=float).T  # (3, 8)
    return y - y.mean(axis=1, keepdims=True)


def discrete_gradient(defm: LatticeDeformation, center) -> np.ndarray:
    """3x8 discrete gradient of the deformation at one cell."""
    return centered_matrix(cell_values(defm, center))


def delta1_values(values: np.ndarray) -> np.ndarray:
    """Averaged axial difference: mean of the +x1 face minus the -x1 face."""
    v = np.asarray(values, dtype=float)
    return v[4:].mean(axis=0) - v[:4].mean(axis=0)


def delta1(defm: LatticeDeformation, center) -> np.ndarray:
    return delta1_values(cell_values(defm, center))


def delta2d(values4: np.ndarray) -> np.ndarray:
    """In-plane difference operator on one lattice square.

    ``values4`` holds the field at the four square corners in label order
    1..4; returns the (m, 4) matrix of corner values minus their mean.
    """
    v = np.atleast_2d(np.asarray(values4, dtype=float))
    if v.shape[0] != 4:
        v = v.T
    if v.shape[0] != 4:
        raise ValidationError("delta2d expects values at exactly 4 corners")
    return (v - v.mean(axis=0, keepdims=True)).T


def split_gradient(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Decompose cell corner values into two in-plane parts and an axial part.

    Returns (left, right, d1) with left/right the delta2d matrices of the two
    axial faces; the discrete gradient equals
    ``hstack([left, right]) + 0.5 * outer(d1, AXIAL_SIGNS)`` exactly.
    """
    v = np.asarray(values, dtype=float)
    left = delta2d(v[:4])
    right = delta2d(v[4:])
    return left, right, delta1_values(v)


def fit_rotation(m: np.ndarray) -> np.ndarray:
    """Proper rotation closest to the centred cell matrix, via Procrustes.

    Works for a single 3x8 matrix or a stack (n, 3, 8); rank-deficient inputs
    resolve by flipping the smallest singular direction.
    """
    m = np.asarray(m, dtype=float)
    single = m.ndim == 2
    if single:
        m = m[None]
    corr = m @ REF_MATRIX.T  # (n, 3, 3); centring drops out
    u, _, vt = np.linalg.svd(corr)
    det = np.linalg.det(u @ vt)
    fix = np.ones((len(m), 3))
    fix[:, 2] = np.sign(det)
    fix[fix[:, 2] == 0.0, 2] = 1.0
    r = (u * fix[:, None, :]) @ vt
    return r[0] if single else r


def dist_SO3(m: np.ndarray) -> float:
    """Frobenius distance from the centred cell matrix to the rotated reference."""
    m = np.asarray(m, dtype=float)
    mc = m - m.mean(axis=1, keepdims=True)
    corr = mc @ REF_MATRIX.T
    s = np.linalg.svd(corr, compute_uv=False)
    trace = s[0] + s[1] + (s[2] if np.linalg.det(corr) >= 0.0 else -s[2])
    d2 = float(np.sum(mc * mc)) + float(np.sum(REF_MATRIX**2)) - 2.0 * trace
    return float(np.sqrt(max(d2, 0.0)))


def extract_rotations(
    defm: LatticeDeformation, slab_cells: int = 1
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-slab best-fit rotations of the bulk cell gradients.

    The rod is cut into axial slabs of ``slab_cells`` cells; for each slab the
    rotation minimising the summed squared distance of the slab's discrete
    gradients to the rotated reference is fitted by SVD.  Returns
    (slab_starts, rotations (S, 3, 3), residuals (S,)), residuals being the
    summed squared deviations, the lattice analogue of the rigidity residual.
    """
    if slab_cells < 1:
        raise ValidationError("slab length must be at least one cell")
    lattice = defm.lattice
    bulk = [g for g in lattice.groups if g.kind == "bulk"]
    grads = []
    slots = []
    for g in bulk:
        vals = gather_cells(defm, g)
        grads.append(np.transpose(vals, (0, 2, 1)) - np.transpose(vals, (0, 2, 1)).mean(axis=2, keepdims=True))
        slots.append(np.floor(g.centers[:, 0]).astype(int))
    grads = np.concatenate(grads)
    slots = np.concatenate(slots) // slab_cells
    n_slabs = int(slots.max()) + 1
    if np.any(np.bincount(slots, minlength=n_slabs) == 0):
        raise ValidationError("empty slab: decrease slab length")
    rotations = np.empty((n_slabs, 3, 3))
    residuals = np.empty(n_slabs)
    for s in range(n_slabs):
        sel = grads[slots == s]
        corr = np.einsum("nij,kj->ik", sel, REF_MATRIX)
        u, _, vt = np.linalg.svd(corr)
        fix = np.diag([1.0, 1.0, np.sign(np.linalg.det(u @ vt)) or 1.0])
        r = u @ fix @ vt
        dev = sel - r @ REF_MATRIX
        rotations[s] = r
        residuals[s] = float(np.sum(dev * dev))
    starts = np.arange(n_slabs) * slab_cells
    return starts, rotations, residuals
