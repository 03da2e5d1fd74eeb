"""Total lattice energy and its two scalings.

The total energy sums full cell energies over interior cells, type-restricted
surface energies over the lateral ghost cells and end energies over the two
end slabs.  Cells are evaluated in fixed lexicographic order per group and
reduced with numpy's pairwise summation, so results are reproducible bit for
bit across runs.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .cell_energy import SpringModel, spring_pair_table
from .directions import REF_MATRIX
from .discrete_ops import LatticeDeformation, gather_cells
from .errors import ValidationError
from .lattice import CellGroup

_REF_SQ = float(np.sum(REF_MATRIX**2))


def _batched_penalty(pos: np.ndarray, strength: float, radius: float) -> np.ndarray:
    """Reflected-orbit penalty for a batch of cells, see SpringModel.penalty."""
    y = np.transpose(pos, (0, 2, 1))  # (n, 3, 8)
    yc = y - y.mean(axis=2, keepdims=True)
    corr = yc @ REF_MATRIX.T
    s = np.linalg.svd(corr, compute_uv=False)
    det = np.linalg.det(corr)
    best = np.where(det < 0.0, s.sum(axis=1), s[:, 0] + s[:, 1] - s[:, 2])
    d2 = np.einsum("nij,nij->n", yc, yc) + _REF_SQ - 2.0 * best
    dist = np.sqrt(np.maximum(d2, 0.0))
    gap = np.maximum(radius - dist, 0.0)
    return strength * gap * gap


def group_cell_energies(
    defm: LatticeDeformation, group: CellGroup, model
) -> np.ndarray:
    """Per-cell energies of one cell group."""
    pos = gather_cells(defm, group)
    if isinstance(model, SpringModel):
        if group.kind != "bulk" and not model.surface_springs:
            return np.zeros(len(pos))
        pairs, rest, weight = spring_pair_table(group.type_set, model.k1, model.k2)
        e = kernels.cell_spring_energy(pos, pairs, rest, weight)
        if group.kind == "bulk" and model.penalty_strength > 0.0:
            e = e + _batched_penalty(pos, model.penalty_strength, model.penalty_radius)
        return e
    # generic cell-energy model: per-cell python evaluation
    out = np.empty(len(pos))
    for c in range(len(pos)):
        y = pos[c].T
        if group.kind == "bulk":
            out[c] = model.w_cell(y)
        elif group.kind == "surf":
            out[c] = model.w_surf(group.type_set, y)
        else:
            out[c] = model.w_end(group.type_set, y)
    return out


def total_energy(defm: LatticeDeformation, model) -> float:
    """Discrete elastic energy of a deformed rod lattice (atomic units)."""
    totals = np.array(
        [np.sum(group_cell_energies(defm, g, model)) for g in defm.lattice.groups]
    )
    return float(np.sum(totals))


def scaled_energy_ultrathin(defm: LatticeDeformation, model) -> float:
    """k * E, the scaling with a finite bending-torsion limit for a fixed section."""
    return defm.lattice.k * total_energy(defm, model)


def scaled_energy_thin(defm: LatticeDeformation, model, h_k: float) -> float:
    """E / (k^3 h_k^4), the bending-torsion scaling for a widening section."""
    k = defm.lattice.k
    if h_k < 1.0 / k:
        raise ValidationError(f"thickness h_k={h_k} below interatomic spacing 1/k={1 / k}")
    return total_energy(defm, model) / (k**3 * h_k**4)
