"""Fixed geometry of a unit lattice cell.

A cell is the cube spanned by the eight corners ``center + CORNER_OFFSETS[i]``.
Corners are labelled 1..8 throughout the public API; the label order is the
fixed enumeration below (first the four corners with axial offset -1/2, then
their axial partners with +1/2).  Label ``i`` and ``i + 4`` always project to
the same in-plane corner.
"""

from __future__ import annotations

import itertools

import numpy as np

# corner offsets of the unit cell, one row per corner label 1..8
CORNER_OFFSETS = 0.5 * np.array(
    [
        [-1, -1, -1],
        [-1, -1, +1],
        [-1, +1, +1],
        [-1, +1, -1],
        [+1, -1, -1],
        [+1, -1, +1],
        [+1, +1, +1],
        [+1, +1, -1],
    ],
    dtype=float,
)
CORNER_OFFSETS.setflags(write=False)

# reference cell matrix: column i-1 holds the offset of corner i.  This is the
# discrete gradient of the identity deformation.
REF_MATRIX = np.ascontiguousarray(CORNER_OFFSETS.T)
REF_MATRIX.setflags(write=False)

# in-plane projections; corners 1..4 enumerate the four corners of a lattice
# square in the cross-sectional plane, corners 5..8 repeat them
SQUARE_OFFSETS = np.ascontiguousarray(CORNER_OFFSETS[:4, 1:])
SQUARE_OFFSETS.setflags(write=False)

# sign of the axial offset per corner: (-1,-1,-1,-1,1,1,1,1)
AXIAL_SIGNS = np.sign(CORNER_OFFSETS[:, 0]).astype(float)
AXIAL_SIGNS.setflags(write=False)

FULL_TYPE = frozenset(range(1, 9))

EDGE_LENGTH = 1.0
DIAG_LENGTH = float(np.sqrt(2.0))


def _pair_table():
    edges, diags = [], []
    for i, j in itertools.combinations(range(8), 2):
        d = np.linalg.norm(CORNER_OFFSETS[i] - CORNER_OFFSETS[j])
        if abs(d - 1.0) < 1e-12:
            edges.append((i + 1, j + 1))
        elif abs(d - DIAG_LENGTH) < 1e-12:
            diags.append((i + 1, j + 1))
    return tuple(edges), tuple(diags)


# unordered nearest-neighbour / next-to-nearest-neighbour pairs (1-based
# labels); 12 cube edges and 12 face diagonals
EDGE_PAIRS, DIAG_PAIRS = _pair_table()
assert len(EDGE_PAIRS) == 12 and len(DIAG_PAIRS) == 12


def pairs_within(type_set: frozenset[int]) -> tuple[np.ndarray, np.ndarray]:
    """0-based (P,2) index arrays of the edge/diagonal pairs inside a type set."""
    edges = [(i - 1, j - 1) for i, j in EDGE_PAIRS if i in type_set and j in type_set]
    diags = [(i - 1, j - 1) for i, j in DIAG_PAIRS if i in type_set and j in type_set]
    return (
        np.asarray(edges, dtype=np.intp).reshape(-1, 2),
        np.asarray(diags, dtype=np.intp).reshape(-1, 2),
    )


def obeys_lateral_pairing(type_set: frozenset[int]) -> bool:
    """True if label i is in the set exactly when i+4 is, for i = 1..4."""
    return all((i in type_set) == (i + 4 in type_set) for i in range(1, 5))
