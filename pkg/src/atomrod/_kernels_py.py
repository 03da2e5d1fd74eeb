"""Numpy fallback for the spring-energy kernels.

Accumulation runs pair by pair in table order, vectorised over cells, so the
per-cell summation order matches the compiled kernel in ``_springs.pyx``.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def cell_spring_energy(
    pos: np.ndarray, pairs: np.ndarray, rest: np.ndarray, weight: np.ndarray
) -> np.ndarray:
    """Per-cell energy sum w_p * (|pos[:, i_p] - pos[:, j_p]| - rest_p)^2.

    pos: (C, 8, 3) corner positions, pairs: (P, 2) 0-based corner indices.
    """
    pos = np.asarray(pos, dtype=float)
    out = np.zeros(len(pos))
    for p in range(len(pairs)):
        i, j = pairs[p]
        d = pos[:, i, :] - pos[:, j, :]
        r = np.sqrt(d[:, 0] ** 2 + d[:, 1] ** 2 + d[:, 2] ** 2)
        out += weight[p] * (r - rest[p]) ** 2
    return out
