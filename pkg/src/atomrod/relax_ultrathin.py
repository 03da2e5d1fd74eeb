"""Effective bending-torsion stiffness of a fixed cross-sectional lattice.

For a skew parameter set a = (kappa2, kappa3, tau) the per-unit-length limit
energy density is obtained by minimising, over in-plane corrector
displacements on the extended corner set and one axial stretch vector, the sum
of the cell quadratic forms evaluated at

    load(a, square) + (d2 alpha | d2 alpha) + (1/2) outer(g, AXIAL_SIGNS),

where d2 is the in-plane difference operator of each square.  The minimum is
a positive semidefinite quadratic in a; its 3x3 coefficient matrix is the
relaxed stiffness form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cell_energy import CellQuadraticForm, hessian_at_reference
from .directions import AXIAL_SIGNS, FULL_TYPE, SQUARE_OFFSETS
from .discrete_ops import SkewParam
from .errors import NumericalError, ValidationError
from .lattice import CrossSection

# in-plane corner pattern of the axial-offset coupling: column i carries
# 4 * z1_i * (0, z2_i, z3_i)^T
_AXIAL_PLANE_PATTERN = np.array(
    [
        [0, 0, 0, 0, 0, 0, 0, 0],
        [1, 1, -1, -1, -1, -1, 1, 1],
        [1, -1, -1, 1, -1, 1, 1, -1],
    ],
    dtype=float,
)

_EIG_NULL_REL = 1e-9  # eigenvalues in [-rel*max, rel*max] are treated as null


def ultrathin_correction(params: SkewParam) -> np.ndarray:
    """Explicit 3x8 correction to the limiting cell strain of an ultrathin rod.

    This term couples the axial corner offsets to the in-plane ones and has no
    counterpart in a Cauchy-Born continuum approximation.
    """
    return 0.25 * params.matrix @ _AXIAL_PLANE_PATTERN


def cell_load(params: SkewParam, square) -> np.ndarray:
    """3x8 strain load of the cell at ``square`` for given curvatures/torsion."""
    x = np.asarray(square, dtype=float).reshape(2)
    v = params.matrix @ np.array([0.0, x[0], x[1]])
    return 0.5 * np.outer(v, AXIAL_SIGNS) + ultrathin_correction(params)


def section_forms(section: CrossSection, model) -> dict[frozenset[int], CellQuadraticForm]:
    """Reference quadratic forms for every type occurring in the extended section."""
    forms: dict[frozenset[int], CellQuadraticForm] = {}
    for t in set(section.ext_types) | {FULL_TYPE}:
        if not t:
            continue
        if hasattr(model, "quadratic_form"):
            forms[t] = model.quadratic_form(t)
        elif t == FULL_TYPE:
            forms[t] = hessian_at_reference(model.w_cell, t)
        else:
            forms[t] = hessian_at_reference(lambda y, t=t: model.w_surf(t, y), t)
    return forms


@dataclass(frozen=True, eq=False)
class CorrectorSolution:
    """Minimiser of the per-length density: corrector, stretch and value.

    ``alpha`` rows follow ``section.ext_corners`` order and sum to zero (the
    translation gauge of the minimum-norm solve).
    """

    alpha: np.ndarray  # (Nc, 3)
    g: np.ndarray  # (3,)
    value: float


@dataclass(frozen=True, eq=False)
class RelaxedForm:
    """Symmetric PSD 3x3 matrix M with density(a) = a^T M a."""

    matrix: np.ndarray

    def value(self, params) -> float:
        a = params.vector if isinstance(params, SkewParam) else np.asarray(params, float)
        return float(a @ self.matrix @ a)


class CorrectorProblem:
    """Assembled quadratic for one section; reusable across skew parameters."""

    def __init__(self, section: CrossSection, forms):
        self.section = section
        if hasattr(forms, "w_cell"):  # convenience: accept a cell-energy model
            forms = section_forms(section, forms)
        missing = {t for t in section.ext_types if t} - set(forms)
        if missing:
            raise ValidationError(f"no quadratic form for types {sorted(map(sorted, missing))}")
        self.forms = forms
        self._assemble()
        self._factorize()

    # -- assembly ---------------------------------------------------------
    def _assemble(self):
        section = self.section
        corner_index = section.corner_index()
        n_c = len(section.ext_corners2)
        self.n_unknowns = 3 * n_c + 3
        n = self.n_unknowns

        sq_off2 = (2 * SQUARE_OFFSETS).astype(np.int64)
        h = np.zeros((n, n))
        b_ops = []  # per-square (B, Q) for load-dependent terms
        for sq2, t in zip(section.ext_squares2, section.ext_types):
            if not t:
                continue
            q = self.forms[t].matrix
            b = np.zeros((24, n))
            idx = [
                corner_index[(int(sq2[0] + sq_off2[j, 0]), int(sq2[1] + sq_off2[j, 1]))]
                for j in range(4)
            ]
            for i in range(8):  # output corner column
                j = i % 4
                for r in range(3):
                    row = 3 * i + r
                    b[row, 3 * idx[j] + r] += 1.0
                    for l in range(4):
                        b[row, 3 * idx[l] + r] -= 0.25
                    b[row, 3 * n_c + r] += 0.5 * AXIAL_SIGNS[i]
            h += b.T @ q @ b
            b_ops.append((sq2 / 2.0, b, q))
        self.h = h
        self.b_ops = b_ops

    def _factorize(self):
        w, v = np.linalg.eigh(self.h)
        scale = max(abs(float(w[-1])), 1.0)
        if w[0] < -_EIG_NULL_REL * scale:
            raise NumericalError(
                f"assembled corrector system is indefinite (min eig {w[0]:.3e}); "
                "check the supplied quadratic forms"
            )
        keep = w > _EIG_NULL_REL * scale
        self._inv_w = np.where(keep, 1.0 / np.where(keep, w, 1.0), 0.0)
        self._eigvecs = v

    # -- per-parameter pieces ----------------------------------------------
    def _load_vec(self, params: SkewParam):
        """Linear and constant parts of the objective for one parameter set."""
        b_lin = np.zeros(self.n_unknowns)
        const = 0.0
        for square, b, q in self.b_ops:
            c = cell_load(params, square).flatten(order="F")
            qc = q @ c
            b_lin += b.T @ qc
            const += float(c @ qc)
        return b_lin, const

    def _min_norm(self, b_lin: np.ndarray) -> np.ndarray:
        return -self._eigvecs @ (self._inv_w * (self._eigvecs.T @ b_lin))

    def solve(self, params: SkewParam) -> CorrectorSolution:
        b_lin, const = self._load_vec(params)
        u = self._min_norm(b_lin)
        value = const + float(b_lin @ u)
        if value < -1e-9 * max(1.0, abs(const)):
            raise NumericalError(f"negative minimum {value:.3e} in a PSD quadratic")
        n_c = (self.n_unknowns - 3) // 3
        return CorrectorSolution(
            alpha=u[: 3 * n_c].reshape(n_c, 3), g=u[3 * n_c :].copy(), value=max(value, 0.0)
        )


def solve_corrector(params: SkewParam, section: CrossSection, forms) -> CorrectorSolution:
    """Minimise the per-length density for one parameter set.

    ``forms`` maps type sets to CellQuadraticForm (see ``section_forms``); a
    cell-energy model is accepted directly.
    """
    return CorrectorProblem(section, forms).solve(params)


def _psd_project(m: np.ndarray) -> np.ndarray:
    m = 0.5 * (m + m.T)
    w, v = np.linalg.eigh(m)
    scale = max(abs(float(w[-1])), 1.0)
    if w[0] < -_EIG_NULL_REL * scale:
        raise NumericalError(f"relaxed form has a negative eigenvalue {w[0]:.3e}")
    w = np.maximum(w, 0.0)
    return (v * w) @ v.T


def relaxed_form(section: CrossSection, forms) -> RelaxedForm:
    """Assemble the 3x3 relaxed stiffness matrix from six corrector solves."""
    problem = CorrectorProblem(section, forms)
    basis = [SkewParam(1, 0, 0), SkewParam(0, 1, 0), SkewParam(0, 0, 1)]
    diag = [problem.solve(p).value for p in basis]
    m = np.diag(diag)
    for i in range(3):
        for j in range(i + 1, 3):
            ei, ej = np.eye(3)[i], np.eye(3)[j]
            plus = problem.solve(SkewParam.from_vector(ei + ej)).value
            minus = problem.solve(SkewParam.from_vector(ei - ej)).value
            m[i, j] = m[j, i] = 0.25 * (plus - minus)
    return RelaxedForm(matrix=_psd_project(m))
