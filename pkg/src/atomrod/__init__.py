"""Atomistic rod energies and their bending-torsion limits.

The package builds cross-sectional and rod lattices, evaluates cell-based
elastic energies (with a concrete mass-spring model), computes the relaxed
bending-torsion stiffness of a section both for ultrathin rods (a discrete
corrector minimisation) and thin rods (a cross-section warping FEM), and
verifies the discrete-to-continuum convergence numerically with recovery
deformations.
"""

from .assembly import scaled_energy_thin, scaled_energy_ultrathin, total_energy
from .cell_energy import CellQuadraticForm, SpringModel, hessian_at_reference
from .curves import Arc, Helix, Line, sample_curve
from .discrete_ops import (
    LatticeDeformation,
    SkewParam,
    discrete_gradient,
    dist_SO3,
    extract_rotations,
)
from .errors import NumericalError, ValidationError
from .kernels import BACKEND
from .lattice import (
    CrossSection,
    RodLattice,
    build_cross_section,
    build_rod_lattice,
    cell_type,
    largest_inscribed_section,
    read_section,
)
from .recovery import (
    build_recovery_thin,
    build_recovery_ultrathin,
    convergence_study_thin,
    convergence_study_ultrathin,
    gbar_check,
)
from .relax_thin import (
    SectionMesh,
    WarpField,
    cauchy_born_Q3,
    normalize_section,
    relaxed_form_thin,
    solve_warping,
    structured_mesh,
)
from .relax_ultrathin import (
    CorrectorSolution,
    RelaxedForm,
    cell_load,
    relaxed_form,
    section_forms,
    solve_corrector,
    ultrathin_correction,
)
from .rod import FramedCurve, RodBoundary, curvature_torsion, limit_energy, minimize_rod

__version__ = "0.1.0"

__all__ = [
    "Arc",
    "BACKEND",
    "CellQuadraticForm",
    "CorrectorSolution",
    "CrossSection",
    "FramedCurve",
    "Helix",
    "LatticeDeformation",
    "Line",
    "NumericalError",
    "RelaxedForm",
    "RodBoundary",
    "RodLattice",
    "SectionMesh",
    "SkewParam",
    "SpringModel",
    "ValidationError",
    "WarpField",
    "build_cross_section",
    "build_recovery_thin",
    "build_recovery_ultrathin",
    "build_rod_lattice",
    "cauchy_born_Q3",
    "cell_load",
    "cell_type",
    "convergence_study_thin",
    "convergence_study_ultrathin",
    "curvature_torsion",
    "discrete_gradient",
    "dist_SO3",
    "extract_rotations",
    "gbar_check",
    "hessian_at_reference",
    "largest_inscribed_section",
    "limit_energy",
    "minimize_rod",
    "normalize_section",
    "read_section",
    "relaxed_form",
    "relaxed_form_thin",
    "sample_curve",
    "scaled_energy_thin",
    "scaled_energy_ultrathin",
    "section_forms",
    "solve_corrector",
    "solve_warping",
    "structured_mesh",
    "total_energy",
    "ultrathin_correction",
]
