"""Command-line front end.

All subcommands write deterministic CSV to stdout or --out: floats are
printed with shortest round-trip representation, inputs are dimensionless
(atomic or section units), and no pipeline draws random numbers, so repeated
runs are byte-identical regardless of --seed and --threads.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .assembly import scaled_energy_thin, scaled_energy_ultrathin, total_energy
from .config import parse_flat_config, read_model_config
from .curves import Line, parse_curve, sample_curve
from .discrete_ops import SkewParam
from .errors import NumericalError, ValidationError
from .lattice import build_rod_lattice, read_section
from .recovery import (
    build_recovery_ultrathin,
    convergence_study_thin,
    convergence_study_ultrathin,
)
from .relax_thin import normalize_section, read_mesh, relaxed_form_thin, structured_mesh
from .relax_ultrathin import (
    CorrectorProblem,
    RelaxedForm,
    relaxed_form,
    section_forms,
)
from .rod import RodBoundary, limit_energy, minimize_rod, so3_exp


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _emit(lines, out_path) -> None:
    text = "\n".join(",".join(_fmt(v) for v in row) for row in lines) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_polygon(path) -> np.ndarray:
    verts = []
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 2:
                raise ValidationError(f"{path}:{ln}: expected two coordinates")
            verts.append((float(parts[0]), float(parts[1])))
    if len(verts) < 3:
        raise ValidationError(f"{path}: polygon needs at least 3 vertices")
    return np.asarray(verts)


def _form_rows(form: RelaxedForm) -> list[list]:
    rows = [["matrix", *form.matrix[i]] for i in range(3)]
    return rows


def _maybe_params(args) -> SkewParam | None:
    vals = (args.kappa2, args.kappa3, args.tau)
    if all(v is None for v in vals):
        return None
    return SkewParam(*(0.0 if v is None else float(v) for v in vals))


def read_relaxed_form(path) -> RelaxedForm:
    """Read a 3x3 stiffness matrix from 'matrix,...' CSV rows (qrel output)."""
    rows = []
    with open(path) as fh:
        for line in fh:
            parts = line.strip().split(",")
            if parts and parts[0] == "matrix":
                rows.append([float(v) for v in parts[1:4]])
    if len(rows) != 3:
        raise ValidationError(f"{path}: expected three 'matrix' rows")
    return RelaxedForm(matrix=np.asarray(rows))


# -- subcommands -------------------------------------------------------------

def _cmd_section_info(args) -> list[list]:
    section = read_section(args.section, margin=args.margin)
    rows = [
        ["squares", section.n_squares],
        ["corners", len(section.corners2)],
        ["ext_squares", section.n_ext_squares],
        ["ext_corners", len(section.ext_corners2)],
    ]
    types = sorted({tuple(sorted(t)) for t in section.ext_types if t})
    rows.append(["distinct_types", len(types)])
    for t in types:
        rows.append(["type", "+".join(map(str, t))])
    return rows


def _cmd_qrel_ultrathin(args) -> list[list]:
    section = read_section(args.section, margin=args.margin)
    model = read_model_config(args.model)
    forms = section_forms(section, model)
    form = relaxed_form(section, forms)
    rows = _form_rows(form)
    params = _maybe_params(args)
    if params is not None:
        rows.append(
            ["value", params.kappa2, params.kappa3, params.tau, form.value(params)]
        )
    return rows


def _cmd_qrel_thin(args) -> list[list]:
    model = read_model_config(args.model)
    if args.mesh:
        mesh = read_mesh(args.mesh)
    else:
        polygon, _ = normalize_section(_read_polygon(args.polygon))
        mesh = structured_mesh(polygon, args.refine)
    form = relaxed_form_thin(mesh, model.quadratic_form())
    rows = _form_rows(form)
    rows.append(["vertices", len(mesh.vertices)])
    rows.append(["triangles", len(mesh.triangles)])
    params = _maybe_params(args)
    if params is not None:
        rows.append(
            ["value", params.kappa2, params.kappa3, params.tau, form.value(params)]
        )
    return rows


def _cmd_energy(args) -> list[list]:
    section = read_section(args.section, margin=args.margin)
    model = read_model_config(args.model)
    lattice = build_rod_lattice(section, args.k, args.length)
    curve = parse_curve(args.curve) if args.curve else Line()
    corrector = None
    if args.corrector:
        problem = CorrectorProblem(section, section_forms(section, model))
        corrector = problem.solve(curve.params)
    defm = build_recovery_ultrathin(curve, lattice, corrector=corrector)
    total = total_energy(defm, model)
    rows = [
        ["total_energy", total],
        ["scaled_ultrathin", scaled_energy_ultrathin(defm, model)],
    ]
    if args.hk is not None:
        rows.append(["scaled_thin", scaled_energy_thin(defm, model, args.hk)])
    return rows


def _cmd_converge(args) -> list[list]:
    model = read_model_config(args.model)
    curve = parse_curve(args.curve)
    ks = [int(v) for v in args.ks.split(",")]
    header = ["k", "scaled_energy", "limit_energy", "abs_error", "rel_error"]
    if args.mode == "ultrathin":
        if not args.section:
            raise ValidationError("--section is required in ultrathin mode")
        section = read_section(args.section, margin=args.margin)
        rows = convergence_study_ultrathin(
            curve, section, model, ks, args.length, use_corrector=not args.no_corrector
        )
    else:
        if not args.polygon:
            raise ValidationError("--polygon is required in thin mode")
        polygon = _read_polygon(args.polygon)
        rows = convergence_study_thin(
            curve,
            polygon,
            model,
            ks,
            args.length,
            h_of_k=lambda k: float(k**-args.hk_exponent),
            resolution=args.refine,
            use_warp=not args.no_corrector,
        )
    table: list[list] = [header]
    for r in rows:
        table.append([r.k, r.scaled_energy, r.limit_energy, r.abs_error, r.rel_error])
    return table


def _parse_triple(text: str, what: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValidationError(f"{what}: expected three comma-separated numbers")
    return np.array([float(v) for v in parts])


def _cmd_rod_min(args) -> list[list]:
    form = read_relaxed_form(args.qrel)
    with open(args.bc) as fh:
        cfg = parse_flat_config(fh.read())
    unknown = set(cfg) - {"y0", "y1", "rot0", "rot1"}
    if unknown:
        raise ValidationError(f"unknown boundary keys: {sorted(unknown)}")
    y0 = _parse_triple(cfg.get("y0", "0,0,0"), "y0")
    y1 = _parse_triple(cfg.get("y1", f"{args.length},0,0"), "y1")
    rot0 = so3_exp(_parse_triple(cfg.get("rot0", "0,0,0"), "rot0"))
    rot1 = so3_exp(_parse_triple(cfg.get("rot1", "0,0,0"), "rot1"))
    boundary = RodBoundary(y0=y0, frame0=rot0, y1=y1, frame1=rot1)
    curve = minimize_rod(form, args.length, boundary, args.nodes)
    energy = limit_energy(curve, form)
    rows: list[list] = [["energy", energy]]
    rows.append(["node", "x1", "y1", "y2", "y3", *(f"r{i}{j}" for i in range(1, 4) for j in range(1, 4))])
    for i in range(len(curve.x)):
        rows.append(["node", curve.x[i], *curve.y[i], *curve.frames[i].flatten()])
    return rows


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atomrod",
        description="Atomistic rod energies and effective bending-torsion stiffness",
    )
    parser.add_argument("--seed", type=int, default=0, help="reserved; all pipelines are deterministic")
    parser.add_argument("--threads", type=int, default=1, help="advisory; output does not depend on it")
    parser.add_argument("--out", default=None, help="write CSV here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("section-info", help="counts and cell types of a section file")
    p.add_argument("--section", required=True)
    p.add_argument("--margin", type=int, default=1)
    p.set_defaults(func=_cmd_section_info)

    p = sub.add_parser("qrel-ultrathin", help="relaxed stiffness of a lattice section")
    p.add_argument("--section", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--margin", type=int, default=1)
    p.add_argument("--kappa2", type=float, default=None)
    p.add_argument("--kappa3", type=float, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.set_defaults(func=_cmd_qrel_ultrathin)

    p = sub.add_parser("qrel-thin", help="relaxed stiffness of a continuum section")
    p.add_argument("--polygon", default=None)
    p.add_argument("--mesh", default=None)
    p.add_argument("--model", required=True)
    p.add_argument("--refine", type=int, default=16, help="grid resolution of the mesh")
    p.add_argument("--kappa2", type=float, default=None)
    p.add_argument("--kappa3", type=float, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.set_defaults(func=_cmd_qrel_thin)

    p = sub.add_parser("energy", help="energies of a recovery deformation")
    p.add_argument("--section", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--margin", type=int, default=1)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--length", type=float, required=True)
    p.add_argument("--curve", default="line", help="line | arc:R | helix:R,H")
    p.add_argument("--hk", type=float, default=None, help="also report the thin scaling")
    p.add_argument("--corrector", action="store_true", help="add the optimal corrector")
    p.set_defaults(func=_cmd_energy)

    p = sub.add_parser("converge", help="recovery-sequence convergence table")
    p.add_argument("--mode", choices=("ultrathin", "thin"), required=True)
    p.add_argument("--section", default=None)
    p.add_argument("--polygon", default=None)
    p.add_argument("--margin", type=int, default=1)
    p.add_argument("--model", required=True)
    p.add_argument("--curve", required=True, help="line | arc:R | helix:R,H")
    p.add_argument("--ks", required=True, help="comma-separated increasing k values")
    p.add_argument("--length", type=float, default=1.0)
    p.add_argument("--refine", type=int, default=16)
    p.add_argument("--hk-exponent", type=float, default=0.5, help="thin mode: h_k = k^-p")
    p.add_argument("--no-corrector", action="store_true")
    p.set_defaults(func=_cmd_converge)

    p = sub.add_parser("rod-min", help="minimise the limit energy under clamped ends")
    p.add_argument("--qrel", required=True, help="CSV with three 'matrix' rows")
    p.add_argument("--length", type=float, required=True)
    p.add_argument("--bc", required=True, help="config with y0, y1, rot0, rot1")
    p.add_argument("--nodes", type=int, required=True)
    p.set_defaults(func=_cmd_rod_min)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rows = args.func(args)
        _emit(rows, args.out)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
