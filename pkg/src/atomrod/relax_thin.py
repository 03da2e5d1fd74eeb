"""Cross-section warping minimisation for thin rods, P1 finite elements.

The relaxed stiffness form of a continuum section S evaluates, per skew
parameter set, the minimum over warping fields alpha in H^1(S; R^3) of

    integral_S  Q3( A (0, x2, x3)^T | d alpha/d x2 | d alpha/d x3 ) dx',

where Q3(F) applies the full-cell quadratic form to F times the reference
cell matrix.  The section is normalised to unit area, centred, and rotated so
the product moment vanishes.  The two integral gauges (zero mean, zero mean
gradient) are enforced with Lagrange multipliers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .cell_energy import CellQuadraticForm
from .directions import REF_MATRIX
from .discrete_ops import SkewParam
from .errors import NumericalError, ValidationError
from .relax_ultrathin import RelaxedForm, _psd_project

_DEDUP_DECIMALS = 9


# -- polygon utilities ------------------------------------------------------

def polygon_area(vertices: np.ndarray) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_centroid(vertices: np.ndarray) -> np.ndarray:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    cross = x * np.roll(y, -1) - np.roll(x, -1) * y
    area = 0.5 * float(np.sum(cross))
    cx = float(np.sum((x + np.roll(x, -1)) * cross)) / (6.0 * area)
    cy = float(np.sum((y + np.roll(y, -1)) * cross)) / (6.0 * area)
    return np.array([cx, cy])


def polygon_second_moments(vertices: np.ndarray) -> np.ndarray:
    """2x2 matrix of second area moments about the origin."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    cross = x * y1 - x1 * y
    ixx = float(np.sum(cross * (x * x + x * x1 + x1 * x1))) / 12.0
    iyy = float(np.sum(cross * (y * y + y * y1 + y1 * y1))) / 12.0
    ixy = float(np.sum(cross * (x * y1 + 2.0 * x * y + 2.0 * x1 * y1 + x1 * y))) / 24.0
    return np.array([[ixx, ixy], [ixy, iyy]])


@dataclass(frozen=True)
class SectionTransform:
    """Similarity transform applied during normalisation: v -> (v - shift) @ rot * scale."""

    shift: np.ndarray
    rotation: np.ndarray
    scale: float

    def apply(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=float) - self.shift) @ self.rotation * self.scale


def normalize_section(vertices: np.ndarray) -> tuple[np.ndarray, SectionTransform]:
    """Centre, rotate to principal axes and scale a polygon to unit area.

    The returned polygon has area 1, centroid 0 and vanishing product moment.
    Axes are ordered with the larger second moment on x2; signs are fixed so
    the rotation has a non-negative leading entry.
    """
    v = np.asarray(vertices, dtype=float).reshape(-1, 2)
    if len(v) < 3:
        raise ValidationError("polygon needs at least 3 vertices")
    area = polygon_area(v)
    if abs(area) < 1e-12:
        raise ValidationError("degenerate polygon: zero area")
    if area < 0:
        v = v[::-1]
        area = -area
    c = polygon_centroid(v)
    centred = v - c
    m = polygon_second_moments(centred)
    w, vecs = np.linalg.eigh(m)  # ascending
    rot = vecs[:, ::-1]  # larger moment first
    if np.linalg.det(rot) < 0:
        rot = rot * np.array([1.0, -1.0])
    if rot[0, 0] < 0 or (rot[0, 0] == 0 and rot[1, 0] < 0):
        rot = -rot
    scale = 1.0 / np.sqrt(area)
    transform = SectionTransform(shift=c, rotation=rot, scale=scale)
    return transform.apply(v), transform


# -- meshing ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SectionMesh:
    """Conforming triangulation of a section polygon."""

    vertices: np.ndarray  # (V, 2)
    triangles: np.ndarray  # (T, 3) int

    @property
    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return 0.5 * np.abs(
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
        )

    @property
    def area(self) -> float:
        return float(np.sum(self.areas))

    def boundary_vertices(self) -> np.ndarray:
        """Indices of vertices on edges that belong to exactly one triangle."""
        edges: dict[tuple[int, int], int] = {}
        for tri in self.triangles:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (min(a, b), max(a, b))
                edges[key] = edges.get(key, 0) + 1
        flags = set()
        for (a, b), count in edges.items():
            if count == 1:
                flags.add(int(a))
                flags.add(int(b))
        return np.array(sorted(flags), dtype=int)

    def validate(self) -> None:
        if np.any(self.areas <= 0):
            raise ValidationError("mesh contains degenerate triangles")
        edges: dict[tuple[int, int], int] = {}
        for tri in self.triangles:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (min(a, b), max(a, b))
                edges[key] = edges.get(key, 0) + 1
        if any(c > 2 for c in edges.values()):
            raise ValidationError("non-conforming mesh: edge shared by >2 triangles")


def _ear_clip(ring: list[tuple[float, float]]) -> list[tuple[int, int, int]]:
    """Triangulate a simple ccw ring by ear clipping (local indices)."""
    pts = [np.asarray(p, dtype=float) for p in ring]
    n = len(pts)
    if n < 3:
        return []
    scale = max(np.ptp([p[0] for p in pts]), np.ptp([p[1] for p in pts]), 1e-30)
    eps = 1e-12 * scale * scale

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def inside(p, a, b, c):
        return cross(a, b, p) > eps and cross(b, c, p) > eps and cross(c, a, p) > eps

    idx = list(range(n))
    tris: list[tuple[int, int, int]] = []
    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 4 * n * n:
            raise NumericalError("ear clipping failed on a degenerate boundary piece")
        m = len(idx)
        for pos in range(m):
            i0, i1, i2 = idx[pos - 1], idx[pos], idx[(pos + 1) % m]
            a, b, c = pts[i0], pts[i1], pts[i2]
            if cross(a, b, c) <= eps:
                continue
            if any(inside(pts[j], a, b, c) for j in idx if j not in (i0, i1, i2)):
                continue
            tris.append((i0, i1, i2))
            idx.pop(pos)
            break
        else:
            raise NumericalError("ear clipping failed on a degenerate boundary piece")
    tris.append((idx[0], idx[1], idx[2]))
    return tris


def structured_mesh(polygon: np.ndarray, resolution: int) -> SectionMesh:
    """Triangulate a polygon on a square grid, clipping boundary cells.

    The bounding box is split into ``resolution`` cells along its longer side;
    interior cells become two triangles with a fixed diagonal direction (so
    doubling the resolution yields a nested refinement on grid-aligned
    polygons), boundary cells are clipped and ear-clipped.
    """
    from shapely.geometry import Polygon, box

    verts = np.asarray(polygon, dtype=float).reshape(-1, 2)
    if polygon_area(verts) < 0:
        verts = verts[::-1]
    poly = Polygon(verts)
    if not poly.is_valid or poly.area <= 0:
        raise ValidationError("polygon must be simple with positive area")
    if resolution < 1:
        raise ValidationError("resolution must be at least 1")

    minx, miny, maxx, maxy = poly.bounds
    h = max(maxx - minx, maxy - miny) / resolution
    nx = int(np.ceil((maxx - minx) / h - 1e-12))
    ny = int(np.ceil((maxy - miny) / h - 1e-12))

    vertex_ids: dict[tuple[float, float], int] = {}
    coords: list[tuple[float, float]] = []
    triangles: list[tuple[int, int, int]] = []

    def vid(x: float, y: float) -> int:
        key = (round(x, _DEDUP_DECIMALS), round(y, _DEDUP_DECIMALS))
        if key not in vertex_ids:
            vertex_ids[key] = len(coords)
            coords.append(key)
        return vertex_ids[key]

    def add_ring(ring_coords):
        ring = [(float(x), float(y)) for x, y in ring_coords]
        if ring[0] == ring[-1]:
            ring = ring[:-1]
        # drop consecutive duplicates
        clean = [ring[0]]
        for p in ring[1:]:
            if abs(p[0] - clean[-1][0]) > 1e-13 or abs(p[1] - clean[-1][1]) > 1e-13:
                clean.append(p)
        if len(clean) >= 3 and abs(clean[0][0] - clean[-1][0]) < 1e-13 and abs(
            clean[0][1] - clean[-1][1]
        ) < 1e-13:
            clean.pop()
        if len(clean) < 3:
            return
        if polygon_area(np.asarray(clean)) < 0:
            clean = clean[::-1]
        ids = [vid(x, y) for x, y in clean]
        for a, b, c in _ear_clip(clean):
            tri = (ids[a], ids[b], ids[c])
            p0, p1, p2 = (coords[t] for t in tri)
            area2 = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1])
            if abs(area2) > 1e-14:
                triangles.append(tri)

    for i in range(nx):
        for j in range(ny):
            x0, y0 = minx + i * h, miny + j * h
            x1, y1 = x0 + h, y0 + h
            cell = box(x0, y0, x1, y1)
            if poly.covers(cell):
                a = vid(x0, y0)
                b = vid(x1, y0)
                c = vid(x1, y1)
                d = vid(x0, y1)
                triangles.append((a, b, c))
                triangles.append((a, c, d))
                continue
            piece = poly.intersection(cell)
            if piece.is_empty or piece.area < 1e-14 * poly.area:
                continue
            geoms = getattr(piece, "geoms", [piece])
            for geom in geoms:
                if geom.area < 1e-14 * poly.area or not hasattr(geom, "exterior"):
                    continue
                add_ring(list(geom.exterior.coords))

    mesh = SectionMesh(
        vertices=np.asarray(coords, dtype=float), triangles=np.asarray(triangles, dtype=int)
    )
    mesh.validate()
    if abs(mesh.area - poly.area) > 1e-8 * poly.area:
        raise NumericalError(
            f"triangulated area {mesh.area} does not match polygon area {poly.area}"
        )
    return mesh


def read_mesh(path) -> SectionMesh:
    """Read a mesh file with 'v x2 x3' and 't i j k' lines (0-based indices)."""
    verts: list[tuple[float, float]] = []
    tris: list[tuple[int, int, int]] = []
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            try:
                if parts[0] == "v" and len(parts) == 3:
                    verts.append((float(parts[1]), float(parts[2])))
                elif parts[0] == "t" and len(parts) == 4:
                    tris.append((int(parts[1]), int(parts[2]), int(parts[3])))
                else:
                    raise ValueError
            except ValueError:
                raise ValidationError(f"{path}:{ln}: malformed mesh line")
    if not verts or not tris:
        raise ValidationError(f"{path}: mesh needs vertices and triangles")
    mesh = SectionMesh(vertices=np.asarray(verts), triangles=np.asarray(tris, dtype=int))
    mesh.validate()
    return mesh


def write_mesh(path, mesh: SectionMesh) -> None:
    with open(path, "w") as fh:
        fh.write("# section mesh: 'v x2 x3' vertices, 't i j k' triangles (0-based)\n")
        for x, y in mesh.vertices:
            fh.write(f"v {x!r} {y!r}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"t {a} {b} {c}\n")


# -- quadratic form on 3x3 matrices ------------------------------------------

def q3_matrix(form: CellQuadraticForm) -> np.ndarray:
    """9x9 matrix of F -> Q(F @ REF_MATRIX) in column-major vec coordinates."""
    k = np.zeros((24, 9))
    for c in range(3):
        for r in range(3):
            f = np.zeros((3, 3))
            f[r, c] = 1.0
            k[:, 3 * c + r] = (f @ REF_MATRIX).flatten(order="F")
    return k.T @ form.matrix @ k


def cauchy_born_Q3(a: np.ndarray, form: CellQuadraticForm) -> float:
    """Quadratic form evaluated on a 3x3 matrix applied to the reference cell."""
    a = np.asarray(a, dtype=float).reshape(3, 3)
    return form.value(a @ REF_MATRIX)


# -- warping solve ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WarpField:
    """P1 corrector field on a section mesh, gauged to zero mean and mean gradient."""

    mesh: SectionMesh
    values: np.ndarray  # (V, 3)
    multipliers: np.ndarray  # (9,)

    def gauge_residual(self) -> float:
        mesh, vals = self.mesh, self.values
        areas = mesh.areas
        tri = mesh.triangles
        mean = np.zeros(3)
        mean_grad = np.zeros((3, 2))
        for t in range(len(tri)):
            vv = vals[tri[t]]
            mean += areas[t] / 3.0 * vv.sum(axis=0)
            g = _p1_gradients(mesh.vertices[tri[t]])
            mean_grad += areas[t] * (vv.T @ g)
        return float(max(np.max(np.abs(mean)), np.max(np.abs(mean_grad))))

    def interpolate(self, points: np.ndarray) -> np.ndarray:
        """Evaluate the P1 field at given points (nearest triangle fallback)."""
        from scipy.spatial import cKDTree

        points = np.asarray(points, dtype=float).reshape(-1, 2)
        mesh = self.mesh
        p = mesh.vertices[mesh.triangles]  # (T, 3, 2)
        centroids = p.mean(axis=1)
        tree = cKDTree(centroids)
        kq = min(len(centroids), 16)
        _, cand = tree.query(points, k=kq)
        cand = np.atleast_2d(cand)
        out = np.empty((len(points), 3))
        for n, pt in enumerate(points):
            best_t, best_pen = -1, np.inf
            for t in cand[n]:
                lam = _barycentric(pt, p[t])
                pen = -min(lam.min(), 0.0)
                if pen < best_pen:
                    best_pen, best_t = pen, int(t)
                if pen <= 1e-10:
                    break
            lam = _barycentric(pt, p[best_t])
            out[n] = lam @ self.values[mesh.triangles[best_t]]
        return out


def _p1_gradients(tri_coords: np.ndarray) -> np.ndarray:
    """(3, 2) gradients of the three P1 basis functions on one triangle."""
    a, b, c = tri_coords
    mat = np.array([[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]])
    inv = np.linalg.inv(mat)
    gb = inv[0]
    gc = inv[1]
    return np.vstack([-(gb + gc), gb, gc])


def _barycentric(pt: np.ndarray, tri_coords: np.ndarray) -> np.ndarray:
    a, b, c = tri_coords
    mat = np.array([[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]])
    rhs = np.array([pt[0] - a[0], pt[1] - a[1]])
    try:
        lb, lc = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError:
        return np.array([1.0, 0.0, 0.0])
    return np.array([1.0 - lb - lc, lb, lc])


class WarpProblem:
    """Assembled and factorised saddle system for one mesh and cell form."""

    def __init__(self, mesh: SectionMesh, form: CellQuadraticForm):
        self.mesh = mesh
        self.q3 = q3_matrix(form)
        self._assemble()
        self._factorize()

    def _assemble(self):
        mesh = self.mesh
        nv = len(mesh.vertices)
        n = 3 * nv
        tri = mesh.triangles
        areas = mesh.areas
        q3 = self.q3

        rows, cols, vals = [], [], []
        self._tri_loads = []  # (area, centroid, mid-edge points, L (9 x 9), dof ids)
        c_rows, c_cols, c_vals = [], [], []
        for t in range(len(tri)):
            ids = tri[t]
            coords = mesh.vertices[ids]
            at = float(areas[t])
            g = _p1_gradients(coords)  # (3, 2)
            # local L: vec-F rows 3..8 from local alpha dofs u[3m + r]
            loc = np.zeros((9, 9))
            for m in range(3):
                for r in range(3):
                    loc[3 + r, 3 * m + r] = g[m, 0]
                    loc[6 + r, 3 * m + r] = g[m, 1]
            h_loc = at * loc.T @ q3 @ loc
            dofs = np.array([3 * ids[m] + r for m in range(3) for r in range(3)])
            rr, cc = np.meshgrid(dofs, dofs, indexing="ij")
            rows.append(rr.ravel())
            cols.append(cc.ravel())
            vals.append(h_loc.ravel())
            mids = 0.5 * (coords + np.roll(coords, -1, axis=0))
            self._tri_loads.append((at, coords.mean(axis=0), mids, loc, dofs))
            # gauge rows: mean value and mean gradient
            for m in range(3):
                for r in range(3):
                    c_rows.append(r)
                    c_cols.append(3 * ids[m] + r)
                    c_vals.append(at / 3.0)
                    c_rows.append(3 + r)
                    c_cols.append(3 * ids[m] + r)
                    c_vals.append(at * g[m, 0])
                    c_rows.append(6 + r)
                    c_cols.append(3 * ids[m] + r)
                    c_vals.append(at * g[m, 1])

        h = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        ).tocsr()
        c = sp.coo_matrix((c_vals, (c_rows, c_cols)), shape=(9, n)).tocsr()
        self.h = h
        self.c = c
        self.n = n

    def _factorize(self):
        kkt = sp.bmat([[2.0 * self.h, self.c.T], [self.c, None]], format="csc")
        try:
            self._solver = spla.splu(kkt)
        except RuntimeError as exc:
            raise NumericalError(f"singular warping saddle system: {exc}")

    def _linear_parts(self, params: SkewParam) -> tuple[np.ndarray, float]:
        a = params.matrix
        b = np.zeros(self.n)
        const = 0.0
        for at, centroid, mids, loc, dofs in self._tri_loads:
            f0c = np.zeros(9)
            f0c[:3] = a @ np.array([0.0, centroid[0], centroid[1]])
            b[dofs] += loc.T @ (self.q3 @ (at * f0c))
            for mid in mids:
                f0 = np.zeros(9)
                f0[:3] = a @ np.array([0.0, mid[0], mid[1]])
                const += at / 3.0 * float(f0 @ self.q3 @ f0)
        return b, const

    def solve(self, params: SkewParam) -> tuple[float, WarpField]:
        b, const = self._linear_parts(params)
        rhs = np.concatenate([-2.0 * b, np.zeros(9)])
        sol = self._solver.solve(rhs)
        if not np.all(np.isfinite(sol)):
            raise NumericalError("singular warping saddle system")
        u, lam = sol[: self.n], sol[self.n :]
        value = const + float(b @ u)
        if value < -1e-9 * max(1.0, abs(const)):
            raise NumericalError(f"negative minimum {value:.3e} in the warping solve")
        field = WarpField(
            mesh=self.mesh, values=u.reshape(-1, 3), multipliers=lam.copy()
        )
        return max(value, 0.0), field


def solve_warping(
    params: SkewParam, mesh: SectionMesh, form: CellQuadraticForm
) -> tuple[float, WarpField]:
    """Galerkin minimum of the section integrand over gauged P1 fields."""
    return WarpProblem(mesh, form).solve(params)


def relaxed_form_thin(mesh: SectionMesh, form: CellQuadraticForm) -> RelaxedForm:
    """3x3 relaxed stiffness matrix of a continuum section."""
    problem = WarpProblem(mesh, form)
    m = np.zeros((3, 3))
    for i in range(3):
        m[i, i] = problem.solve(SkewParam.from_vector(np.eye(3)[i]))[0]
    for i in range(3):
        for j in range(i + 1, 3):
            ei, ej = np.eye(3)[i], np.eye(3)[j]
            plus = problem.solve(SkewParam.from_vector(ei + ej))[0]
            minus = problem.solve(SkewParam.from_vector(ei - ej))[0]
            m[i, j] = m[j, i] = 0.25 * (plus - minus)
    return RelaxedForm(matrix=_psd_project(m))
