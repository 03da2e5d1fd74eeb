"""Cross-sectional and rod lattices.

A cross section is a finite, edge-connected set of unit squares centred at
half-integer points of the plane.  Atoms sit on the integer corners of those
squares.  The section is extended by ``margin`` rings of ghost squares; each
extended square carries a type set: the labels of the cell corners that are
real atoms.  All lattice coordinates are stored as doubled integers so that
set membership is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .directions import FULL_TYPE, SQUARE_OFFSETS, obeys_lateral_pairing
from .errors import ValidationError

# doubled in-plane corner offsets of a lattice square (corners 1..4)
_SQ_OFF2 = (2 * SQUARE_OFFSETS).astype(np.int64)


def _as_doubled(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    doubled = 2.0 * pts
    rounded = np.rint(doubled).astype(np.int64)
    if not np.allclose(doubled, rounded, atol=1e-9):
        raise ValidationError("square centres must have half-integer coordinates")
    if np.any(rounded % 2 == 0):
        raise ValidationError("square centres must have half-integer coordinates")
    return rounded


def _sorted_unique(arr: np.ndarray) -> np.ndarray:
    if len(arr) == 0:
        return arr.reshape(0, 2)
    return np.unique(arr, axis=0)


def _key_set(arr: np.ndarray) -> set[tuple[int, int]]:
    return {(int(a), int(b)) for a, b in arr}


@dataclass(frozen=True, eq=False)
class CrossSection:
    """Square centres, atom corners, their margin extensions and type sets.

    ``squares2``/``corners2`` hold doubled coordinates (squares odd, corners
    even).  ``ext_types`` is aligned with ``ext_squares2`` and maps each
    extended square to the frozenset of corner labels 1..8 whose in-plane
    corner is a real atom.
    """

    squares2: np.ndarray
    corners2: np.ndarray
    ext_squares2: np.ndarray
    ext_corners2: np.ndarray
    margin: int
    ext_types: tuple[frozenset[int], ...]
    _corner_lookup: dict = field(repr=False, default_factory=dict)

    @property
    def squares(self) -> np.ndarray:
        return self.squares2 / 2.0

    @property
    def corners(self) -> np.ndarray:
        return self.corners2 // 2

    @property
    def ext_squares(self) -> np.ndarray:
        return self.ext_squares2 / 2.0

    @property
    def ext_corners(self) -> np.ndarray:
        return self.ext_corners2 // 2

    @property
    def n_squares(self) -> int:
        return len(self.squares2)

    @property
    def n_ext_squares(self) -> int:
        return len(self.ext_squares2)

    def cell_type(self, square) -> frozenset[int]:
        """Type set of the extended square centred at ``square``."""
        key = tuple(_as_doubled([square])[0])
        try:
            idx = self._square_lookup[key]
        except KeyError:
            raise ValidationError(f"square {square} is not in the extended section")
        return self.ext_types[idx]

    @property
    def _square_lookup(self) -> dict:
        if not self._corner_lookup:
            self._corner_lookup.update(
                {(int(a), int(b)): i for i, (a, b) in enumerate(self.ext_squares2)}
            )
        return self._corner_lookup

    def corner_index(self) -> dict[tuple[int, int], int]:
        """Map doubled corner coordinates of the extended corner set to row indices."""
        return {(int(a), int(b)): i for i, (a, b) in enumerate(self.ext_corners2)}


def _connected(squares2: set[tuple[int, int]]) -> bool:
    if not squares2:
        return False
    start = min(squares2)
    seen = {start}
    stack = [start]
    while stack:
        x, y = stack.pop()
        for dx, dy in ((2, 0), (-2, 0), (0, 2), (0, -2)):
            nxt = (x + dx, y + dy)
            if nxt in squares2 and nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == len(squares2)


def _corner_union(squares2: np.ndarray) -> np.ndarray:
    corners = (squares2[:, None, :] + _SQ_OFF2[None, :, :]).reshape(-1, 2)
    return _sorted_unique(corners)


def _type_of(square2, corner_set: set[tuple[int, int]]) -> frozenset[int]:
    labels = set()
    for i in range(4):
        c = (square2[0] + _SQ_OFF2[i, 0], square2[1] + _SQ_OFF2[i, 1])
        if c in corner_set:
            labels.add(i + 1)
            labels.add(i + 5)
    return frozenset(labels)


def build_cross_section(squares, margin: int = 1) -> CrossSection:
    """Validate a square set and derive corners, extensions and type sets.

    Raises ValidationError for non-half-integer centres, an edge-disconnected
    square set, or a closure violation (four atoms spanning a unit square
    whose centre is missing from the set).
    """
    if margin < 0:
        raise ValidationError("margin must be non-negative")
    squares2 = _sorted_unique(_as_doubled(squares))
    if len(squares2) == 0:
        raise ValidationError("square set is empty")
    sq_set = _key_set(squares2)
    if not _connected(sq_set):
        raise ValidationError("square set is not edge-connected")

    corners2 = _corner_union(squares2)
    corner_set = _key_set(corners2)

    # closure: a unit square whose four corners are all atoms must be listed
    lo = squares2.min(axis=0) - 2
    hi = squares2.max(axis=0) + 2
    for x in range(int(lo[0]), int(hi[0]) + 1, 2):
        for y in range(int(lo[1]), int(hi[1]) + 1, 2):
            cand = (x + 1, y + 1)  # odd/odd: a half-integer centre
            if cand in sq_set:
                continue
            if all(
                (cand[0] + _SQ_OFF2[i, 0], cand[1] + _SQ_OFF2[i, 1]) in corner_set
                for i in range(4)
            ):
                raise ValidationError(
                    f"closure violation: square centred at "
                    f"({cand[0] / 2}, {cand[1] / 2}) has all four corners present"
                )

    shifts = np.array(
        [(2 * i, 2 * j) for i in range(-margin, margin + 1) for j in range(-margin, margin + 1)],
        dtype=np.int64,
    )
    ext_squares2 = _sorted_unique((squares2[:, None, :] + shifts[None, :, :]).reshape(-1, 2))
    ext_corners2 = _sorted_unique(
        (corners2[:, None, :] + shifts[None, :, :]).reshape(-1, 2)
    )
    ext_types = tuple(_type_of(sq, corner_set) for sq in ext_squares2)

    # interior squares must be full cells, lateral ghosts must pair i <-> i+4
    for sq, t in zip(ext_squares2, ext_types):
        if (int(sq[0]), int(sq[1])) in sq_set:
            if t != FULL_TYPE:
                raise ValidationError("internal error: interior square with partial type")
        elif not obeys_lateral_pairing(t):
            raise ValidationError("internal error: lateral type without axial pairing")

    return CrossSection(
        squares2=squares2,
        corners2=corners2,
        ext_squares2=ext_squares2,
        ext_corners2=ext_corners2,
        margin=margin,
        ext_types=ext_types,
    )


def cell_type(section: CrossSection, square) -> frozenset[int]:
    """Corner labels of the cell at ``square`` whose in-plane corner is an atom."""
    return section.cell_type(square)


def largest_inscribed_section(
    polygon: np.ndarray, scale: float, margin: int = 1
) -> CrossSection:
    """Largest edge-connected set of unit squares inside ``scale * polygon``.

    Ties between equally large components are broken by the lexicographically
    smallest centre list.  Raises ValidationError when no unit square fits.
    """
    from shapely.geometry import Polygon, box

    verts = np.asarray(polygon, dtype=float).reshape(-1, 2) * float(scale)
    poly = Polygon(verts)
    if not poly.is_valid or poly.area <= 0:
        raise ValidationError("polygon must be simple with positive area")

    minx, miny, maxx, maxy = poly.bounds
    xs = np.arange(math.floor(minx) + 0.5, maxx, 1.0)
    ys = np.arange(math.floor(miny) + 0.5, maxy, 1.0)
    inside = []
    for cx in xs:
        for cy in ys:
            if poly.covers(box(cx - 0.5, cy - 0.5, cx + 0.5, cy + 0.5)):
                inside.append((int(round(2 * cx)), int(round(2 * cy))))
    if not inside:
        raise ValidationError(f"no unit square fits inside the polygon at scale {scale}")

    # split into edge-connected components
    remaining = set(inside)
    components = []
    while remaining:
        start = min(remaining)
        comp = {start}
        stack = [start]
        remaining.discard(start)
        while stack:
            x, y = stack.pop()
            for dx, dy in ((2, 0), (-2, 0), (0, 2), (0, -2)):
                nxt = (x + dx, y + dy)
                if nxt in remaining:
                    remaining.discard(nxt)
                    comp.add(nxt)
                    stack.append(nxt)
        components.append(sorted(comp))
    components.sort(key=lambda c: (-len(c), c))
    best = np.asarray(components[0], dtype=np.int64)
    return build_cross_section(best / 2.0, margin=margin)


def read_section(path, margin: int = 1) -> CrossSection:
    """Read a section file: one 'x2 x3' half-integer pair per line, '#' comments."""
    squares = []
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 2:
                raise ValidationError(f"{path}:{ln}: expected two coordinates")
            try:
                squares.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise ValidationError(f"{path}:{ln}: malformed coordinate")
    if not squares:
        raise ValidationError(f"{path}: no squares listed")
    return build_cross_section(squares, margin=margin)


def write_section(path, section: CrossSection) -> None:
    with open(path, "w") as fh:
        fh.write("# cross-section squares: x2 x3 (half-integer centres)\n")
        for x, y in section.squares:
            fh.write(f"{x} {y}\n")


@dataclass(frozen=True, eq=False)
class CellGroup:
    """Cells sharing one type set, with their centres and corner node indices.

    ``corner_nodes[c, i]`` is the node index of corner label i+1 of cell c, or
    -1 when that corner is a ghost.  Ghost slots are filled with reference
    coordinates when gathering positions; type-restricted energies ignore them.
    """

    kind: str  # "bulk" | "surf" | "end"
    type_set: frozenset[int]
    centers: np.ndarray  # (n, 3) cell centres in atomic units
    corner_nodes: np.ndarray  # (n, 8) intp


@dataclass(frozen=True, eq=False)
class RodLattice:
    """Atoms of a rod of ``n_long`` axial cells over a cross section.

    Nodes live at axial layers 0..n_long on the section's corner set, in
    atomic units (spacing 1).  ``1/k`` is the physical interatomic distance.
    """

    section: CrossSection
    k: int
    rod_length: float
    n_long: int
    node_coords: np.ndarray  # (N, 3) float
    groups: tuple[CellGroup, ...]

    @property
    def n_nodes(self) -> int:
        return len(self.node_coords)

    @property
    def n_bulk_cells(self) -> int:
        return sum(len(g.centers) for g in self.groups if g.kind == "bulk")

    @property
    def n_surf_cells(self) -> int:
        return sum(len(g.centers) for g in self.groups if g.kind == "surf")

    @property
    def n_end_cells(self) -> int:
        return sum(len(g.centers) for g in self.groups if g.kind == "end")

    def node_index(self, layer: int, corner2: tuple[int, int]) -> int:
        return self._lookup[(layer, corner2)]

    @property
    def _lookup(self) -> dict:
        if not hasattr(self, "_lookup_cache"):
            n_c = len(self.section.corners2)
            table = {}
            for i, (a, b) in enumerate(self.section.corners2):
                table[(int(a), int(b))] = i
            lookup = {}
            for layer in range(self.n_long + 1):
                for key, idx in table.items():
                    lookup[(layer, key)] = layer * n_c + idx
            object.__setattr__(self, "_lookup_cache", lookup)
        return self._lookup_cache


def build_rod_lattice(section: CrossSection, k: int, rod_length: float) -> RodLattice:
    """Enumerate nodes and bulk/surface/end cells for a rod of length ``rod_length``."""
    if k < 1:
        raise ValidationError("k must be a positive integer")
    if rod_length <= 0:
        raise ValidationError("rod length must be positive")
    n_long = int(math.floor(k * rod_length + 1e-9))
    if n_long < 1:
        raise ValidationError("rod too short: no axial cell fits")

    corners2 = section.corners2
    n_c = len(corners2)
    corner_lookup = {(int(a), int(b)): i for i, (a, b) in enumerate(corners2)}

    layers = np.arange(n_long + 1, dtype=float)
    node_coords = np.empty(((n_long + 1) * n_c, 3), dtype=float)
    node_coords[:, 0] = np.repeat(layers, n_c)
    node_coords[:, 1:] = np.tile(corners2 / 2.0, (n_long + 1, 1))

    sq_off2 = _SQ_OFF2

    def corner_node(layer: int, sq2, label: int) -> int:
        # label 1..8; axial layer offset is 0 for labels 1..4, +1 for 5..8
        lay = layer + (0 if label <= 4 else 1)
        if lay < 0 or lay > n_long:
            return -1
        key = (int(sq2[0] + sq_off2[(label - 1) % 4, 0]), int(sq2[1] + sq_off2[(label - 1) % 4, 1]))
        idx = corner_lookup.get(key, -1)
        return -1 if idx < 0 else lay * n_c + idx

    interior = _key_set(section.squares2)
    groups: list[CellGroup] = []

    # bulk cells: every axial slot over every interior square
    bulk_centers = []
    bulk_nodes = []
    for i1 in range(n_long):
        for sq2 in section.squares2:
            bulk_centers.append((i1 + 0.5, sq2[0] / 2.0, sq2[1] / 2.0))
            bulk_nodes.append([corner_node(i1, sq2, lbl) for lbl in range(1, 9)])
    bulk_nodes = np.asarray(bulk_nodes, dtype=np.intp)
    if np.any(bulk_nodes < 0):
        raise ValidationError("internal error: bulk cell with missing corner")
    groups.append(
        CellGroup("bulk", FULL_TYPE, np.asarray(bulk_centers, dtype=float), bulk_nodes)
    )

    # lateral surface cells, grouped by type set
    surf: dict[frozenset[int], tuple[list, list]] = {}
    for sq2, t in zip(section.ext_squares2, section.ext_types):
        if (int(sq2[0]), int(sq2[1])) in interior or not t:
            continue
        cen, nod = surf.setdefault(t, ([], []))
        for i1 in range(n_long):
            cen.append((i1 + 0.5, sq2[0] / 2.0, sq2[1] / 2.0))
            nod.append(
                [corner_node(i1, sq2, lbl) if lbl in t else -1 for lbl in range(1, 9)]
            )
    for t in sorted(surf, key=sorted):
        cen, nod = surf[t]
        order = np.lexsort(np.asarray(cen)[:, ::-1].T)
        groups.append(
            CellGroup(
                "surf",
                t,
                np.asarray(cen, dtype=float)[order],
                np.asarray(nod, dtype=np.intp)[order],
            )
        )

    # end cells: one slab before the first layer and one after the last,
    # spanning the whole extended square set
    ends: dict[frozenset[int], tuple[list, list]] = {}
    for x1, labels in ((-0.5, range(5, 9)), (n_long - 0.5 + 1.0, range(1, 5))):
        i1 = 0 if x1 < 0 else n_long  # axial slot used for corner lookup
        for sq2 in section.ext_squares2:
            t = frozenset(
                lbl
                for lbl in labels
                if (
                    int(sq2[0] + sq_off2[(lbl - 1) % 4, 0]),
                    int(sq2[1] + sq_off2[(lbl - 1) % 4, 1]),
                )
                in corner_lookup
            )
            if not t:
                continue
            cen, nod = ends.setdefault(t, ([], []))
            cen.append((x1, sq2[0] / 2.0, sq2[1] / 2.0))
            nod.append(
                [
                    corner_node(i1 - 1 if x1 < 0 else i1, sq2, lbl) if lbl in t else -1
                    for lbl in range(1, 9)
                ]
            )
    for t in sorted(ends, key=sorted):
        cen, nod = ends[t]
        order = np.lexsort(np.asarray(cen)[:, ::-1].T)
        groups.append(
            CellGroup(
                "end",
                t,
                np.asarray(cen, dtype=float)[order],
                np.asarray(nod, dtype=np.intp)[order],
            )
        )

    return RodLattice(
        section=section,
        k=k,
        rod_length=rod_length,
        n_long=n_long,
        node_coords=node_coords,
        groups=tuple(groups),
    )
