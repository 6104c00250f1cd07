"""Flat cell complexes with rotational gluings, and their verification.

Everything a surface claims about itself (orders, residues, genus,
primitivity, rotation number) is recomputed here from raw cells and
identifications; constructors never get to inject invariants.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

from .numerics import (
    TWO_PI,
    Tolerance,
    DEFAULT_TOL,
    quantize_angle,
    turn_angle,
    NumericsError,
)
from .cells import Cell, Identification, IN_RAY, OUT_RAY, SEGMENT, segments_cross


class SurfaceError(ValueError):
    pass


class UnmatchedEdge(SurfaceError):
    pass


class IsometryMismatch(SurfaceError):
    pass


class Disconnected(SurfaceError):
    pass


class NonQuantizedAngle(SurfaceError):
    pass


class NonIntegerGenus(SurfaceError):
    pass


class NotGenusOne(SurfaceError):
    pass


@dataclass
class FlatSurface:
    """k, cells, identifications and optional bookkeeping metadata.

    metadata keys used by the library: ``signature`` (text form),
    ``residues`` (list of [re, im]), ``component``, ``route``, ``seed``.
    """

    k: int
    cells: list[Cell]
    identifications: list[Identification]
    metadata: dict = field(default_factory=dict)

    def zeta(self, m: int = 1) -> complex:
        return cmath.exp(2j * math.pi * m / self.k)

    def edge_refs(self):
        for ci, cell in enumerate(self.cells):
            for pos in range(cell.edge_count):
                yield (ci, pos)

    def scale(self) -> float:
        s = 0.0
        for cell in self.cells:
            for v in cell.vertices:
                s = max(s, abs(v))
        return max(s, 1.0)


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def add(self, x):
        if x not in self.parent:
            self.parent[x] = x
        return x

    def find(self, x):
        self.add(x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[ry] = rx

    def classes(self):
        out = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        return out


@dataclass
class Analysis:
    """Derived structure of a surface; produced by :func:`analyze`."""

    surface: FlatSurface
    partner: dict  # edge ref -> (identification index, is_a_side)
    vertex_classes: dict  # root -> list of (cell, vertex index)
    cone_angles: dict  # root -> angle
    zero_orders: dict  # root -> order (int)
    end_classes: dict  # root cell -> list of cell indices (cycle order)
    end_angles: dict  # root cell -> angle at infinity
    end_orders: dict  # root cell -> pole order magnitude (int)
    end_residues: dict  # root cell -> complex or None (non-divisible)
    genus: int
    holonomy_divisor: int

    def orders_multiset(self):
        zeros = sorted(self.zero_orders.values(), reverse=True)
        poles = sorted(self.end_orders.values())
        return zeros, poles


# -- basic pairing and carrier verification -----------------------------------


def _edge_pairing(surface: FlatSurface) -> dict:
    partner = {}
    for idx, ident in enumerate(surface.identifications):
        if ident.a == ident.b:
            raise UnmatchedEdge(f"identification {idx} glues an edge to itself")
        for ref, side in ((ident.a, True), (ident.b, False)):
            if ref in partner:
                raise UnmatchedEdge(f"edge {ref} appears in more than one identification")
            partner[ref] = (idx, side)
    for ref in surface.edge_refs():
        if ref not in partner:
            raise UnmatchedEdge(f"edge {ref} is not glued")
    for ref in partner:
        ci, pos = ref
        if not (0 <= ci < len(surface.cells)) or not (0 <= pos < surface.cells[ci].edge_count):
            raise UnmatchedEdge(f"identification references missing edge {ref}")
    return partner


def _check_carriers(surface: FlatSurface, tol: Tolerance) -> None:
    k = surface.k
    scale = surface.scale()
    for idx, ident in enumerate(surface.identifications):
        ca = surface.cells[ident.a[0]]
        cb = surface.cells[ident.b[0]]
        ta, tb = ca.edge_type(ident.a[1]), cb.edge_type(ident.b[1])
        rot = ident.rotation(k)
        if ta == SEGMENT and tb == SEGMENT:
            a0, a1 = ca.edge_endpoints(ident.a[1])
            b0, b1 = cb.edge_endpoints(ident.b[1])
            if not (tol.close(rot * a0 + ident.t, b1, scale) and tol.close(rot * a1 + ident.t, b0, scale)):
                raise IsometryMismatch(f"identification {idx} does not map edge onto partner")
        elif ta == OUT_RAY and tb == IN_RAY:
            base_a, base_b = ca.ray_base(ident.a[1]), cb.ray_base(ident.b[1])
            if not tol.close(rot * base_a + ident.t, base_b, scale):
                raise IsometryMismatch(f"ray identification {idx} does not match bases")
            da = ca.ray_dir(ident.a[1])
            db = cb.ray_dir(ident.b[1])
            if abs(rot * da / abs(da) - db / abs(db)) > 1e-6:
                raise IsometryMismatch(f"ray identification {idx} does not match directions")
        else:
            raise IsometryMismatch(
                f"identification {idx} pairs {ta} with {tb}; segments pair with segments, out-rays with in-rays"
            )


def _check_connected(surface: FlatSurface) -> None:
    if not surface.cells:
        raise Disconnected("no cells")
    adj = {i: set() for i in range(len(surface.cells))}
    for ident in surface.identifications:
        adj[ident.a[0]].add(ident.b[0])
        adj[ident.b[0]].add(ident.a[0])
    seen = {0}
    stack = [0]
    while stack:
        for j in adj[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    if len(seen) != len(surface.cells):
        raise Disconnected("gluing graph is not connected")


def validate_complex(surface: FlatSurface, tol: Tolerance = DEFAULT_TOL) -> dict:
    """Perfect edge matching + carrier isometries + connectivity."""
    partner = _edge_pairing(surface)
    _check_carriers(surface, tol)
    _check_connected(surface)
    return partner


# -- corner structure ----------------------------------------------------------


def _vertex_instances(surface: FlatSurface):
    for ci, cell in enumerate(surface.cells):
        for vi in range(len(cell.vertices)):
            yield (ci, vi)


def _edge_start_vertex(cell: Cell, pos: int):
    """Vertex index at which travel along edge ``pos`` begins (None for in-rays)."""
    t = cell.edge_type(pos)
    if t == IN_RAY:
        return None
    if t == OUT_RAY:
        return len(cell.vertices) - 1
    return pos if cell.kind == "polygon" else pos - 1


def _edge_end_vertex(cell: Cell, pos: int):
    t = cell.edge_type(pos)
    if t == OUT_RAY:
        return None
    if t == IN_RAY:
        return 0
    if cell.kind == "polygon":
        return (pos + 1) % len(cell.vertices)
    return pos


def next_corner(surface: FlatSurface, partner: dict, corner):
    """Corner reached from ``corner`` by crossing its outgoing flank."""
    ci, vi = corner
    cell = surface.cells[ci]
    _, e_next = cell.corner_flanks(vi)
    idx, is_a = partner[(ci, e_next)]
    ident = surface.identifications[idx]
    other = ident.b if is_a else ident.a
    ocell = surface.cells[other[0]]
    if is_a:
        # crossing a -> b: travel start of a maps to travel end of b
        tv = _edge_end_vertex(ocell, other[1])
    else:
        # crossing b -> a: inverse map: start of b maps to end of a
        tv = _edge_end_vertex(ocell, other[1])
    if tv is None:
        raise SurfaceError("corner walk crossed into a ray at infinity")
    return (other[0], tv)


def _crossing_update(surface: FlatSurface, g, idx: int, from_a: bool):
    """Update a developing map when the walk crosses identification idx.

    ``g`` is (rot, t) mapping current-cell coordinates to the global
    developed chart; returns the map for the next cell's coordinates.
    """
    ident = surface.identifications[idx]
    rot_i = ident.rotation(surface.k)
    if from_a:
        # phi maps a-coords to b-coords; new chart = b: compose with phi^{-1}
        inv_rot = 1 / rot_i
        inv_t = -ident.t / rot_i
        return (g[0] * inv_rot, g[0] * inv_t + g[1])
    return (g[0] * rot_i, g[0] * ident.t + g[1])


def vertex_structure(surface: FlatSurface, partner: dict, tol: Tolerance):
    """Vertex classes with cone angles, verified by developing each link."""
    uf = _UnionFind()
    for v in _vertex_instances(surface):
        uf.add(v)
    for ident in surface.identifications:
        ca = surface.cells[ident.a[0]]
        cb = surface.cells[ident.b[0]]
        sa, ea = _edge_start_vertex(ca, ident.a[1]), _edge_end_vertex(ca, ident.a[1])
        sb, eb = _edge_start_vertex(cb, ident.b[1]), _edge_end_vertex(cb, ident.b[1])
        if sa is not None and eb is not None:
            uf.union((ident.a[0], sa), (ident.b[0], eb))
        if ea is not None and sb is not None:
            uf.union((ident.a[0], ea), (ident.b[0], sb))
    classes = uf.classes()

    angles = {}
    scale = surface.scale()
    for root, members in classes.items():
        total = 0.0
        for (ci, vi) in members:
            total += surface.cells[ci].corner_angle(vi)
        angles[root] = total
        # develop the link: walk corners once around, composing crossings
        start = members[0]
        corner = start
        g = (1 + 0j, 0j)
        seen = 0
        base_pt = surface.cells[start[0]].corner_point(start[1])
        while True:
            ci, vi = corner
            cell = surface.cells[ci]
            _, e_next = cell.corner_flanks(vi)
            idx, is_a = partner[(ci, e_next)]
            g = _crossing_update(surface, g, idx, is_a)
            nxt = next_corner(surface, partner, corner)
            seen += 1
            corner = nxt
            if corner == start:
                break
            if seen > len(members):
                raise SurfaceError("vertex link does not close over its own corners")
        if seen != len(members):
            raise SurfaceError("vertex link misses some corners of its class")
        fixed = g[0] * base_pt + g[1]
        if not tol.close(fixed, base_pt, scale):
            raise IsometryMismatch("vertex link holonomy does not fix the vertex")
    return classes, angles


# -- ends ----------------------------------------------------------------------


def end_structure(surface: FlatSurface, partner: dict, tol: Tolerance):
    """Group unbounded cells into ends; compute angle, order, residue root."""
    k = surface.k
    cycles = {}
    angle = {}
    residue_root = {}
    rotation_class = {}
    unbounded = [ci for ci, c in enumerate(surface.cells) if c.kind == "unbounded"]
    seen = set()
    for start in unbounded:
        if start in seen:
            continue
        cyc = []
        ci = start
        g = (1 + 0j, 0j)
        total_angle = 0.0
        while True:
            cyc.append(ci)
            seen.add(ci)
            cell = surface.cells[ci]
            total_angle += cell.angle_at_infinity()
            out_pos = cell.edge_count - 1
            idx, is_a = partner[(ci, out_pos)]
            ident = surface.identifications[idx]
            if not is_a:
                raise SurfaceError("out-ray stored as b-side; ray identifications must run out->in")
            g = _crossing_update(surface, g, idx, True)
            ci = ident.b[0]
            if ci == start:
                break
            if len(cyc) > len(unbounded):
                raise SurfaceError("end cycle does not close")
        cycles[start] = cyc
        angle[start] = total_angle
        # holonomy around the end: rotation class and translation part
        rot, t = g
        mclass = round(cmath.phase(rot) / (TWO_PI / k)) % k
        if abs(rot - cmath.exp(2j * math.pi * mclass / k)) > 1e-6:
            raise NonQuantizedAngle("end holonomy rotation is not a k-th root of unity")
        rotation_class[start] = mclass
        residue_root[start] = t
    orders = {}
    for root, a in angle.items():
        try:
            units = quantize_angle(a, k)
        except NumericsError as e:
            raise NonQuantizedAngle(str(e)) from None
        if units < 0:
            raise SurfaceError("end with negative angle")
        orders[root] = units + k  # pole order magnitude
        # consistency: going around the end turns by -angle, so the
        # rotation class must be congruent to -units mod k
        if (rotation_class[root] + units) % k != 0:
            raise IsometryMismatch(
                f"end rotation class {rotation_class[root]} inconsistent with angle {units}*2pi/{k}"
            )
    residues = {}
    for root in cycles:
        b = orders[root]
        if b % k == 0:
            residues[root] = residue_root[root] ** k
        else:
            residues[root] = None
    return cycles, angle, orders, residues


# -- top-level analysis ----------------------------------------------------------


def analyze(surface: FlatSurface, tol: Tolerance = DEFAULT_TOL) -> Analysis:
    partner = validate_complex(surface, tol)
    # per-cell Gauss-Bonnet: catches corner misreadings on immersed cells
    for ci, cell in enumerate(surface.cells):
        if cell.kind == "polygon":
            total = cell.total_corner_angle()
            expected = (len(cell.vertices) - 2) * math.pi
            if abs(total - expected) > 1e-7 * max(1.0, expected):
                raise SurfaceError(f"polygon cell {ci} has inconsistent corner angles")
    vclasses, vangles = vertex_structure(surface, partner, tol)
    k = surface.k

    zero_orders = {}
    drop = []
    for root, a in vangles.items():
        try:
            units = quantize_angle(a, k)
        except NumericsError as e:
            raise NonQuantizedAngle(str(e)) from None
        order = units - k
        if order <= -k:
            raise SurfaceError("finite vertex with nonpositive cone angle")
        if order == 0:
            drop.append(root)  # regular point, not a singularity
        zero_orders[root] = order
    for root in drop:
        del zero_orders[root]
        del vclasses[root]
        del vangles[root]

    ecycles, eangles, eorders, eres = end_structure(surface, partner, tol)

    # genus from the compactified quotient complex
    uf_all = _UnionFind()
    for v in _vertex_instances(surface):
        uf_all.add(v)
    # recompute raw vertex classes (including regular points) for Euler count
    for ident in surface.identifications:
        ca = surface.cells[ident.a[0]]
        cb = surface.cells[ident.b[0]]
        sa, ea = _edge_start_vertex(ca, ident.a[1]), _edge_end_vertex(ca, ident.a[1])
        sb, eb = _edge_start_vertex(cb, ident.b[1]), _edge_end_vertex(cb, ident.b[1])
        if sa is not None and eb is not None:
            uf_all.union((ident.a[0], sa), (ident.b[0], eb))
        if ea is not None and sb is not None:
            uf_all.union((ident.a[0], ea), (ident.b[0], sb))
    V = len(uf_all.classes()) + len(ecycles)
    E = len(surface.identifications)
    F = len(surface.cells)
    chi = V - E + F
    if (2 - chi) % 2 != 0:
        raise NonIntegerGenus(f"Euler characteristic {chi} is odd")
    genus = (2 - chi) // 2
    if genus < 0:
        raise NonIntegerGenus(f"negative genus from chi = {chi}")

    # degree condition: exact integer arithmetic after quantization
    total = sum(zero_orders.values()) - sum(eorders.values())
    if total != k * (2 * genus - 2):
        raise SurfaceError(
            f"orders sum to {total}, expected k(2g-2) = {k * (2 * genus - 2)}"
        )

    # rotation holonomy subgroup via cell potentials
    pot = {0: 0}
    order_seen = [0]
    tree = set()
    adj = {}
    for idx, ident in enumerate(surface.identifications):
        adj.setdefault(ident.a[0], []).append((idx, ident.b[0], True))
        adj.setdefault(ident.b[0], []).append((idx, ident.a[0], False))
    stack = [0]
    while stack:
        ci = stack.pop()
        for idx, cj, from_a in adj.get(ci, ()):  # crossing applies -m (a->b) or +m
            if cj in pot:
                continue
            m = surface.identifications[idx].m
            pot[cj] = (pot[ci] - m) % surface.k if from_a else (pot[ci] + m) % surface.k
            tree.add(idx)
            stack.append(cj)
    d = surface.k
    for idx, ident in enumerate(surface.identifications):
        if idx in tree:
            continue
        m = ident.m
        defect = (pot[ident.a[0]] - m - pot[ident.b[0]]) % surface.k
        d = math.gcd(d, defect)
    hol_div = d

    return Analysis(
        surface=surface,
        partner=partner,
        vertex_classes=vclasses,
        cone_angles=vangles,
        zero_orders=zero_orders,
        end_classes=ecycles,
        end_angles=eangles,
        end_orders=eorders,
        end_residues=eres,
        genus=genus,
        holonomy_divisor=hol_div,
    )


# -- spec-level operations -------------------------------------------------------


def cone_angles(surface: FlatSurface, tol: Tolerance = DEFAULT_TOL) -> list[float]:
    an = analyze(surface, tol)
    return sorted(an.cone_angles.values())


def singularity_orders(surface: FlatSurface, tol: Tolerance = DEFAULT_TOL) -> list[int]:
    an = analyze(surface, tol)
    zeros, poles = an.orders_multiset()
    return zeros + [-b for b in poles]


def k_residues(surface: FlatSurface, tol: Tolerance = DEFAULT_TOL) -> list[tuple[int, complex]]:
    """(pole order magnitude, residue) for every pole of order divisible
    by k, divisible poles first (descending order magnitude), then simple
    poles."""
    an = analyze(surface, tol)
    out = []
    for root, res in an.end_residues.items():
        if res is None:
            continue
        out.append((an.end_orders[root], res))
    out.sort(key=lambda p: (p[0] == surface.k, p[0]))
    return out


def genus(surface: FlatSurface, tol: Tolerance = DEFAULT_TOL) -> int:
    return analyze(surface, tol).genus


def holonomy_divisor(surface: FlatSurface, tol: Tolerance = DEFAULT_TOL) -> int:
    return analyze(surface, tol).holonomy_divisor
