"""Surgeries on verified surfaces: zero splitting, handle sewing, plane
insertion and polar-chain insertion.

All four operations are direct cut-and-reglue constructions on the cell
complex; the result is always re-verified by the caller.  Zero splitting
grafts a zero-residue genus-zero piece in place of a cone neighborhood,
so it exists exactly when that local piece exists.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from math import gcd

from .numerics import TWO_PI, interior_angle
from .cells import Cell, Identification, unbounded, polygon, segments_cross
from .surface import (
    FlatSurface,
    SurfaceError,
    analyze,
    validate_complex,
    next_corner,
    _edge_start_vertex,
    _edge_end_vertex,
    _crossing_update,
)
from .stratum import Signature, ResidueConfig


class SurgeryError(ValueError):
    pass


class NonLocalSplit(SurgeryError):
    pass


class OrderSumMismatch(SurgeryError):
    pass


class NotAZero(SurgeryError):
    pass


# ---------------------------------------------------------------------------
# editable surface with stable edge handles
# ---------------------------------------------------------------------------


@dataclass
class _ECell:
    kind: str
    verts: list
    ray_in: complex | None
    ray_out: complex | None
    handles: list  # one handle per edge position


class EditSurface:
    """Mutable view of a FlatSurface keyed by stable edge handles."""

    def __init__(self, surface: FlatSurface):
        self.k = surface.k
        self.metadata = dict(surface.metadata)
        self.cells: dict[int, _ECell] = {}
        self.idents: dict[int, tuple[int, int, int, complex]] = {}
        self._next_cell = 0
        self._next_handle = 0
        self._next_ident = 0
        handle_of = {}
        for ci, cell in enumerate(surface.cells):
            handles = []
            for pos in range(cell.edge_count):
                h = self._new_handle()
                handles.append(h)
                handle_of[(ci, pos)] = h
            self.cells[ci] = _ECell(cell.kind, list(cell.vertices),
                                    cell.ray_in, cell.ray_out, handles)
            self._next_cell = max(self._next_cell, ci + 1)
        for ident in surface.identifications:
            self.add_ident(handle_of[ident.a], handle_of[ident.b], ident.m, ident.t)

    def _new_handle(self):
        self._next_handle += 1
        return self._next_handle

    def add_cell(self, kind, verts, ray_in=None, ray_out=None) -> int:
        ci = self._next_cell
        self._next_cell += 1
        n_edges = len(verts) if kind == "polygon" else len(verts) + 1
        handles = [self._new_handle() for _ in range(n_edges)]
        self.cells[ci] = _ECell(kind, list(verts), ray_in, ray_out, handles)
        return ci

    def add_ident(self, ha, hb, m, t) -> int:
        idx = self._next_ident
        self._next_ident += 1
        self.idents[idx] = (ha, hb, m, t)
        return idx

    def locate(self, handle):
        for ci, cell in self.cells.items():
            if handle in cell.handles:
                return ci, cell.handles.index(handle)
        raise SurgeryError(f"dangling edge handle {handle}")

    def partner_map(self):
        out = {}
        for idx, (ha, hb, m, t) in self.idents.items():
            out[ha] = (idx, True)
            out[hb] = (idx, False)
        return out

    def ident_of(self, handle):
        for idx, (ha, hb, m, t) in self.idents.items():
            if handle in (ha, hb):
                return idx
        return None

    def edge_geometry(self, handle):
        ci, pos = self.locate(handle)
        cell = self.cells[ci]
        return ci, pos, self._cell_obj(cell)

    def _cell_obj(self, ec: _ECell) -> Cell:
        return Cell(ec.kind, tuple(ec.verts), ec.ray_in, ec.ray_out)

    def to_surface(self) -> FlatSurface:
        order = sorted(self.cells)
        index = {ci: i for i, ci in enumerate(order)}
        cells = [self._cell_obj(self.cells[ci]) for ci in order]
        pos_of = {}
        for ci in order:
            for pos, h in enumerate(self.cells[ci].handles):
                pos_of[h] = (index[ci], pos)
        idents = []
        for idx in sorted(self.idents):
            ha, hb, m, t = self.idents[idx]
            idents.append(Identification(pos_of[ha], pos_of[hb], m, t))
        return FlatSurface(self.k, cells, idents, dict(self.metadata))

    # -- mutations ---------------------------------------------------------

    def edge_kind(self, handle):
        ci, pos = self.locate(handle)
        cell = self.cells[ci]
        if cell.kind == "polygon":
            return "segment"
        if pos == 0:
            return "in"
        if pos == len(cell.verts):
            return "out"
        return "segment"

    def subdivide_segment(self, handle, point) -> tuple[int, int]:
        """Split a segment edge at an interior point; returns the two new
        handles (first, second) in travel order.  The partner is not
        touched; callers subdivide it with the mapped point."""
        ci, pos = self.locate(handle)
        cell = self.cells[ci]
        h1, h2 = self._new_handle(), self._new_handle()
        if cell.kind == "polygon":
            cell.verts.insert(pos + 1, point)
            cell.handles[pos : pos + 1] = [h1, h2]
        else:
            # segment edges occupy positions 1..len(verts)-1
            cell.verts.insert(pos, point)
            cell.handles[pos : pos + 1] = [h1, h2]
        return h1, h2

    def subdivide_ray(self, handle, point) -> tuple[int, int]:
        """Split a ray edge at a point, producing a finite stub and a new
        ray.  Returns (stub handle, ray handle) where the stub is the
        part adjacent to the old base."""
        ci, pos = self.locate(handle)
        cell = self.cells[ci]
        if cell.kind == "polygon":
            raise SurgeryError("polygons have no rays")
        stub, ray = self._new_handle(), self._new_handle()
        if pos == 0:  # in-ray: travel from infinity to verts[0]
            cell.verts.insert(0, point)
            cell.handles[0:1] = [ray, stub]
            return stub, ray
        if pos == len(cell.verts):  # out-ray
            cell.verts.append(point)
            cell.handles[pos : pos + 1] = [stub, ray]
            return stub, ray
        raise SurgeryError("not a ray edge")

    def vertex_index(self, ci, pt):
        verts = self.cells[ci].verts
        order = sorted(range(len(verts)), key=lambda i: abs(verts[i] - pt))
        best = order[0]
        d1 = abs(verts[best] - pt)
        local = max((abs(v) for v in verts), default=1.0) + 1e-30
        if d1 <= 1e-12 * local:
            return best
        d2 = abs(verts[order[1]] - pt) if len(order) > 1 else math.inf
        if d1 <= 1e-7 * (abs(pt) + 1.0) and d1 < 0.01 * d2:
            return best
        raise SurgeryError("point is not a cell vertex")

    def split_cell_along_path(self, ci, path, reglue: bool = True,
                              idx0: int | None = None, idx1: int | None = None):
        """Cut cell ``ci`` along ``path``, whose first and last points
        must be existing cell vertices.  Returns (cellA, cellB): for
        polygons A holds the boundary arc from path-start forward to
        path-end; for unbounded cells the path must run forward along
        the chain (start index < end index) and A is the bounded piece
        between the chain arc and the path.

        With ``reglue`` the two path copies are identified (plain
        subdivision); otherwise both copies stay free and their handle
        lists are returned in travel order as (hpA, hpB)."""
        cell = self.cells[ci]
        verts, handles = cell.verts, cell.handles
        i0 = idx0 if idx0 is not None else self.vertex_index(ci, path[0])
        i1 = idx1 if idx1 is not None else self.vertex_index(ci, path[-1])
        if i0 == i1:
            raise SurgeryError("degenerate cut")
        inner = list(path[1:-1])
        ne = len(path) - 1
        hpA = [self._new_handle() for _ in range(ne)]
        hpB = [self._new_handle() for _ in range(ne)]
        if cell.kind == "polygon":
            n = len(verts)
            # piece A: forward arc i0 -> i1, then path backward
            arcA_v, arcA_h = [], []
            i = i0
            while True:
                arcA_v.append(verts[i])
                if i == i1:
                    break
                arcA_h.append(handles[i])
                i = (i + 1) % n
            vertsA = arcA_v + list(reversed(inner))
            handlesA = arcA_h + list(reversed(hpA))
            arcB_v, arcB_h = [], []
            i = i1
            while True:
                arcB_v.append(verts[i])
                if i == i0:
                    break
                arcB_h.append(handles[i])
                i = (i + 1) % n
            vertsB = arcB_v + inner
            handlesB = arcB_h + hpB
            cellA = self.add_cell("polygon", vertsA)
            self.cells[cellA].handles = handlesA
            cellB = self.add_cell("polygon", vertsB)
            self.cells[cellB].handles = handlesB
        else:
            if not (i0 < i1):
                raise SurgeryError("cut path must run forward along the chain")
            vertsA = verts[i0 : i1 + 1] + list(reversed(inner))
            handlesA = handles[1 + i0 : 1 + i1] + list(reversed(hpA))
            cellA = self.add_cell("polygon", vertsA)
            self.cells[cellA].handles = handlesA
            vertsB = verts[: i0 + 1] + inner + verts[i1:]
            handlesB = ([handles[0]] + handles[1 : 1 + i0] + hpB
                        + handles[1 + i1 : len(handles) - 1] + [handles[-1]])
            cellB = self.add_cell("unbounded", vertsB, cell.ray_in, cell.ray_out)
            self.cells[cellB].handles = handlesB
        del self.cells[ci]
        if reglue:
            for a, b in zip(hpA, hpB):
                self.add_ident(a, b, 0, 0j)
            return cellA, cellB
        return cellA, cellB, hpA, hpB


# ---------------------------------------------------------------------------
# helpers shared by the surgeries
# ---------------------------------------------------------------------------


def power_up(surface: FlatSurface, e: int) -> FlatSurface:
    """Reinterpret a k'-differential surface as its e-th power."""
    idents = [Identification(i.a, i.b, i.m * e, i.t) for i in surface.identifications]
    md = dict(surface.metadata)
    md["route"] = md.get("route", "") + f"+power{e}"
    return FlatSurface(surface.k * e, list(surface.cells), idents, md)


def scale_surface(surface: FlatSurface, factor: complex) -> FlatSurface:
    """Rescale (and, for complex factors, rotate) all chart coordinates."""
    cells = [Cell(c.kind, tuple(v * factor for v in c.vertices),
                  None if c.ray_in is None else c.ray_in * factor,
                  None if c.ray_out is None else c.ray_out * factor)
             for c in surface.cells]
    idents = [Identification(i.a, i.b, i.m, i.t * factor) for i in surface.identifications]
    return FlatSurface(surface.k, cells, idents, dict(surface.metadata))


def local_split_possible(k: int, a0: int, parts) -> bool:
    """Can a zero of order a0 be split into ``parts`` by a local graft?
    Impossible exactly when k | a0, two parts, and gcd(parts) not
    divisible by k; for divisible a0 the graft piece must also admit the
    zero residue tuple."""
    parts = tuple(parts)
    if sum(parts) != a0:
        raise OrderSumMismatch(f"parts sum to {sum(parts)}, not {a0}")
    if any(p <= -k for p in parts):
        raise SurgeryError("every part must exceed -k")
    if a0 % k == 0:
        if len(parts) == 2 and gcd(parts[0], parts[1]) % k != 0:
            return False
        nondiv = [p for p in parts if p % k != 0]
        if len(nondiv) == 2:
            div_sum = sum(p for p in parts if p % k == 0)
            if div_sum < k:
                return False
    return True


def zero_residue_brick(k: int, parts, seed: int = 0) -> FlatSurface:
    """Genus-zero surface of type (parts; -(sum+2k)) whose k-residue at
    the single pole vanishes (trivially, when the order is not divisible
    by k).  Non-primitive inventories are built as powers."""
    from .g0 import construct_g0, ConstructionFailure

    parts = tuple(parts)
    a0 = sum(parts)
    d = k
    for p in parts:
        d = gcd(d, p)
    if d == 1:
        pole = a0 + 2 * k
        if pole % k == 0:
            sig = Signature(k, 0, parts, (pole,), (), 0)
            res = ResidueConfig((0j,))
        else:
            sig = Signature(k, 0, parts, (), (pole,), 0)
            res = ResidueConfig(())
        return construct_g0(sig, res, seed=seed)
    kp = k // d
    sub_parts = tuple(p // d for p in parts)
    pole = sum(sub_parts) + 2 * kp
    if pole % kp == 0:
        sig = Signature(kp, 0, sub_parts, (pole,), (), 0) if pole >= 2 * kp else None
        if sig is None:
            raise SurgeryError("degenerate power brick")
        res = ResidueConfig((0j,))
    else:
        sig = Signature(kp, 0, sub_parts, (), (pole,), 0)
        res = ResidueConfig(())
    sub = construct_g0(sig, res, seed=seed, check=False)
    return power_up(sub, d)


def _corner_cycle(surface: FlatSurface, partner, root, members):
    """Corners of a vertex class in cyclic walk order."""
    start = members[0]
    out = [start]
    cur = start
    while True:
        cur = next_corner(surface, partner, cur)
        if cur == start:
            break
        out.append(cur)
        if len(out) > len(members) + 1:
            raise SurgeryError("corner cycle does not close")
    return out


def _find_zero_class(an, order_value):
    for root, order in an.zero_orders.items():
        if order == order_value:
            return root
    raise NotAZero(f"no zero of order {order_value}")


def _edge_handle_of_flank(es: EditSurface, ci, pos):
    return es.cells[ci].handles[pos]


def _dist_point_segment(p, a, b):
    ab = b - a
    if ab == 0:
        return abs(p - a)
    t = ((p - a) / ab).real
    t = max(0.0, min(1.0, t))
    return abs(p - (a + t * ab))


def _corner_local_scale(cell: Cell, vi: int) -> float:
    """Safe cutting radius at a cell corner: clear of every non-incident
    boundary piece and shorter than both flank edges."""
    V = cell.vertices[vi]
    prev_pos, next_pos = cell.corner_flanks(vi)
    scale = max(abs(v) for v in cell.vertices) + 1.0
    best = math.inf
    for pos in range(cell.edge_count):
        t = cell.edge_type(pos)
        if t == "segment":
            a, b = cell.edge_endpoints(pos)
            d = _dist_point_segment(V, a, b)
            L = abs(b - a)
            if pos in (prev_pos, next_pos):
                best = min(best, L)
            elif d > 1e-12 * scale:
                best = min(best, d)
        else:
            base = cell.ray_base(pos)
            dirn = cell.ray_dir(pos)
            far = base + dirn / abs(dirn) * 64 * scale
            d = _dist_point_segment(V, base, far)
            if pos in (prev_pos, next_pos):
                continue
            if d > 1e-12 * scale:
                best = min(best, d)
    return best


def _first_boundary_hit(cell: Cell, V: complex, direction: complex):
    """First boundary crossing of the ray from V along ``direction``,
    ignoring hits at V itself.  Returns (edge pos, point, parameter)."""
    d = direction / abs(direction)
    scale = max(abs(v) for v in cell.vertices) + 1.0
    best = None
    for pos in range(cell.edge_count):
        t = cell.edge_type(pos)
        if t == "segment":
            a, b = cell.edge_endpoints(pos)
        else:
            a = cell.ray_base(pos)
            b = a + cell.ray_dir(pos) / abs(cell.ray_dir(pos)) * 256 * scale
        ab = b - a
        denom = (d.real * ab.imag - d.imag * ab.real)
        if abs(denom) < 1e-14 * abs(ab):
            continue
        rel = a - V
        tt = (rel.real * ab.imag - rel.imag * ab.real) / denom
        uu_num = (rel.real * d.imag - rel.imag * d.real)
        uu = uu_num / denom
        if tt <= 1e-9 * scale or not (1e-9 < uu < 1 - 1e-9):
            continue
        if best is None or tt < best[2]:
            best = (pos, V + tt * d, tt)
    return best


def _slit_escaping(es: EditSurface, ci: int, V: complex, vec: complex):
    """Slit [V, V+vec] inside an unbounded cell along a direction that
    escapes to infinity: split the cell along the full ray and reglue
    everything beyond the tip."""
    cell = es.cells[ci]
    if cell.kind == "polygon":
        raise SurgeryError("no escape direction in a bounded cell")
    vi = es.vertex_index(ci, V)
    cobj = es._cell_obj(cell)
    theta = cobj.corner_angle(vi)
    _, next_pos = cobj.corner_flanks(vi)
    q_dir = cobj.travel_dir(next_pos)
    off = cmath.phase(vec / q_dir) % TWO_PI
    if not (0.02 < off < theta - 0.02):
        raise SurgeryError("slit direction leaves the corner wedge")
    tip = V + vec
    d = vec / abs(vec)
    handles = cell.handles
    hA = [es._new_handle() for _ in range(2)]  # [V,tip] stub + ray, A side
    hB = [es._new_handle() for _ in range(2)]
    vertsA = cell.verts[: vi + 1] + [tip]
    handlesA = [handles[0]] + handles[1 : vi + 1] + [hA[0], hA[1]]
    cellA = es.add_cell("unbounded", vertsA, cell.ray_in, d)
    es.cells[cellA].handles = handlesA
    vertsB = [tip] + cell.verts[vi:]
    handlesB = [hB[1], hB[0]] + handles[vi + 1 :]
    cellB = es.add_cell("unbounded", vertsB, d, cell.ray_out)
    es.cells[cellB].handles = handlesB
    del es.cells[ci]
    # A's new edges: stub [V->tip] then out-ray; B: in-ray then stub [tip->V]
    es.add_ident(hA[1], hB[1], 0, 0j)  # rays beyond the tip
    return hB[0], hA[0], cellA, cellB


def _slit(es: EditSurface, ci: int, V: complex, vec: complex):
    """Cut the segment [V, V+vec] open inside cell ``ci`` (V a vertex of
    the cell).  Returns (handle_A, handle_B): the two free copies, where
    A travels tip->V and B travels V->tip."""
    cell = es._cell_obj(es.cells[ci])
    vi = es.vertex_index(ci, V)
    theta = cell.corner_angle(vi)
    _, next_pos = cell.corner_flanks(vi)
    off = cmath.phase(vec / cell.travel_dir(next_pos)) % TWO_PI
    if not (0.02 < off < theta - 0.02):
        raise SurgeryError("slit direction leaves the corner wedge")
    hit = _first_boundary_hit(cell, V, vec)
    if hit is None:
        return _slit_escaping(es, ci, V, vec)
    pos, xpt, tt = hit
    if tt <= abs(vec) * 1.2:
        raise SurgeryError("slit too long for its cell")
    tip = V + vec
    # make the hit point a vertex (subdividing the hit edge and partner)
    h_hit = es.cells[ci].handles[pos]
    partner = es.partner_map().get(h_hit)
    if cell.edge_type(pos) == "segment":
        h1, h2 = es.subdivide_segment(h_hit, xpt)
        new_pair = (h1, h2)
    else:
        stub, ray = es.subdivide_ray(h_hit, xpt)
        new_pair = (stub, ray)
    if partner is not None:
        idx, is_a = partner
        ha, hb, m, t = es.idents[idx]
        rot = cmath.exp(2j * math.pi * m / es.k)
        if is_a:
            ximg = rot * xpt + t
        else:
            ximg = (xpt - t) / rot
        other = hb if is_a else ha
        oc, opos = es.locate(other)
        ocell = es._cell_obj(es.cells[oc])
        ray_pair = cell.edge_type(pos) != "segment"
        if ocell.edge_type(opos) == "segment":
            o_pair = es.subdivide_segment(other, ximg)
        else:
            o_pair = es.subdivide_ray(other, ximg)
        del es.idents[idx]
        if ray_pair:
            # out-ray against in-ray: stubs pair with stubs, rays with rays
            mine = (new_pair[0], o_pair[0]) if is_a else (o_pair[0], new_pair[0])
            rays = (new_pair[1], o_pair[1]) if is_a else (o_pair[1], new_pair[1])
            es.add_ident(mine[0], mine[1], m, t)
            es.add_ident(rays[0], rays[1], m, t)
        elif is_a:
            # travel reversal: first sub-edge of a pairs with second of b
            es.add_ident(new_pair[0], o_pair[1], m, t)
            es.add_ident(new_pair[1], o_pair[0], m, t)
        else:
            es.add_ident(o_pair[0], new_pair[1], m, t)
            es.add_ident(o_pair[1], new_pair[0], m, t)
    # cut along [V, tip, xpt] (or reversed for unbounded order)
    path = [V, tip, xpt]
    kind = es.cells[ci].kind
    if kind != "polygon":
        i0 = es.vertex_index(ci, V)
        i1 = es.vertex_index(ci, xpt)
        if i0 > i1:
            path = [xpt, tip, V]
    cellA, cellB, hpA, hpB = es.split_cell_along_path(ci, path, reglue=False)
    # path edge 0 = path[0]->path[1], edge 1 = path[1]->path[2]; the slit
    # is the edge touching V
    slit_idx = 0 if abs(path[0] - V) < abs(path[2] - V) else 1
    seam_idx = 1 - slit_idx
    es.add_ident(hpA[seam_idx], hpB[seam_idx], 0, 0j)
    return hpA[slit_idx], hpB[slit_idx], cellA, cellB


def _lattice_ident(es: EditSurface, ha, hb):
    """Identify two free segment edges, inferring the lattice rotation."""
    ca, pa = es.locate(ha)
    cb, pb = es.locate(hb)
    cella = es._cell_obj(es.cells[ca])
    cellb = es._cell_obj(es.cells[cb])
    a0, a1 = cella.edge_endpoints(pa)
    b0, b1 = cellb.edge_endpoints(pb)
    va, vb = a1 - a0, b1 - b0
    ratio = -vb / va
    ang = cmath.phase(ratio)
    m = round(ang / (TWO_PI / es.k)) % es.k
    rot = cmath.exp(2j * math.pi * m / es.k)
    if abs(rot - ratio / abs(ratio)) > 1e-6 or abs(abs(va) - abs(vb)) > 1e-9 * (abs(va) + 1):
        raise SurgeryError("edges cannot be glued by a lattice rotation")
    t = b1 - rot * a0
    return es.add_ident(ha, hb, m, t)


def sew_handle(surface: FlatSurface, zero_order: int, seed: int = 0,
               rotation: int = 0) -> FlatSurface:
    """Cross-glue two slits at a zero of the given order: genus rises by
    one and the zero's order by 2k; residues are untouched."""
    an = analyze(surface)
    root = _find_zero_class(an, zero_order)
    corners = _corner_cycle(surface, an.partner, root, an.vertex_classes[root])
    k = surface.k
    scale = surface.scale()

    def wedge_contains(cell, vi, direction, margin=0.05):
        th = cell.corner_angle(vi)
        _, next_pos = cell.corner_flanks(vi)
        base = cell.travel_dir(next_pos)
        off = (cmath.phase(direction / base)) % TWO_PI
        return margin < off < th - margin

    last = None
    for c1, c2, m, shrink in [(a, b, mm, sh) for a in corners for b in corners
                              for mm in range(k) for sh in (0.2, 0.05)]:
        try:
            es = EditSurface(surface)
            cell1 = surface.cells[c1[0]]
            V1 = cell1.vertices[c1[1]]
            th1 = cell1.corner_angle(c1[1])
            r1 = min(_corner_local_scale(cell1, c1[1]), scale) * shrink
            _, next_pos = cell1.corner_flanks(c1[1])
            base = cell1.travel_dir(next_pos)
            d1 = base / abs(base) * cmath.exp(1j * min(th1 * 0.5, 1.0))
            w1 = r1 * d1
            if not wedge_contains(cell1, c1[1], w1):
                continue
            hA1, hB1, ca1, cb1 = _slit(es, c1[0], V1, w1)
            w2 = -cmath.exp(2j * math.pi * m / k) * w1
            cand_cells = [c2[0]] if c2[0] in es.cells else [ca1, cb1]
            done = False
            for cc in cand_cells:
                try:
                    V2 = surface.cells[c2[0]].vertices[c2[1]]
                    V2 = es.cells[cc].verts[es.vertex_index(cc, V2)]
                    hA2, hB2, _, _ = _slit(es, cc, V2, w2)
                    _lattice_ident(es, hA1, hA2)
                    _lattice_ident(es, hB1, hB2)
                    done = True
                    break
                except (SurgeryError, ValueError) as e:
                    last = e
                    continue
            if not done:
                continue
            out = es.to_surface()
            an2 = analyze(out)
            if an2.genus != an.genus + 1:
                raise SurgeryError("genus did not rise")
            want_zeros = sorted(an.zero_orders.values())
            want_zeros.remove(zero_order)
            want_zeros.append(zero_order + 2 * k)
            if sorted(an2.zero_orders.values()) != sorted(want_zeros):
                raise SurgeryError("zero orders changed unexpectedly")
            if sorted(an2.end_orders.values()) != sorted(an.end_orders.values()):
                raise SurgeryError("pole orders changed")
            md = dict(out.metadata)
            md["route"] = md.get("route", "") + "+handle"
            out.metadata = md
            return out
        except (SurgeryError, SurfaceError, ValueError) as e:
            last = e
            continue
    raise SurgeryError(f"handle sewing failed: {last}")


def add_planes(surface: FlatSurface, zero_order: int, count: int,
               which: int = 0) -> FlatSurface:
    """Insert ``count`` full planes along a cut from a zero of the given
    order out to a pole's end: the zero gains k*count, and the pole whose
    domain absorbs the cut deepens by k*count."""
    if count < 1:
        raise SurgeryError("count must be >= 1")
    an = analyze(surface)
    roots = [r for r, o in an.zero_orders.items() if o == zero_order]
    if not roots:
        raise NotAZero(f"no zero of order {zero_order}")
    root = roots[which % len(roots)]
    members = set(an.vertex_classes[root])
    es = EditSurface(surface)
    # a ray identification whose base belongs to the class
    for idx, ident in enumerate(surface.identifications):
        ca = surface.cells[ident.a[0]]
        if ca.edge_type(ident.a[1]) != "out":
            continue
        base_vertex = (ident.a[0], len(ca.vertices) - 1)
        if base_vertex not in members:
            continue
        ha, hb, m, t = es.idents[idx]
        del es.idents[idx]
        base = ca.ray_base(ident.a[1])
        dirn = ca.ray_dir(ident.a[1])
        cur = ha
        for _ in range(count):
            pc = es.add_cell("unbounded", [base], dirn, dirn)
            hin, hout = es.cells[pc].handles[0], es.cells[pc].handles[-1]
            es.add_ident(cur, hin, 0, 0j)
            cur = hout
        es.add_ident(cur, hb, m, t)
        out = es.to_surface()
        md = dict(out.metadata)
        md["route"] = md.get("route", "") + f"+planes{count}"
        out.metadata = md
        return out
    raise SurgeryError("no polar ray cycle passes through the zero")


def insert_polar_chain(surface: FlatSurface, ident_index: int, orders,
                       taus=None) -> FlatSurface:
    """Replace a saddle-connection identification by a chain of trivial
    polar parts of the given divisible orders (residue 0 each)."""
    from .bricks import Builder, polar_div_part

    k = surface.k
    orders = list(orders)
    if not orders:
        return surface
    taus = list(taus) if taus is not None else [1] * len(orders)
    ident = surface.identifications[ident_index]
    ca = surface.cells[ident.a[0]]
    if ca.edge_type(ident.a[1]) != "segment":
        raise SurgeryError("polar chains insert along segment identifications")
    a0, a1 = ca.edge_endpoints(ident.a[1])
    va = a1 - a0
    es = EditSurface(surface)
    ha, hb, m, t = es.idents[ident_index]
    del es.idents[ident_index]
    builder = Builder(k)
    tops, bottoms = [], []
    x = -va
    for b, tau in zip(orders, taus):
        if b % k or b < 2 * k:
            raise SurgeryError("orders must be divisible and at least 2k")
        if not (1 <= tau <= b // k - 1):
            raise SurgeryError("type out of range")
        part = polar_div_part(builder, b, [x], [x], planes_top_left=tau - 1)
        tops.append(part.top[0])
        bottoms.append(part.bottom[0])
    base_cells = len(es.cells)
    remap = {}
    for ci, cell in enumerate(builder.cells):
        nc = es.add_cell(cell.kind, list(cell.vertices), cell.ray_in, cell.ray_out)
        remap[ci] = nc
    for bi in builder.identifications:
        es.add_ident(es.cells[remap[bi.a[0]]].handles[bi.a[1]],
                     es.cells[remap[bi.b[0]]].handles[bi.b[1]], bi.m, bi.t)

    def h_of(ref):
        return es.cells[remap[ref[0]]].handles[ref[1]]

    _lattice_ident(es, ha, h_of(tops[0]))
    for i in range(len(orders) - 1):
        _lattice_ident(es, h_of(bottoms[i]), h_of(tops[i + 1]))
    _lattice_ident(es, h_of(bottoms[-1]), hb)
    out = es.to_surface()
    md = dict(out.metadata)
    md["route"] = md.get("route", "") + f"+chain{len(orders)}"
    out.metadata = md
    return out


def _apply(g, z):
    return g[0] * z + g[1]


def _inv_apply(g, z):
    return (z - g[1]) / g[0]


def blow_up(surface: FlatSurface, zero_order: int, parts, seed: int = 0) -> FlatSurface:
    """Split a zero of the given order into zeros of orders ``parts`` by
    cutting out a cone neighborhood and grafting a zero-residue
    genus-zero piece of matching cone angle in its place.  Residues and
    genus are unchanged; the graft happens at a scale epsilon below the
    systole at the zero."""
    k = surface.k
    parts = tuple(parts)
    if sum(parts) != zero_order:
        raise OrderSumMismatch(f"parts sum to {sum(parts)}, not {zero_order}")
    if len(parts) == 1:
        return surface
    if not local_split_possible(k, zero_order, parts):
        raise NonLocalSplit(
            f"splitting {zero_order} into {parts} admits no zero-residue local piece")
    an = analyze(surface)
    root = _find_zero_class(an, zero_order)
    members = an.vertex_classes[root]
    corners = _corner_cycle(surface, an.partner, root, members)

    # developing charts around the vertex, one per corner
    charts = [(1 + 0j, 0j)]
    for i in range(len(corners) - 1):
        ci, vi = corners[i]
        cell = surface.cells[ci]
        _, e_next = cell.corner_flanks(vi)
        idx, is_a = an.partner[(ci, e_next)]
        charts.append(_crossing_update(surface, charts[-1], idx, is_a))
    V0 = surface.cells[corners[0][0]].vertices[corners[0][1]]
    center_S = _apply(charts[0], V0)

    delta = math.inf
    for ci, vi in corners:
        delta = min(delta, _corner_local_scale(surface.cells[ci], vi))
    delta *= 0.3
    if not (delta > 0 and math.isfinite(delta)):
        raise SurgeryError("no room to cut at the zero")

    last = None
    for jit in (0.0, 0.013, -0.021):
        for rot_place in range(k):
            try:
                return _blow_up_once(surface, an, root, corners, charts, center_S,
                                     delta * (1 + jit), parts, seed, rot_place)
            except (SurgeryError, SurfaceError, ValueError) as e:
                last = e
                continue
    raise SurgeryError(f"zero splitting failed: {last}")


def _blow_up_once(surface, an, root, corners, charts, center_S, delta, parts, seed, rot_place=0):
    k = surface.k
    es = EditSurface(surface)
    n_cor = len(corners)

    # corner records with stable flank handles
    recs = []
    for i, (ci, vi) in enumerate(corners):
        cell = surface.cells[ci]
        prev_pos, next_pos = cell.corner_flanks(vi)
        recs.append({
            "cell": ci,
            "V": cell.vertices[vi],
            "theta": cell.corner_angle(vi),
            "h_prev": es.cells[ci].handles[prev_pos],
            "h_next": es.cells[ci].handles[next_pos],
            "prev_type": cell.edge_type(prev_pos),
            "next_type": cell.edge_type(next_pos),
            "dir_prev": -cell.travel_dir(prev_pos),  # away from V along e_prev
            "dir_next": cell.travel_dir(next_pos),
        })

    # subdivide every flank identification at distance delta from V; an
    # edge with both endpoints at V (a closed saddle connection) carries
    # two crossings and is subdivided from both ends
    partner = es.partner_map()
    by_ident: dict[int, list[int]] = {}
    for i, rec in enumerate(recs):
        idx, _ = partner[rec["h_next"]]
        by_ident.setdefault(idx, []).append(i)
    stub = {}
    for idx, crossing_list in by_ident.items():
        ha, hb, m, t = es.idents[idx]
        rot = cmath.exp(2j * math.pi * m / k)
        if len(crossing_list) > 2:
            raise SurgeryError("edge crossed more than twice by the star")
        # each crossing cuts at distance delta from the V-end of the
        # instance serving as the outgoing flank
        cuts = []  # (point in a-chart, crossing index, from_a)
        for i in crossing_list:
            rec = recs[i]
            q = rec["V"] + delta * rec["dir_next"] / abs(rec["dir_next"])
            if rec["h_next"] == ha:
                cuts.append((q, i, True))
            else:
                cuts.append(((q - t) / rot, i, False))
        ca, pa = es.locate(ha)
        cella = es._cell_obj(es.cells[ca])
        etype = cella.edge_type(pa)

        def travel_pieces(handle, cell_obj, pos, pts_travel):
            tkind = cell_obj.edge_type(pos)
            if tkind == "segment":
                out = []
                cur = handle
                for p in pts_travel:
                    h1, h2 = es.subdivide_segment(cur, p)
                    out.append(h1)
                    cur = h2
                out.append(cur)
                return out
            if len(pts_travel) != 1:
                raise SurgeryError("ray flank crossed twice")
            s, r = es.subdivide_ray(handle, pts_travel[0])
            return [s, r] if tkind == "out" else [r, s]

        if etype == "segment":
            a_start = cella.edge_endpoints(pa)[0]
            cuts.sort(key=lambda c: abs(c[0] - a_start))
        pts_a = [c[0] for c in cuts]
        pieces_a = travel_pieces(ha, cella, pa, pts_a)
        cb, pb = es.locate(hb)
        cellb = es._cell_obj(es.cells[cb])
        pts_b = [rot * p + t for p in reversed(pts_a)]
        pieces_b = travel_pieces(hb, cellb, pb, pts_b)
        del es.idents[idx]
        for pa_h, pb_h in zip(pieces_a, reversed(pieces_b)):
            es.add_ident(pa_h, pb_h, m, t)
        for q_a, i, from_a in cuts:
            nxt_i = (i + 1) % n_cor
            pos = [c[1] for c in cuts].index(i)
            if from_a:
                stub_next = pieces_a[0] if pos == 0 else pieces_a[-1]
                stub_prev = pieces_b[-1] if pos == 0 else pieces_b[0]
                q_next, q_prev = q_a, rot * q_a + t
            else:
                # the crossing cut sits at distance delta from b's start,
                # i.e. adjacent to a's travel end
                stub_next = pieces_b[0] if pos == len(cuts) - 1 else pieces_b[-1]
                stub_prev = pieces_a[-1] if pos == len(cuts) - 1 else pieces_a[0]
                q_next, q_prev = rot * q_a + t, q_a
            stub[(i, "next")] = (stub_next, q_next)
            stub[(nxt_i, "prev")] = (stub_prev, q_prev)

    # per-corner wedge cut; record free edges with their global params
    lam_points = []  # (param, global point), param = polyline index
    s_free = []  # (param_start, param_end, handle, chart)
    remap = {}
    dead_cells = set()
    param = 0.0
    def _far_end_index(ci_cur, handle, V):
        hc, pos = es.locate(handle)
        if hc != ci_cur:
            raise SurgeryError("stub edge left its cell")
        cell = es.cells[hc]
        if cell.kind == "polygon":
            ids = (pos, (pos + 1) % len(cell.verts))
        else:
            t = es.edge_kind(handle)
            if t == "segment":
                ids = (pos - 1, pos)
            elif t == "in":
                ids = (0, 0)
            else:
                ids = (len(cell.verts) - 1,) * 2
        return max(ids, key=lambda ix: abs(cell.verts[ix] - V))

    for i, rec in enumerate(recs):
        g = charts[i]
        entry_h, entry_q = stub[(i, "prev")]
        exit_h, exit_q = stub[(i, "next")]
        V = rec["V"]
        a_dir = entry_q - V
        b_dir = exit_q - V
        theta = rec["theta"]
        steps = max(1, math.ceil(theta / (math.pi / 2)))
        pts = [entry_q]
        for sidx in range(1, steps + 1):
            # off-lattice sampling keeps graft rays clear of the vertices
            frac = (sidx - 0.3819660112501051) / steps
            frac = min(max(frac, 0.07), 0.93)
            ang = cmath.phase(a_dir) - theta * frac
            pts.append(V + 0.45 * delta * cmath.exp(1j * ang))
        pts.append(exit_q)
        ci = remap.get(rec["cell"], rec["cell"])
        e0 = _far_end_index(ci, entry_h, V)
        e1 = _far_end_index(ci, exit_h, V)
        if es.cells[ci].kind != "polygon" and e0 > e1:
            pts = list(reversed(pts))
            e0, e1 = e1, e0
        out = es.split_cell_along_path(ci, pts, reglue=False, idx0=e0, idx1=e1)
        cellA, cellB, hpA, hpB = out
        dead_cells.add(cellA)
        remap[rec["cell"]] = cellB
        for j in range(len(pts) - 1):
            p0, p1 = _apply(g, pts[j]), _apply(g, pts[j + 1])
            lam_points.append((param, p0))
            s_free.append((param, param + 1.0, hpB[j], g))
            param += 1.0
        if i == n_cor - 1:
            lam_points.append((param, _apply(g, pts[-1])))
    # drop the wedge cells and the stub identifications
    dead_handles = set()
    for ci in dead_cells:
        dead_handles.update(es.cells[ci].handles)
        del es.cells[ci]
    for idx in [idx for idx, (ha, hb, m, t) in es.idents.items()
                if ha in dead_handles or hb in dead_handles]:
        ha, hb, m, t = es.idents[idx]
        if not (ha in dead_handles and hb in dead_handles):
            raise SurgeryError("wedge removal left a dangling identification")
        del es.idents[idx]

    # ------- graft piece -------
    brick = zero_residue_brick(k, parts, seed)
    factor = delta * 1e-3 / brick.scale() * cmath.exp(2j * math.pi * rot_place / k)
    brick = scale_surface(brick, factor)
    anB = analyze(brick)
    if anB.genus != 0 or sorted(anB.zero_orders.values()) != sorted(parts):
        raise SurgeryError("graft piece has wrong invariants")
    (end_root, cycle), = anB.end_classes.items()
    if anB.end_orders[end_root] != sum(parts) + 2 * k:
        raise SurgeryError("graft piece has wrong pole order")
    resB = anB.end_residues[end_root]
    if resB is not None and abs(resB) > 1e-9 * max(1.0, delta):
        raise SurgeryError("graft piece has nonzero residue")

    eb = EditSurface(brick)
    hs = [(1 + 0j, 0j)]
    partnerB = {}
    for idx, ident in enumerate(brick.identifications):
        partnerB[ident.a] = (idx, True)
        partnerB[ident.b] = (idx, False)
    ray_idents = []
    for ci in cycle:
        cell = brick.cells[ci]
        out_pos = cell.edge_count - 1
        idx, is_a = partnerB[(ci, out_pos)]
        ray_idents.append(idx)
        hs.append(_crossing_update(brick, hs[-1], idx, True))
    H = hs[-1]  # end holonomy
    if abs(H[0] - 1) < 1e-9:
        center_B = 0j
    else:
        center_B = H[1] / (1 - H[0])
    shift = center_B - center_S

    lam_b = [(p, z + shift) for p, z in lam_points]
    period = param

    def h_power(z, s):
        # the end holonomy is a rotation about center_B (residue zero)
        rot = H[0] ** s
        return center_B + rot * (z - center_B)

    # angular lift of the polyline around the graft center
    eta = [cmath.phase(lam_b[0][1] - center_B)]
    for i in range(1, len(lam_b)):
        eta.append(eta[-1] + cmath.phase(
            (lam_b[i][1] - center_B) / (lam_b[i - 1][1] - center_B)))
    winding = eta[-1] - eta[0]  # +- total cone angle

    seg3 = []
    for s in (-1, 0, 1):
        for i in range(len(lam_b) - 1):
            seg3.append((lam_b[i][0] + s * period, eta[i] + s * winding,
                         h_power(lam_b[i][1], s), h_power(lam_b[i + 1][1], s)))

    # candidate crossings per ray, tagged with the angular lift
    cand = []
    for j, ci in enumerate(cycle):
        cell = brick.cells[ci]
        out_pos = cell.edge_count - 1
        base = _apply(hs[j], cell.ray_base(out_pos))
        d = hs[j][0] * cell.ray_dir(out_pos)
        d /= abs(d)
        found = []
        for p0, eta0, a, b in seg3:
            ab = b - a
            denom = d.real * ab.imag - d.imag * ab.real
            if abs(denom) < 1e-14 * abs(ab):
                continue
            rel = a - base
            tt = (rel.real * ab.imag - rel.imag * ab.real) / denom
            uu = (rel.real * d.imag - rel.imag * d.real) / denom
            if tt > 1e-12 and 1e-9 < uu < 1 - 1e-9:
                x = base + tt * d
                eta_x = eta0 + cmath.phase((x - center_B) / (a - center_B))
                found.append((p0 + uu, x, eta_x))
        if not found:
            raise SurgeryError("a graft ray misses the cut polyline")
        cand.append(found)

    # resolve the sheet ambiguity: successive crossings advance by the
    # cell extents in the winding direction
    sgn = 1.0 if winding >= 0 else -1.0
    extents = [brick.cells[ci].angle_at_infinity() for ci in cycle]
    crossings = None
    for anchor in cand[0]:
        chain = [anchor]
        ok = True
        for j in range(1, len(cycle)):
            want = chain[-1][2] + sgn * extents[j]
            best = min(cand[j], key=lambda c: abs(c[2] - want))
            if abs(best[2] - want) > 1.0:
                ok = False
                break
            chain.append(best)
        if ok:
            crossings = [(c[0], c[1]) for c in chain]
            break
    if crossings is None:
        raise SurgeryError("graft crossings do not chain around the end")
    for j in range(1, len(crossings)):
        if not (0 < crossings[j][0] - crossings[j - 1][0] < period):
            raise SurgeryError("graft crossings are not in walk order")

    # subdivide the brick ray pairs at the crossings
    ray_stub = {}
    for j, idx in enumerate(ray_idents):
        ha, hb, m, t = eb.idents[idx]
        pglob = crossings[j][1]
        pa = _inv_apply(hs[j], pglob)
        pb = _inv_apply(hs[j + 1], pglob)
        stub_a, far_a = eb.subdivide_ray(ha, pa)
        stub_b, far_b = eb.subdivide_ray(hb, pb)
        del eb.idents[idx]
        eb.add_ident(stub_a, stub_b, m, t)
        eb.add_ident(far_a, far_b, m, t)
        ray_stub[j] = (crossings[j][0], pa, pb)

    # cut each end cell from its in-ray crossing to its out-ray crossing
    b_free = []
    deadB = set()
    ncyc = len(cycle)
    for j, ci in enumerate(cycle):
        h = hs[j]
        if j == 0:
            t_in = ray_stub[ncyc - 1][0] - period
            in_chart = ray_stub[ncyc - 1][2]
        else:
            t_in = ray_stub[j - 1][0]
            in_chart = ray_stub[j - 1][2]
        t_out = ray_stub[j][0]
        out_chart = ray_stub[j][1]
        if not (t_out > t_in + 1e-12):
            raise SurgeryError("empty graft window")
        inner = []
        for s in (-1, 0, 1):
            for p, z in lam_b:
                p2 = p + s * period
                if t_in + 1e-9 < p2 < t_out - 1e-9:
                    inner.append((p2, h_power(z, s)))
        inner.sort(key=lambda pz: pz[0])
        inner = [pz for ix, pz in enumerate(inner)
                 if ix == 0 or pz[0] - inner[ix - 1][0] > 1e-9]
        pts_chart = [in_chart] + [_inv_apply(h, z) for _, z in inner] + [out_chart]
        params = [t_in] + [p for p, _ in inner] + [t_out]
        cellA, cellB, hpA, hpB = eb.split_cell_along_path(ci, pts_chart, reglue=False)
        deadB.add(cellB)
        for e in range(len(pts_chart) - 1):
            b_free.append((params[e], params[e + 1], hpA[e], h))
    dead_handlesB = set()
    for ci in deadB:
        dead_handlesB.update(eb.cells[ci].handles)
        del eb.cells[ci]
    for idx in [idx for idx, (ha, hb, m, t) in eb.idents.items()
                if ha in dead_handlesB or hb in dead_handlesB]:
        ha, hb, m, t = eb.idents[idx]
        if not (ha in dead_handlesB and hb in dead_handlesB):
            raise SurgeryError("graft trim left a dangling identification")
        del eb.idents[idx]

    # unify breakpoints: brick crossings subdivide the star edges
    cross_params = sorted(((c[0] - (period if c[0] >= period else 0)) % period)
                          for c in crossings)
    new_s_free = []
    for (p0, p1, h, g) in s_free:
        cuts = sorted(t for t in cross_params if p0 + 1e-9 < t < p1 - 1e-9)
        if not cuts:
            new_s_free.append((p0, p1, h, g))
            continue
        cur_h, cur_p = h, p0
        for t in cuts:
            # point at param t on the original lambda edge [i0, i0+1]
            i0 = int(math.floor(p0 + 1e-9))
            a = lam_points[i0][1]
            b = lam_points[i0 + 1][1]
            frac_pt = a + (b - a) * (t - i0)
            pt_chart = _inv_apply(g, frac_pt)
            h1, h2 = es.subdivide_segment(cur_h, pt_chart)
            new_s_free.append((cur_p, t, h1, g))
            cur_h, cur_p = h2, t
        new_s_free.append((cur_p, p1, cur_h, g))
    s_free = new_s_free

    def norm_interval(p0, p1):
        shift = 0
        while p0 < -1e-9:
            p0 += period
            p1 += period
            shift += 1
        while p0 >= period - 1e-9:
            p0 -= period
            p1 -= period
            shift -= 1
        return (round(p0, 6), round(p1, 6)), shift

    s_by_span = {}
    for (p0, p1, h, g) in s_free:
        span, wraps = norm_interval(p0, p1)
        if wraps:
            raise SurgeryError("star edges should start in the base period")
        s_by_span[span] = (h, g)
    b_by_span = {}
    for (p0, p1, h, hchart) in b_free:
        span, wraps = norm_interval(p0, p1)
        b_by_span[span] = (h, hchart, -wraps)
    if set(s_by_span) != set(b_by_span):
        raise SurgeryError("cut boundaries do not align")

    # import the brick cells into the host surface with fresh handles
    hmap = {}
    for ci, ecell in sorted(eb.cells.items()):
        nc = es.add_cell(ecell.kind, list(ecell.verts), ecell.ray_in, ecell.ray_out)
        for old, new in zip(ecell.handles, es.cells[nc].handles):
            hmap[old] = new
    for idx in sorted(eb.idents):
        ha, hb, m, t = eb.idents[idx]
        es.add_ident(hmap[ha], hmap[hb], m, t)

    for span, (hS, g) in s_by_span.items():
        hB, h, sheet = b_by_span[span]
        hB = hmap[hB]
        # physical correspondence: P_B = H^sheet(g(z) + shift); chart of
        # the brick piece is h
        hrot = H[0] ** sheet
        rot = hrot * g[0] / h[0]
        m = round(cmath.phase(rot) / (TWO_PI / k)) % k
        lat = cmath.exp(2j * math.pi * m / k)
        if abs(lat - rot / abs(rot)) > 1e-6:
            raise SurgeryError("graft gluing is not a lattice rotation")
        t = (hrot * (g[1] + shift - center_B) + center_B - h[1]) / h[0]
        es.add_ident(hS, hB, m, t)

    out = es.to_surface()
    analyze(out)  # reject bad attempts inside the retry loop
    md = dict(out.metadata)
    md["route"] = md.get("route", "") + f"+split{parts}"
    out.metadata = md
    return out
