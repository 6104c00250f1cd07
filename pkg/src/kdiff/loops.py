"""Geometric loops on a flat complex: turning indices and intersections.

A loop is a cyclic sequence of identification crossings.  It is realized
as a piecewise-straight path crossing each listed identification once,
with straight legs (possibly via waypoints) inside each cell.  The turning
index is the total rotation of the tangent, in units of 2*pi/k; on a
genus-one surface the rotation number is the gcd of all singularity
orders with the indices of two loops of intersection number +-1.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .numerics import TWO_PI, turn_angle
from .cells import Cell, IN_RAY, OUT_RAY, SEGMENT, segments_cross
from .surface import FlatSurface, Analysis, analyze, NotGenusOne, SurfaceError, _crossing_update

_RAY_TRUNC = 64.0


@dataclass
class Crossing:
    ident_idx: int
    forward: bool  # True: crossing from the a-side cell into the b-side cell


@dataclass
class RealizedLoop:
    crossings: list[Crossing]
    cells: list[int]  # cell visited after each crossing; len == len(crossings)
    paths: list[list[complex]]  # in-cell path (cell coords), len == len(crossings)
    index_units: int  # turning in units of 2*pi/k


def _edge_point(cell: Cell, pos: int, u: float, scale: float) -> complex:
    t = cell.edge_type(pos)
    if t == SEGMENT:
        a, b = cell.edge_endpoints(pos)
        return a + u * (b - a)
    base = cell.ray_base(pos)
    d = cell.ray_dir(pos)
    return base + (0.5 + u) * scale * d / abs(d)


def _map_point(surface: FlatSurface, ident_idx: int, forward: bool, z: complex) -> complex:
    ident = surface.identifications[ident_idx]
    rot = ident.rotation(surface.k)
    if forward:
        return rot * z + ident.t
    return (z - ident.t) / rot


def _boundary_segments(cell: Cell, scale: float):
    segs = []
    for pos in range(cell.edge_count):
        t = cell.edge_type(pos)
        if t == SEGMENT:
            segs.append((pos, *cell.edge_endpoints(pos)))
        else:
            base = cell.ray_base(pos)
            d = cell.ray_dir(pos)
            far = base + _RAY_TRUNC * scale * d / abs(d)
            segs.append((pos, base, far))
    return segs


def _side_ok(cell: Cell, pos: int, at: complex, toward: complex) -> bool:
    """Does ``toward`` point into the cell from a point on edge ``pos``?"""
    w = cell.travel_dir(pos)
    cr = (w.real * toward.imag - w.imag * toward.real)
    return cr > 1e-12 * abs(w) * abs(toward)


def _path_valid(cell: Cell, pts: list[complex], enter_pos: int, exit_pos: int, scale: float) -> bool:
    if any(abs(pts[i + 1] - pts[i]) < 1e-12 * scale for i in range(len(pts) - 1)):
        return False
    if not _side_ok(cell, enter_pos, pts[0], pts[1] - pts[0]):
        return False
    if not _side_ok(cell, exit_pos, pts[-1], pts[-2] - pts[-1]):
        return False
    segs = _boundary_segments(cell, scale)
    for i in range(len(pts) - 1):
        a0, a1 = pts[i], pts[i + 1]
        for pos, b0, b1 in segs:
            if i == 0 and pos == enter_pos:
                continue
            if i == len(pts) - 2 and pos == exit_pos:
                continue
            if segments_cross(a0, a1, b0, b1):
                return False
    return True


def _cell_path(cell: Cell, P: complex, enter_pos: int, Q: complex, exit_pos: int,
               scale: float) -> list[complex] | None:
    """A piecewise-straight path from P (on edge enter_pos) to Q (on edge
    exit_pos) through the interior of the cell."""
    cands: list[list[complex]] = [[P, Q]]
    mid = (P + Q) / 2
    span = max(abs(Q - P), 0.1 * scale)
    # bowed chords
    if Q != P:
        n = 1j * (Q - P) / abs(Q - P)
        for h in (0.3, -0.3, 0.9, -0.9, 2.0, -2.0):
            cands.append([P, mid + h * span * n, Q])
    # circuits around a common ray base (sectors, slit planes)
    if cell.kind == "unbounded" and cell.edge_type(enter_pos) != SEGMENT and cell.edge_type(exit_pos) != SEGMENT:
        b1, b2 = cell.ray_base(enter_pos), cell.ray_base(exit_pos)
        if abs(b1 - b2) < 1e-12 * scale:
            r = 0.5 * min(abs(P - b1), abs(Q - b1))
            if r > 0:
                aP, aQ = cmath.phase(P - b1), cmath.phase(Q - b1)
                for sweep_dir in (-1, 1):
                    total = (aP - aQ) * sweep_dir
                    total %= TWO_PI
                    steps = max(2, int(math.ceil(total / (math.pi / 3))))
                    pts = [P]
                    for j in range(1, steps):
                        ang = aP - sweep_dir * total * j / steps
                        pts.append(b1 + r * cmath.exp(1j * ang))
                    pts.append(Q)
                    cands.append(pts)
    # far-field route through the opening of an unbounded cell
    if cell.kind == "unbounded":
        try:
            A = cell.angle_at_infinity()
        except Exception:
            A = 0.0
        if A > 0.05:
            w = cell.ray_out / abs(cell.ray_out)
            for frac in (0.5, 0.25, 0.75):
                far_dir = w * cmath.exp(1j * A * frac)
                far1 = cell.vertices[-1] + 4.0 * _RAY_TRUNC * scale * far_dir
                cands.append([P, far1, Q])
                far0 = cell.vertices[0] + 4.0 * _RAY_TRUNC * scale * far_dir
                cands.append([P, (far0 + far1) / 2, Q])
    # polygon centroid
    if cell.kind == "polygon":
        c = sum(cell.vertices) / len(cell.vertices)
        cands.append([P, c, Q])
        for v in cell.vertices:
            cands.append([P, v + 0.05 * (c - v), Q])
    for pts in cands:
        if _path_valid(cell, pts, enter_pos, exit_pos, scale):
            return pts
    return None


def realize_loop(surface: FlatSurface, partner: dict, crossings: list[Crossing],
                 offset: float = 0.0) -> RealizedLoop | None:
    """Realize the loop defined by a cyclic crossing sequence.

    ``offset`` shifts every edge-crossing parameter so that distinct
    loops never share a crossing point.
    """
    k = surface.k
    scale = surface.scale()
    n = len(crossings)
    cells_after = []
    for cr in crossings:
        ident = surface.identifications[cr.ident_idx]
        cells_after.append(ident.b[0] if cr.forward else ident.a[0])
    # entry point of crossing i (in coords of the cell it lands in) and
    # exit point (in coords of the cell it leaves)
    entry_pts, entry_pos = [], []
    exit_pts, exit_pos = [], []
    for i, cr in enumerate(crossings):
        ident = surface.identifications[cr.ident_idx]
        src = ident.a if cr.forward else ident.b
        dst = ident.b if cr.forward else ident.a
        u = 0.382 + 0.236 * ((i * 0.618 + offset) % 1.0)
        pt_src = _edge_point(surface.cells[src[0]], src[1], u, scale)
        pt_dst = _map_point(surface, cr.ident_idx, cr.forward, pt_src)
        exit_pts.append(pt_src)
        exit_pos.append(src[1])
        entry_pts.append(pt_dst)
        entry_pos.append(dst[1])
    paths = []
    for i in range(n):
        cell_idx = cells_after[i]
        cell = surface.cells[cell_idx]
        nxt = (i + 1) % n
        expected_src_cell = (
            surface.identifications[crossings[nxt].ident_idx].a[0]
            if crossings[nxt].forward
            else surface.identifications[crossings[nxt].ident_idx].b[0]
        )
        if expected_src_cell != cell_idx:
            raise SurfaceError("crossing sequence is not a closed cell walk")
        pts = _cell_path(cell, entry_pts[i], entry_pos[i], exit_pts[nxt], exit_pos[nxt], scale)
        if pts is None:
            return None
        paths.append(pts)
    # develop and total the turning
    g = (1 + 0j, 0j)
    dirs = []
    for i in range(n):
        dev = [g[0] * z + g[1] for z in paths[i]]
        for a, b in zip(dev, dev[1:]):
            dirs.append(b - a)
        g = _crossing_update(surface, g, crossings[(i + 1) % n].ident_idx,
                             crossings[(i + 1) % n].forward)
    hol_rot = g[0]
    total = 0.0
    for a, b in zip(dirs, dirs[1:]):
        total += turn_angle(a, b)
    total += turn_angle(dirs[-1], hol_rot * dirs[0])
    units = total / (TWO_PI / k)
    iu = round(units)
    if abs(units - iu) > 1e-6:
        raise SurfaceError(f"loop turning {units} is not an integer multiple of 2*pi/{k}")
    return RealizedLoop(crossings, cells_after, paths, iu)


def loop_intersection(surface: FlatSurface, L1: RealizedLoop, L2: RealizedLoop) -> int:
    """Algebraic intersection number of two realized loops."""
    total = 0
    for i, ci in enumerate(L1.cells):
        for j, cj in enumerate(L2.cells):
            if ci != cj:
                continue
            p1, p2 = L1.paths[i], L2.paths[j]
            for a0, a1 in zip(p1, p1[1:]):
                for b0, b1 in zip(p2, p2[1:]):
                    s = _seg_sign(a0, a1, b0, b1)
                    total += s
    return total


def _seg_sign(a0, a1, b0, b1) -> int:
    def orient(p, q, r):
        return (q.real - p.real) * (r.imag - p.imag) - (q.imag - p.imag) * (r.real - p.real)

    d1 = orient(a0, a1, b0)
    d2 = orient(a0, a1, b1)
    d3 = orient(b0, b1, a0)
    d4 = orient(b0, b1, a1)
    if (d1 > 0) == (d2 > 0) or (d3 > 0) == (d4 > 0):
        return 0
    if min(map(abs, (d1, d2, d3, d4))) == 0:
        return 0
    u = a1 - a0
    v = b1 - b0
    cr = u.real * v.imag - u.imag * v.real
    return 1 if cr > 0 else -1


def cotree_loops(surface: FlatSurface, partner: dict) -> list[list[Crossing]]:
    """One loop per non-tree identification: tree path + the cotree edge."""
    adj = {}
    for idx, ident in enumerate(surface.identifications):
        adj.setdefault(ident.a[0], []).append((idx, ident.b[0], True))
        adj.setdefault(ident.b[0], []).append((idx, ident.a[0], False))
    parent = {0: None}
    order = [0]
    tree_edges = set()
    stack = [0]
    while stack:
        ci = stack.pop()
        for idx, cj, fwd in adj.get(ci, ()):
            if cj not in parent:
                parent[cj] = (ci, idx, fwd)
                tree_edges.add(idx)
                order.append(cj)
                stack.append(cj)

    def path_to_root(c):
        out = []
        while parent[c] is not None:
            pc, idx, fwd = parent[c]
            out.append((idx, fwd, pc, c))
            c = pc
        return out

    loops = []
    for idx, ident in enumerate(surface.identifications):
        if idx in tree_edges:
            continue
        ca, cb = ident.a[0], ident.b[0]
        up_a = path_to_root(ca)  # crossings from ca toward root
        up_b = path_to_root(cb)
        # strip common tail (paths share the segment near the root)
        while up_a and up_b and up_a[-1][0] == up_b[-1][0]:
            up_a.pop()
            up_b.pop()
        crossings = []
        # root-ish junction -> ca: reverse of up_a
        for (eidx, fwd, pc, c) in reversed(up_a):
            crossings.append(Crossing(eidx, fwd))
        crossings.append(Crossing(idx, True))
        for (eidx, fwd, pc, c) in up_b:
            crossings.append(Crossing(eidx, not fwd))
        # drop immediate backtracks (same identification crossed twice in a row)
        changed = True
        while changed and len(crossings) >= 2:
            changed = False
            for i in range(len(crossings)):
                j = (i + 1) % len(crossings)
                if i != j and crossings[i].ident_idx == crossings[j].ident_idx and crossings[i].forward != crossings[j].forward:
                    hi, lo = max(i, j), min(i, j)
                    del crossings[hi]
                    del crossings[lo]
                    changed = True
                    break
        if crossings:
            loops.append(crossings)
    return loops


def rotation_number(surface: FlatSurface, an: Analysis | None = None) -> int:
    """gcd of all singularity orders with the turning indices of two
    loops of intersection number +-1 (genus-one surfaces only)."""
    if an is None:
        an = analyze(surface)
    if an.genus != 1:
        raise NotGenusOne(f"surface has genus {an.genus}")
    candidates = cotree_loops(surface, an.partner)
    realized = []
    for off, crossings in enumerate(candidates):
        L = realize_loop(surface, an.partner, crossings, offset=0.13 * (off + 1))
        if L is not None:
            realized.append(L)
    pair = None
    for i in range(len(realized)):
        for j in range(i + 1, len(realized)):
            inter = loop_intersection(surface, realized[i], realized[j])
            if abs(inter) == 1:
                pair = (realized[i], realized[j])
                break
        if pair:
            break
    if pair is None:
        raise SurfaceError("no realizable loop pair with intersection number +-1")
    g = 0
    for a in an.zero_orders.values():
        g = math.gcd(g, abs(a))
    for b in an.end_orders.values():
        g = math.gcd(g, b)
    g = math.gcd(g, abs(pair[0].index_units))
    g = math.gcd(g, abs(pair[1].index_units))
    return g
