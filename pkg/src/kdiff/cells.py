"""Planar cells and edge identifications.

A surface is a finite list of cells with every edge glued to exactly one
partner edge by a map z -> zeta^m * z + t, zeta = exp(2*pi*i/k).  Two cell
kinds suffice:

* ``polygon``: a bounded simple polygon, vertices CCW.
* ``unbounded``: the region to the left of an infinite boundary walk
  "in-ray, finite chain, out-ray".  The in-ray sits at the first chain
  vertex and points toward infinity with direction ``ray_in``; the walk
  arrives from infinity along it.  The out-ray leaves the last chain
  vertex with direction ``ray_out``.  Half-planes, sectors, slit planes,
  polar-part domains and half-cylinder charts are all instances.

Edge positions: polygon with n vertices has edges 0..n-1 (vertex i to
i+1 mod n).  An unbounded cell with chain v0..vm has edge 0 = in-ray,
edges 1..m = chain segments (v_{i-1} -> v_i), edge m+1 = out-ray.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .numerics import TWO_PI, Tolerance, DEFAULT_TOL, interior_angle, angle_in_01

IN_RAY = "in"
OUT_RAY = "out"
SEGMENT = "segment"


class CellError(ValueError):
    pass


@dataclass(frozen=True)
class Cell:
    kind: str  # "polygon" | "unbounded"
    vertices: tuple[complex, ...]
    ray_in: complex | None = None
    ray_out: complex | None = None

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(complex(v) for v in self.vertices))
        if self.kind == "polygon":
            if len(self.vertices) < 3:
                raise CellError("polygon needs at least 3 vertices")
            if self.ray_in is not None or self.ray_out is not None:
                raise CellError("polygon carries no rays")
        elif self.kind == "unbounded":
            if len(self.vertices) < 1:
                raise CellError("unbounded cell needs a chain vertex")
            if not self.ray_in or not self.ray_out:
                raise CellError("unbounded cell needs both ray directions")
            object.__setattr__(self, "ray_in", complex(self.ray_in))
            object.__setattr__(self, "ray_out", complex(self.ray_out))
        else:
            raise CellError(f"unknown cell kind {self.kind!r}")

    # -- edge bookkeeping ----------------------------------------------------

    @property
    def edge_count(self) -> int:
        if self.kind == "polygon":
            return len(self.vertices)
        return len(self.vertices) + 1

    def edge_type(self, pos: int) -> str:
        if self.kind == "polygon":
            if not 0 <= pos < len(self.vertices):
                raise CellError(f"edge {pos} out of range")
            return SEGMENT
        if pos == 0:
            return IN_RAY
        if pos == len(self.vertices):
            return OUT_RAY
        if 0 < pos < len(self.vertices):
            return SEGMENT
        raise CellError(f"edge {pos} out of range")

    def edge_endpoints(self, pos: int) -> tuple[complex, complex]:
        """Directed endpoints of a segment edge, in boundary order."""
        if self.kind == "polygon":
            a = self.vertices[pos]
            b = self.vertices[(pos + 1) % len(self.vertices)]
            return a, b
        if self.edge_type(pos) != SEGMENT:
            raise CellError("rays have a single finite endpoint")
        return self.vertices[pos - 1], self.vertices[pos]

    def edge_vector(self, pos: int) -> complex:
        a, b = self.edge_endpoints(pos)
        return b - a

    def ray_base(self, pos: int) -> complex:
        t = self.edge_type(pos)
        if t == IN_RAY:
            return self.vertices[0]
        if t == OUT_RAY:
            return self.vertices[-1]
        raise CellError("not a ray edge")

    def ray_dir(self, pos: int) -> complex:
        t = self.edge_type(pos)
        if t == IN_RAY:
            return self.ray_in
        if t == OUT_RAY:
            return self.ray_out
        raise CellError("not a ray edge")

    def travel_dir(self, pos: int) -> complex:
        """Direction of travel along edge ``pos`` in the boundary walk."""
        t = self.edge_type(pos)
        if t == IN_RAY:
            return -self.ray_in
        if t == OUT_RAY:
            return self.ray_out
        return self.edge_vector(pos)

    # -- corners --------------------------------------------------------------

    def corner_count(self) -> int:
        return len(self.vertices)

    def corner_point(self, i: int) -> complex:
        return self.vertices[i]

    def corner_angle(self, i: int) -> float:
        """Interior angle at chain/polygon vertex i, in (0, 2*pi]."""
        if self.kind == "polygon":
            n = len(self.vertices)
            p = self.vertices[i] - self.vertices[(i - 1) % n]
            q = self.vertices[(i + 1) % n] - self.vertices[i]
            return interior_angle(p, q)
        # unbounded: travel order is in-ray, segments, out-ray
        incoming = self.travel_dir(i)  # edge i ends at vertex i
        outgoing = self.travel_dir(i + 1)
        return interior_angle(incoming, outgoing)

    def corner_flanks(self, i: int) -> tuple[int, int]:
        """Edge positions (before, after) meeting at corner i."""
        if self.kind == "polygon":
            n = len(self.vertices)
            return (i - 1) % n, i
        return i, i + 1

    def angle_at_infinity(self) -> float:
        """Angular extent of the cell at infinity (unbounded cells).

        Computed from the corner angles: A = pi - sum(pi - theta_i).  A
        slit plane gives 2*pi, a half-plane pi, a half-cylinder chart 0.
        """
        if self.kind != "unbounded":
            raise CellError("bounded cells have no end")
        total = math.pi
        for i in range(len(self.vertices)):
            total -= math.pi - self.corner_angle(i)
        return total

    def total_corner_angle(self) -> float:
        return sum(self.corner_angle(i) for i in range(len(self.vertices)))

    def translate(self, t: complex) -> "Cell":
        return Cell(self.kind, tuple(v + t for v in self.vertices), self.ray_in, self.ray_out)

    def transform(self, rot: complex, t: complex) -> "Cell":
        ri = self.ray_in * rot if self.ray_in else None
        ro = self.ray_out * rot if self.ray_out else None
        return Cell(self.kind, tuple(v * rot + t for v in self.vertices), ri, ro)


def polygon(vertices) -> Cell:
    return Cell("polygon", tuple(vertices))


def unbounded(chain, ray_in: complex, ray_out: complex) -> Cell:
    return Cell("unbounded", tuple(chain), ray_in, ray_out)


def slit_plane(base: complex, direction: complex) -> Cell:
    """Full plane slit along a ray: 2*pi at the base vertex, 2*pi at
    infinity.  The two ray edges carry the two sides of the slit."""
    return unbounded([base], direction, direction)


def half_plane_above(chain) -> Cell:
    """Region above a left-to-right chain, horizontal rays."""
    return unbounded(chain, -1, 1)


def half_plane_below(chain) -> Cell:
    """Region below a chain; the boundary walk runs right-to-left, so the
    chain must be supplied right-to-left."""
    return unbounded(chain, 1, -1)


@dataclass(frozen=True)
class Identification:
    """Glue edge a onto edge b by z -> zeta^m z + t, endpoints swapped
    (segments) or base-to-base (out-ray onto in-ray)."""

    a: tuple[int, int]  # (cell index, edge position)
    b: tuple[int, int]
    m: int
    t: complex

    def map_point(self, z: complex, k: int) -> complex:
        return cmath.exp(2j * math.pi * self.m / k) * z + self.t

    def rotation(self, k: int) -> complex:
        return cmath.exp(2j * math.pi * self.m / k)


def identify_segments(cells, ia, pa, ib, pb, k, tol: Tolerance = DEFAULT_TOL) -> Identification:
    """Build the identification gluing segment (ia,pa) onto (ib,pb),
    inferring rotation class and translation; raises if impossible."""
    ca, cb = cells[ia], cells[ib]
    a0, a1 = ca.edge_endpoints(pa)
    b0, b1 = cb.edge_endpoints(pb)
    va, vb = a1 - a0, b1 - b0
    if abs(abs(va) - abs(vb)) > max(tol.abs, tol.rel * max(abs(va), abs(vb))):
        raise CellError(f"edges have different lengths {abs(va)} vs {abs(vb)}")
    # orientation reversal: a0 -> b1, a1 -> b0
    ratio = -vb / va
    ang = cmath.phase(ratio)
    m = round(ang / (TWO_PI / k)) % k
    rot = cmath.exp(2j * math.pi * m / k)
    if abs(rot - ratio) > 1e-6:
        raise CellError(f"edge directions differ by {ang}, not a multiple of 2*pi/{k}")
    t = b1 - rot * a0
    return Identification((ia, pa), (ib, pb), m, t)


def identify_rays(cells, ia, pa, ib, pb, k, m: int | None = None) -> Identification:
    """Glue out-ray (ia,pa) onto in-ray (ib,pb)."""
    ca, cb = cells[ia], cells[ib]
    if ca.edge_type(pa) != OUT_RAY or cb.edge_type(pb) != IN_RAY:
        raise CellError("ray gluings pair an out-ray with an in-ray")
    da, db = ca.ray_dir(pa), cb.ray_dir(pb)
    ratio = (db / abs(db)) / (da / abs(da))
    ang = cmath.phase(ratio)
    mm = round(ang / (TWO_PI / k)) % k
    rot = cmath.exp(2j * math.pi * mm / k)
    if abs(rot - ratio / abs(ratio)) > 1e-6:
        raise CellError("ray directions differ by a non-quantized rotation")
    if m is not None and (m - mm) % k != 0:
        raise CellError(f"requested rotation {m} inconsistent with geometry {mm}")
    t = cb.ray_base(pb) - rot * ca.ray_base(pa)
    return Identification((ia, pa), (ib, pb), mm, t)


# -- segment intersection utilities -------------------------------------------


def _orient(a: complex, b: complex, c: complex) -> float:
    return (b.real - a.real) * (c.imag - a.imag) - (b.imag - a.imag) * (c.real - a.real)


def segments_cross(a0, a1, b0, b1, eps=1e-12) -> bool:
    """Proper or improper crossing test, tolerant at shared endpoints.

    Segments that merely share an endpoint (within eps of each other) do
    not count as crossing; collinear overlap of positive length does.
    """
    scale = max(abs(a1 - a0), abs(b1 - b0), 1e-300)
    snap = eps * max(1.0, scale)
    shared = (
        abs(a0 - b0) <= snap
        or abs(a0 - b1) <= snap
        or abs(a1 - b0) <= snap
        or abs(a1 - b1) <= snap
    )
    d1 = _orient(a0, a1, b0)
    d2 = _orient(a0, a1, b1)
    d3 = _orient(b0, b1, a0)
    d4 = _orient(b0, b1, a1)
    area_eps = snap * scale
    if shared:
        # allow contact at the shared endpoint only; check the far points
        # do not lie on the other segment's interior
        def interior_contact(p, q0, q1):
            if abs(_orient(q0, q1, p)) > area_eps:
                return False
            t = ((p - q0) / (q1 - q0)).real if q1 != q0 else 0.0
            margin = snap / max(abs(q1 - q0), 1e-300)
            return margin < t < 1 - margin

        for p, q0, q1 in ((a0, b0, b1), (a1, b0, b1), (b0, a0, a1), (b1, a0, a1)):
            if interior_contact(p, q0, q1):
                return True
        return False
    opp12 = (d1 > area_eps and d2 < -area_eps) or (d1 < -area_eps and d2 > area_eps)
    opp34 = (d3 > area_eps and d4 < -area_eps) or (d3 < -area_eps and d4 > area_eps)
    if opp12 and opp34:
        return True
    # collinear / touching situations
    if abs(d1) <= area_eps and abs(d2) <= area_eps:
        # collinear: overlap of positive length?
        dirv = a1 - a0
        if dirv == 0:
            return False
        ta0, ta1 = 0.0, 1.0
        tb0 = ((b0 - a0) / dirv).real
        tb1 = ((b1 - a0) / dirv).real
        lo, hi = min(tb0, tb1), max(tb0, tb1)
        margin = snap / max(abs(dirv), 1e-300)
        return min(ta1, hi) - max(ta0, lo) > margin
    def on_seg(p, q0, q1, d):
        if abs(d) > area_eps:
            return False
        t = ((p - q0) / (q1 - q0)).real if q1 != q0 else 0.0
        margin = snap / max(abs(q1 - q0), 1e-300)
        return margin < t < 1 - margin

    return (
        on_seg(b0, a0, a1, d1)
        or on_seg(b1, a0, a1, d2)
        or on_seg(a0, b0, b1, d3)
        or on_seg(a1, b0, b1, d4)
    )


def no_self_intersection(points: list[complex], ray_start: complex | None = None,
                         ray_end: complex | None = None, skip_pairs=()) -> bool:
    """Is the broken line through ``points`` (optionally prolonged by an
    initial ray of direction ray_start backwards from points[0] and a
    final ray of direction ray_end from points[-1]) simple?

    ``skip_pairs`` lists segment index pairs allowed to overlap (used for
    zero-angle slit notches whose two flanks coincide by design).
    """
    RAY_LEN = 64.0
    segs = []
    scale = max((abs(p) for p in points), default=1.0) + 1.0
    if ray_start is not None:
        d = ray_start / abs(ray_start)
        segs.append((points[0] + d * RAY_LEN * scale, points[0]))
    for a, b in zip(points, points[1:]):
        segs.append((a, b))
    if ray_end is not None:
        d = ray_end / abs(ray_end)
        segs.append((points[-1], points[-1] + d * RAY_LEN * scale))
    skip = {frozenset(p) for p in skip_pairs}
    for i in range(len(segs)):
        for j in range(i + 1, len(segs)):
            if frozenset((i, j)) in skip:
                continue
            adjacent = j == i + 1
            a0, a1 = segs[i]
            b0, b1 = segs[j]
            if adjacent:
                # consecutive segments share one endpoint legitimately
                if segments_cross(a0, a1, b0, b1):
                    return False
                continue
            if segments_cross(a0, a1, b0, b1):
                return False
    return True
