"""Building blocks: polar parts of the three pole types and helpers.

A brick is a group of cells plus internal ray gluings realizing one pole.
Its free (exposed) chain edges are glued later by the assemblers.  All
bricks are created through a :class:`Builder`, which owns the cell and
identification lists of the surface under construction.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

from .numerics import TWO_PI, interior_angle, angle_in_01
from .cells import (
    Cell,
    Identification,
    unbounded,
    polygon,
    slit_plane,
    identify_segments,
    identify_rays,
    no_self_intersection,
    CellError,
)


class BrickError(ValueError):
    pass


class BadType(BrickError):
    pass


class SelfIntersectingBoundary(BrickError):
    pass


class OrientationViolation(BrickError):
    pass


class ZetaIsOne(BrickError):
    pass


class NoValidRoot(BrickError):
    pass


class DegeneratePolygon(BrickError):
    pass


@dataclass
class Builder:
    k: int
    cells: list[Cell] = field(default_factory=list)
    identifications: list[Identification] = field(default_factory=list)

    def add_cell(self, cell: Cell) -> int:
        self.cells.append(cell)
        return len(self.cells) - 1

    def glue_segments(self, a: tuple[int, int], b: tuple[int, int]):
        ident = identify_segments(self.cells, a[0], a[1], b[0], b[1], self.k)
        self.identifications.append(ident)
        return ident

    def glue_rays(self, a: tuple[int, int], b: tuple[int, int]):
        ident = identify_rays(self.cells, a[0], a[1], b[0], b[1], self.k)
        self.identifications.append(ident)
        return ident

    def out_ray(self, ci: int) -> tuple[int, int]:
        return (ci, self.cells[ci].edge_count - 1)

    def in_ray(self, ci: int) -> tuple[int, int]:
        return (ci, 0)

    def splice_ray_chain(self, out_ref, in_ref, planes: int, direction: complex, base: complex):
        """Glue out_ref to in_ref through ``planes`` slit planes."""
        cur = out_ref
        for _ in range(planes):
            ci = self.add_cell(slit_plane(base, direction))
            self.glue_rays(cur, self.in_ray(ci))
            cur = self.out_ray(ci)
        self.glue_rays(cur, in_ref)

    def surface(self, metadata=None):
        from .surface import FlatSurface

        return FlatSurface(self.k, list(self.cells), list(self.identifications), metadata or {})


@dataclass
class Ridge:
    """Region to the left of a traveled chain, possibly cut at interior
    vertices with slit planes spliced into the cuts."""

    cells: list[int]
    segments: list[tuple[int, int]]  # exposed chain edges in travel order
    in_ray: tuple[int, int]
    out_ray: tuple[int, int]
    angle_at_infinity: float


def _ray_dirs_for_extent(chain: list[complex], extent: float,
                         force_u: complex | None = None,
                         force_w: complex | None = None,
                         frac: float | None = None):
    """Ray directions (u at chain start, w at chain end) giving the ridge
    the requested angle at infinity.

    One real degree of freedom remains (the first end-corner angle); a
    forced u or w direction pins it.  Both end corners must land inside
    (0, 2*pi); returns None when impossible.
    """
    if len(chain) == 1:
        # single corner: its angle equals the extent
        a = extent % TWO_PI
        if force_u is not None and force_w is not None:
            got = angle_in_01(cmath.phase(force_u) - cmath.phase(force_w))
            if abs(got % TWO_PI - a % TWO_PI) > 1e-9 and abs(got - extent) > 1e-9:
                return None
            return force_u, force_w
        if force_u is not None:
            return force_u, force_u * cmath.exp(-1j * extent)
        w = force_w if force_w is not None else 1 + 0j
        return w * cmath.exp(1j * extent), w
    dirs = [b - a for a, b in zip(chain, chain[1:])]
    t_mid = 0.0
    for p, q in zip(dirs, dirs[1:]):
        t_mid += math.pi - interior_angle(p, q)
    need = extent + math.pi + t_mid  # theta_first + theta_last
    eps = 1e-3
    lo = max(eps, need - TWO_PI + eps)
    hi = min(TWO_PI - eps, need - eps)
    if lo > hi - 1e-12:
        return None
    if force_u is not None:
        theta_first = (cmath.phase(force_u) - cmath.phase(dirs[0])) % TWO_PI
        for cand in (theta_first, theta_first + TWO_PI):
            if lo - 1e-9 <= cand <= hi + 1e-9:
                theta_first = cand
                break
        else:
            return None
    elif force_w is not None:
        theta_last = (cmath.phase(-dirs[-1]) - cmath.phase(force_w)) % TWO_PI
        for cand in (theta_last, theta_last + TWO_PI):
            if lo - 1e-9 <= need - cand <= hi + 1e-9:
                theta_last = cand
                break
        else:
            return None
        theta_first = need - theta_last
    else:
        theta_first = lo + (hi - lo) * (frac if frac is not None else 0.5)
    theta_last = need - theta_first
    u = force_u if force_u is not None else dirs[0] / abs(dirs[0]) * cmath.exp(1j * theta_first)
    w = force_w if force_w is not None else -dirs[-1] / abs(dirs[-1]) * cmath.exp(-1j * theta_last)
    return u, w


def make_ridge(builder: Builder, chain: list[complex], extent: float,
               cuts: dict[int, tuple[int, complex]] | None = None,
               force_u: complex | None = None,
               force_w: complex | None = None,
               slit_pairs: tuple[tuple[int, int], ...] = (),
               check_simple: bool = True) -> Ridge:
    """Create the cells of a ridge over ``chain`` (travel order).

    cuts: {vertex index: (plane count, cut direction)} splits the region
    at interior chain vertices and splices slit planes into each cut.
    ``slit_pairs`` lists chain segment index pairs allowed to overlap
    (zero-angle slit notches).
    """
    cuts = dict(cuts or {})
    for j in list(cuts):
        if not (0 < j < len(chain) - 1):
            raise BrickError("cuts only at interior chain vertices")
        cnt, d = cuts[j]
        if d is None:
            # bisector of the corner, pointing into the cell
            p = chain[j] - chain[j - 1]
            q = chain[j + 1] - chain[j]
            theta = interior_angle(p, q)
            d = q / abs(q) * cmath.exp(1j * theta / 2)
            cuts[j] = (cnt, d)
    skips = [(a + 1, b + 1) for a, b in slit_pairs]
    u = w = None
    free_rays = force_u is None and force_w is None
    fracs = (0.5, 0.15, 0.85, 0.03, 0.97, 0.3, 0.7) if free_rays else (None,)
    last = None
    for frac in fracs:
        sol = _ray_dirs_for_extent(chain, extent, force_u, force_w, frac=frac)
        if sol is None:
            last = BrickError("no ray directions achieve the requested extent")
            continue
        u, w = sol
        if not check_simple or no_self_intersection(chain, ray_start=u, ray_end=w,
                                                    skip_pairs=skips):
            break
        last = SelfIntersectingBoundary("ridge boundary is not simple")
        u = w = None
    if u is None:
        raise last
    # split the chain at cut vertices
    pieces = []
    start = 0
    cut_keys = sorted(cuts)
    for j in cut_keys:
        pieces.append((start, j))
        start = j
    pieces.append((start, len(chain) - 1))
    cell_ids = []
    seg_refs = []
    for pi, (a, b) in enumerate(pieces):
        ray_u = u if pi == 0 else cuts[a][1]
        ray_w = w if pi == len(pieces) - 1 else cuts[b][1]
        ci = builder.add_cell(unbounded(chain[a : b + 1], ray_u, ray_w))
        cell_ids.append(ci)
        for pos in range(1, (b - a) + 1):
            seg_refs.append((ci, pos))
    # splice the cut planes
    for pi, j in enumerate(cut_keys):
        count, direction = cuts[j]
        builder.splice_ray_chain(builder.out_ray(cell_ids[pi]),
                                 builder.in_ray(cell_ids[pi + 1]),
                                 count, direction, chain[j])
    extent_actual = sum(builder.cells[ci].angle_at_infinity() for ci in cell_ids) \
        + 2 * math.pi * sum(c for c, _ in cuts.values())
    return Ridge(cell_ids, seg_refs, builder.in_ray(cell_ids[0]),
                 builder.out_ray(cell_ids[-1]), extent_actual)


def partial_sums(base: complex, vectors) -> list[complex]:
    pts = [base]
    for v in vectors:
        pts.append(pts[-1] + v)
    return pts


@dataclass
class PolarPart:
    """Handles of one polar brick: exposed top/bottom edges and metadata."""

    order: int  # pole order magnitude
    residue_root: complex | None  # translation holonomy root (divisible orders)
    top: list[tuple[int, int]]
    bottom: list[tuple[int, int]]
    end_cells: list[int]
    apex_info: dict = field(default_factory=dict)


def polar_div_part(builder: Builder, b: int, top_vectors, bottom_vectors,
                   planes_top_left: int, planes_bottom: int = None,
                   cuts_top=None, cuts_bottom=None,
                   extent_top: float = math.pi, extent_bottom: float = None,
                   slit_pairs_top=(), slit_pairs_bottom=(),
                   rays: tuple[complex, complex, complex, complex] | None = None) -> PolarPart:
    """Polar part of divisible order b = k*l over (top; bottom) chains.

    The l-2 free slit planes are split between the left chaining
    (``planes_top_left``) and the right, after subtracting any planes
    used by cuts.  ``extent_top + extent_bottom`` must be 2*pi so the end
    angle lands on (l-1)*2*pi.
    """
    k = builder.k
    if b % k != 0 or b < 2 * k:
        raise BadType(f"order {b} is not a divisible pole order for k={k}")
    ell = b // k
    cuts_top = dict(cuts_top or {})
    cuts_bottom = dict(cuts_bottom or {})
    cut_planes = sum(c for c, _ in cuts_top.values()) + sum(c for c, _ in cuts_bottom.values())
    if extent_bottom is None:
        extent_bottom = TWO_PI - extent_top
    bump = round((extent_top + extent_bottom) / TWO_PI) - 1
    if bump < 0 or abs(extent_top + extent_bottom - (bump + 1) * TWO_PI) > 1e-9:
        raise BadType("ridge extents must total a positive whole number of turns")
    free = ell - 2 - cut_planes - bump
    if free < 0:
        raise BadType("cuts use more planes than the pole order allows")
    if planes_bottom is None:
        planes_bottom = free - planes_top_left
    if planes_top_left < 0 or planes_bottom < 0 or planes_top_left + planes_bottom != free:
        raise BadType("plane distribution does not match the pole order")

    top_chain = partial_sums(0j, top_vectors)
    bot_chain_lr = partial_sums(0j, bottom_vectors)
    bot_chain = list(reversed(bot_chain_lr))  # travel right-to-left

    # joint ray solve: bottom.in must share the direction of top.out so
    # every ray gluing is a lattice rotation (here: a translation)
    if rays is not None:
        (u_top, w_top), (u_bot, w_bot) = (rays[0], rays[1]), (rays[2], rays[3])
    else:
        chosen = None
        for step in range(4 * builder.k):
            x = TWO_PI * step / (4 * builder.k) + 0.0493
            w_top = cmath.exp(1j * x)
            st = _ray_dirs_for_extent(top_chain, extent_top, force_w=w_top)
            if st is None:
                continue
            sb = _ray_dirs_for_extent(bot_chain, extent_bottom, force_u=w_top)
            if sb is None:
                continue
            chosen = (st, sb)
            break
        if chosen is None:
            raise BrickError("no compatible ray directions for the polar part")
        (u_top, w_top), (u_bot, w_bot) = chosen
    top = make_ridge(builder, top_chain, extent_top, cuts_top, force_u=u_top,
                     force_w=w_top, slit_pairs=slit_pairs_top)
    bottom = make_ridge(builder, bot_chain, extent_bottom, cuts_bottom, force_u=u_bot,
                        force_w=w_bot, slit_pairs=slit_pairs_bottom)

    # right side: top.out -> planes -> bottom.in; left: bottom.out -> planes -> top.in
    builder.splice_ray_chain(top.out_ray, bottom.in_ray, planes_bottom,
                             builder.cells[top.out_ray[0]].ray_out, top_chain[-1])
    builder.splice_ray_chain(bottom.out_ray, top.in_ray, planes_top_left,
                             builder.cells[bottom.out_ray[0]].ray_out, bot_chain[-1])

    root = (top_chain[-1] - top_chain[0]) - (bot_chain_lr[-1] - bot_chain_lr[0])
    bottom_refs = list(reversed(bottom.segments))  # left-to-right order
    return PolarPart(b, root, top.segments, bottom_refs, top.cells + bottom.cells)


def cylinder_part(builder: Builder, vectors, ray_dir: complex | None = None,
                  subdivide: list[complex] | None = None) -> PolarPart:
    """Half-cylinder over the concatenation of ``vectors``: a simple pole
    whose residue root is the total holonomy of the chain."""
    chain = partial_sums(0j, vectors)
    total = chain[-1] - chain[0]
    if abs(total) == 0:
        raise SelfIntersectingBoundary("zero circumference")
    if ray_dir is None:
        ray_dir = 1j * total / abs(total)
    if not no_self_intersection(chain, ray_start=ray_dir, ray_end=ray_dir):
        # try a few other directions before giving up
        ok = False
        for ang in (0.3, -0.3, 0.8, -0.8, 1.2, -1.2):
            cand = 1j * total / abs(total) * cmath.exp(1j * ang)
            if no_self_intersection(chain, ray_start=cand, ray_end=cand):
                ray_dir, ok = cand, True
                break
        if not ok:
            raise SelfIntersectingBoundary("cylinder boundary is not simple")
    ci = builder.add_cell(unbounded(chain, ray_dir, ray_dir))
    builder.glue_rays(builder.out_ray(ci), builder.in_ray(ci))
    segs = [(ci, pos) for pos in range(1, len(chain))]
    return PolarPart(builder.k, total, segs, [], [ci])


def polar_nondiv_part(builder: Builder, c: int, vectors, side: str = "top",
                      type_t: int | None = None,
                      cuts: dict[int, tuple[int, complex]] | None = None,
                      slit_pairs=(), extent_bump: int = 0) -> PolarPart:
    """Polar part of non-divisible order c = k*l + s (0 < s < k).

    side='top': region above the chain, exposing it from below (the
    (v;empty) variant); side='bottom': region below, exposing from above
    (the (empty;v) variant).  ``type_t`` distributes l - t of the slit
    planes onto a cut at the first interior chain vertex.
    """
    k = builder.k
    s = c % k
    if s == 0 or c < k:
        raise BadType(f"order {c} is not a non-divisible pole order for k={k}")
    ell = c // k
    extent = s * TWO_PI / k + extent_bump * TWO_PI
    cuts = dict(cuts or {})
    if type_t is not None:
        if not (1 <= type_t <= ell):
            raise BadType(f"type {type_t} out of range 1..{ell}")
        if len(vectors) < 2:
            raise BadType("typed variant needs at least two vectors")
        if 1 in cuts:
            raise BrickError("cut collides with the typed cut")
        if ell - type_t > 0:
            cuts[1] = (ell - type_t, None)  # direction filled below
    cut_planes = sum(cnt for cnt, _ in cuts.values())
    planes = ell - 1 - cut_planes - extent_bump
    if planes < 0:
        raise BadType("cuts use more planes than the pole order allows")

    if side == "top":
        chain = partial_sums(0j, vectors)
    elif side == "bottom":
        chain = list(reversed(partial_sums(0j, vectors)))
    else:
        raise BrickError("side must be 'top' or 'bottom'")
    ridge = make_ridge(builder, chain, extent, cuts, slit_pairs=tuple(slit_pairs))
    builder.splice_ray_chain(ridge.out_ray, ridge.in_ray, planes,
                             builder.cells[ridge.out_ray[0]].ray_out, chain[-1])
    segs = ridge.segments if side == "top" else list(reversed(ridge.segments))
    top = segs if side == "top" else []
    bottom = segs if side == "bottom" else []
    return PolarPart(c, None, top, bottom, ridge.cells)


# -- spec-level wrappers -------------------------------------------------------


def build_polar_divisible(k: int, b: int, tau: int, v, w):
    """Standalone polar part of order -b, type tau, over (v; w)."""
    if b % k != 0 or b < 2 * k:
        raise BadType(f"b must be k*l with l >= 2, got {b}")
    ell = b // k
    if not (1 <= tau <= ell - 1):
        raise BadType(f"type {tau} out of range 1..{ell - 1}")
    sv, sw = sum(v, 0j), sum(w, 0j)
    if (v and sv.real < -1e-12) or (w and sw.real < -1e-12):
        raise OrientationViolation("chain sums must have nonnegative real part")
    builder = Builder(k)
    part = polar_div_part(builder, b, list(v), list(w), planes_top_left=tau - 1)
    return builder, part


def build_polar_simple(k: int, v):
    builder = Builder(k)
    part = cylinder_part(builder, list(v))
    return builder, part


def build_polar_nondivisible(k: int, c: int, side: str, v, type_t: int | None = None):
    builder = Builder(k)
    part = polar_nondiv_part(builder, c, list(v), side=side, type_t=type_t)
    return builder, part


def brick_residue_root(builder: Builder, part: PolarPart) -> complex:
    """Translation holonomy around the brick's end, walked over its own
    ray gluings (independent of the declared value)."""
    from .surface import _crossing_update

    partner = {}
    for idx, ident in enumerate(builder.identifications):
        partner[ident.a] = (idx, True)
        partner[ident.b] = (idx, False)
    start = part.end_cells[0]
    ci = start
    g = (1 + 0j, 0j)
    steps = 0
    while True:
        out = (ci, builder.cells[ci].edge_count - 1)
        if out not in partner:
            raise BrickError("end walk hit an unglued ray")
        idx, is_a = partner[out]
        if not is_a:
            raise BrickError("out-ray glued as b-side")

        class _S:  # minimal shim for _crossing_update
            k = builder.k
            identifications = builder.identifications

        g = _crossing_update(_S, g, idx, True)
        ci = builder.identifications[idx].b[0]
        steps += 1
        if ci == start:
            break
        if steps > len(builder.cells) + 2:
            raise BrickError("end walk does not close")
    return g[1]


def solve_two_vector_system(zeta: complex, s1: complex, s2: complex, R: complex, k: int):
    """Vectors v1, v2 and a root r of R with v1+v2-s1 = 1 and
    s2-v1-zeta*v2 = r, both vectors nonzero; deterministic root scan."""
    from .numerics import kth_roots

    if abs(zeta - 1) < 1e-12:
        raise ZetaIsOne("zeta must be a primitive root different from 1")
    if R == 0:
        raise BrickError("R must be nonzero")
    for r in kth_roots(R, k):
        v2 = (1 + r + s1 - s2) / (1 - zeta)
        v1 = -(zeta + r + zeta * s1 - s2) / (1 - zeta)
        if abs(v1) > 1e-12 and abs(v2) > 1e-12:
            if abs(v1 + v2 - s1 - 1) > 1e-9 * max(1.0, abs(v1), abs(v2)):
                raise BrickError("solver identity violated")
            return v1, v2, r
    raise NoValidRoot("all root choices degenerate (cannot happen for k >= 3)")
