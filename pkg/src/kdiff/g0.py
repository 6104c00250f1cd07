"""Genus-zero witnesses.

Strata with a pole of order below -k are assembled around a *collector*
pole whose polar part carries one long boundary chain; every other pole
hangs off that chain through a single exposed segment.  Each zero beyond
a designated residual one is realized by a *widget*: two equal-length
chain segments glued to each other by a rotation whose junction carries
the prescribed cone angle, topped up by slit planes cut into the
collector and by half-cylinders threaded between the pair.

Strata whose poles are all simple use the polygon construction (two
special edges glued by a rotation, half-cylinders on the rest).  A
zero-splitting fallback covers inventories the chain cannot host.
"""

from __future__ import annotations

import cmath
import itertools
import math
import random

from .numerics import TWO_PI, kth_roots, principal_root, angle_in_01
from .stratum import Signature, ResidueConfig, WHOLE, primitive_divisor
from .cells import polygon as polygon_cell, CellError, no_self_intersection
from .surface import FlatSurface, SurfaceError
from .bricks import (
    Builder,
    BrickError,
    polar_div_part,
    polar_nondiv_part,
    cylinder_part,
    partial_sums,
)
from .witness import verify_witness, WitnessMismatch
from .oracle import decide


class ConstructionFailure(RuntimeError):
    pass


class NotRealizableInput(ValueError):
    pass


_ASSEMBLY_ERRORS = (BrickError, SurfaceError, CellError, WitnessMismatch,
                    ValueError, ZeroDivisionError, KeyError)


def _zeta(k: int, m: int = 1) -> complex:
    return cmath.exp(2j * math.pi * m / k)


def _split_order(a: int, k: int) -> tuple[int, int]:
    """a = k*l + abar with abar in (-k, 0]."""
    abar = a % k - k if a % k else 0
    return (a - abar) // k, abar


# ---------------------------------------------------------------------------
# widgets
# ---------------------------------------------------------------------------


class Widget:
    """A chain notch [v1, cylinder slots..., v2] realizing one zero.

    side 'below': the hosting cell sits below the chain (collector chains
    of non-divisible poles and bottoms of divisible ones); side 'above':
    the cell sits above (top chains of divisible collectors).
    """

    def __init__(self, a: int, k: int, q: int = 0, slot_values: list[complex] = (),
                 side: str = "below", extra_angle: float | None = None):
        self.a = a
        self.k = k
        self.q = q
        self.slot_values = list(slot_values)
        self.side = side
        self.sign = 1 if side == "below" else -1
        if extra_angle is None:
            extra_angle = math.pi * len(self.slot_values)
        self.extra_angle = extra_angle

    @property
    def target(self) -> float:
        return (self.a + self.k) * TWO_PI / self.k

    def corner_budget(self) -> float:
        return self.target - TWO_PI * self.q - self.extra_angle

    def feasible(self) -> bool:
        c = len(self.slot_values)
        s = self.corner_budget()
        if c == 0:
            return 0.0 < s <= TWO_PI
        delta = 0.05
        lo = max((c + 1) * delta, (c - 1) * math.pi + 0.1)
        hi = min((c + 1) * (TWO_PI - delta), (c + 3) * math.pi - 0.1)
        return lo < s < hi

    def vectors(self, scale: float, base_dir: complex = 1.0,
                v1: complex | None = None) -> list[complex]:
        """Left-to-right slot vectors [v1, fixed slots..., v2]."""
        c = len(self.slot_values)
        S = self.corner_budget()
        rot = lambda t: cmath.exp(1j * self.sign * t)
        if v1 is None:
            v1 = scale * base_dir / abs(base_dir)
        if c == 0:
            if not (0.0 < S <= TWO_PI + 1e-12):
                raise BrickError("notch angle out of range")
            v2 = -v1 * rot(S)
            return [v1, v2]
        dirs = [x / abs(x) for x in self.slot_values]
        mids = []
        for p, q_ in zip(dirs, dirs[1:]):
            if self.side == "below":
                mids.append(angle_in_01(cmath.phase(-q_ / p)))
            else:
                mids.append(angle_in_01(cmath.phase(-p / q_)))
        s2 = S - sum(mids)
        delta = 0.04
        lo = max(delta, s2 - TWO_PI + delta)
        hi = min(TWO_PI - delta, s2 - delta)
        if lo > hi:
            raise BrickError("widget corner budget infeasible")
        # first junction angle is fixed by v1's direction (mod 2*pi)
        d0 = v1 / abs(v1)
        t0 = angle_in_01(self.sign * cmath.phase(-dirs[0] / d0))
        if t0 > hi + 1e-9:
            t0 -= TWO_PI
        if not (lo - 1e-9 <= t0 <= hi + 1e-9):
            raise BrickError("first widget corner out of range")
        tlast = s2 - t0
        dlast = -dirs[-1] * rot(tlast)
        v2 = abs(v1) * dlast
        return [v1] + list(self.slot_values) + [v2]

    def free_vectors(self, scale: float, frac: float = 0.5) -> list[complex]:
        """Vectors with the first junction angle at ``frac`` of its range."""
        c = len(self.slot_values)
        if c == 0:
            return self.vectors(scale, 1.0)
        S = self.corner_budget()
        dirs = [x / abs(x) for x in self.slot_values]
        mids = []
        for p, q_ in zip(dirs, dirs[1:]):
            if self.side == "below":
                mids.append(angle_in_01(cmath.phase(-q_ / p)))
            else:
                mids.append(angle_in_01(cmath.phase(-p / q_)))
        s2 = S - sum(mids)
        delta = 0.04
        lo = max(delta, s2 - TWO_PI + delta)
        hi = min(TWO_PI - delta, s2 - delta)
        if lo > hi:
            raise BrickError("widget corner budget infeasible")
        t0 = lo + (hi - lo) * min(max(frac, 0.02), 0.98)
        d0 = -dirs[0] / cmath.exp(1j * self.sign * t0)
        return self.vectors(scale, d0)

    def vector_sum(self, scale: float, base_dir: complex = 1.0) -> complex:
        return sum(self.free_vectors(scale), 0j) if self.slot_values \
            else sum(self.vectors(scale, base_dir), 0j)

    def mu(self) -> complex:
        """v1 + v2 = mu * v1; independent of the angle distribution."""
        c = len(self.slot_values)
        rho = (-1) ** (c + 1) * cmath.exp(1j * self.sign * self.corner_budget())
        return 1 + rho


# ---------------------------------------------------------------------------
# planning
# ---------------------------------------------------------------------------


class Donor:
    """A non-collector pole threaded through a widget notch, donating its
    whole boundary-ring angle to the apex class."""

    def __init__(self, kind: str, idx: int, donation: float):
        self.kind = kind  # 'cyl' | 'bsrc' | 'csrc'
        self.idx = idx
        self.donation = donation

    def __repr__(self):
        return f"Donor({self.kind}{self.idx}, {self.donation:.2f})"


def _donor_pool(sig: Signature, res: ResidueConfig, collector) -> list:
    k = sig.k
    out = []
    for j in range(sig.simple_poles):
        out.append(Donor("cyl", j, math.pi))
    for i, b in enumerate(sig.poles_div):
        if collector == ("b", i) or res.entries[i] == 0:
            continue
        out.append(Donor("bsrc", i, math.pi + (b // k - 1) * TWO_PI))
    for j, c in enumerate(sig.poles_nondiv):
        if collector == ("c", j):
            continue
        out.append(Donor("csrc", j, math.pi + (c // k - 1) * TWO_PI + (c % k) * TWO_PI / k))
    return out


def _widget_plan(sig: Signature, residual: int, plane_budget: int,
                 donors: list, towers: list[int], style: int = 0):
    """Assign planes, tower stacks and donor pass-throughs to every
    non-residual zero.  Returns (rows, leftover donors, leftover towers)
    or None; a row is (zero index, q, [donors], [(tower pole, tau)]).

    Without a plain nonzero source every zero-residue divisible pole
    must stack inside some widget gluing."""
    k = sig.k
    rows = {}
    free = list(donors)
    planes_left = plane_budget
    towers_left = [(bi, sig.poles_div[bi] // k - 1) for bi in towers]
    delta = 0.12
    order = sorted((zi for zi in range(sig.n) if zi != residual),
                   key=lambda zi: -_split_order(sig.zeros[zi], k)[0])

    def q_window(rest, nd):
        lo = max((nd + 1) * delta, (nd - 1) * math.pi + 0.1)
        hi = min((nd + 1) * (TWO_PI - delta), (nd + 3) * math.pi - 0.1)
        qmin = max(0, math.ceil((rest - hi) / TWO_PI))
        qmax = math.floor((rest - lo) / TWO_PI)
        return qmin, qmax

    for zi in order:
        target = (sig.zeros[zi] + k) * TWO_PI / k
        # collect candidate placements, cheapest in planes first
        cands = []
        l_zi, _ = _split_order(sig.zeros[zi], k)
        if l_zi <= planes_left:
            cands.append((l_zi, 0, l_zi, (), ()))
        for nd in range(1, min(len(free), 3) + 1):
            for combo in itertools.combinations(range(len(free)), nd):
                dsum = sum(free[i].donation for i in combo)
                rest = target - dsum
                if rest < (nd + 1) * delta:
                    continue
                qmin, qmax = q_window(rest, nd)
                if qmin > qmax or qmin > planes_left:
                    continue
                cands.append((qmin, nd, qmin, combo, ()))
        if towers_left:
            bi, cap = towers_left[0]
            for nd in range(0, min(len(free), 2) + 1):
                for combo in (itertools.combinations(range(len(free)), nd) if nd else ((),)):
                    dsum = sum(free[i].donation for i in combo)
                    avail = int((target - dsum - (nd + 1) * delta) // TWO_PI)
                    tau = min(cap, avail)
                    if tau < 1:
                        continue
                    rest = target - dsum - tau * TWO_PI
                    qmin, qmax = q_window(rest, nd)
                    if qmin > qmax or qmin > planes_left:
                        continue
                    cands.append((qmin, nd, qmin, combo, ((bi, tau),)))
        if not cands:
            return None
        if style == 0:
            cands.sort(key=lambda c: (c[0], c[1]))
        else:
            cands.sort(key=lambda c: (c[1], c[0]))
        q, nd, _, combo, stacks = cands[0]
        placed = (q, [free[i] for i in combo], list(stacks))
        if placed is None:
            return None
        q, used, stacks = placed
        rows[zi] = [q, used, stacks]
        for d in used:
            free.remove(d)
        for bi, tau in stacks:
            towers_left = [tc for tc in towers_left if tc[0] != bi]
        planes_left -= q
    # home the remaining zero-residue poles when no plain anchor exists:
    # swap one plane for a tau=1 stack inside any widget that has one
    if not free and towers_left:
        for bi, cap in list(towers_left):
            home = next((zi for zi in rows if rows[zi][0] >= 1), None)
            if home is None:
                return None
            rows[home][0] -= 1
            rows[home][2] = rows[home][2] + [(bi, 1)]
            towers_left = [tc for tc in towers_left if tc[0] != bi]
            planes_left += 1
    return ([(zi, rows[zi][0], rows[zi][1], rows[zi][2]) for zi in sorted(rows)],
            free, [bi for bi, _ in towers_left])


def _choose_roots(sig: Signature, res: ResidueConfig, rot_b: dict, rot_s: dict):
    k = sig.k
    roots_b = []
    for i, b in enumerate(sig.poles_div):
        R = res.entries[i]
        roots_b.append(None if R == 0 else principal_root(R, k) * _zeta(k, rot_b.get(i, 0)))
    roots_s = [principal_root(res.entries[sig.p + j], k) * _zeta(k, rot_s.get(j, 0))
               for j in range(sig.simple_poles)]
    return roots_b, roots_s


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------


def _assemble_collector(sig: Signature, res: ResidueConfig, plan: dict) -> FlatSurface:
    k = sig.k
    mode = plan["mode"]
    collector = plan["collector"]
    roots_b, roots_s = plan["roots_b"], plan["roots_s"]
    rows = plan["rows"]  # (zero index, q, donors, stacks)
    side = "below" if mode == "C" else "above"
    slot_sign = 1 if mode == "C" else -1
    builder = Builder(k)

    # plain sources: poles that are neither the collector, nor donors,
    # nor tower stacks
    donor_used = {(d.kind, d.idx) for _, _, ds, _ in rows for d in ds}
    stack_used = {bi for _, _, _, st in rows for bi, _ in st}
    slots = []
    plain_towers = []
    for i, b in enumerate(sig.poles_div):
        if collector == ("b", i) or ("bsrc", i) in donor_used or i in stack_used:
            continue
        if roots_b[i] is not None:
            part = polar_div_part(builder, b, [roots_b[i]], [], planes_top_left=0)
            slots.append((roots_b[i], part.top[0]))
        else:
            plain_towers.append(i)
    for j, c in enumerate(sig.poles_nondiv):
        if collector == ("c", j) or ("csrc", j) in donor_used:
            continue
        part = polar_nondiv_part(builder, c, [1 + 0j], side="top")
        slots.append((1 + 0j, part.top[0]))
    for j in range(sig.simple_poles):
        if ("cyl", j) in donor_used:
            continue
        part = cylinder_part(builder, [roots_s[j]])
        slots.append((roots_s[j], part.top[0]))
    # zero-residue poles not stacked in widgets tower onto plain sources
    if plain_towers:
        if not slots:
            raise BrickError("no anchor for zero-residue polar parts")
        for idx, bi in enumerate(plain_towers):
            anchor = idx % len(slots)
            vec, ref = slots[anchor]
            part = polar_div_part(builder, sig.poles_div[bi], [vec], [vec],
                                  planes_top_left=0)
            builder.glue_segments(part.bottom[0], ref)
            slots[anchor] = (vec, part.top[0])
    slots.sort(key=lambda sr: cmath.phase(sr[0]))
    source_vectors = [v for v, _ in slots]
    scale0 = max([abs(v) for v in source_vectors]
                 + [abs(roots_s[j]) for j in range(sig.simple_poles)] + [1.0])
    wscale = plan.get("widget_scale", 0.23) * scale0

    # donor slot values: cylinders carry their fixed root; divisible
    # sources their residue root; non-divisible sources scale freely
    def donor_value(d, zi, t):
        rot = _zeta(k, plan.get("cyl_rot", {}).get((zi, t), 0))
        if d.kind == "cyl":
            return slot_sign * rot * roots_s[d.idx]
        if d.kind == "bsrc":
            return slot_sign * rot * roots_b[d.idx]
        phase = plan.get("csrc_dirs", {}).get((zi, t), 1.0)
        return slot_sign * rot * phase * (0.6 * wscale)

    widgets = []
    for zi, q, ds, st in rows:
        extra = sum(d.donation for d in ds) + TWO_PI * sum(tau for _, tau in st)
        w0 = Widget(sig.zeros[zi], k, q, [0j] * len(ds), side, extra_angle=extra)
        S = w0.corner_budget()
        svals = []
        for t, d in enumerate(ds):
            v = donor_value(d, zi, t)
            if t > 0 and (zi, t) not in plan.get("cyl_rot", {}):
                # choose the rotation keeping the end-corner window open
                mid_target = S / (len(ds) + 1)
                prev = svals[-1] / abs(svals[-1])
                mids_rest = (len(ds) - 1 - t) * mid_target
                mids_done = 0.0
                for tt in range(1, t):
                    p_, q_ = svals[tt - 1], svals[tt]
                    if side == "below":
                        mids_done += angle_in_01(cmath.phase(-q_ / p_))
                    else:
                        mids_done += angle_in_01(cmath.phase(-p_ / q_))

                def mid_of(cand):
                    if side == "below":
                        return angle_in_01(cmath.phase(-(cand / abs(cand)) / prev))
                    return angle_in_01(cmath.phase(-prev / (cand / abs(cand))))

                def score(cand):
                    mid = mid_of(cand)
                    s2 = S - mids_done - mid - mids_rest
                    if not (0.1 < s2 < 4 * math.pi - 0.1):
                        return (1, 0.0)
                    return (0, abs(mid - mid_target))

                v = min((v * _zeta(k, mm) for mm in range(k)), key=score)
            svals.append(v)
        w = Widget(sig.zeros[zi], k, q, svals, side, extra_angle=extra)
        if not w.feasible():
            raise BrickError("widget plan infeasible")
        widgets.append((zi, w, ds, st))

    vec_lists: dict[int, list[complex]] = {}
    lam_zero = plan.get("lam_zero")
    prev_dir = (source_vectors[-1] / abs(source_vectors[-1])) if (
        mode == "C" and source_vectors) else 1 + 0j
    for zi, w, ds, st in widgets:
        if mode == "B" and zi == lam_zero:
            continue
        if w.slot_values:
            vec_lists[zi] = w.free_vectors(wscale, plan.get("fracs", {}).get(zi, 0.5))
        else:
            base = plan.get("base_dirs", {}).get(zi, prev_dir)
            vec_lists[zi] = w.vectors(wscale, base)
        prev_dir = vec_lists[zi][-1] / abs(vec_lists[zi][-1])

    if mode == "B":
        other = sum((sum(v, 0j) for zi, v in vec_lists.items()), 0j)
        lam_w = next(w for zi, w, _, _ in widgets if zi == lam_zero)
        target = plan["root_col"] + sum(source_vectors) - other - sum(lam_w.slot_values, 0j)
        mu = lam_w.mu()
        if abs(mu) < 1e-9:
            raise BrickError("degenerate residue-equation widget")
        lam_vec = target / mu
        if not (1e-7 * scale0 < abs(lam_vec) < 1e7 * scale0):
            raise BrickError("residue-equation widget out of scale")
        vec_lists[lam_zero] = lam_w.vectors(0.0, v1=lam_vec)

    chain: list[complex] = []
    spans = []
    cuts_lr: dict[int, int] = {}
    slit_lr = []
    for zi, w, ds, st in widgets:
        vecs = vec_lists[zi]
        base = len(chain)
        chain.extend(vecs)
        spans.append((zi, w, ds, st, base, len(vecs)))
        if w.q:
            cuts_lr[base + 1] = w.q
        if len(vecs) == 2 and abs(w.corner_budget() - TWO_PI) < 1e-9:
            slit_lr.append(base)

    def chain_turn(vectors, below):
        total = 0.0
        for p, q_ in zip(vectors, vectors[1:]):
            if below:
                total += math.pi - angle_in_01(cmath.phase(-q_ / p))
            else:
                total += math.pi - angle_in_01(cmath.phase(-p / q_))
        return total

    if mode == "C":
        cj = collector[1]
        order = sig.poles_nondiv[cj]
        ell = order // k
        if sum(cuts_lr.values()) > ell - 1:
            raise BrickError("collector plane budget exceeded")
        all_vectors = source_vectors + chain
        shift = len(source_vectors)
        nseg = len(all_vectors)
        cuts_travel = {nseg - (i + shift): (q, None)
                       for i, q in cuts_lr.items()}
        slit_pairs = [(nseg - 1 - (shift + b + 1), nseg - 1 - (shift + b))
                      for b in slit_lr]
        # travel order is right-to-left; the turning matches the reversed
        # left-to-right walk with below-side angles
        t_mid = chain_turn(all_vectors, below=True)
        base_extent = (order % k) * TWO_PI / k
        need = base_extent + math.pi + t_mid
        bump = 0
        while need + bump * TWO_PI < 0.3 and bump < ell:
            bump += 1
        part = polar_nondiv_part(builder, order, all_vectors, side="bottom",
                                 cuts=cuts_travel, slit_pairs=slit_pairs,
                                 extent_bump=bump)
        src_refs = part.bottom[:shift]
        wid_refs = part.bottom[shift:]
    else:
        bj = collector[1]
        order = sig.poles_div[bj]
        ell = order // k
        used = sum(cuts_lr.values())
        if used > ell - 2:
            raise BrickError("collector plane budget exceeded")
        cuts_top = {i: (q, None) for i, q in cuts_lr.items()}
        t_top = chain_turn(chain, below=False)
        t_bot = chain_turn(list(reversed(source_vectors)), below=True) if source_vectors else 0.0
        # choose extents with both ridge windows open
        chosen = None
        for bump in range(0, ell - 1 - used):
            lo_t = max(0.3 - math.pi - t_top, 0.05)
            hi_t = min(4 * math.pi - 0.3 - math.pi - t_top,
                       (bump + 1) * TWO_PI - 0.05)
            lo_b = max(0.3 - math.pi - t_bot, 0.05)
            hi_b = 4 * math.pi - 0.3 - math.pi - t_bot
            lo = max(lo_t, (bump + 1) * TWO_PI - hi_b)
            hi = min(hi_t, (bump + 1) * TWO_PI - lo_b)
            if lo < hi:
                chosen = (bump, 0.5 * (lo + hi))
                break
        if chosen is None:
            raise BrickError("no extent split for the divisible collector")
        bump, extent_top = chosen
        part = polar_div_part(builder, order, chain, source_vectors,
                              planes_top_left=ell - 2 - used - bump,
                              cuts_top=cuts_top,
                              extent_top=extent_top,
                              extent_bottom=(bump + 1) * TWO_PI - extent_top,
                              slit_pairs_top=[(b, b + 1) for b in slit_lr])
        src_refs = part.bottom
        wid_refs = part.top

    for (v, ref), slot in zip(slots, src_refs):
        builder.glue_segments(slot, ref)
    for zi, w, ds, st, base, span in spans:
        # the v-pair gluing, possibly through a stack of trivial parts
        x = chain[base]
        cur = wid_refs[base]
        for bi, tau in st:
            ell_i = sig.poles_div[bi] // k
            tpart = polar_div_part(builder, sig.poles_div[bi], [slot_sign * x],
                                   [slot_sign * x],
                                   planes_top_left=ell_i - 1 - tau)
            if mode == "C":
                builder.glue_segments(cur, tpart.top[0])
                cur = tpart.bottom[0]
            else:
                builder.glue_segments(cur, tpart.bottom[0])
                cur = tpart.top[0]
        builder.glue_segments(cur, wid_refs[base + span - 1])
        for t, d in enumerate(ds):
            vec = w.slot_values[t] * slot_sign
            if d.kind == "cyl":
                dpart = cylinder_part(builder, [vec])
                builder.glue_segments(wid_refs[base + 1 + t], dpart.top[0])
            elif d.kind == "bsrc":
                dpart = polar_div_part(builder, sig.poles_div[d.idx], [vec], [],
                                       planes_top_left=0)
                builder.glue_segments(wid_refs[base + 1 + t], dpart.top[0])
            else:
                dpart = polar_nondiv_part(builder, sig.poles_nondiv[d.idx], [vec],
                                          side="top")
                builder.glue_segments(wid_refs[base + 1 + t], dpart.top[0])

    return builder.surface({
        "signature": sig.text(),
        "residues": [[z.real, z.imag] for z in res.entries],
        "route": f"g0-collector-{mode}",
    })


# ---------------------------------------------------------------------------
# all-zero divisible-pole strata: spanned collector
# ---------------------------------------------------------------------------


def _assemble_span(sig: Signature, res: ResidueConfig, plan: dict) -> FlatSurface:
    """r = s = 0, every residue zero: the collector's top and bottom
    chains carry the same segments (span pairs, the bottom copy rotated),
    each pair glued through a stack of trivial parts of the remaining
    poles.  The n junction classes host the zeros: interior junctions by
    the rotation offsets, the two ring junctions by the ray corners and
    the collector's slit planes."""
    k = sig.k
    bj = plan["collector"]
    order = plan["zero_order"]  # zero indices at junctions 0..n-1
    n = sig.n
    j = n - 1
    if j < 1:
        raise BrickError("span mode needs at least two zeros")
    b_col = sig.poles_div[bj]
    ell_col = b_col // k

    stacks = plan["stacks"]  # (span 1..j, pole index, tau)
    packets = [0] * n
    for pos, bi, tau in stacks:
        packets[pos - 1] += tau
        packets[pos] += (sig.poles_div[bi] // k) - tau
    q_left, q_right = plan["q_left"], plan["q_right"]
    q_cuts = dict(plan.get("q_cuts", {}))  # interior junction -> planes
    if q_left < 0 or q_right < 0 or any(q < 0 for q in q_cuts.values()):
        raise BrickError("negative plane counts")
    if q_left + q_right + sum(q_cuts.values()) != ell_col - 2:
        raise BrickError("plane split must use the whole collector budget")
    packets[0] += q_left
    packets[n - 1] += q_right
    for pos, q in q_cuts.items():
        if not (0 < pos < n - 1):
            raise BrickError("cut packets only at interior junctions")
        packets[pos] += q
    targets = [(sig.zeros[zi] + k) * TWO_PI / k for zi in order]
    A = [t - TWO_PI * p for t, p in zip(targets, packets)]
    for i in range(1, n - 1):
        if not (1e-6 < A[i] < 4 * math.pi - 1e-6):
            raise BrickError("interior span junction out of range")
    for i in (0, n - 1):
        if not (0.05 < A[i] < 4 * math.pi - 0.05):
            raise BrickError("ring junction out of range")

    # interior junction i (1..j-1): apex = 2*pi + e_i, rotation offsets
    offs = [0]
    theta_top = []
    for i in range(1, j):
        e = A[i] - TWO_PI
        dm = round(e * k / TWO_PI)
        if abs(e - dm * TWO_PI / k) > 1e-7:
            raise BrickError("interior junction not on the angle lattice")
        offs.append(offs[-1] + dm)
        theta_top.append(math.pi + e / 2)
    # top chain directions: theta_t(i) = pi + e_i/2 => delta_i = -e_i/2
    dirs = [cmath.exp(1j * plan.get("dir0", 0.25))]
    for i in range(1, j):
        e = A[i] - TWO_PI
        dirs.append(dirs[-1] * cmath.exp(-1j * e / 2))
    scale = plan.get("span_scale", 1.0)
    top_vectors = [scale * d for d in dirs]

    # ring solving: scan a global rotation of the bottom copy (it trades
    # angle between the two rings in lattice steps) and the end corner
    t_top = sum(math.pi - (math.pi + (A[i] - TWO_PI) / 2) for i in range(1, j))
    t_bot = t_top
    d_first_top = dirs[0]
    d_last_top = dirs[-1]
    sol = None
    for c_rot in range(k):
        bottom_vectors = [v * _zeta(k, (offs[i] + c_rot) % k)
                          for i, v in enumerate(top_vectors)]
        d_first_bot = bottom_vectors[0] / abs(bottom_vectors[0])
        d_last_bot = bottom_vectors[-1] / abs(bottom_vectors[-1])
        for ext_step in range(1, 16):
            extent_top = TWO_PI * ext_step / 16.0
            n_t = extent_top + math.pi + t_top
            n_b = (TWO_PI - extent_top) + math.pi + t_bot
            for step in range(1, 64):
                tf_t = min(n_t, TWO_PI) * step / 64.0
                tl_t = n_t - tf_t
                if not (1e-3 < tf_t < TWO_PI - 1e-3 and 1e-3 < tl_t < TWO_PI - 1e-3):
                    continue
                w_top = -d_last_top * cmath.exp(-1j * tl_t)
                u_bot = w_top
                tf_b = angle_in_01(cmath.phase(u_bot / d_first_bot))
                tl_b = n_b - tf_b
                if not (1e-3 < tf_b < TWO_PI - 1e-3 and 1e-3 < tl_b < TWO_PI - 1e-3):
                    continue
                ring_l = tf_t + tl_b
                ring_r = tl_t + tf_b
                if abs(ring_l - A[0]) < 1e-7 and abs(ring_r - A[n - 1]) < 1e-7:
                    u_top = d_first_top * cmath.exp(1j * tf_t)
                    w_bot = -d_last_bot * cmath.exp(-1j * tl_b)
                    sol = (extent_top, (u_top, w_top, u_bot, w_bot))
                    break
            if sol:
                break
        if sol:
            break
    if sol is None:
        raise BrickError("no ring solution for the span collector")
    extent_top, rays = sol

    builder = Builder(k)
    cuts_top = {pos: (q, None) for pos, q in q_cuts.items() if q > 0}
    part = polar_div_part(builder, b_col, top_vectors, bottom_vectors,
                          planes_top_left=q_left, extent_top=extent_top,
                          rays=rays, cuts_top=cuts_top)
    span_stacks: dict[int, list[tuple[int, int]]] = {}
    for pos, bi, tau in stacks:
        span_stacks.setdefault(pos, []).append((bi, tau))
    for i in range(j):
        cur = part.top[i]
        for bi, tau in span_stacks.get(i + 1, []):
            x = top_vectors[i]
            tpart = polar_div_part(builder, sig.poles_div[bi], [x], [x],
                                   planes_top_left=tau - 1)
            builder.glue_segments(cur, tpart.bottom[0])
            cur = tpart.top[0]
        builder.glue_segments(cur, part.bottom[i])
    return builder.surface({
        "signature": sig.text(),
        "residues": [[z.real, z.imag] for z in res.entries],
        "route": "g0-span",
    })


# ---------------------------------------------------------------------------
# polygon mode: all poles simple
# ---------------------------------------------------------------------------


def _polygon_surface(sig: Signature, res: ResidueConfig, roots: list[complex],
                     split: int, m_rot: int, extra_widgets=None) -> FlatSurface:
    """Closed (s+2)-gon: edges v1, roots[:split], v2, roots[split:] with
    v2 = zeta^m * v1 glued by rotation and half-cylinders on the roots."""
    k = sig.k
    zeta = _zeta(k, m_rot)
    if abs(1 - zeta) < 1e-12:
        raise BrickError("degenerate polygon rotation")
    total = sum(roots, 0j)
    v1 = -total / (1 - zeta)
    v2 = -zeta * v1
    if abs(v1) < 1e-9 * max(abs(total), 1e-9):
        raise BrickError("degenerate polygon")
    edges = [v1] + roots[:split] + [v2] + roots[split:]
    pts = partial_sums(0j, edges)[:-1]
    closure = sum(edges, 0j)
    if abs(closure) > 1e-9 * max(abs(e) for e in edges):
        raise BrickError("polygon does not close")
    ring = pts + [pts[0]]
    if not no_self_intersection(ring):
        raise BrickError("polygon not simple")
    # orientation: require CCW (positive signed area)
    area = 0.0
    for a, b in zip(ring, ring[1:]):
        area += a.real * b.imag - a.imag * b.real
    if area <= 0:
        raise BrickError("polygon has wrong orientation")
    builder = Builder(k)
    pg = builder.add_cell(polygon_cell(pts))
    builder.glue_segments((pg, 0), (pg, 1 + split))
    for t, r in enumerate(roots):
        pos = 1 + t if t < split else 2 + t
        cpart = cylinder_part(builder, [-r])
        builder.glue_segments((pg, pos), cpart.top[0])
    return builder.surface({
        "signature": sig.text(),
        "residues": [[z.real, z.imag] for z in res.entries],
        "route": "g0-polygon",
    })


# ---------------------------------------------------------------------------
# polygon search (all poles simple)
# ---------------------------------------------------------------------------


def _polygon_candidates(sig: Signature, res: ResidueConfig, rng: random.Random):
    """Candidate (edges, split, m) tuples for the polygon construction.

    Edge vectors e_j satisfy (-e_j)^k = R_j; the first ``split`` follow
    v1, the rest follow v2.  Guided choices (argument-sorted roots,
    lattice-direction roots for near-degenerate tuples) come first, then
    seeded random ones."""
    k = sig.k
    Rs = list(res.entries)
    s = len(Rs)
    base_roots = [kth_roots(R, k) for R in Rs]
    zeros = sorted(sig.zeros)
    splits = sorted({_split_order(a, k)[0] % (s + 1) for a in sig.zeros}
                    | {_split_order(a, k)[0] + 1 for a in sig.zeros if _split_order(a, k)[0] + 1 <= s}
                    | {1, s - 1, s // 2})
    splits = [sp for sp in splits if 0 <= sp <= s]
    ms = list(range(1, k))

    def perms_of(roots):
        idx = sorted(range(s), key=lambda i: cmath.phase(roots[i]))
        yield [roots[i] for i in idx]
        yield [roots[i] for i in reversed(idx)]
        yield list(roots)

    # deterministic guided picks
    guided = []
    guided.append([principal_root(R, k) for R in Rs])
    guided.append([max(br, key=lambda w: (w.real, w.imag)) for br in base_roots])
    guided.append([min(br, key=lambda w: (w.real, w.imag)) for br in base_roots])
    for pattern_rot in range(k):
        guided.append([br[(i + pattern_rot) % k] for i, br in
                       ((rng.randrange(k), br) for br in base_roots)])
    for roots in guided:
        for arr in perms_of(roots):
            for sp in splits:
                for m in ms:
                    yield [-w for w in arr], sp, m
    # seeded random exploration
    for _ in range(400):
        roots = [br[rng.randrange(k)] for br in base_roots]
        arr = list(roots)
        rng.shuffle(arr)
        sp = rng.choice(splits) if splits else rng.randrange(s + 1)
        m = rng.choice(ms)
        yield [-w for w in arr], sp, m


def _construct_polygon(sig: Signature, res: ResidueConfig, seed: int) -> FlatSurface:
    rng = random.Random((seed, "polygon", sig.text()).__repr__())
    last = None
    for edges, split, m in _polygon_candidates(sig, res, rng):
        try:
            S = _polygon_surface(sig, res, edges, split, m)
            verify_witness(S, sig, res)
            return S
        except _ASSEMBLY_ERRORS as e:
            last = e
            continue
    raise ConstructionFailure(f"polygon search exhausted: {last}")


# ---------------------------------------------------------------------------
# top-level genus-zero construction
# ---------------------------------------------------------------------------


def _collector_plans(sig: Signature, res: ResidueConfig, seed: int):
    k = sig.k
    rng = random.Random((seed, "collector", sig.text()).__repr__())
    entries = res.entries

    mode_opts = []
    if sig.r:
        cj = max(range(sig.r), key=lambda j: sig.poles_nondiv[j])
        mode_opts.append(("C", ("c", cj), sig.poles_nondiv[cj] // k - 1))
    for i in sorted(range(sig.p), key=lambda i: -sig.poles_div[i]):
        mode_opts.append(("B", ("b", i), sig.poles_div[i] // k - 2))
        if len(mode_opts) >= 3:
            break

    residual_order = sorted(range(sig.n),
                            key=lambda zi: -_split_order(sig.zeros[zi], k)[0])
    for mode, collector, plane_budget in mode_opts:
        donors = _donor_pool(sig, res, collector)
        towers = [i for i in range(sig.p)
                  if entries[i] == 0 and collector != ("b", i)]
        for residual, style in itertools.product(residual_order, (0, 1)):
            lam_zero = None
            if mode == "B" and sig.n >= 2:
                cands = [zi for zi in range(sig.n)
                         if zi != residual and sig.zeros[zi] % k != 0]
                if not cands:
                    continue
                lam_zero = cands[0]
            planned = _widget_plan(sig, residual, plane_budget, donors, towers,
                                   style=style)
            if planned is None:
                continue
            rows, leftover, leftover_towers = planned
            for attempt in range(24):
                rot_b = {}
                rot_s = {}
                cyl_rot = {}
                base_dirs = {}
                widget_scale = (0.21, 0.09, 0.45, 0.03, 1.3, 2.6)[attempt % 6]
                fracs = {}
                csrc_dirs = {}
                if attempt:
                    rot_b = {i: rng.randrange(k) for i in range(sig.p)}
                    rot_s = {j: rng.randrange(k) for j in range(sig.simple_poles)}
                    base_dirs = {zi: cmath.exp(2j * math.pi * rng.random())
                                 for zi, _, _, _ in rows}
                    fracs = {zi: rng.random() for zi, _, _, _ in rows}
                    csrc_dirs = {(zi, t): cmath.exp(2j * math.pi * rng.random())
                                 for zi, _, ds, _ in rows for t in range(len(ds))}
                plan = {
                    "mode": mode,
                    "collector": collector,
                    "residual": residual,
                    "rows": rows,
                    "rot_b": rot_b,
                    "rot_s": rot_s,
                    "cyl_rot": cyl_rot,
                    "base_dirs": base_dirs,
                    "fracs": fracs,
                    "csrc_dirs": csrc_dirs,
                    "widget_scale": widget_scale,
                    "lam_zero": lam_zero,
                }
                if mode == "B":
                    R_col = entries[collector[1]]
                    roots_col = kth_roots(R_col, k) if R_col != 0 else [0j]
                    plan["root_col"] = roots_col[attempt % len(roots_col)]
                yield plan


def _all_zero_div_case(sig: Signature, res: ResidueConfig) -> bool:
    return (sig.r == 0 and sig.simple_poles == 0 and sig.p >= 1
            and all(z == 0 for z in res.entries))


def _span_plans(sig: Signature, res: ResidueConfig, seed: int):
    k = sig.k
    rng = random.Random((seed, "span", sig.text()).__repr__())
    n = sig.n
    j = n - 1
    for bj in sorted(range(sig.p), key=lambda i: -sig.poles_div[i]):
        ell_col = sig.poles_div[bj] // k
        others = [i for i in range(sig.p) if i != bj]
        nondiv = [zi for zi in range(n) if sig.zeros[zi] % k != 0]
        orders = []
        if len(nondiv) >= 2:
            for ring_pair in itertools.permutations(nondiv, 2):
                inner = [zi for zi in range(n) if zi not in ring_pair]
                orders.append([ring_pair[0]] + inner + [ring_pair[1]])
        orders.extend(list(p) for p in itertools.islice(
            itertools.permutations(range(n)), 24))
        for order in orders:
            need = [_split_order(sig.zeros[zi], k)[0] for zi in order]
            flexible = [pos for pos, zi in enumerate(order)
                        if sig.zeros[zi] % k != 0]
            for attempt in range(40):
                remaining = list(need)
                stacks = []
                ok = True
                pool = sorted(others, key=lambda i: -sig.poles_div[i])
                for bi in pool:
                    ell_i = sig.poles_div[bi] // k
                    placed = False
                    spots = list(range(1, j + 1))
                    rng.shuffle(spots)
                    for pos in spots:
                        for tau in range(1, ell_i):
                            if remaining[pos - 1] >= tau and remaining[pos] >= ell_i - tau:
                                remaining[pos - 1] -= tau
                                remaining[pos] -= ell_i - tau
                                stacks.append((pos, bi, tau))
                                placed = True
                                break
                        if placed:
                            break
                    if not placed:
                        ok = False
                        break
                if not ok:
                    continue
                extra = sum(remaining) - (ell_col - 2)
                if extra < 0 or extra > len(flexible):
                    continue
                # relax ``extra`` flexible junctions by one plane each
                flexed = [pos for pos in flexible if remaining[pos] >= 1]
                if len(flexed) < extra:
                    continue
                packets = list(remaining)
                for pos in flexed[:extra]:
                    packets[pos] -= 1
                yield {
                    "collector": bj,
                    "zero_order": order,
                    "stacks": stacks,
                    "q_left": packets[0],
                    "q_right": packets[-1],
                    "q_cuts": {i: packets[i] for i in range(1, n - 1)
                               if packets[i]},
                    "dir0": 0.25 + 0.4 * rng.random(),
                    "span_scale": 1.0,
                }


def construct_g0(sig: Signature, res: ResidueConfig, seed: int = 0,
                 _depth: int = 0, check: bool = True) -> FlatSurface:
    """A verified genus-zero witness for a realizable (signature, residues)."""
    sig.validate()
    if not isinstance(res, ResidueConfig):
        res = ResidueConfig(tuple(res))
    if check:
        verdict = decide(sig, res)
        if not verdict.realizable:
            raise NotRealizableInput(f"{verdict.decision}: {verdict.reason}")

    last = None
    if sig.p == 0 and sig.r == 0:
        try:
            return _construct_polygon(sig, res, seed)
        except ConstructionFailure as e:
            last = e
        if _depth < 4 and sig.n >= 3:
            return _merge_and_blow(sig, res, seed, _depth)
        raise ConstructionFailure(f"no construction found for {sig.text()}: {last}")

    if _all_zero_div_case(sig, res) and sig.n >= 2:
        for plan in itertools.islice(_span_plans(sig, res, seed), 600):
            try:
                S = _assemble_span(sig, res, plan)
                verify_witness(S, sig, res)
                return S
            except _ASSEMBLY_ERRORS as e:
                last = e
                continue
    if True:
        roots_cache = {}
        for plan in itertools.islice(_collector_plans(sig, res, seed), 400):
            try:
                key = (tuple(sorted(plan.get("rot_b", {}).items())),
                       tuple(sorted(plan.get("rot_s", {}).items())))
                if key not in roots_cache:
                    roots_cache[key] = _choose_roots(sig, res,
                                                     plan.get("rot_b", {}),
                                                     plan.get("rot_s", {}))
                plan["roots_b"], plan["roots_s"] = roots_cache[key]
                S = _assemble_collector(sig, res, plan)
                verify_witness(S, sig, res)
                return S
            except _ASSEMBLY_ERRORS as e:
                last = e
                continue

    if _depth < 4 and sig.n >= 2:
        try:
            return _merge_and_blow(sig, res, seed, _depth)
        except _ASSEMBLY_ERRORS + (ConstructionFailure,) as e:
            last = e
    raise ConstructionFailure(f"no construction found for {sig.text()}: {last}")


def _merge_and_blow(sig: Signature, res: ResidueConfig, seed: int, depth: int) -> FlatSurface:
    """Build a coarser stratum with the zeros gathered into two groups,
    then split each merged zero back by the local graft."""
    from .surgery import blow_up, local_split_possible
    from .stratum import admissible_partition, NoAdmissiblePartition

    k = sig.k
    last = None

    def attempt(groups):
        sums = [sum(g) for g in groups]
        zeros = tuple(sorted(sums, reverse=True))
        msig = Signature(k, 0, zeros, sig.poles_div, sig.poles_nondiv,
                         sig.simple_poles)
        if not msig.is_valid() or primitive_divisor(msig) != 1:
            raise ConstructionFailure("merged stratum unusable")
        for g in groups:
            if len(g) > 1 and not local_split_possible(k, sum(g), tuple(g)):
                raise ConstructionFailure("non-local split required")
        if not decide(msig, res).realizable:
            raise ConstructionFailure("merged stratum rejects the residues")
        S = construct_g0(msig, res, seed + 1, depth + 1)
        for g in groups:
            if len(g) > 1:
                S = blow_up(S, sum(g), tuple(sorted(g, reverse=True)), seed=seed)
        verify_witness(S, sig, res)
        return S

    # admissible two-group gatherings first (any n in two grafts)
    from .stratum import _partition_admissible

    zeros = list(sig.zeros)
    n = len(zeros)
    cand_partitions = []
    if n <= 10:
        seen = set()
        for mask in range(1, (1 << n) - 1):
            g1 = [zeros[t] for t in range(n) if mask >> t & 1]
            g2 = [zeros[t] for t in range(n) if not mask >> t & 1]
            key = (tuple(sorted(g1)), tuple(sorted(g2)))
            if key in seen or (key[1], key[0]) in seen:
                continue
            seen.add(key)
            if _partition_admissible([sum(g1), sum(g2)], k):
                bigness = max(_split_order(sum(g1), k)[0], _split_order(sum(g2), k)[0])
                cand_partitions.append((bigness, [g1, g2]))
        cand_partitions.sort(key=lambda p: p[0])
    for _, groups in cand_partitions[:24]:
        try:
            return attempt(groups)
        except (ConstructionFailure, NotRealizableInput, *(_ASSEMBLY_ERRORS)) as e:
            last = e
            continue
    # pairwise merges as a fallback
    for i, jdx in itertools.combinations(range(sig.n), 2):
        a, b = sig.zeros[i], sig.zeros[jdx]
        if a + b <= -k or a + b == 0:
            continue
        groups = [[sig.zeros[t] for t in range(sig.n) if t not in (i, jdx)][x:x + 1]
                  for x in range(sig.n - 2)]
        groups.append([a, b])
        try:
            return attempt(groups)
        except (ConstructionFailure, NotRealizableInput, *(_ASSEMBLY_ERRORS)) as e:
            last = e
            continue
    raise ConstructionFailure(f"merge-and-split fallback failed: {last}")
