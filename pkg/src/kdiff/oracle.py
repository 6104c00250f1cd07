"""Realizability of residue tuples: the full decision procedure.

Every verdict cites a machine-readable reason tag.  The twelve
exceptional genus-zero families (all poles of order -k) are stored as a
static table; membership in a forbidden line C* . (pattern) is tested up
to simultaneous scaling and permutation of equal-order pole slots, with
exact rational arithmetic when the caller supplies exact residues.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .numerics import Tolerance, DEFAULT_TOL, proportional_up_to_scale
from .stratum import (
    Signature,
    ResidueConfig,
    ComponentLabel,
    WHOLE,
    components,
    primitive_divisor,
    is_empty,
    StratumError,
)


class OracleError(ValueError):
    pass


class InvalidComponent(OracleError):
    pass


class ResidueShapeMismatch(OracleError):
    pass


@dataclass(frozen=True)
class Verdict:
    decision: str  # realizable | not-realizable | empty-stratum | not-primitive
    reason: str
    detail: str = ""
    witness_hint: str = ""

    @property
    def realizable(self) -> bool:
        return self.decision == "realizable"

    def to_json(self) -> dict:
        return {
            "decision": self.decision,
            "reason": self.reason,
            "detail": self.detail,
            "witness_hint": self.witness_hint,
        }


@dataclass(frozen=True)
class SporadicFamily:
    index: int
    k: int | None  # None: the (-1,1;-k,-k) family, any k >= 3
    zeros: tuple[int, ...]
    simple_poles: int
    forbidden: tuple[tuple[complex, ...], ...]  # union of C*-lines (up to permutation)

    def matches_stratum(self, sig: Signature) -> bool:
        if sig.genus != 0 or sig.p or sig.r:
            return False
        if self.k is not None and sig.k != self.k:
            return False
        if self.k is None and sig.k < 3:
            return False
        return (
            tuple(sorted(sig.zeros)) == tuple(sorted(self.zeros))
            and sig.simple_poles == self.simple_poles
        )

    def forbidden_lines(self, k: int) -> tuple[tuple[complex, ...], ...]:
        if self.index == 1:
            return (((1 + 0j), (-1 + 0j) if k % 2 else (1 + 0j)),)
        return self.forbidden


_SPORADIC = (
    SporadicFamily(1, None, (-1, 1), 2, ()),  # forbidden (1, (-1)^k), any k
    SporadicFamily(2, 3, (-1, 4), 3, ((1, 1, 1),)),
    SporadicFamily(3, 3, (1, 2), 3, ((1, 1, 1),)),
    SporadicFamily(4, 3, (2, 4), 4, ((1, 1, -1, -1),)),
    SporadicFamily(5, 3, (2, 7), 5, ((1, 1, 1, 1, 1), (1, 1, 1, 1, -1))),
    SporadicFamily(6, 3, (2, 10), 6, ((1, 1, 1, -1, -1, -1), (1, 1, 1, 1, 1, 1))),
    SporadicFamily(7, 3, (5, 7), 6, ((1, 1, 1, 1, 1, 1),)),
    SporadicFamily(8, 4, (-1, 5), 3, ((1, 1, -4),)),
    SporadicFamily(9, 4, (3, 5), 4, ((1, 1, 1, 1),)),
    SporadicFamily(10, 4, (-1, 9), 4, ((1, 1, 1, 1),)),
    SporadicFamily(11, 4, (3, 13), 6, ((1, 1, 1, 1, 1, 1),)),
    SporadicFamily(12, 6, (-1, 7), 3, ((1, 1, 1),)),
)


def sporadic_table() -> tuple[SporadicFamily, ...]:
    return _SPORADIC


GaussRational = tuple[Fraction, Fraction]


def _exact_proportional(res: list[GaussRational], line: tuple[complex, ...]) -> bool:
    """Exact C*-proportionality over Q(i); the table lines are integer."""
    pat = [(Fraction(int(z.real)), Fraction(int(z.imag))) for z in line]
    base = next(i for i, q in enumerate(pat) if q != (0, 0))
    br, bi = res[base]
    pr, pi = pat[base]
    # lam = res[base] / pat[base] over Q(i)
    den = pr * pr + pi * pi
    lr = (br * pr + bi * pi) / den
    li = (bi * pr - br * pi) / den
    if lr == 0 and li == 0:
        return False
    for (rr, ri), (qr, qi) in zip(res, pat):
        if (lr * qr - li * qi, lr * qi + li * qr) != (rr, ri):
            return False
    return True


def _line_matches(res: tuple[complex, ...], line: tuple[complex, ...],
                  tol: Tolerance, exact: list[GaussRational] | None) -> bool:
    """Does res lie on C* . (permutation of line)?  All slots here carry
    equal pole order -k, so permutations of the pattern are immaterial."""
    n = len(res)
    if n != len(line):
        return False
    if n > 7:
        perms = [tuple(sorted(line, key=lambda z: (z.real, z.imag)))]
    else:
        perms = set(itertools.permutations(line))
    for perm in perms:
        if exact is not None:
            if _exact_proportional(exact, perm):
                return True
        else:
            try:
                if proportional_up_to_scale(res, perm, tol):
                    return True
            except Exception:
                continue
    return False


def origin_in_image_two_nondiv(sig: Signature) -> bool:
    """For shapes with exactly two non-divisible zero orders, all other
    zeros divisible, poles divisible, no simple poles: is the zero tuple
    attained?  True iff the divisible zero orders sum to at least k*p."""
    k = sig.k
    nondiv_zeros = [a for a in sig.zeros if a % k != 0]
    if len(nondiv_zeros) != 2 or sig.r != 0 or sig.simple_poles != 0:
        raise OracleError("wrong shape for the two-non-divisible origin test")
    div_sum = sum(a for a in sig.zeros if a % k == 0)
    return div_sum >= k * sig.p


def decide(sig: Signature, res: ResidueConfig | tuple = (),
           comp: ComponentLabel = None, tol: Tolerance = DEFAULT_TOL,
           exact: list[GaussRational] | None = None) -> Verdict:
    """Is there a primitive k-differential with the signature's orders,
    the given k-residues, in the given component?"""
    sig.validate()
    if sig.k < 3:
        raise OracleError("the decision procedure covers k >= 3 only")
    if not isinstance(res, ResidueConfig):
        res = ResidueConfig(tuple(res))
    res.check_shape(sig)
    k = sig.k

    empty, why = is_empty(sig)
    if empty:
        if sig.genus == 0 and primitive_divisor(sig) != 1:
            return Verdict("not-primitive", "gcd", why)
        return Verdict("empty-stratum", "empty", why)

    comps = components(sig)
    if comp is None:
        comp = comps[0]
    if comp not in comps:
        raise InvalidComponent(f"component {comp} not among {list(map(str, comps))}")

    entries = tuple(res.entries)
    all_zero = all(z == 0 for z in entries)

    if sig.genus == 0:
        nd = sig.nondivisible_count()
        if sig.p == 0 and sig.r == 0 and sig.simple_poles > 0:
            for fam in _SPORADIC:
                if fam.matches_stratum(sig):
                    for line in fam.forbidden_lines(k):
                        if _line_matches(entries, line, tol, exact):
                            return Verdict(
                                "not-realizable",
                                f"sporadic({fam.index})",
                                "residues lie on a forbidden line of exceptional family "
                                f"#{fam.index}",
                            )
            return Verdict("realizable", "simple-poles-generic",
                           "all poles of order -k, residues avoid every exceptional line",
                           witness_hint="g0-polygon")
        if nd >= 3:
            return Verdict("realizable", "three-nondivisible",
                           "at least three singularities of non-divisible order",
                           witness_hint="g0-collector")
        # exactly two non-divisible singularities, p + r > 0: the zero
        # tuple is excluded exactly when there is no simple pole and the
        # divisible zero orders cannot reach k*p
        if all_zero and sig.simple_poles == 0:
            div_sum = sum(a for a in sig.zeros if a % k == 0)
            if div_sum < k * sig.p:
                return Verdict(
                    "not-realizable", "origin-excluded",
                    "zero tuple needs the divisible zero orders to reach k*p",
                )
        return Verdict("realizable", "two-nondivisible-generic",
                       "two non-divisible orders; tuple avoids the origin obstruction",
                       witness_hint="g0-collector")

    if sig.genus == 1:
        if (k, sig.zeros, sig.poles_div, sig.r, sig.s) == (3, (6,), (6,), 0, 0) \
                and comp == ComponentLabel("rotation", 1) and all_zero:
            return Verdict("not-realizable", "torus-66-rot1",
                           "the rotation-1 component of the (6;-6) cubic stratum "
                           "realizes only nonzero residues")
        return Verdict("realizable", "torus-component",
                       "residue maps of torus components are onto",
                       witness_hint="g1")

    # genus >= 2
    if not sig.has_poles():
        return Verdict("realizable", "finite-area", "nonempty finite-area stratum",
                       witness_hint="handle-sew")
    if comp.kind in ("even", "odd"):
        return Verdict("realizable", "parity-component",
                       "even/odd components have onto residue maps",
                       witness_hint="handle-sew")
    if comp.kind == "hyperelliptic":
        pole_count = sig.p + sig.r + sig.simple_poles
        if pole_count == 1:
            return Verdict("realizable", "hyperelliptic-one-pole",
                           "single pole: hyperelliptic residue map is onto",
                           witness_hint="handle-sew")
        # exactly two poles of equal order (the only other hyperelliptic shape)
        sign = (-1) ** k
        a, b = entries[0], entries[1]
        scale = max(abs(a), abs(b), 1.0)
        ok = abs(b - sign * a) <= max(tol.abs, tol.rel * scale)
        if ok:
            return Verdict("realizable", "hyperelliptic-diagonal",
                           "residues lie on the diagonal (R, (-1)^k R)")
        return Verdict("not-realizable", "hyperelliptic-diagonal",
                       "hyperelliptic two-pole residues must satisfy R2 = (-1)^k R1")
    raise InvalidComponent(f"uncatalogued component {comp}")
