"""Stratum signatures and their combinatorics.

A signature records k, the genus, zero orders (any integer > -k), and the
three pole classes: orders divisible by k and <= -2k, orders not divisible
by k (magnitude > k), and poles of order exactly -k.  Pole orders are
stored as positive magnitudes so that sign conventions cannot leak in.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from math import gcd


class StratumError(ValueError):
    pass


class DegreeMismatch(StratumError):
    pass


class OrderClassViolation(StratumError):
    pass


class OrderTooNegative(StratumError):
    pass


class NotPrimitive(StratumError):
    pass


class NoAdmissiblePartition(StratumError):
    pass


@dataclass(frozen=True)
class Signature:
    """Order data of a stratum of k-differentials.

    zeros: orders a_i > -k (cone points).
    poles_div: magnitudes b_i = k*l_i >= 2k (k-residue slot, may vanish).
    poles_nondiv: magnitudes c_i > k, not divisible by k (no residue slot).
    simple_poles: number of poles of order exactly -k (nonzero k-residue).
    """

    k: int
    genus: int
    zeros: tuple[int, ...] = ()
    poles_div: tuple[int, ...] = ()
    poles_nondiv: tuple[int, ...] = ()
    simple_poles: int = 0

    def __post_init__(self):
        object.__setattr__(self, "zeros", tuple(self.zeros))
        object.__setattr__(self, "poles_div", tuple(self.poles_div))
        object.__setattr__(self, "poles_nondiv", tuple(self.poles_nondiv))

    # -- derived quantities ------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.zeros)

    @property
    def p(self) -> int:
        return len(self.poles_div)

    @property
    def r(self) -> int:
        return len(self.poles_nondiv)

    @property
    def s(self) -> int:
        return self.simple_poles

    def all_orders(self) -> list[int]:
        """Signed orders of every singularity."""
        return (
            list(self.zeros)
            + [-b for b in self.poles_div]
            + [-c for c in self.poles_nondiv]
            + [-self.k] * self.simple_poles
        )

    def pole_magnitudes(self) -> list[int]:
        return list(self.poles_div) + list(self.poles_nondiv) + [self.k] * self.simple_poles

    @property
    def residue_arity(self) -> int:
        """Length of a residue tuple: one slot per divisible pole, then
        one per simple pole."""
        return self.p + self.s

    def has_poles(self) -> bool:
        return self.p + self.r + self.s > 0

    def nondivisible_count(self) -> int:
        """Number of singularities (zeros and poles) of order not
        divisible by k."""
        return sum(1 for m in self.all_orders() if m % self.k != 0)

    def validate(self) -> None:
        k = self.k
        if k < 1:
            raise StratumError("k must be positive")
        if self.genus < 0:
            raise StratumError("genus must be >= 0")
        if self.simple_poles < 0:
            raise StratumError("simple pole count must be >= 0")
        for a in self.zeros:
            if a <= -k:
                raise OrderTooNegative(f"zero order {a} must exceed {-k}")
        for b in self.poles_div:
            if b < 2 * k or b % k != 0:
                raise OrderClassViolation(f"divisible pole magnitude {b} must be a multiple of k >= {2*k}")
        for c in self.poles_nondiv:
            if c <= k or c % k == 0:
                raise OrderClassViolation(f"non-divisible pole magnitude {c} must exceed k and avoid multiples of k")
        total = sum(self.all_orders())
        expected = k * (2 * self.genus - 2)
        if total != expected:
            raise DegreeMismatch(f"orders sum to {total}, expected k(2g-2) = {expected}")

    def is_valid(self) -> bool:
        try:
            self.validate()
            return True
        except StratumError:
            return False

    # -- text form used by the CLI -----------------------------------------

    def text(self) -> str:
        parts = [f"k={self.k}", f"g={self.genus}"]
        if self.zeros:
            parts.append("zeros=" + ",".join(str(a) for a in self.zeros))
        poles = [-b for b in self.poles_div] + [-c for c in self.poles_nondiv] + [-self.k] * self.simple_poles
        if poles:
            parts.append("poles=" + ",".join(str(m) for m in poles))
        return " ".join(parts)


def signature_from_orders(k: int, genus: int, zeros, pole_orders) -> Signature:
    """Build a Signature from signed pole orders, classifying each pole
    by magnitude and divisibility."""
    div, nondiv, simple = [], [], 0
    for m in pole_orders:
        mag = -m if m < 0 else m
        if mag < k:
            raise OrderClassViolation(f"pole order {-mag} is greater than -k; list it as a zero")
        if mag == k:
            simple += 1
        elif mag % k == 0:
            div.append(mag)
        else:
            nondiv.append(mag)
    sig = Signature(k, genus, tuple(zeros), tuple(div), tuple(nondiv), simple)
    return sig


def parse_signature(text: str) -> Signature:
    """Parse the CLI text format, e.g. ``k=3 g=0 zeros=1,2 poles=-3,-3,-3``."""
    fields = {}
    for tok in text.split():
        if "=" not in tok:
            raise StratumError(f"bad token {tok!r}")
        key, val = tok.split("=", 1)
        fields[key] = val
    try:
        k = int(fields["k"])
        genus = int(fields["g"])
    except KeyError as e:
        raise StratumError(f"missing field {e}") from None
    zeros = [int(x) for x in fields.get("zeros", "").split(",") if x]
    poles = [int(x) for x in fields.get("poles", "").split(",") if x]
    return signature_from_orders(k, genus, zeros, poles)


@dataclass(frozen=True)
class ComponentLabel:
    """Connected-component tag.

    kind: 'whole' (g=0), 'rotation' with rho (g=1), or 'even' | 'odd' |
    'hyperelliptic' (g>=2; advisory only, parity is never certified).
    """

    kind: str
    rho: int = 0

    def __str__(self):
        if self.kind == "rotation":
            return f"rot={self.rho}"
        return self.kind


WHOLE = ComponentLabel("whole")


def Rotation(rho: int) -> ComponentLabel:
    return ComponentLabel("rotation", rho)


@dataclass(frozen=True)
class ResidueConfig:
    """Residue tuple: one entry per divisible pole (signature order),
    then one per simple pole.  Simple-pole entries are never zero."""

    entries: tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(complex(z) for z in self.entries))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def check_shape(self, sig: Signature) -> None:
        if len(self.entries) != sig.residue_arity:
            raise StratumError(
                f"residue tuple has {len(self.entries)} entries, stratum needs {sig.residue_arity}"
            )
        for j in range(sig.p, sig.p + sig.s):
            if self.entries[j] == 0:
                raise StratumError(f"residue at simple-pole slot {j} must be nonzero")

    def divisible_part(self, sig: Signature) -> tuple[complex, ...]:
        return self.entries[: sig.p]

    def simple_part(self, sig: Signature) -> tuple[complex, ...]:
        return self.entries[sig.p :]


def primitive_divisor(sig: Signature) -> int:
    """gcd of all signed orders and k.

    In genus zero the stratum of primitive differentials is nonempty iff
    this equals 1 (every genus-zero differential is exactly a d-th power).
    In higher genus the value does not decide primitivity.
    """
    d = sig.k
    for m in sig.all_orders():
        d = gcd(d, m)
    return d


def dimension(sig: Signature) -> int:
    return 2 * sig.genus - 2 + sig.n + sig.p + sig.r + sig.s


def components(sig: Signature) -> list[ComponentLabel]:
    """Connected components carrying primitive differentials.

    g=0: the whole stratum.  g=1: one component per rotation number rho
    coprime to k, where rho runs over divisors of all orders (only strict
    divisors of a for the one-zero/one-pole strata (a; -a)).  g>=2: even
    and odd labels, plus a hyperelliptic label for the shapes that admit
    one (a single pole, or exactly two poles of equal order).
    """
    sig.validate()
    if sig.genus == 0:
        if primitive_divisor(sig) != 1:
            raise NotPrimitive("genus-zero stratum with gcd(orders, k) > 1 has no primitive differential")
        return [WHOLE]
    if sig.genus == 1:
        mags = [abs(m) for m in sig.all_orders() if m != 0]
        if not mags:
            return []  # mu = (): torus, never primitive
        g0 = 0
        for m in mags:
            g0 = gcd(g0, m)
        one_zero_one_pole = sig.n == 1 and (sig.p + sig.r + sig.s) == 1
        out = []
        for rho in range(1, g0 + 1):
            if g0 % rho != 0:
                continue
            if one_zero_one_pole and rho == g0:
                continue  # only strict divisors of a for (a; -a)
            if gcd(rho, sig.k) == 1:
                out.append(Rotation(rho))
        return out
    # g >= 2
    out = [ComponentLabel("even"), ComponentLabel("odd")]
    pole_count = sig.p + sig.r + sig.s
    if pole_count == 1:
        out.append(ComponentLabel("hyperelliptic"))
    elif pole_count == 2:
        mags = sig.pole_magnitudes()
        if mags[0] == mags[1]:
            out.append(ComponentLabel("hyperelliptic"))
    return out


def _partition_admissible(sums: list[int], k: int) -> bool:
    """Strong admissibility: every group sum exceeds -k and the gcd of
    the sums is divisible by neither k nor k/2 (so the merged stratum is
    never forced to consist of abelian or quadratic powers)."""
    if any(A <= -k for A in sums):
        return False
    g = 0
    for A in sums:
        g = gcd(g, A)
    if g == 0:
        return False
    if g % k == 0:
        return False
    if k % 2 == 0 and g % (k // 2) == 0:
        return False
    return True


def admissible_partition(a: list[int], k: int, d: int) -> list[list[int]]:
    """Partition the orders into d admissible groups.

    Requires each a_i > -k, gcd(a) = 1, sum(a) = k*L with L >= -1, and
    2 <= d <= len(a).  Follows the constructive proof (peel a suitable
    singleton, merge -k/2 entries when needed), with an exhaustive
    fallback; raises NoAdmissiblePartition when no partition passes.
    """
    n = len(a)
    if not (2 <= d <= n):
        raise NoAdmissiblePartition(f"need 2 <= d <= {n}, got {d}")
    for x in a:
        if x <= -k:
            raise NoAdmissiblePartition(f"order {x} must exceed {-k}")

    def two_split(items: list[tuple[int, ...]]) -> list[list[tuple[int, ...]]] | None:
        # items are disjoint bundles of original entries; a bundle's value
        # is its sum.  Splitting peels one bundle against the rest.
        def val(b):
            return sum(b)

        # case 1: a negative bundle that is not -k/2
        for i, b in enumerate(items):
            if val(b) < 0 and 2 * val(b) != -k:
                rest = items[:i] + items[i + 1 :]
                if _partition_admissible([val(b), sum(map(val, rest))], k):
                    return [[b], rest]
        # case 2: peel a nonnegative bundle not divisible by k/2 (or k)
        for i, b in enumerate(items):
            v = val(b)
            bad = v % k == 0 or (k % 2 == 0 and v % (k // 2) == 0) or v == 0
            if v >= 0 and not bad:
                rest = items[:i] + items[i + 1 :]
                if _partition_admissible([v, sum(map(val, rest))], k):
                    return [[b], rest]
        # case 3: merge a positive non-(k/2)-multiple with a -k/2 bundle
        if k % 2 == 0:
            half = k // 2
            pos = next((i for i, b in enumerate(items) if val(b) > 0 and val(b) % half != 0), None)
            neg = next((j for j, b in enumerate(items) if val(b) == -half), None)
            if pos is not None and neg is not None and len(items) > 2:
                merged = tuple(items[pos]) + tuple(items[neg])
                rest = [b for idx, b in enumerate(items) if idx not in (pos, neg)]
                return two_split(rest + [merged])
        return None

    def refine(groups: list[list[tuple[int, ...]]]) -> list[list[int]] | None:
        # flatten bundles, then peel singletons off big groups until we
        # have d groups, re-checking admissibility at each step
        flat = [sorted(x for b in g for x in b) for g in groups]
        while len(flat) < d:
            progressed = False
            for gi in sorted(range(len(flat)), key=lambda i: -len(flat[i])):
                if len(flat[gi]) <= 1:
                    continue
                for x in sorted(flat[gi]):
                    rest = list(flat[gi])
                    rest.remove(x)
                    cand = flat[:gi] + [rest] + flat[gi + 1 :] + [[x]]
                    if _partition_admissible([sum(g) for g in cand], k):
                        flat = cand
                        progressed = True
                        break
                if progressed:
                    break
            if not progressed:
                return None
        return flat

    base = two_split([(x,) for x in a])
    if base is not None:
        flat2 = [sorted(x for b in g for x in b) for g in base]
        if d == 2 and _partition_admissible([sum(g) for g in flat2], k):
            return flat2
        refined = refine(base)
        if refined is not None:
            return refined

    # exhaustive fallback over assignments (small n in practice)
    if n <= 12:
        for assign in itertools.product(range(d), repeat=n):
            if set(assign) != set(range(d)):
                continue
            groups = [[] for _ in range(d)]
            for x, gi in zip(a, assign):
                groups[gi].append(x)
            if _partition_admissible([sum(g) for g in groups], k):
                return groups
    raise NoAdmissiblePartition(f"no admissible partition of {a} into {d} groups for k={k}")


def is_empty(sig: Signature) -> tuple[bool, str]:
    """Is the stratum of primitive k-differentials empty?

    Returns (empty?, reason).  Finite-area strata of genus >= 1 are empty
    exactly for the torus cases mu = (1,-1) and mu = (); genus-zero
    strata are empty exactly when gcd(orders, k) > 1; strata with poles
    in genus >= 1 are nonempty (their residue maps are onto).
    """
    sig.validate()
    if sig.genus == 0:
        if primitive_divisor(sig) != 1:
            return True, "every genus-zero differential of this type is a proper power"
        return False, "gcd of orders with k is 1"
    if not sig.has_poles():
        if sig.genus == 1 and sig.zeros in ((), (1, -1), (-1, 1)):
            return True, "torus strata with profile () or (1,-1) carry no primitive differential"
        return False, "finite-area stratum outside the torus exceptions"
    if sig.genus == 1 and not components(sig):
        return True, "no rotation number coprime to k"
    return False, "strata with poles in positive genus are nonempty"
