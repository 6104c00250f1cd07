"""Complex-plane numerics shared by every module.

All plane data is plain ``complex``; angles are radians.  Angle
quantization is always against the lattice (2*pi/k)*Z because every cone
angle and every gluing rotation of a k-differential lives there.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


class NumericsError(ValueError):
    pass


class ZeroInput(NumericsError):
    pass


class ZeroVector(NumericsError):
    pass


class LengthMismatch(NumericsError):
    pass


@dataclass(frozen=True)
class Tolerance:
    """Relative/absolute tolerance pair used by all verification code."""

    rel: float = 1e-9
    abs: float = 1e-12

    def __post_init__(self):
        if self.rel <= 0 or self.abs <= 0:
            raise NumericsError("tolerances must be positive")

    def close(self, a: complex, b: complex, scale: float = 0.0) -> bool:
        s = max(abs(a), abs(b), scale)
        return abs(a - b) <= max(self.abs, self.rel * s)


DEFAULT_TOL = Tolerance()


def nearly_zero(z: complex, tol: Tolerance = DEFAULT_TOL, scale: float = 1.0) -> bool:
    return abs(z) <= max(tol.abs, tol.rel * scale)


def kth_roots(z: complex, k: int) -> list[complex]:
    """All k solutions of w**k == z, sorted by argument in (-pi, pi].

    Deterministic: the same input always yields the same ordered list.
    """
    if k < 1:
        raise NumericsError("k must be >= 1")
    if z == 0:
        if k == 1:
            return [0j]
        raise ZeroInput("0 has no nontrivial k-th roots")
    r = abs(z) ** (1.0 / k)
    base = cmath.phase(z) / k
    roots = []
    for j in range(k):
        ang = base + TWO_PI * j / k
        # normalize into (-pi, pi]
        ang = math.remainder(ang, TWO_PI)
        if ang <= -math.pi:
            ang += TWO_PI
        roots.append((ang, cmath.rect(r, ang)))
    roots.sort(key=lambda p: p[0])
    return [w for _, w in roots]


def principal_root(z: complex, k: int) -> complex:
    """The k-th root with argument in (-pi/k, pi/k].

    For k >= 3 this root always has positive real part (or is the point
    used by the constructions needing Re > 0).
    """
    if z == 0:
        raise ZeroInput("0 has no distinguished root")
    ang = cmath.phase(z) / k
    return cmath.rect(abs(z) ** (1.0 / k), ang)


def root_with_positive_real(z: complex, k: int) -> complex:
    """Root maximizing real part; ties broken by maximal imaginary part."""
    roots = kth_roots(z, k)
    return max(roots, key=lambda w: (w.real, w.imag))


def proportional_up_to_scale(
    t1: tuple[complex, ...] | list[complex],
    t2: tuple[complex, ...] | list[complex],
    tol: Tolerance = DEFAULT_TOL,
) -> bool:
    """True iff t1 == lam * t2 for some lam != 0, within tol.

    Both tuples are normalized by their entry of maximal modulus, which
    keeps the test stable when some components are tiny.
    """
    if len(t1) != len(t2):
        raise LengthMismatch(f"lengths {len(t1)} vs {len(t2)}")
    if not t1:
        return True
    m2 = max(range(len(t2)), key=lambda i: abs(t2[i]))
    if t2[m2] == 0:
        raise ZeroInput("t2 must have a nonzero entry")
    if t1[m2] == 0:
        # lam would be 0; proportional only if t1 is the zero tuple and
        # t2 nonzero somewhere, which is not a C*-scaling.
        return all(abs(x) <= tol.abs for x in t1)
    lam = t1[m2] / t2[m2]
    scale = max(abs(x) for x in t1)
    return all(tol.close(a, lam * b, scale=scale) for a, b in zip(t1, t2))


def arg_sort(
    vs: list[complex],
    policy: str = "ascending",
    half_open: str = "(-pi,pi]",
) -> list[int]:
    """Stable permutation sorting vs by argument in the requested range.

    Ties are broken by decreasing modulus, then by input index, so the
    result is deterministic.  Raises ZeroVector on zero entries.
    """
    if policy not in ("ascending", "descending"):
        raise NumericsError(f"unknown policy {policy!r}")
    if half_open not in ("(-pi,pi]", "[-pi,pi)"):
        raise NumericsError(f"unknown range {half_open!r}")
    keys = []
    for i, v in enumerate(vs):
        if v == 0:
            raise ZeroVector(f"entry {i} is zero")
        a = cmath.phase(v)
        if half_open == "(-pi,pi]" and a <= -math.pi:
            a += TWO_PI
        if half_open == "[-pi,pi)" and a >= math.pi:
            a -= TWO_PI
        keys.append((a, -abs(v), i))
    order = sorted(range(len(vs)), key=lambda i: keys[i])
    if policy == "descending":
        order = sorted(range(len(vs)), key=lambda i: (-keys[i][0], keys[i][1], keys[i][2]))
    return order


def normalize_angle(a: float, lo: float = -math.pi) -> float:
    """Reduce a into [lo, lo + 2*pi)."""
    return (a - lo) % TWO_PI + lo


def angle_in_01(a: float) -> float:
    """Reduce a into (0, 2*pi]."""
    r = a % TWO_PI
    if r == 0.0:
        r = TWO_PI
    return r


def quantize_angle(a: float, k: int, slack: float = 1e-6) -> int:
    """Snap a to the nearest integer multiple of 2*pi/k.

    Returns the integer multiple; raises NumericsError if the deviation
    exceeds ``slack * 2*pi`` (angles of verified surfaces are discrete).
    """
    step = TWO_PI / k
    n = round(a / step)
    if abs(a - n * step) > slack * TWO_PI:
        raise NumericsError(f"angle {a!r} is not a multiple of 2*pi/{k}")
    return n


def turn_angle(u: complex, v: complex) -> float:
    """Signed angle in (-pi, pi] rotating direction u onto direction v."""
    if u == 0 or v == 0:
        raise ZeroVector("directions must be nonzero")
    return cmath.phase(v / u)


def interior_angle(p: complex, q: complex) -> float:
    """Interior angle at a corner, region to the left of the traversal.

    ``p`` is the incoming travel direction, ``q`` the outgoing one.  The
    value lies in (0, 2*pi]; a straight continuation gives pi, an exact
    backtrack (slit tip seen from inside) gives 2*pi.
    """
    a = cmath.phase(-p) - cmath.phase(q)
    return angle_in_01(a)
