"""Checking a constructed surface against its claimed invariants."""

from __future__ import annotations

import itertools

from .numerics import Tolerance, DEFAULT_TOL
from .stratum import Signature, ResidueConfig, ComponentLabel
from .surface import FlatSurface, Analysis, analyze, SurfaceError


class WitnessMismatch(SurfaceError):
    pass


def _match_multiset(expected: list[complex], got: list[complex], tol: Tolerance,
                    scale: float) -> bool:
    """Bipartite matching of residue multisets within tolerance."""
    if len(expected) != len(got):
        return False
    n = len(expected)
    if n == 0:
        return True

    def close(a, b):
        return abs(a - b) <= max(tol.abs, tol.rel * max(abs(a), abs(b), scale))

    adj = [[j for j in range(n) if close(e, got[j])] for e in expected]
    match = [-1] * n

    def try_assign(i, seen):
        for j in adj[i]:
            if j in seen:
                continue
            seen.add(j)
            if match[j] == -1 or try_assign(match[j], seen):
                match[j] = i
                return True
        return False

    for i in range(n):
        if not try_assign(i, set()):
            return False
    return True


def verify_witness(surface: FlatSurface, sig: Signature,
                   res: ResidueConfig | tuple = (),
                   comp: ComponentLabel | None = None,
                   tol: Tolerance = DEFAULT_TOL,
                   expect_primitive: bool = True) -> Analysis:
    """Recompute all invariants of ``surface`` and compare with the
    claimed signature, residues, genus and (genus one) rotation number.

    Raises WitnessMismatch when anything differs; returns the analysis.
    """
    if not isinstance(res, ResidueConfig):
        res = ResidueConfig(tuple(res))
    an = analyze(surface, tol)
    if surface.k != sig.k:
        raise WitnessMismatch(f"k = {surface.k}, expected {sig.k}")
    if an.genus != sig.genus:
        raise WitnessMismatch(f"genus {an.genus}, expected {sig.genus}")
    zeros_got = sorted(an.zero_orders.values())
    zeros_want = sorted(sig.zeros)
    if zeros_got != zeros_want:
        raise WitnessMismatch(f"zero orders {zeros_got}, expected {zeros_want}")
    poles_got = sorted(an.end_orders.values())
    poles_want = sorted(sig.pole_magnitudes())
    if poles_got != poles_want:
        raise WitnessMismatch(f"pole orders {poles_got}, expected {poles_want}")

    # residues: per equal-order group, multiset match
    res.check_shape(sig)
    scale = max([abs(z) for z in res.entries] + [1e-30])
    expected_by_order: dict[int, list[complex]] = {}
    for i, b in enumerate(sig.poles_div):
        expected_by_order.setdefault(b, []).append(res.entries[i])
    for j in range(sig.simple_poles):
        expected_by_order.setdefault(sig.k, []).append(res.entries[sig.p + j])
    got_by_order: dict[int, list[complex]] = {}
    for root, r in an.end_residues.items():
        if r is None:
            continue
        got_by_order.setdefault(an.end_orders[root], []).append(r)
    if set(expected_by_order) != set(got_by_order):
        raise WitnessMismatch("pole order groups with residues differ")
    for order, exp in expected_by_order.items():
        if not _match_multiset(exp, got_by_order[order], tol, scale):
            raise WitnessMismatch(
                f"residues at order -{order} poles: expected {exp}, got {got_by_order[order]}"
            )

    if expect_primitive and an.holonomy_divisor != 1:
        raise WitnessMismatch(f"holonomy divisor {an.holonomy_divisor}, expected 1")

    if comp is not None and comp.kind == "rotation":
        from .loops import rotation_number

        rot = rotation_number(surface, an)
        if rot != comp.rho:
            raise WitnessMismatch(f"rotation number {rot}, expected {comp.rho}")
    return an
