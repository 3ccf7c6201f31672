"""Subpacketization optimisation: fixed label size and the multi-cardinality LP.

The LP has two structural constraints (weights sum to one, average label
size at most t), so its vertices carry at most two nonzero weights.
:func:`solve_lp_vertex_oracle` enumerates all of them exactly and serves as
an independent check on the closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from cachesim import analytics
from cachesim.core import RationalLike, as_fraction, binomial
from cachesim.placement import WeightVector

__all__ = [
    "LpSolution",
    "CoefficientVector",
    "optimal_fixed_cardinality",
    "scan_fixed_cardinality",
    "coefficient_vector",
    "closed_form_weights",
    "solve_lp_closed_form",
    "lp_vertices",
    "oracle_minimizers",
    "solve_lp_vertex_oracle",
    "canonical_key",
    "ORACLE_MAX_K",
]

ORACLE_MAX_K = 20


@dataclass(frozen=True)
class LpSolution:
    weights: WeightVector
    objective: Fraction
    provenance: str


@dataclass(frozen=True)
class CoefficientVector:
    """Objective coefficients c^l of beta^l, l = 0..K-1, with their differences."""

    K: int
    I: int
    c: tuple[Fraction, ...]

    @property
    def d(self) -> tuple[Fraction, ...]:
        return tuple(b - a for a, b in zip(self.c, self.c[1:]))

    @property
    def e(self) -> tuple[Fraction, ...]:
        d = self.d
        return tuple(b - a for a, b in zip(d, d[1:]))

    def inactive_piece(self, l: int) -> Fraction:
        """[C(K,l+1) - C(I,l+1)] / C(K,l): the coefficient formula for l <= I-1."""
        return Fraction(binomial(self.K, l + 1) - binomial(self.I, l + 1), binomial(self.K, l))

    def plain_piece(self, l: int) -> Fraction:
        """(K-l)/(l+1): the coefficient formula for l >= I."""
        return Fraction(self.K - l, l + 1)


def _t(K: int, N: int, M: RationalLike) -> Fraction:
    return K * as_fraction(M) / N


def optimal_fixed_cardinality(K: int, N: int, M: RationalLike, I: int) -> int:
    """Best single label size: floor(KM/N), whatever the number of inactive users."""
    t = _t(K, N, M)
    if t < 1:
        raise ValueError(f"t = KM/N = {t} < 1 leaves no feasible label size")
    if not 1 <= I <= K - 1:
        raise ValueError(f"I must lie in [1, {K - 1}], got {I}")
    return min(math.floor(t), K)


def scan_fixed_cardinality(K: int, N: int, M: RationalLike, I: int) -> tuple[int, dict[int, Fraction]]:
    """Exhaustive argmin of the fixed-l load over feasible l; ties go to the larger l."""
    t = _t(K, N, M)
    feasible = range(1, min(math.floor(t), K - 1) + 1)
    loads = {l: analytics.load_fixed(K, N, M, l, I) for l in feasible}
    if not loads:
        raise ValueError(f"no feasible label size for t = {t}")
    best = min(loads.values())
    return max(l for l, v in loads.items() if v == best), loads


def coefficient_vector(K: int, I: int) -> CoefficientVector:
    if not 1 <= I <= K - 1:
        raise ValueError(f"I must lie in [1, {K - 1}], got {I}")
    c = tuple(
        Fraction(binomial(K, l + 1), binomial(K, l)) - Fraction(binomial(I, l + 1), binomial(K, l))
        for l in range(K)
    )
    return CoefficientVector(K, I, c)


def closed_form_weights(K: int, t: RationalLike) -> WeightVector:
    """Two adjacent weights around t (one weight when t is an integer), 0 <= t <= K."""
    t = as_fraction(t)
    if not 0 <= t <= K:
        raise ValueError(f"replication t = {t} outside [0, {K}]")
    if t.denominator == 1:
        return WeightVector.single(K, int(t))
    lo, hi = math.floor(t), math.ceil(t)
    eta = hi - t
    return WeightVector.from_mapping(K, {lo: eta, hi: 1 - eta})


def solve_lp_closed_form(K: int, N: int, M: RationalLike, I: int) -> LpSolution:
    """beta^t = 1 for integer t, else eta = ceil(t) - t on floor(t) and 1 - eta on ceil(t)."""
    t = _t(K, N, M)
    if not 0 < t < K:
        raise ValueError(f"closed form needs 0 < t < K, got t = {t}")
    if not 1 <= I <= K - 1:
        raise ValueError(f"I must lie in [1, {K - 1}], got {I}")
    weights = closed_form_weights(K, t)
    return LpSolution(weights, analytics.load_weighted(K, I, weights), "closed-form")


def lp_vertices(K: int, t: RationalLike, tight_only: bool = False) -> list[WeightVector]:
    """Every vertex of {sum beta = 1, sum l*beta <= t, beta >= 0}.

    Single-index points beta^l = 1 need l <= t (tight when l == t); pairs
    l1 < t < l2 sit on the cache constraint with weights fixed by it.
    """
    t = as_fraction(t)
    if not 0 <= t <= K:
        raise ValueError(f"infeasible replication t = {t} for K = {K}")
    vertices = []
    for l in range(K + 1):
        if l <= t and (l == t or not tight_only):
            vertices.append(WeightVector.single(K, l))
    for l1 in range(K + 1):
        if l1 >= t:
            break
        for l2 in range(l1 + 1, K + 1):
            if l2 <= t:
                continue
            span = l2 - l1
            vertices.append(WeightVector.from_mapping(K, {l1: (l2 - t) / span, l2: (t - l1) / span}))
    return vertices


def canonical_key(weights: WeightVector) -> tuple:
    """Tie-break order: fewest nonzero weights, then lowest indices."""
    support = weights.support
    return len(support), support


def oracle_minimizers(K: int, N: int, M: RationalLike, I: int) -> tuple[Fraction, list[WeightVector]]:
    """Minimum objective over all vertices and every vertex attaining it, canonical first."""
    if K > ORACLE_MAX_K:
        raise ValueError(f"vertex oracle is limited to K <= {ORACLE_MAX_K}")
    t = _t(K, N, M)
    scored = [(analytics.load_weighted(K, I, v), v) for v in lp_vertices(K, t)]
    best = min(obj for obj, _ in scored)
    winners = sorted((v for obj, v in scored if obj == best), key=canonical_key)
    return best, winners


def solve_lp_vertex_oracle(K: int, N: int, M: RationalLike, I: int) -> LpSolution:
    best, winners = oracle_minimizers(K, N, M, I)
    return LpSolution(winners[0], best, "vertex-oracle")
