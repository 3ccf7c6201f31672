"""Closed-form worst-case backhaul loads and the gap functions between schemes.

Centralized formulas return exact Fractions.  Decentralized loads contain
(1 - q)^J terms and are returned as floats, evaluated exactly first and
rounded once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from cachesim.core import RationalLike, as_fraction, binomial
from cachesim.placement import WeightVector

__all__ = [
    "LoadCurve",
    "load_fixed",
    "load_weighted",
    "load_decentralized",
    "load_decentralized_exact",
    "load_ideal_man",
    "load_ideal_man_floor",
    "load_unicast",
    "gain_cd",
    "relative_gain_cd",
    "gap_vs_ideal",
    "gap_difference",
    "classify_gap_start",
    "POSITIVE",
    "NEGATIVE",
]

POSITIVE = "positive"
NEGATIVE = "negative"

Load = Union[Fraction, float]


@dataclass(frozen=True)
class LoadCurve:
    scheme: str
    variable: str
    points: tuple[tuple[Fraction, Load], ...]

    def __post_init__(self) -> None:
        xs = [x for x, _ in self.points]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("curve abscissae must be strictly increasing")
        if any(y < 0 for _, y in self.points):
            raise ValueError("loads must be nonnegative")


def _integer_t(K: int, N: int, M: RationalLike) -> int:
    t = K * as_fraction(M) / N
    if t.denominator != 1:
        raise ValueError(f"t = KM/N = {t} is not an integer")
    return int(t)


def load_fixed(K: int, N: int, M: RationalLike, l: int, I: int) -> Fraction:
    """Load of the fixed-cardinality scheme with label size ``l`` and ``I`` inactive users.

    ``N`` and ``M`` do not enter the formula; they are accepted so call
    sites read like the other load functions.
    """
    if not 0 <= l <= K:
        raise ValueError(f"l must lie in [0, {K}], got {l}")
    if not 0 <= I <= K:
        raise ValueError(f"I must lie in [0, {K}], got {I}")
    if l + 1 > I:
        return Fraction(binomial(K, l + 1), binomial(K, l))
    return Fraction(binomial(K, l + 1) - binomial(I, l + 1), binomial(K, l))


def load_weighted(K: int, I: int, beta: Union[WeightVector, Sequence[RationalLike]]) -> Fraction:
    """Objective of the multi-cardinality LP at the weight vector ``beta``."""
    weights = beta if isinstance(beta, WeightVector) else WeightVector(tuple(beta))
    total = Fraction(0)
    for l in range(K):
        b = weights.beta[l]
        if b:
            total += b * (Fraction(K - l, l + 1) - Fraction(binomial(I, l + 1), binomial(K, l)))
    return total


def load_decentralized_exact(K: int, M: RationalLike, N: int, I: int) -> Fraction:
    q = as_fraction(M) / N
    J = K - I
    if q == 0:
        return Fraction(J)
    if q == 1:
        return Fraction(0)
    return (1 - q) / q * (1 - (1 - q) ** J)


def load_decentralized(K: int, M: RationalLike, N: int, I: int) -> float:
    """(1-q)/q * (1 - (1-q)^(K-I)) with q = M/N; limits K-I at q=0 and 0 at q=1."""
    return float(load_decentralized_exact(K, M, N, I))


def load_ideal_man(K: int, N: int, M: RationalLike, I: int) -> Fraction:
    """Rational MAN load for the J = K - I active users, as if known at placement."""
    J = K - I
    if J < 1:
        raise ValueError("ideal MAN load needs at least one active user")
    q = as_fraction(M) / N
    return J * (1 - q) / (1 + J * q)


def load_ideal_man_floor(K: int, N: int, M: RationalLike, I: int) -> Fraction:
    """Ideal MAN load realised with the integer label size floor(JM/N)."""
    J = K - I
    if J < 1:
        raise ValueError("ideal MAN load needs at least one active user")
    l = math.floor(J * as_fraction(M) / N)
    return Fraction(binomial(J, l + 1), binomial(J, l))


def load_unicast(K: int, N: int, M: RationalLike, I: int) -> Fraction:
    return (K - I) * (1 - as_fraction(M) / N)


def gain_cd(K: int, N: int, M: RationalLike, I: int) -> float:
    """Decentralized minus centralized (l = t) load."""
    t = _integer_t(K, N, M)
    return load_decentralized(K, M, N, I) - float(load_fixed(K, N, M, t, I))


def relative_gain_cd(K: int, N: int, M: RationalLike, I: int) -> float:
    return gain_cd(K, N, M, I) / load_decentralized(K, M, N, I)


def gap_vs_ideal(K: int, N: int, M: RationalLike, I: int) -> Fraction:
    """Centralized (l = t) load minus the ideal MAN load, exact."""
    t = _integer_t(K, N, M)
    return load_fixed(K, N, M, t, I) - load_ideal_man(K, N, M, I)


def gap_difference(K: int, t: int, I: int) -> Fraction:
    """First difference gap(I + 1) - gap(I) at M/N = t/K; gap(K) is 0."""
    N, M = K, Fraction(t)  # only the ratio M/N enters
    following = gap_vs_ideal(K, N, M, I + 1) if I + 1 < K else Fraction(0)
    return following - gap_vs_ideal(K, N, M, I)


def classify_gap_start(K: int, t: int) -> str:
    """Sign of the gap's first difference at I = t + 1, as tabulated for (K, t)."""
    if K < 3 or not 1 <= t <= K - 2:
        raise ValueError(f"table covers K >= 3 and t in [1, K-2], got K={K}, t={t}")
    if t == K - 2:
        return NEGATIVE
    if K >= 9:
        return POSITIVE
    if 6 <= K <= 8:
        return POSITIVE if t <= K - 4 else NEGATIVE
    if 4 <= K <= 5:
        return NEGATIVE
    raise ValueError(f"no table entry for K={K}, t={t}")
