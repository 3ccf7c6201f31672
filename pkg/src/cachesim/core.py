"""System configuration, exact combinatorics and the inactivity/demand model.

Users are numbered ``1..K`` and files ``1..N`` throughout the package.
Subsets of users are carried either as sorted tuples (the public label
form) or as integer bitmasks where user ``k`` is bit ``k - 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence, Union

import numpy as np

__all__ = [
    "Rational",
    "SystemConfig",
    "InactivityProfile",
    "DemandVector",
    "NO_REQUEST",
    "binomial",
    "as_fraction",
    "enumerate_subsets",
    "enumerate_masks",
    "colex_rank",
    "label_to_mask",
    "mask_to_label",
    "sample_inactivity",
    "worst_case_demand",
]

#: Exact rational type used for every closed-form quantity.
Rational = Fraction

#: Demand entry of an inactive user.  Never a file index.
NO_REQUEST = None

RationalLike = Union[Fraction, int, str, float]


def as_fraction(value: RationalLike) -> Fraction:
    """Coerce ``value`` to a Fraction.

    Strings go through ``Fraction(str)`` so ``"3/2"`` and ``"1.5"`` are both
    exact; floats are snapped to the closest fraction with denominator at
    most 10**12, so ``0.3`` becomes ``3/10``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**12)
    return Fraction(value)


def binomial(n: int, k: int) -> int:
    """C(n, k) as an exact integer, 0 when ``k < 0`` or ``k > n``."""
    if k < 0 or k > n or n < 0:
        return 0
    return math.comb(n, k)


@dataclass(frozen=True)
class SystemConfig:
    """Shared-link caching system: K users, N files of F bits, cache size M files."""

    K: int
    N: int
    M: Fraction
    F: int
    p: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "M", as_fraction(self.M))
        object.__setattr__(self, "p", as_fraction(self.p))
        if self.K < 2:
            raise ValueError(f"K must be at least 2, got {self.K}")
        if self.N <= self.K:
            raise ValueError(f"worst-case model needs N > K, got N={self.N}, K={self.K}")
        if not 0 <= self.M <= self.N:
            raise ValueError(f"M must lie in [0, N], got {self.M}")
        if self.F < 1:
            raise ValueError(f"F must be a positive bit count, got {self.F}")
        if not 0 <= self.p <= 1:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")

    @property
    def t(self) -> Fraction:
        """Cache replication parameter KM/N."""
        return self.K * self.M / self.N

    @property
    def q(self) -> Fraction:
        return self.M / self.N

    def with_F(self, F: int) -> "SystemConfig":
        return SystemConfig(self.K, self.N, self.M, F, self.p)


# -- subsets -----------------------------------------------------------------


def label_to_mask(label: Sequence[int]) -> int:
    mask = 0
    for user in label:
        mask |= 1 << (user - 1)
    return mask


def mask_to_label(mask: int) -> tuple[int, ...]:
    label = []
    user = 1
    while mask:
        if mask & 1:
            label.append(user)
        mask >>= 1
        user += 1
    return tuple(label)


def enumerate_masks(K: int, l: int) -> Iterator[int]:
    """All ``l``-subsets of ``[K]`` as bitmasks, in colexicographic order.

    Gosper's hack visits the integers with ``l`` set bits in increasing
    order, which is exactly colex order on the subsets.
    """
    if not 0 <= l <= K:
        raise ValueError(f"cardinality must lie in [0, {K}], got {l}")
    if l == 0:
        yield 0
        return
    mask = (1 << l) - 1
    limit = 1 << K
    while mask < limit:
        yield mask
        low = mask & -mask
        ripple = mask + low
        mask = (((ripple ^ mask) >> 2) // low) | ripple


def enumerate_subsets(K: int, l: int) -> Iterator[tuple[int, ...]]:
    """All ``l``-subsets of ``[K]`` as sorted tuples, in colex order."""
    for mask in enumerate_masks(K, l):
        yield mask_to_label(mask)


def colex_rank(label: Sequence[int]) -> int:
    """Position of ``label`` within :func:`enumerate_subsets` of its size."""
    return sum(math.comb(c - 1, i) for i, c in enumerate(sorted(label), start=1))


# -- inactivity and demand ---------------------------------------------------


@dataclass(frozen=True)
class InactivityProfile:
    """Which users are silent in the delivery phase."""

    K: int
    inactive: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "inactive", frozenset(self.inactive))
        bad = [k for k in self.inactive if not 1 <= k <= self.K]
        if bad:
            raise ValueError(f"inactive users {sorted(bad)} outside [1, {self.K}]")

    @classmethod
    def last(cls, K: int, I: int) -> "InactivityProfile":
        """Profile whose inactive set is the ``I`` highest-indexed users."""
        if not 0 <= I <= K:
            raise ValueError(f"I must lie in [0, {K}], got {I}")
        return cls(K, frozenset(range(K - I + 1, K + 1)))

    @property
    def I(self) -> int:
        return len(self.inactive)

    @property
    def J(self) -> int:
        return self.K - len(self.inactive)

    @property
    def active(self) -> tuple[int, ...]:
        return tuple(k for k in range(1, self.K + 1) if k not in self.inactive)

    @property
    def inactive_mask(self) -> int:
        return label_to_mask(self.inactive)

    @property
    def active_mask(self) -> int:
        return ((1 << self.K) - 1) & ~self.inactive_mask

    def is_active(self, user: int) -> bool:
        return user not in self.inactive


@dataclass(frozen=True)
class DemandVector:
    """Per-user requests; ``NO_REQUEST`` (None) marks an inactive user."""

    requests: tuple[Optional[int], ...]

    def __getitem__(self, user: int) -> Optional[int]:
        return self.requests[user - 1]

    def __len__(self) -> int:
        return len(self.requests)

    def matches(self, profile: InactivityProfile) -> bool:
        if len(self.requests) != profile.K:
            return False
        for user, request in enumerate(self.requests, start=1):
            if (request is NO_REQUEST) != (user in profile.inactive):
                return False
        return True


def sample_inactivity(config: SystemConfig, seed: Union[int, np.random.Generator]) -> InactivityProfile:
    """Each user goes inactive independently with probability ``config.p``."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    draws = rng.random(config.K)
    p = float(config.p)
    inactive = frozenset(k + 1 for k in range(config.K) if draws[k] < p)
    return InactivityProfile(config.K, inactive)


def worst_case_demand(config: SystemConfig, profile: InactivityProfile) -> DemandVector:
    """Active users request distinct files 1..J in ascending user order."""
    if profile.K != config.K:
        raise ValueError(f"profile is for K={profile.K}, config has K={config.K}")
    if config.N < profile.J:
        raise ValueError(f"worst-case demand needs N >= J, got N={config.N}, J={profile.J}")
    requests: list[Optional[int]] = []
    next_file = 1
    for user in range(1, config.K + 1):
        if user in profile.inactive:
            requests.append(NO_REQUEST)
        else:
            requests.append(next_file)
            next_file += 1
    return DemandVector(tuple(requests))
