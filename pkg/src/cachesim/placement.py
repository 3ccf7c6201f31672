"""Cache placement for the fixed-cardinality, weighted and decentralized schemes.

File contents come from a seeded :class:`Library`.  Bit strings are carried
as Python ints in MSB-first order: bit position 0 of a file is the most
significant bit of its integer value.  Centralized caches are views over the
library that only hand out fragments whose label contains the user; the
decentralized cache keeps an explicit per-(user, file) position sample.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Iterator, Mapping, Optional, Sequence, Union

import numpy as np

from cachesim.core import (
    RationalLike,
    SystemConfig,
    as_fraction,
    binomial,
    colex_rank,
    enumerate_masks,
    label_to_mask,
    mask_to_label,
)

__all__ = [
    "DivisibilityError",
    "WeightVector",
    "Library",
    "SubpacketizationPlan",
    "CentralizedCaches",
    "DecentralizedCaches",
    "man_placement",
    "weighted_placement",
    "decentralized_placement",
    "cache_usage",
    "minimal_file_size",
    "compatible_file_size",
    "bits_to_int",
    "int_to_bits",
]


class DivisibilityError(ValueError):
    """The file size cannot be split into whole-bit fragments."""

    def __init__(self, message: str, minimal_F: int):
        super().__init__(f"{message}; minimal valid F is {minimal_F}")
        self.minimal_F = minimal_F


def bits_to_int(bits: np.ndarray) -> int:
    """Pack a 0/1 array into an int, first element most significant."""
    n = len(bits)
    if n == 0:
        return 0
    packed = np.packbits(np.asarray(bits, dtype=np.uint8))
    return int.from_bytes(packed.tobytes(), "big") >> ((-n) % 8)


def int_to_bits(value: int, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros(0, dtype=np.uint8)
    nbytes = (n + 7) // 8
    raw = np.frombuffer((value << ((-n) % 8)).to_bytes(nbytes, "big"), dtype=np.uint8)
    return np.unpackbits(raw)[:n]


@dataclass(frozen=True)
class WeightVector:
    """Group weights beta^0..beta^K: the share of each file labelled by l-subsets."""

    beta: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", tuple(as_fraction(b) for b in self.beta))

    @classmethod
    def single(cls, K: int, l: int) -> "WeightVector":
        if not 0 <= l <= K:
            raise ValueError(f"cardinality {l} outside [0, {K}]")
        return cls(tuple(Fraction(int(i == l)) for i in range(K + 1)))

    @classmethod
    def from_mapping(cls, K: int, weights: Mapping[int, RationalLike]) -> "WeightVector":
        beta = [Fraction(0)] * (K + 1)
        for l, w in weights.items():
            if not 0 <= l <= K:
                raise ValueError(f"cardinality {l} outside [0, {K}]")
            beta[l] = as_fraction(w)
        return cls(tuple(beta))

    @property
    def K(self) -> int:
        return len(self.beta) - 1

    @property
    def alpha(self) -> tuple[Fraction, ...]:
        """Per-fragment sizes in file units, beta^l / C(K, l)."""
        K = self.K
        return tuple(b / binomial(K, l) for l, b in enumerate(self.beta))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(l for l, b in enumerate(self.beta) if b != 0)

    @property
    def replication(self) -> Fraction:
        """sum_l l * beta^l, the average label size."""
        return sum((l * b for l, b in enumerate(self.beta)), Fraction(0))

    def check(self, t: Optional[Fraction] = None) -> None:
        if any(b < 0 for b in self.beta):
            raise ValueError(f"negative weight in {self}")
        if sum(self.beta) != 1:
            raise ValueError(f"weights sum to {sum(self.beta)}, expected 1")
        if t is not None and self.replication > t:
            raise ValueError(f"cache constraint violated: sum l*beta^l = {self.replication} > t = {t}")

    def __str__(self) -> str:
        parts = [f"beta^{l}={b}" for l, b in enumerate(self.beta) if b != 0]
        return ", ".join(parts) if parts else "beta=0"


def minimal_file_size(weights: WeightVector) -> int:
    """Smallest F making every used fragment a whole number of bits."""
    F = 1
    for a in weights.alpha:
        if a:
            F = F * a.denominator // math.gcd(F, a.denominator)
    return F


def compatible_file_size(weights: WeightVector, F: int) -> int:
    """Smallest valid file size that is not below ``F``."""
    step = minimal_file_size(weights)
    return step * max(1, -(-F // step))


class Library:
    """N pseudo-random files of F bits, generated on first use."""

    def __init__(self, N: int, F: int, seed: int = 0):
        self.N = N
        self.F = F
        self.seed = seed
        self._bits: dict[int, np.ndarray] = {}
        self._values: dict[int, int] = {}

    def _check(self, n: int) -> None:
        if not 1 <= n <= self.N:
            raise IndexError(f"file {n} outside [1, {self.N}]")

    def bits(self, n: int) -> np.ndarray:
        self._check(n)
        if n not in self._bits:
            rng = np.random.default_rng([self.seed, 0, n])
            self._bits[n] = rng.integers(0, 2, self.F, dtype=np.uint8)
        return self._bits[n]

    def value(self, n: int) -> int:
        if n not in self._values:
            self._values[n] = bits_to_int(self.bits(n))
        return self._values[n]

    def segment(self, n: int, start: int, length: int) -> int:
        """Bits ``[start, start + length)`` of file ``n``."""
        if length == 0:
            return 0
        return (self.value(n) >> (self.F - start - length)) & ((1 << length) - 1)


@dataclass(frozen=True)
class SubpacketizationPlan:
    """How every file is cut into subset-labelled fragments.

    Groups are laid out by ascending label size and labels inside a group
    follow colex order, so the fragment of label ``tau`` in group ``l``
    starts at ``group_offsets[l] + colex_rank(tau) * fragment_bits[l]``.
    """

    scheme: str
    K: int
    N: int
    F: int
    weights: WeightVector
    fragment_bits: tuple[int, ...]
    group_offsets: tuple[int, ...]
    cardinality: Optional[int] = None

    @classmethod
    def build(cls, scheme: str, K: int, N: int, F: int, weights: WeightVector,
              cardinality: Optional[int] = None) -> "SubpacketizationPlan":
        sizes = []
        for l, a in enumerate(weights.alpha):
            bits = a * F
            if bits.denominator != 1:
                raise DivisibilityError(
                    f"group {l} fragment size {bits} bits is not an integer for F={F}",
                    compatible_file_size(weights, F),
                )
            sizes.append(int(bits))
        offsets = []
        pos = 0
        for l, size in enumerate(sizes):
            offsets.append(pos)
            pos += size * binomial(K, l)
        assert pos == F
        return cls(scheme, K, N, F, weights, tuple(sizes), tuple(offsets), cardinality)

    @property
    def groups(self) -> tuple[int, ...]:
        """Label sizes that carry a non-empty share of each file."""
        return tuple(l for l, size in enumerate(self.fragment_bits) if size > 0)

    def fragment_range(self, label: Sequence[int]) -> tuple[int, int]:
        l = len(label)
        size = self.fragment_bits[l]
        return self.group_offsets[l] + colex_rank(label) * size, size

    @cached_property
    def _starts(self) -> dict[int, int]:
        starts = {}
        for l in self.groups:
            size = self.fragment_bits[l]
            for rank, mask in enumerate(enumerate_masks(self.K, l)):
                starts[mask] = self.group_offsets[l] + rank * size
        return starts

    def fragment_start(self, mask: int) -> int:
        """First bit of the fragment whose label is the bitmask ``mask``."""
        return self._starts[mask]

    def label_masks(self) -> Iterator[int]:
        """Every used label as a bitmask, in layout order."""
        return iter(self._starts)

    def labels(self) -> Iterator[tuple[int, ...]]:
        """Every used label in layout order."""
        for mask in self._starts:
            yield mask_to_label(mask)

    def num_fragments(self) -> int:
        return sum(binomial(self.K, l) for l in self.groups)


class CentralizedCaches:
    """User ``k`` holds W_{n,tau} for every file n and every used label tau containing k."""

    def __init__(self, plan: SubpacketizationPlan, library: Library):
        if library.F != plan.F or library.N != plan.N:
            raise ValueError("library shape does not match the plan")
        self.plan = plan
        self.library = library

    def holds(self, user: int, n: int, label: Union[int, Sequence[int]]) -> bool:
        """Labels may be given as tuples or bitmasks."""
        mask = label if isinstance(label, int) else label_to_mask(label)
        used = self.plan.fragment_bits[mask.bit_count()] > 0
        return bool(mask >> (user - 1) & 1) and used and 1 <= n <= self.plan.N

    def fragment(self, user: int, n: int, label: Union[int, Sequence[int]]) -> int:
        mask = label if isinstance(label, int) else label_to_mask(label)
        if not self.holds(user, n, mask):
            raise KeyError(f"user {user} does not cache W_{n},{mask_to_label(mask)}")
        size = self.plan.fragment_bits[mask.bit_count()]
        return self.library.segment(n, self.plan.fragment_start(mask), size)

    def stored_bits(self, user: int) -> int:
        plan = self.plan
        per_file = sum(binomial(plan.K - 1, l - 1) * plan.fragment_bits[l] for l in plan.groups if l >= 1)
        return plan.N * per_file


class DecentralizedCaches:
    """Independent random bit samples: each user keeps floor(MF/N) bits of every file.

    Sampling is keyed by (seed, user, file), so a file's sample does not
    depend on N or on which other files were materialised.
    """

    def __init__(self, config: SystemConfig, seed: int, library: Library):
        if config.K > 64:
            raise ValueError("decentralized caches support at most 64 users")
        if library.F != config.F or library.N != config.N:
            raise ValueError("library shape does not match the config")
        self.config = config
        self.seed = seed
        self.library = library
        self.cached_bits = math.floor(config.M * config.F / config.N)
        self._positions: dict[tuple[int, int], np.ndarray] = {}
        self._owners: dict[int, np.ndarray] = {}
        self._pieces: dict[int, tuple[dict[int, tuple[int, int]], np.ndarray]] = {}

    def positions(self, user: int, n: int) -> np.ndarray:
        """Sorted bit positions of file ``n`` cached by ``user``."""
        key = (user, n)
        if key not in self._positions:
            F, m = self.config.F, self.cached_bits
            if m >= F:
                pos = np.arange(F)
            else:
                rng = np.random.default_rng([self.seed, 1, user, n])
                pos = np.sort(rng.choice(F, size=m, replace=False))
            self._positions[key] = pos
        return self._positions[key]

    def owners(self, n: int) -> np.ndarray:
        """Bitmask of caching users for every bit of file ``n``."""
        if n not in self._owners:
            owner = np.zeros(self.config.F, dtype=np.uint64)
            for user in range(1, self.config.K + 1):
                owner[self.positions(user, n)] |= np.uint64(1 << (user - 1))
            self._owners[n] = owner
        return self._owners[n]

    def _build_pieces(self, n: int) -> tuple[dict[int, tuple[int, int]], np.ndarray]:
        if n not in self._pieces:
            owner = self.owners(n)
            order = np.argsort(owner, kind="stable")
            masks, starts = np.unique(owner[order], return_index=True)
            F = self.config.F
            ordered = bits_to_int(self.library.bits(n)[order])
            starts = starts.tolist()
            ends = starts[1:] + [F]
            table = {}
            for mask, a, b in zip(masks.tolist(), starts, ends):
                size = b - a
                table[int(mask)] = ((ordered >> (F - b)) & ((1 << size) - 1), size)
            self._pieces[n] = (table, order)
        return self._pieces[n]

    def piece_table(self, n: int) -> dict[int, tuple[int, int]]:
        """Owner mask -> (value, bits) for every non-empty piece of file ``n``."""
        return self._build_pieces(n)[0]

    def piece(self, n: int, mask: int) -> tuple[int, int]:
        """V-piece of file ``n`` held by exactly the users in ``mask``: (value, bits)."""
        return self.piece_table(n).get(mask, (0, 0))

    def piece_sizes(self, n: int) -> dict[int, int]:
        return {mask: size for mask, (_, size) in self.piece_table(n).items()}

    def layout(self, n: int) -> np.ndarray:
        """Bit positions of file ``n`` ordered by owner mask, then position."""
        return self._build_pieces(n)[1]

    def holds(self, user: int, n: int, mask: int) -> bool:
        return bool(mask >> (user - 1) & 1)

    def cached_piece(self, user: int, n: int, mask: int) -> tuple[int, int]:
        if not self.holds(user, n, mask):
            raise KeyError(f"user {user} does not cache the piece of file {n} with owners {mask_to_label(mask)}")
        return self.piece(n, mask)

    def stored_bits(self, user: int) -> int:
        return self.config.N * self.cached_bits


def _library_for(config: SystemConfig, library: Optional[Library]) -> Library:
    return library if library is not None else Library(config.N, config.F)


def man_placement(config: SystemConfig, l: int,
                  library: Optional[Library] = None) -> tuple[SubpacketizationPlan, CentralizedCaches]:
    """Split each file into C(K, l) equal fragments; user k keeps those whose label has k."""
    K = config.K
    if not 1 <= l <= K:
        raise ValueError(f"cardinality must lie in [1, {K}], got {l}")
    pieces = binomial(K, l)
    if config.F % pieces:
        raise DivisibilityError(f"F={config.F} is not divisible by C({K},{l})={pieces}",
                                pieces * -(-config.F // pieces))
    weights = WeightVector.single(K, l)
    if Fraction(l) > config.t:
        raise ValueError(f"cardinality {l} needs cache N*l/K = {Fraction(config.N * l, K)} > M = {config.M}")
    plan = SubpacketizationPlan.build("fixed-l", K, config.N, config.F, weights, cardinality=l)
    return plan, CentralizedCaches(plan, _library_for(config, library))


def weighted_placement(config: SystemConfig, beta: Union[WeightVector, Sequence[RationalLike]],
                       library: Optional[Library] = None) -> tuple[SubpacketizationPlan, CentralizedCaches]:
    weights = beta if isinstance(beta, WeightVector) else WeightVector(tuple(beta))
    if weights.K != config.K:
        raise ValueError(f"weight vector has {len(weights.beta)} entries, expected K+1={config.K + 1}")
    weights.check(config.t)
    plan = SubpacketizationPlan.build("weighted", config.K, config.N, config.F, weights)
    return plan, CentralizedCaches(plan, _library_for(config, library))


def decentralized_placement(config: SystemConfig, seed: int,
                            library: Optional[Library] = None) -> DecentralizedCaches:
    return DecentralizedCaches(config, seed, _library_for(config, library))


def cache_usage(contents: Union[SubpacketizationPlan, CentralizedCaches, DecentralizedCaches],
                user: int) -> Fraction:
    """Cached volume of ``user`` in file units, exact."""
    if isinstance(contents, SubpacketizationPlan):
        contents = CentralizedCaches(contents, Library(contents.N, contents.F))
    F = contents.plan.F if isinstance(contents, CentralizedCaches) else contents.config.F
    return Fraction(contents.stored_bits(user), F)
