"""Coded delivery: build the server transcript, decode at users, measure load."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from cachesim.core import (
    DemandVector,
    InactivityProfile,
    enumerate_masks,
    label_to_mask,
    mask_to_label,
)
from cachesim.placement import (
    CentralizedCaches,
    DecentralizedCaches,
    SubpacketizationPlan,
    int_to_bits,
)

__all__ = [
    "DecodeError",
    "Packet",
    "Transcript",
    "centralized_delivery",
    "weighted_delivery",
    "decentralized_delivery_I",
    "decentralized_delivery_II",
    "decode",
    "measured_load",
    "side_information_violations",
    "format_label",
]

Contributor = tuple[int, int, int]


class DecodeError(RuntimeError):
    """A user could not rebuild its file; ``missing`` names the fragment labels."""

    def __init__(self, user: int, missing: Sequence[tuple[int, ...]]):
        self.user = user
        self.missing = list(missing)
        shown = ", ".join(format_label(m) for m in self.missing[:10])
        more = "" if len(self.missing) <= 10 else f" (+{len(self.missing) - 10} more)"
        super().__init__(f"user {user} is missing fragments {shown}{more}")


def format_label(label: Sequence[int]) -> str:
    return ".".join(str(k) for k in label) if label else "-"


@dataclass(frozen=True)
class Packet:
    """One multicast transmission.

    ``mask`` is the user set S as a bitmask and ``contributors`` lists
    (user, file, label mask) for every piece XORed in.  The payload is a run
    of blocks; ``offsets`` gives the block each contributor sits in (None
    means a single block).  Inside a block shorter pieces are zero-padded at
    the end up to the block width.
    """

    mask: int
    payload: int
    nbits: int
    contributors: tuple[Contributor, ...]
    offsets: Optional[tuple[int, ...]] = None

    @property
    def label(self) -> tuple[int, ...]:
        return mask_to_label(self.mask)

    def contributor_labels(self) -> list[tuple[int, int, tuple[int, ...]]]:
        return [(u, n, mask_to_label(tau)) for u, n, tau in self.contributors]

    @cached_property
    def _blocks(self) -> list[tuple[int, int, list[int]]]:
        if self.offsets is None:
            every = list(range(len(self.contributors)))
            return [(0, self.nbits, every)] * len(self.contributors)
        starts = sorted(set(self.offsets))
        ends = dict(zip(starts, starts[1:] + [self.nbits]))
        groups: dict[int, list[int]] = {}
        for j, o in enumerate(self.offsets):
            groups.setdefault(o, []).append(j)
        return [(o, ends[o] - o, groups[o]) for o in self.offsets]

    def block_of(self, i: int) -> tuple[int, int]:
        """(offset, width) of the block holding contributor ``i``."""
        offset, width, _ = self._blocks[i]
        return offset, width

    def block_mates(self, i: int) -> list[int]:
        """Indices of the contributors sharing a block with contributor ``i``."""
        return self._blocks[i][2]

    def payload_bytes(self) -> bytes:
        nbytes = (self.nbits + 7) // 8
        return (self.payload << ((-self.nbits) % 8)).to_bytes(nbytes, "big")


@dataclass
class Transcript:
    scheme: str
    F: int
    packets: list[Packet] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._by_label: Optional[dict[int, Packet]] = None
        self._by_piece: Optional[dict[Contributor, tuple[Packet, int]]] = None

    @property
    def total_bits(self) -> int:
        return sum(p.nbits for p in self.packets)

    @property
    def load(self) -> Fraction:
        return Fraction(self.total_bits, self.F)

    def __len__(self) -> int:
        return len(self.packets)

    def packet_for(self, label: Union[int, Sequence[int]]) -> Optional[Packet]:
        """Packet addressed to the user set ``label`` (a tuple or a bitmask)."""
        if self._by_label is None:
            self._by_label = {p.mask: p for p in self.packets}
        mask = label if isinstance(label, int) else label_to_mask(label)
        return self._by_label.get(mask)

    def locate(self, user: int, n: int, label: Union[int, Sequence[int]]) -> Optional[tuple[Packet, int]]:
        """Packet carrying the piece of file ``n`` labelled ``label`` for ``user``, with its index."""
        if self._by_piece is None:
            self._by_piece = {c: (p, i) for p in self.packets for i, c in enumerate(p.contributors)}
        mask = label if isinstance(label, int) else label_to_mask(label)
        return self._by_piece.get((user, n, mask))

    def digest(self) -> str:
        """SHA-256 over the payloads, each MSB-first and padded to a byte."""
        h = hashlib.sha256()
        for p in self.packets:
            h.update(p.payload_bytes())
        return h.hexdigest()

    def served_pieces(self) -> list[tuple[int, int, tuple[int, ...]]]:
        return sorted(c for p in self.packets for c in p.contributor_labels())

    def dump(self) -> str:
        lines = []
        for p in self.packets:
            contrib = ",".join(f"{u}:{n}:{format_label(lab)}" for u, n, lab in p.contributor_labels())
            lines.append(f"S={format_label(p.label)};len={p.nbits};contrib={contrib}")
        lines.append(f"sha256={self.digest()}")
        return "\n".join(lines) + "\n"


def measured_load(transcript: Transcript, F: Optional[int] = None) -> Fraction:
    return Fraction(transcript.total_bits, transcript.F if F is None else F)


def _check_demand(demand: DemandVector, profile: InactivityProfile) -> None:
    if not demand.matches(profile):
        raise ValueError("demand vector does not match the inactivity profile")


def _members(mask: int) -> list[int]:
    users = []
    while mask:
        low = mask & -mask
        users.append(low.bit_length())
        mask ^= low
    return users


# -- centralized ---------------------------------------------------------------


def _coded_delivery(plan: SubpacketizationPlan, caches: CentralizedCaches, demand: DemandVector,
                    profile: InactivityProfile, scheme: str) -> Transcript:
    _check_demand(demand, profile)
    K, I = plan.K, profile.I
    active = profile.active_mask
    library = caches.library
    transcript = Transcript(scheme, plan.F)
    for l in sorted(plan.groups, reverse=True):
        if l == K:
            continue  # cached everywhere, nothing to send
        size = plan.fragment_bits[l]
        for S in enumerate_masks(K, l + 1):
            if l + 1 <= I and not S & active:
                continue
            payload = 0
            contributors = []
            for k in _members(S & active):
                tau = S & ~(1 << (k - 1))
                payload ^= library.segment(demand[k], plan.fragment_start(tau), size)
                contributors.append((k, demand[k], tau))
            if contributors:
                transcript.packets.append(Packet(S, payload, size, tuple(contributors)))
    return transcript


def centralized_delivery(plan: SubpacketizationPlan, caches: CentralizedCaches, demand: DemandVector,
                         profile: InactivityProfile) -> Transcript:
    """XOR delivery over all (l+1)-sets, skipping sets of inactive users only."""
    if plan.scheme != "fixed-l":
        raise ValueError(f"centralized_delivery needs a fixed-l plan, got {plan.scheme}")
    return _coded_delivery(plan, caches, demand, profile, "centralized-fixed")


def weighted_delivery(plan: SubpacketizationPlan, caches: CentralizedCaches, demand: DemandVector,
                      profile: InactivityProfile) -> Transcript:
    """Run the coded delivery separately for every weighted fragment group.

    Group 0 fragments are cached nowhere; their packets are singleton sets,
    i.e. plain unicasts of W_{d_k, empty} to each active user.
    """
    if plan.scheme != "weighted":
        raise ValueError(f"weighted_delivery needs a weighted plan, got {plan.scheme}")
    return _coded_delivery(plan, caches, demand, profile, "centralized-weighted")


# -- decentralized -------------------------------------------------------------

Tables = dict[int, dict[int, tuple[int, int]]]


def _xor_block(tables: Tables, demand: DemandVector, S: int, senders: int) -> tuple[int, int, list[Contributor]]:
    """XOR of V_{k, S minus k} over the users k in ``senders``: (payload, width, contributors)."""
    pieces = []
    width = 0
    rest = senders
    while rest:
        low = rest & -rest
        rest ^= low
        k = low.bit_length()
        n = demand[k]
        tau = S ^ low
        entry = tables[n].get(tau)
        if entry is not None and entry[1]:
            pieces.append((k, n, tau, entry[0], entry[1]))
            if entry[1] > width:
                width = entry[1]
    payload = 0
    for *_, value, size in pieces:
        payload ^= value << (width - size)
    return payload, width, [(k, n, tau) for k, n, tau, _, _ in pieces]


def _demanded_tables(caches: DecentralizedCaches, demand: DemandVector) -> Tables:
    return {n: caches.piece_table(n) for n in demand.requests if n is not None}


def decentralized_delivery_I(caches: DecentralizedCaches, demand: DemandVector,
                             profile: InactivityProfile) -> Transcript:
    """Loop s = K..1 over all s-sets of users, skipping sets with no active member."""
    _check_demand(demand, profile)
    K, I = caches.config.K, profile.I
    active = profile.active_mask
    tables = _demanded_tables(caches, demand)
    transcript = Transcript("decentralized-I", caches.config.F)
    for s in range(K, 0, -1):
        for S in enumerate_masks(K, s):
            if s <= I and not S & active:
                continue
            payload, width, contributors = _xor_block(tables, demand, S, S & active)
            if contributors:
                transcript.packets.append(Packet(S, payload, width, tuple(contributors)))
    return transcript


def _spread(mask: int, users: Sequence[int]) -> int:
    """Map a bitmask over positions of ``users`` to a bitmask over user ids."""
    out = 0
    i = 0
    while mask:
        if mask & 1:
            out |= 1 << (users[i] - 1)
        mask >>= 1
        i += 1
    return out


def decentralized_delivery_II(caches: DecentralizedCaches, demand: DemandVector,
                              profile: InactivityProfile) -> Transcript:
    """Loop s = J..1 over sets S of active users only.

    The bits of d_k held by exactly S minus k among the active users are
    split by the inactive users U that also hold them.  The packet for S
    carries one XOR block per pattern U (ascending size, colex), so the
    served pieces and the bit count match Delivery I while every label is a
    set of active users.
    """
    _check_demand(demand, profile)
    active_users = profile.active
    inactive_users = sorted(profile.inactive)
    J, I = profile.J, profile.I
    tables = _demanded_tables(caches, demand)
    patterns = [_spread(U, inactive_users) for u in range(I + 1) for U in enumerate_masks(I, u)]
    transcript = Transcript("decentralized-II", caches.config.F)
    for s in range(J, 0, -1):
        for local in enumerate_masks(J, s):
            S = _spread(local, active_users)
            payload, nbits = 0, 0
            contributors: list[Contributor] = []
            offsets: list[int] = []
            for U in patterns:
                block, width, members = _xor_block(tables, demand, S | U, S)
                if not members:
                    continue
                payload = (payload << width) | block
                contributors.extend(members)
                offsets.extend([nbits] * len(members))
                nbits += width
            if contributors:
                single = len(set(offsets)) == 1
                transcript.packets.append(
                    Packet(S, payload, nbits, tuple(contributors), None if single else tuple(offsets)))
    return transcript


# -- decoding ------------------------------------------------------------------


def _recover(packet: Packet, index: int, size: int, user: int, lookup) -> int:
    """Strip the other pieces of the block from ``packet`` and return piece ``index``."""
    if packet.offsets is None:
        width, acc = packet.nbits, packet.payload
        mates = packet.contributors
    else:
        offset, width = packet.block_of(index)
        acc = (packet.payload >> (packet.nbits - offset - width)) & ((1 << width) - 1)
        mates = [packet.contributors[j] for j in packet.block_mates(index)]
    for j, nj, tau in mates:
        if j != user:
            value, other = lookup(nj, tau)
            acc ^= value << (width - other)
    return acc >> (width - size)


def _decode_centralized(user: int, caches: CentralizedCaches, transcript: Transcript,
                        plan: SubpacketizationPlan, n: int) -> np.ndarray:
    def lookup(nj, tau):
        return caches.fragment(user, nj, tau), plan.fragment_bits[tau.bit_count()]

    bit = 1 << (user - 1)
    value = 0
    missing = []
    for tau in plan.label_masks():
        size = plan.fragment_bits[tau.bit_count()]
        if tau & bit:
            fragment = caches.fragment(user, n, tau)
        else:
            found = transcript.locate(user, n, tau)
            if found is None:
                missing.append(mask_to_label(tau))
                continue
            fragment = _recover(*found, size, user, lookup)
        value = (value << size) | fragment
    if missing:
        raise DecodeError(user, missing)
    return int_to_bits(value, plan.F)


def _decode_decentralized(user: int, caches: DecentralizedCaches, transcript: Transcript,
                          n: int) -> np.ndarray:
    bit = 1 << (user - 1)
    tables: Tables = {}

    def lookup(nj, tau):
        if not tau & bit:
            raise KeyError(f"user {user} lacks side information {mask_to_label(tau)} of file {nj}")
        table = tables.get(nj)
        if table is None:
            table = tables[nj] = caches.piece_table(nj)
        return table.get(tau, (0, 0))

    value = 0
    missing = []
    for mask, (piece, size) in sorted(caches.piece_table(n).items()):
        if not mask & bit:
            found = transcript.locate(user, n, mask)
            if found is None:
                missing.append(mask_to_label(mask))
                continue
            piece = _recover(*found, size, user, lookup)
        value = (value << size) | piece
    if missing:
        raise DecodeError(user, missing)
    out = np.empty(caches.config.F, dtype=np.uint8)
    out[caches.layout(n)] = int_to_bits(value, caches.config.F)
    return out


def decode(user: int, caches: Union[CentralizedCaches, DecentralizedCaches], transcript: Transcript,
           plan: Optional[SubpacketizationPlan], demand: DemandVector) -> np.ndarray:
    """Rebuild the file requested by ``user`` as an array of F bits.

    Pieces the user caches are read from its own cache; everything else
    comes from the transcript after XORing out cached side information.
    ``plan`` is ignored (may be None) for decentralized caches.
    """
    n = demand[user]
    if n is None:
        raise ValueError(f"user {user} is inactive and requested nothing")
    if isinstance(caches, DecentralizedCaches):
        return _decode_decentralized(user, caches, transcript, n)
    return _decode_centralized(user, caches, transcript, plan if plan is not None else caches.plan, n)


def side_information_violations(transcript: Transcript,
                                caches: Union[CentralizedCaches, DecentralizedCaches]) -> list[tuple]:
    """(packet label, recipient, foreign piece) triples where the recipient lacks the piece.

    Only pieces sharing a block with the recipient's own piece count.
    """
    bad = []
    for packet in transcript.packets:
        for i, (k, _, _) in enumerate(packet.contributors):
            for j in packet.block_mates(i):
                _, nj, tau = packet.contributors[j]
                if j != i and not caches.holds(k, nj, tau):
                    bad.append((packet.label, k, (packet.contributors[j][0], nj, mask_to_label(tau))))
    return bad
