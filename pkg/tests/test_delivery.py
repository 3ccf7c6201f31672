from __future__ import annotations

import itertools
import math
import re
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cachesim import analytics
from cachesim.core import InactivityProfile, SystemConfig, colex_rank, label_to_mask, worst_case_demand
from cachesim.delivery import (
    DecodeError,
    Packet,
    Transcript,
    centralized_delivery,
    decentralized_delivery_I,
    decentralized_delivery_II,
    decode,
    measured_load,
    side_information_violations,
    weighted_delivery,
)
from cachesim.optimizer import closed_form_weights
from cachesim.placement import (
    Library,
    WeightVector,
    compatible_file_size,
    decentralized_placement,
    man_placement,
    weighted_placement,
)


def fixed_setup(K, N, M, l, F, inactive, seed=0):
    cfg = SystemConfig(K, N, M, F)
    lib = Library(N, F, seed)
    plan, caches = man_placement(cfg, l, lib)
    prof = InactivityProfile(K, frozenset(inactive))
    demand = worst_case_demand(cfg, prof)
    return plan, caches, lib, prof, demand


def decodes_all(caches, transcript, plan, prof, demand, lib):
    return all(np.array_equal(decode(k, caches, transcript, plan, demand), lib.bits(demand[k]))
               for k in prof.active)


class TestCentralized:
    def test_lone_active_user(self):
        plan, caches, lib, prof, demand = fixed_setup(4, 8, 4, 2, 600, {2, 3, 4})
        tr = centralized_delivery(plan, caches, demand, prof)
        assert [p.label for p in tr.packets] == [(1, 2, 3), (1, 2, 4), (1, 3, 4)]
        assert measured_load(tr) == Fraction(1, 2)
        # every missing label tau of user 1 has its tau + {1} packet
        for tau in itertools.combinations((2, 3, 4), 2):
            assert tr.packet_for((1,) + tau) is not None
        assert decodes_all(caches, tr, plan, prof, demand, lib)

    @pytest.mark.parametrize("inactive,load", [((), Fraction(2, 3)), ((4,), Fraction(2, 3)), ((3, 4), Fraction(2, 3)), ((1, 2, 3), Fraction(1, 2))])
    def test_loads(self, inactive, load):
        plan, caches, lib, prof, demand = fixed_setup(4, 8, 4, 2, 600, inactive)
        tr = centralized_delivery(plan, caches, demand, prof)
        assert tr.load == load
        assert decodes_all(caches, tr, plan, prof, demand, lib)

    def test_payloads_match_independent_xor(self):
        K, l, F = 5, 2, 1000
        plan, caches, lib, prof, demand = fixed_setup(K, 10, 4, l, F, {2})
        size = F // math.comb(K, l)
        tr = centralized_delivery(plan, caches, demand, prof)
        for p in tr.packets:
            expected = 0
            for k in p.label:
                if k in prof.active:
                    tau = tuple(u for u in p.label if u != k)
                    start = colex_rank(tau) * size
                    expected ^= int("".join(map(str, lib.bits(demand[k])[start:start + size])), 2)
            assert p.payload == expected and p.nbits == size

    def test_everything_cached(self):
        plan, caches, lib, prof, demand = fixed_setup(3, 4, 4, 3, 30, ())
        tr = centralized_delivery(plan, caches, demand, prof)
        assert len(tr) == 0 and measured_load(tr) == 0
        assert decodes_all(caches, tr, plan, prof, demand, lib)

    def test_missing_packet_names_label(self):
        plan, caches, lib, prof, demand = fixed_setup(4, 8, 4, 2, 600, {2, 3, 4})
        tr = centralized_delivery(plan, caches, demand, prof)
        broken = Transcript(tr.scheme, tr.F, [p for p in tr.packets if p.label != (1, 3, 4)])
        with pytest.raises(DecodeError) as err:
            decode(1, caches, broken, plan, demand)
        assert err.value.missing == [(3, 4)]

    def test_inactive_user_cannot_decode(self):
        plan, caches, lib, prof, demand = fixed_setup(4, 8, 4, 2, 600, {2})
        tr = centralized_delivery(plan, caches, demand, prof)
        with pytest.raises(ValueError):
            decode(2, caches, tr, plan, demand)

    def test_side_information_violation_is_reported(self):
        plan, caches, lib, prof, demand = fixed_setup(4, 8, 4, 2, 600, ())
        tr = centralized_delivery(plan, caches, demand, prof)
        assert side_information_violations(tr, caches) == []
        p = tr.packets[0]
        bad = replace(p, contributors=p.contributors[:1] + ((p.contributors[1][0], 1, label_to_mask((3, 4))),))
        assert side_information_violations(Transcript(tr.scheme, tr.F, [bad]), caches)

    def test_dump_format(self):
        plan, caches, lib, prof, demand = fixed_setup(3, 6, 4, 2, 30, {3})
        text = centralized_delivery(plan, caches, demand, prof).dump()
        lines = text.splitlines()
        assert lines[0] == "S=1.2.3;len=10;contrib=1:1:2.3,2:2:1.3"
        assert all(re.fullmatch(r"S=[\d.]+;len=\d+;contrib=(\d+:\d+:[\d.-]+,?)+", x) for x in lines[:-1])
        assert re.fullmatch(r"sha256=[0-9a-f]{64}", lines[-1])


class TestWeighted:
    def test_two_groups(self):
        cfg = SystemConfig(4, 8, 3, 24)
        lib = Library(8, 24)
        w = WeightVector.from_mapping(4, {1: Fraction(1, 2), 2: Fraction(1, 2)})
        plan, caches = weighted_placement(cfg, w, lib)
        prof = InactivityProfile(4)
        demand = worst_case_demand(cfg, prof)
        tr = weighted_delivery(plan, caches, demand, prof)
        assert tr.load == Fraction(13, 12)
        assert decodes_all(caches, tr, plan, prof, demand, lib)

    def test_uncached_group_is_unicast(self):
        cfg = SystemConfig(4, 8, 0, 40)
        lib = Library(8, 40)
        plan, caches = weighted_placement(cfg, WeightVector.single(4, 0), lib)
        prof = InactivityProfile(4, {1})
        demand = worst_case_demand(cfg, prof)
        tr = weighted_delivery(plan, caches, demand, prof)
        assert tr.load == 3 and all(len(p.label) == 1 for p in tr.packets)
        assert decodes_all(caches, tr, plan, prof, demand, lib)

    def test_integer_t_matches_fixed(self):
        cfg = SystemConfig(5, 10, 4, 500)
        lib = Library(10, 500)
        prof = InactivityProfile(5, {3})
        demand = worst_case_demand(cfg, prof)
        plan_w, caches_w = weighted_placement(cfg, closed_form_weights(5, 2), lib)
        plan_f, caches_f = man_placement(cfg, 2, lib)
        assert weighted_delivery(plan_w, caches_w, demand, prof).dump() == \
            centralized_delivery(plan_f, caches_f, demand, prof).dump()

    def test_scheme_guard(self):
        plan, caches, lib, prof, demand = fixed_setup(4, 8, 4, 2, 600, ())
        with pytest.raises(ValueError):
            weighted_delivery(plan, caches, demand, prof)


def decentralized_setup(K, N, M, F, inactive, seed=0):
    cfg = SystemConfig(K, N, M, F)
    lib = Library(N, F, seed)
    caches = decentralized_placement(cfg, seed, lib)
    prof = InactivityProfile(K, frozenset(inactive))
    return caches, lib, prof, worst_case_demand(cfg, prof)


class TestDecentralized:
    def test_everything_cached(self):
        caches, lib, prof, demand = decentralized_setup(4, 6, 6, 200, {2})
        tr = decentralized_delivery_I(caches, demand, prof)
        assert len(tr) == 0 and tr.load == 0
        assert decodes_all(caches, tr, None, prof, demand, lib)

    def test_nothing_cached(self):
        caches, lib, prof, demand = decentralized_setup(4, 6, 0, 200, {2})
        tr = decentralized_delivery_I(caches, demand, prof)
        assert tr.load == 3 and all(len(p.label) == 1 for p in tr.packets)

    def test_delivery_II_equals_I_without_inactivity(self):
        caches, lib, prof, demand = decentralized_setup(5, 7, 2, 400, ())
        assert decentralized_delivery_I(caches, demand, prof).dump() == \
            decentralized_delivery_II(caches, demand, prof).dump()

    def test_lone_user_gets_singletons(self):
        caches, lib, prof, demand = decentralized_setup(6, 12, 4, 3000, {2, 3, 4, 5, 6}, seed=3)
        tr = decentralized_delivery_II(caches, demand, prof)
        assert [p.label for p in tr.packets] == [(1,)]
        assert tr.total_bits == decentralized_delivery_I(caches, demand, prof).total_bits
        assert decodes_all(caches, tr, None, prof, demand, lib)

    def test_load_near_formula(self):
        caches, lib, prof, demand = decentralized_setup(10, 20, 2, 100000, (), seed=1)
        tr = decentralized_delivery_I(caches, demand, prof)
        formula = analytics.load_decentralized(10, 2, 20, 0)
        assert abs(float(tr.load) - formula) / formula < 0.05

    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 6), st.data())
    def test_deliveries_agree_and_decode(self, K, data):
        inactive = data.draw(st.sets(st.integers(1, K), max_size=K - 1))
        M = data.draw(st.sampled_from([Fraction(1, 2), Fraction(1), Fraction(K + 1, 2), Fraction(K)]))
        seed = data.draw(st.integers(0, 5))
        caches, lib, prof, demand = decentralized_setup(K, K + 1, M, 300, inactive, seed)
        one = decentralized_delivery_I(caches, demand, prof)
        two = decentralized_delivery_II(caches, demand, prof)
        assert one.total_bits == two.total_bits
        assert one.served_pieces() == two.served_pieces()
        assert all(set(p.label) <= set(prof.active) for p in two.packets)
        assert side_information_violations(two, caches) == []
        assert decodes_all(caches, one, None, prof, demand, lib)
        assert decodes_all(caches, two, None, prof, demand, lib)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.data())
def test_centralized_decodes_and_matches_formula(K, data):
    t = data.draw(st.sampled_from([Fraction(h, 2) for h in range(2, 2 * K - 1)]))
    inactive = data.draw(st.sets(st.integers(1, K), max_size=K - 1))
    N = K + 1
    M = t * N / K
    prof = InactivityProfile(K, frozenset(inactive))
    for weighted in (False, True):
        weights = closed_form_weights(K, t) if weighted else WeightVector.single(K, math.floor(t))
        cfg = SystemConfig(K, N, M, compatible_file_size(weights, 500))
        lib = Library(N, cfg.F)
        demand = worst_case_demand(cfg, prof)
        if weighted:
            plan, caches = weighted_placement(cfg, weights, lib)
            tr = weighted_delivery(plan, caches, demand, prof)
            assert tr.load == analytics.load_weighted(K, prof.I, weights)
        else:
            plan, caches = man_placement(cfg, math.floor(t), lib)
            tr = centralized_delivery(plan, caches, demand, prof)
            assert tr.load == analytics.load_fixed(K, N, M, math.floor(t), prof.I)
        assert decodes_all(caches, tr, plan, prof, demand, lib)


def test_empty_transcript_load():
    assert measured_load(Transcript("x", 10)) == 0


def test_payload_bytes_pad_at_end():
    assert Packet(1, 0b101, 3, ()).payload_bytes() == bytes([0b10100000])
