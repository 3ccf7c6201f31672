from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cachesim.core import SystemConfig, enumerate_subsets
from cachesim.placement import (
    DivisibilityError,
    Library,
    WeightVector,
    bits_to_int,
    cache_usage,
    compatible_file_size,
    decentralized_placement,
    int_to_bits,
    man_placement,
    minimal_file_size,
    weighted_placement,
)


@given(st.lists(st.integers(0, 1), max_size=200))
def test_bit_packing_roundtrip(bits):
    arr = np.array(bits, dtype=np.uint8)
    assert np.array_equal(int_to_bits(bits_to_int(arr), len(arr)), arr)


def test_msb_first():
    assert bits_to_int(np.array([1, 0, 0], dtype=np.uint8)) == 4


class TestWeights:
    def test_alpha_and_replication(self):
        w = WeightVector.from_mapping(4, {1: Fraction(1, 2), 2: Fraction(1, 2)})
        assert w.alpha[1] == Fraction(1, 8) and w.alpha[2] == Fraction(1, 12)
        assert w.replication == Fraction(3, 2)
        assert w.support == (1, 2)

    def test_check(self):
        with pytest.raises(ValueError):
            WeightVector((Fraction(1, 2), Fraction(1, 4), 0)).check()
        with pytest.raises(ValueError):
            WeightVector((0, 0, 1)).check(Fraction(1))
        WeightVector((0, 1, 0)).check(Fraction(1))

    def test_file_sizes(self):
        w = WeightVector.from_mapping(4, {1: Fraction(1, 2), 2: Fraction(1, 2)})
        assert minimal_file_size(w) == 24
        assert compatible_file_size(w, 600) == 600
        assert compatible_file_size(w, 601) == 624
        assert minimal_file_size(WeightVector.single(8, 4)) == 70


class TestLibrary:
    def test_deterministic_and_independent_of_N(self):
        a, b = Library(5, 100, seed=3), Library(9, 100, seed=3)
        assert np.array_equal(a.bits(2), b.bits(2))
        assert not np.array_equal(a.bits(1), a.bits(2))

    def test_segment(self):
        lib = Library(2, 64, seed=1)
        bits = lib.bits(1)
        assert lib.segment(1, 10, 7) == bits_to_int(bits[10:17])

    def test_bad_file(self):
        with pytest.raises(IndexError):
            Library(2, 8).bits(3)


class TestCentralized:
    def test_man_layout(self):
        cfg = SystemConfig(4, 8, 4, 600)
        plan, caches = man_placement(cfg, 2)
        assert plan.fragment_bits[2] == 100 and plan.num_fragments() == 6
        assert [plan.fragment_range(lab)[0] for lab in enumerate_subsets(4, 2)] == [0, 100, 200, 300, 400, 500]
        assert caches.holds(1, 3, (1, 4)) and not caches.holds(2, 3, (1, 4))
        assert caches.fragment(1, 3, (1, 4)) == caches.library.segment(3, 300, 100)
        with pytest.raises(KeyError):
            caches.fragment(2, 3, (1, 4))

    def test_divisibility(self):
        with pytest.raises(DivisibilityError) as err:
            man_placement(SystemConfig(8, 16, 8, 2000), 4)
        assert err.value.minimal_F == 2030

    def test_capacity(self):
        with pytest.raises(ValueError):
            man_placement(SystemConfig(4, 8, 2, 600), 2)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 9).flatmap(lambda K: st.tuples(st.just(K), st.integers(1, K))))
    def test_man_usage(self, Kl):
        K, l = Kl
        N = K + 2
        M = Fraction(N * l, K)
        F = math.comb(K, l) * 3
        plan, caches = man_placement(SystemConfig(K, N, M, F), l)
        assert sum(plan.fragment_bits[len(lab)] for lab in plan.labels()) == F
        for user in (1, K):
            assert cache_usage(caches, user) == M

    def test_weighted_usage_is_tight(self):
        cfg = SystemConfig(4, 8, 3, 24)
        w = WeightVector.from_mapping(4, {1: Fraction(1, 2), 2: Fraction(1, 2)})
        plan, caches = weighted_placement(cfg, w)
        assert plan.fragment_bits[1] == 3 and plan.fragment_bits[2] == 2
        assert plan.groups == (1, 2)
        assert cache_usage(plan, 2) == 3

    def test_weighted_rejects_overfull(self):
        with pytest.raises(ValueError):
            weighted_placement(SystemConfig(4, 8, 2, 24), WeightVector.single(4, 2))


class TestDecentralized:
    @pytest.mark.parametrize("M,F", [(Fraction(1), 1000), (Fraction(5, 2), 997), (Fraction(0), 50), (Fraction(6), 64)])
    def test_exact_counts(self, M, F):
        cfg = SystemConfig(4, 6, M, F)
        caches = decentralized_placement(cfg, seed=2)
        want = math.floor(M * F / 6)
        for k in range(1, 5):
            for n in range(1, 7):
                pos = caches.positions(k, n)
                assert len(pos) == len(np.unique(pos)) == want
        assert cache_usage(caches, 1) == Fraction(6 * want, F)

    def test_pieces_partition_file(self):
        cfg = SystemConfig(5, 8, 3, 500)
        caches = decentralized_placement(cfg, seed=0)
        table = caches.piece_table(1)
        assert sum(size for _, size in table.values()) == 500
        owners = caches.owners(1)
        for mask, (_, size) in table.items():
            assert size == int(np.sum(owners == mask))
        assert sorted(caches.layout(1).tolist()) == list(range(500))

    def test_seed_keys_samples(self):
        a = decentralized_placement(SystemConfig(4, 6, 2, 300), seed=5)
        b = decentralized_placement(SystemConfig(4, 9, 3, 300), seed=5)
        assert np.array_equal(a.positions(2, 3), b.positions(2, 3))

    def test_cached_piece_requires_membership(self):
        caches = decentralized_placement(SystemConfig(3, 4, 2, 200), seed=0)
        with pytest.raises(KeyError):
            caches.cached_piece(1, 1, 0b110)
