"""Named grid checks for every structural claim the package relies on.

Each check walks a parameter grid, counts instances and records failures
with exact witness values.  Checks are registered in a fixed order and
every claim id in :data:`CLAIMS` is covered by exactly one check.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Optional

import numpy as np

from cachesim import analytics, optimizer
from cachesim.core import (
    InactivityProfile,
    SystemConfig,
    binomial,
    colex_rank,
    enumerate_subsets,
    mask_to_label,
    worst_case_demand,
)
from cachesim.delivery import (
    DecodeError,
    centralized_delivery,
    decentralized_delivery_I,
    decentralized_delivery_II,
    decode,
    measured_load,
    side_information_violations,
    weighted_delivery,
)
from cachesim.placement import (
    Library,
    WeightVector,
    cache_usage,
    compatible_file_size,
    decentralized_placement,
    man_placement,
    weighted_placement,
)

__all__ = [
    "CheckReport",
    "CLAIMS",
    "SimRecord",
    "registered_checks",
    "run_check",
    "run_all",
    "serialize",
    "simulate_instance",
    "simulation_t_values",
    "PROFILES",
]

PROFILES = ("quick", "full")

SIM_SCHEMES = ("centralized-fixed", "centralized-weighted", "decentralized")
SIM_F = 2000

CLAIMS = {
    "core.pascal": "binomial satisfies Pascal's rule",
    "core.rational-exact": "rational arithmetic is exact, associative and commutative",
    "core.subset-count": "subset enumeration yields C(K, l) distinct sets in colex order",
    "placement.fragment-sum": "fragment sizes of every centralized plan sum to F per file",
    "placement.usage": "centralized cache usage equals N/K * sum l*beta^l, and M at LP optima",
    "placement.decentralized-count": "each user caches exactly floor(MF/N) bits of each file",
    "delivery.decodability": "every active user decodes its file bit-exactly",
    "delivery.load-match": "measured centralized load equals the closed form exactly",
    "delivery.monotone": "measured centralized load is non-increasing in I",
    "delivery.equivalence": "decentralized Delivery I and II send equal bits and serve equal pieces",
    "delivery.side-information": "no packet XORs a piece missing from another recipient's cache",
    "analytics.first-branch": "fixed-l load does not depend on I while I < l + 1",
    "analytics.fixed-monotone": "fixed-l load is non-increasing in I, strictly past I = l + 1",
    "analytics.decentralized-shift": "decentralized load with I inactive equals K - I users with none",
    "analytics.gain-monotone": "0 <= G(I + 1) <= G(I) for the decentralized-centralized gain",
    "analytics.gap-sign-table": "tabulated sign of the gap's first difference at I = t + 1",
    "analytics.gap-single-peak": "gap to the ideal MAN load has a single peak over I in [t+1, K-1]",
    "optimizer.fixed-argmin": "label size floor(t) minimizes the fixed-l load",
    "optimizer.ratio-decreasing": "R(l+1)/R(l) < 1 for 1 <= l <= I - 2",
    "optimizer.b-gt-c": "the B > C inequality behind the ratio bound",
    "optimizer.first-difference": "LP coefficients c^l are strictly decreasing in l",
    "optimizer.second-difference": "second differences are positive, or zero when I = K - 1",
    "optimizer.junction": "junction inequalities between the two coefficient pieces",
    "optimizer.tight-capacity": "a minimizer always uses the cache exactly",
    "optimizer.two-adjacent": "a minimizer exists with at most two nonzero adjacent weights",
    "optimizer.constant-objective": "at I = K - 1 every tight vertex has objective 1 - t/K",
    "optimizer.closed-form": "vertex-oracle optimum equals the closed-form LP solution",
}


@dataclass
class CheckReport:
    name: str
    grid: str
    instances: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def lines(self) -> list[str]:
        status = "PASS" if self.passed else "FAIL"
        out = [f"CHECK {self.name} {status} instances={self.instances} failures={len(self.failures)}"]
        out.extend(f"  witness {params}: {witness}" for params, witness in self.failures)
        return out


class _Recorder:
    def __init__(self, report: CheckReport):
        self.report = report

    def ok(self) -> None:
        self.report.instances += 1

    def fail(self, params: str, witness: str) -> None:
        self.report.instances += 1
        self.report.failures.append((params, witness))

    def expect(self, cond: bool, params: str, witness: Callable[[], str]) -> None:
        if cond:
            self.ok()
        else:
            self.fail(params, witness())


@dataclass(frozen=True)
class _Check:
    name: str
    claims: tuple[str, ...]
    grids: dict
    fn: Callable[[_Recorder, dict], None]


_REGISTRY: dict[str, _Check] = {}


def _check(name: str, claims: Iterable[str], quick: dict, full: dict):
    def register(fn):
        _REGISTRY[name] = _Check(name, tuple(claims), {"quick": quick, "full": full}, fn)
        return fn
    return register


def registered_checks() -> list[str]:
    return list(_REGISTRY)


def claims_of(name: str) -> tuple[str, ...]:
    return _REGISTRY[name].claims


def _describe(grid: dict) -> str:
    parts = []
    for key, value in grid.items():
        if isinstance(value, tuple) and len(value) == 2:
            parts.append(f"{key}={value[0]}..{value[1]}")
        else:
            parts.append(f"{key}={value}")
    return "; ".join(parts)


def _span(grid: dict, key: str) -> range:
    lo, hi = grid[key]
    return range(lo, hi + 1)


def run_check(name: str, grid: Optional[dict] = None, profile: str = "quick") -> CheckReport:
    """Run one registered check over ``grid`` (defaults to the profile's grid)."""
    if name not in _REGISTRY:
        raise KeyError(f"unknown check {name!r}; registered: {', '.join(_REGISTRY)}")
    if profile not in PROFILES:
        raise ValueError(f"profile must be one of {PROFILES}, got {profile!r}")
    check = _REGISTRY[name]
    params = dict(check.grids[profile])
    if grid:
        params.update(grid)
    report = CheckReport(name, _describe(params))
    start = time.perf_counter()
    check.fn(_Recorder(report), params)
    report.wall_time = time.perf_counter() - start
    return report


def run_all(profile: str = "quick") -> list[CheckReport]:
    return [run_check(name, profile=profile) for name in _REGISTRY]


def serialize(reports: Iterable[CheckReport]) -> str:
    """Ledger text; wall times are left out so the output is reproducible."""
    reports = list(reports)
    lines = [line for r in reports for line in r.lines()]
    failed = sum(not r.passed for r in reports)
    lines.append(f"SUMMARY checks={len(reports)} failed={failed}")
    return "\n".join(lines) + "\n"


# -- shared simulation records ---------------------------------------------------


@dataclass(frozen=True)
class SimRecord:
    scheme: str
    K: int
    t: Fraction
    inactive: tuple[int, ...]
    seed: int
    load: Fraction
    bits: int
    undecoded: tuple[str, ...]
    violations: int
    bits_II: Optional[int] = None
    served_equal: Optional[bool] = None
    violations_II: int = 0

    @property
    def I(self) -> int:
        return len(self.inactive)


def simulation_t_values(K: int) -> list[Fraction]:
    """Integer and half-integer t in [1, K - 1]."""
    return [Fraction(h, 2) for h in range(2, 2 * K - 1)]


@lru_cache(maxsize=64)
def _setup(scheme: str, K: int, N: int, t: Fraction, seed: int, F: int):
    M = t * N / K
    if scheme == "decentralized":
        config = SystemConfig(K, N, M, F)
        library = Library(N, F, seed)
        return config, None, decentralized_placement(config, seed, library), library
    if scheme == "centralized-fixed":
        l = math.floor(t)
        weights = WeightVector.single(K, l)
        config = SystemConfig(K, N, M, compatible_file_size(weights, F))
        library = Library(N, config.F, seed)
        plan, caches = man_placement(config, l, library)
        return config, plan, caches, library
    if scheme == "centralized-weighted":
        weights = optimizer.solve_lp_closed_form(K, N, M, 1).weights
        config = SystemConfig(K, N, M, compatible_file_size(weights, F))
        library = Library(N, config.F, seed)
        plan, caches = weighted_placement(config, weights, library)
        return config, plan, caches, library
    raise ValueError(f"unknown simulation scheme {scheme!r}")


def _undecoded(caches, transcript, plan, demand, profile, library) -> list[str]:
    bad = []
    for k in profile.active:
        try:
            bits = decode(k, caches, transcript, plan, demand)
        except (DecodeError, KeyError) as err:
            bad.append(f"user {k}: {err}")
            continue
        if not np.array_equal(bits, library.bits(demand[k])):
            bad.append(f"user {k}: wrong bits")
    return bad


def simulate_instance(scheme: str, K: int, t: Fraction, inactive: Iterable[int], seed: int = 0,
                      N: Optional[int] = None, F: int = SIM_F, audit: bool = True) -> SimRecord:
    """Place, deliver to the worst-case demand and decode every active user.

    Centralized F is raised to the next size the plan can split; ``N``
    defaults to K + 1 and M is chosen so that KM/N = t.  With ``audit`` off
    the side-information and served-piece comparisons are skipped and their
    fields hold zero / None.
    """
    N = K + 1 if N is None else N
    config, plan, caches, library = _setup(scheme, K, N, Fraction(t), seed, F)
    profile = InactivityProfile(K, frozenset(inactive))
    demand = worst_case_demand(config, profile)
    label = tuple(sorted(profile.inactive))
    if scheme == "decentralized":
        first = decentralized_delivery_I(caches, demand, profile)
        second = decentralized_delivery_II(caches, demand, profile)
        bad = _undecoded(caches, first, None, demand, profile, library)
        bad += [f"II {b}" for b in _undecoded(caches, second, None, demand, profile, library)]
        if not audit:
            return SimRecord(scheme, K, Fraction(t), label, seed, measured_load(first), first.total_bits,
                             tuple(bad), 0, second.total_bits)
        same = sorted(c for p in first.packets for c in p.contributors) == \
            sorted(c for p in second.packets for c in p.contributors)
        return SimRecord(scheme, K, Fraction(t), label, seed, measured_load(first), first.total_bits,
                         tuple(bad), len(side_information_violations(first, caches)),
                         second.total_bits, same, len(side_information_violations(second, caches)))
    deliver = centralized_delivery if scheme == "centralized-fixed" else weighted_delivery
    transcript = deliver(plan, caches, demand, profile)
    bad = _undecoded(caches, transcript, plan, demand, profile, library)
    violations = len(side_information_violations(transcript, caches)) if audit else 0
    return SimRecord(scheme, K, Fraction(t), label, seed, measured_load(transcript), transcript.total_bits,
                     tuple(bad), violations)


@lru_cache(maxsize=8)
def _sim_records(K_lo: int, K_hi: int, seed: int) -> tuple[SimRecord, ...]:
    records = []
    for K in range(K_lo, K_hi + 1):
        for t in simulation_t_values(K):
            for scheme in SIM_SCHEMES:
                for mask in range((1 << K) - 1):  # the full set leaves nobody active
                    records.append(simulate_instance(scheme, K, t, mask_to_label(mask), seed))
    return tuple(records)


def _records(grid: dict) -> tuple[SimRecord, ...]:
    lo, hi = grid["K"]
    return _sim_records(lo, hi, grid.get("seed", 0))


def _sim_params(r: SimRecord) -> str:
    return f"scheme={r.scheme} K={r.K} t={r.t} inactive={list(r.inactive)} seed={r.seed}"


_SIM_QUICK = {"K": (2, 6), "seed": 0}
_SIM_FULL = {"K": (2, 8), "seed": 0}


# -- core ------------------------------------------------------------------------


@_check("pascal-rule", ["core.pascal"], {"n": (0, 40)}, {"n": (0, 120)})
def _pascal(rec: _Recorder, grid: dict) -> None:
    for n in _span(grid, "n"):
        for k in range(-1, n + 3):
            lhs, rhs = binomial(n + 1, k), binomial(n, k) + binomial(n, k - 1)
            rec.expect(lhs == rhs, f"n={n} k={k}", lambda: f"C(n+1,k)={lhs} sum={rhs}")


@_check("rational-exact", ["core.rational-exact"], {"samples": 200, "seed": 7}, {"samples": 5000, "seed": 7})
def _rational(rec: _Recorder, grid: dict) -> None:
    rng = np.random.default_rng(grid["seed"])
    for i in range(grid["samples"]):
        nums = rng.integers(-10**6, 10**6, 3)
        dens = rng.integers(1, 10**6, 3)
        a, b, c = (Fraction(int(n), int(d)) for n, d in zip(nums, dens))
        ok = (a + b) + c == a + (b + c) and a * b == b * a and (a * b) * c == a * (b * c) and a - a == 0
        rec.expect(ok, f"sample={i}", lambda: f"a={a} b={b} c={c}")


@_check("subset-count", ["core.subset-count"], {"K": (0, 10)}, {"K": (0, 12)})
def _subsets(rec: _Recorder, grid: dict) -> None:
    for K in _span(grid, "K"):
        for l in range(K + 1):
            subsets = list(enumerate_subsets(K, l))
            ok = len(subsets) == binomial(K, l) and len(set(subsets)) == len(subsets)
            ok = ok and all(colex_rank(s) == i for i, s in enumerate(subsets))
            rec.expect(ok, f"K={K} l={l}", lambda: f"count={len(subsets)} expected={binomial(K, l)}")


# -- placement -------------------------------------------------------------------


def _lp_weights(K: int, t: Fraction) -> WeightVector:
    return optimizer.solve_lp_closed_form(K, K, t, 1).weights


@_check("plan-layout", ["placement.fragment-sum"], {"K": (2, 8)}, {"K": (2, 12)})
def _plan_layout(rec: _Recorder, grid: dict) -> None:
    for K in _span(grid, "K"):
        for t in simulation_t_values(K):
            for scheme, weights in (("fixed", WeightVector.single(K, math.floor(t))),
                                    ("weighted", _lp_weights(K, t))):
                F = compatible_file_size(weights, SIM_F)
                config = SystemConfig(K, K + 1, t * (K + 1) / K, F)
                if scheme == "fixed":
                    plan, _ = man_placement(config, math.floor(t), Library(K + 1, F))
                else:
                    plan, _ = weighted_placement(config, weights, Library(K + 1, F))
                pos, tiled = 0, True
                for mask in plan.label_masks():
                    tiled &= plan.fragment_start(mask) == pos
                    pos += plan.fragment_bits[mask.bit_count()]
                total = sum(plan.fragment_bits[len(lab)] for lab in plan.labels())
                rec.expect(tiled and total == F and pos == F, f"K={K} t={t} scheme={scheme} F={F}",
                           lambda: f"sum of fragment sizes={total} tiled={tiled}")


@_check("cache-usage", ["placement.usage"], {"K": (2, 8)}, {"K": (2, 12)})
def _cache_usage(rec: _Recorder, grid: dict) -> None:
    for K in _span(grid, "K"):
        N = K + 1
        for t in simulation_t_values(K):
            M = t * N / K
            for l in range(1, math.floor(t) + 1):
                weights = WeightVector.single(K, l)
                config = SystemConfig(K, N, M, compatible_file_size(weights, SIM_F))
                plan, caches = man_placement(config, l, Library(N, config.F))
                used = cache_usage(caches, 1 + (l % K))
                rec.expect(used == Fraction(N * l, K), f"K={K} N={N} t={t} l={l}",
                           lambda: f"usage={used} expected={Fraction(N * l, K)}")
            weights = optimizer.solve_lp_closed_form(K, N, M, 1).weights
            config = SystemConfig(K, N, M, compatible_file_size(weights, SIM_F))
            plan, caches = weighted_placement(config, weights, Library(N, config.F))
            used = cache_usage(caches, K)
            expected = Fraction(N, K) * weights.replication
            rec.expect(used == expected == M, f"K={K} N={N} t={t} weighted",
                       lambda: f"usage={used} formula={expected} M={M}")


@_check("decentralized-count", ["placement.decentralized-count"],
        {"K": (2, 6), "seeds": 2}, {"K": (2, 10), "seeds": 5})
def _decentralized_count(rec: _Recorder, grid: dict) -> None:
    for K in _span(grid, "K"):
        N = K + 1
        for F in (SIM_F, 997):
            for M in (Fraction(1, 3), Fraction(N, 2), Fraction(N * (K - 1), K)):
                for seed in range(grid["seeds"]):
                    config = SystemConfig(K, N, M, F)
                    caches = decentralized_placement(config, seed, Library(N, F, seed))
                    want = math.floor(M * F / N)
                    counts = [(k, n, len(np.unique(caches.positions(k, n))))
                              for k in range(1, K + 1) for n in range(1, N + 1)]
                    bad = [c for c in counts if c[2] != want]
                    rec.expect(not bad, f"K={K} N={N} M={M} F={F} seed={seed}",
                               lambda: f"(user, file, bits)={bad[0]} expected {want}")


# -- delivery --------------------------------------------------------------------


@_check("decodability", ["delivery.decodability"], _SIM_QUICK, _SIM_FULL)
def _decodability(rec: _Recorder, grid: dict) -> None:
    for r in _records(grid):
        rec.expect(not r.undecoded, _sim_params(r), lambda: "; ".join(r.undecoded[:3]))


@_check("load-match", ["delivery.load-match"], _SIM_QUICK, _SIM_FULL)
def _load_match(rec: _Recorder, grid: dict) -> None:
    for r in _records(grid):
        if r.scheme == "decentralized":
            continue
        N = r.K + 1
        M = r.t * N / r.K
        if r.scheme == "centralized-fixed":
            expected = analytics.load_fixed(r.K, N, M, math.floor(r.t), r.I)
        else:
            expected = analytics.load_weighted(r.K, r.I, _lp_weights(r.K, r.t))
        rec.expect(r.load == expected, _sim_params(r), lambda: f"measured={r.load} analytic={expected}")


@_check("measured-monotone", ["delivery.monotone"], _SIM_QUICK, _SIM_FULL)
def _measured_monotone(rec: _Recorder, grid: dict) -> None:
    by_I: dict[tuple, dict[int, list[Fraction]]] = {}
    for r in _records(grid):
        if r.scheme != "decentralized":
            by_I.setdefault((r.scheme, r.K, r.t), {}).setdefault(r.I, []).append(r.load)
    for (scheme, K, t), loads in by_I.items():
        for I in range(K - 1):
            hi, lo = max(loads[I + 1]), min(loads[I])
            rec.expect(hi <= lo, f"scheme={scheme} K={K} t={t} I={I}",
                       lambda: f"max load at I+1={hi} > min load at I={lo}")


@_check("delivery-equivalence", ["delivery.equivalence"], _SIM_QUICK, _SIM_FULL)
def _delivery_equivalence(rec: _Recorder, grid: dict) -> None:
    for r in _records(grid):
        if r.scheme == "decentralized":
            rec.expect(r.bits == r.bits_II and r.served_equal, _sim_params(r),
                       lambda: f"bits I={r.bits} bits II={r.bits_II} same pieces={r.served_equal}")


@_check("side-information", ["delivery.side-information"], _SIM_QUICK, _SIM_FULL)
def _side_information(rec: _Recorder, grid: dict) -> None:
    for r in _records(grid):
        count = r.violations + r.violations_II
        rec.expect(count == 0, _sim_params(r), lambda: f"{count} uncached foreign pieces")


# -- analytics -------------------------------------------------------------------


@_check("load-fixed-first-branch", ["analytics.first-branch"], {"K": (2, 12)}, {"K": (2, 30)})
def _first_branch(rec: _Recorder, grid: dict) -> None:
    for K in _span(grid, "K"):
        for l in range(K):
            base = analytics.load_fixed(K, K, l, l, 0)
            for I in range(1, min(l + 1, K + 1)):
                value = analytics.load_fixed(K, K, l, l, I)
                rec.expect(value == base, f"K={K} l={l} I={I}", lambda: f"load={value} at I=0: {base}")


@_check("load-fixed-monotone", ["analytics.fixed-monotone"], {"K": (2, 12)}, {"K": (2, 30)})
def _fixed_monotone(rec: _Recorder, grid: dict) -> None:
    for K in _span(grid, "K"):
        for l in range(K):
            loads = [analytics.load_fixed(K, K, l, l, I) for I in range(K)]
            for I in range(K - 1):
                a, b = loads[I], loads[I + 1]
                ok = b < a if I >= l + 1 else b <= a
                rec.expect(ok, f"K={K} l={l} I={I}", lambda: f"load(I)={a} load(I+1)={b}")


_Q_VALUES = (Fraction(1, 10), Fraction(1, 3), Fraction(1, 2), Fraction(7, 8))


@_check("decentralized-shift", ["analytics.decentralized-shift"], {"K": (2, 12)}, {"K": (2, 30)})
def _decentralized_shift(rec: _Recorder, grid: dict) -> None:
    for K in _span(grid, "K"):
        for q in _Q_VALUES:
            for I in range(K):
                a = analytics.load_decentralized_exact(K, q, 1, I)
                b = analytics.load_decentralized_exact(K - I, q, 1, 0)
                rec.expect(a == b, f"K={K} q={q} I={I}", lambda: f"R(I,K)={a} R(0,K-I)={b}")


def _gain_exact(K: int, t: int, I: int) -> Fraction:
    return analytics.load_decentralized_exact(K, t, K, I) - analytics.load_fixed(K, K, t, t, I)


@_check("gain-monotone", ["analytics.gain-monotone"], {"K": (4, 12)}, {"K": (4, 20)})
def _gain_monotone(rec: _Recorder, grid: dict) -> None:
    for K in _span(grid, "K"):
        for t in range(1, K - 1):
            for I in range(1, K - 1):
                g, g_next = _gain_exact(K, t, I), _gain_exact(K, t, I + 1)
                rec.expect(g >= g_next >= 0, f"K={K} t={t} I={I}",
                           lambda: f"G(I)={g} G(I+1)={g_next}")


def _sign(x: Fraction) -> str:
    return analytics.POSITIVE if x > 0 else analytics.NEGATIVE if x < 0 else "zero"


@_check("lemma5-sign-table", ["analytics.gap-sign-table"], {"K": (3, 16)}, {"K": (3, 30)})
def _gap_sign_table(rec: _Recorder, grid: dict) -> None:
    for K in _span(grid, "K"):
        for t in range(1, K - 1):
            delta = analytics.gap_difference(K, t, t + 1)
            table = analytics.classify_gap_start(K, t)
            rec.expect(_sign(delta) == table, f"K={K} t={t}",
                       lambda: f"difference={delta} sign={_sign(delta)} table={table}")


@_check("theorem3-single-peak", ["analytics.gap-single-peak"], {"K": (4, 12)}, {"K": (4, 20)})
def _gap_single_peak(rec: _Recorder, grid: dict) -> None:
    for K in _span(grid, "K"):
        for t in range(1, K - 1):
            gaps = [analytics.gap_vs_ideal(K, K, t, I) for I in range(t + 1, K)]
            signs = [_sign(b - a) for a, b in zip(gaps, gaps[1:])]
            nonzero = [s for s in signs if s != "zero"]
            valley = any(a == analytics.NEGATIVE and b == analytics.POSITIVE
                         for a, b in zip(nonzero, nonzero[1:]))
            rec.expect(not valley, f"K={K} t={t}", lambda: f"difference signs over I={t + 1}..{K - 1}: {signs}")


# -- optimizer -------------------------------------------------------------------


@_check("theorem1", ["optimizer.fixed-argmin"], {"K": (4, 8)}, {"K": (4, 12)})
def _fixed_argmin(rec: _Recorder, grid: dict) -> None:
    for K in _span(grid, "K"):
        for t in range(1, K):
            for I in range(1, K):
                best, loads = optimizer.scan_fixed_cardinality(K, K, t, I)
                rec.expect(best == t, f"K={K} t={t} I={I}",
                           lambda: f"argmin={best} loads={ {l: str(v) for l, v in loads.items()} }")


def _ratio_terms(K: int, I: int, l: int) -> tuple[Fraction, int, int, int]:
    A = (l + 1) * (math.perm(K, l + 2) - math.perm(I, l + 2))
    B = math.perm(K + 1, l + 2)
    C = (K + 1 + (K - I) * (l + 1)) * math.perm(I, l + 1)
    return analytics.load_fixed(K, K, l + 1, l + 1, I) / analytics.load_fixed(K, K, l, l, I), A, B, C


@_check("appendixB-ratio", ["optimizer.ratio-decreasing"], {"K": (4, 16)}, {"K": (4, 30)})
def _ratio_decreasing(rec: _Recorder, grid: dict) -> None:
    for K in _span(grid, "K"):
        for I in range(1, K):
            for l in range(1, I - 1):  # empty when I <= 2
                ratio, A, B, C = _ratio_terms(K, I, l)
                ok = ratio < 1 and ratio == Fraction(A, A + B - C)
                rec.expect(ok, f"K={K} I={I} l={l}", lambda: f"ratio={ratio} A/(A+B-C)={Fraction(A, A + B - C)}")


@_check("appendixB-b-gt-c", ["optimizer.b-gt-c"], {"K": (4, 16)}, {"K": (4, 30)})
def _b_exceeds_c(rec: _Recorder, grid: dict) -> None:
    for K in _span(grid, "K"):
        for I in range(1, K):
            for l in range(1, I - 1):
                _, _, B, C = _ratio_terms(K, I, l)
                rec.expect(B > C, f"K={K} I={I} l={l}", lambda: f"B={B} C={C}")


@_check("appendixC-first-derivative", ["optimizer.first-difference"], {"K": (4, 16)}, {"K": (4, 30)})
def _first_difference(rec: _Recorder, grid: dict) -> None:
    for K in _span(grid, "K"):
        for I in range(1, K):
            d = optimizer.coefficient_vector(K, I).d
            for l, value in enumerate(d):
                rec.expect(value < 0, f"K={K} I={I} l={l}", lambda: f"d={value}")


@_check("appendixC-second-derivative", ["optimizer.second-difference"], {"K": (4, 16)}, {"K": (4, 30)})
def _second_difference(rec: _Recorder, grid: dict) -> None:
    for K in _span(grid, "K"):
        for I in range(1, K):
            e = optimizer.coefficient_vector(K, I).e
            for l, value in enumerate(e):
                ok = value == 0 if I == K - 1 else value > 0
                rec.expect(ok, f"K={K} I={I} l={l}", lambda: f"e={value}")


@_check("appendixC-junction", ["optimizer.junction"], {"K": (4, 16)}, {"K": (4, 30)})
def _junction(rec: _Recorder, grid: dict) -> None:
    for K in _span(grid, "K"):
        for I in range(1, K):
            coeffs = optimizer.coefficient_vector(K, I)
            c1 = coeffs.inactive_piece(I - 1)
            c2 = coeffs.plain_piece(I)
            rec.expect(c1 > c2, f"K={K} I={I} values", lambda: f"c1^(I-1)={c1} c2^I={c2}")
            if I + 1 <= K - 1:
                d1 = c2 - c1
                d2 = coeffs.plain_piece(I + 1) - c2
                rec.expect(d1 < d2, f"K={K} I={I} differences", lambda: f"d1^(I-1)={d1} d2^I={d2}")


def _lp_grid(grid: dict):
    for K in _span(grid, "K"):
        for t in simulation_t_values(K):
            for I in range(1, K):
                yield K, t, I


@_check("lemma2-tight", ["optimizer.tight-capacity"], {"K": (3, 8)}, {"K": (3, 12)})
def _tight_capacity(rec: _Recorder, grid: dict) -> None:
    for K, t, I in _lp_grid(grid):
        _, winners = optimizer.oracle_minimizers(K, K, t, I)
        tight = [w for w in winners if w.replication == t]
        ok = bool(tight) and (I == K - 1 or len(tight) == len(winners))
        rec.expect(ok, f"K={K} t={t} I={I}", lambda: f"minimizers={[str(w) for w in winners]}")


@_check("lemma3-consecutive", ["optimizer.two-adjacent"], {"K": (3, 8)}, {"K": (3, 12)})
def _consecutive_support(rec: _Recorder, grid: dict) -> None:
    for K, t, I in _lp_grid(grid):
        _, winners = optimizer.oracle_minimizers(K, K, t, I)
        ok = any(len(w.support) == 1 or (len(w.support) == 2 and w.support[1] - w.support[0] == 1)
                 for w in winners)
        rec.expect(ok, f"K={K} t={t} I={I}", lambda: f"minimizers={[str(w) for w in winners]}")


@_check("lemma4-constant-objective", ["optimizer.constant-objective"], {"K": (3, 8)}, {"K": (3, 12)})
def _constant_objective(rec: _Recorder, grid: dict) -> None:
    for K in _span(grid, "K"):
        I = K - 1
        for t in simulation_t_values(K):
            target = 1 - t / K
            for v in optimizer.lp_vertices(K, t, tight_only=True):
                value = analytics.load_weighted(K, I, v)
                rec.expect(value == target, f"K={K} t={t} vertex={v}",
                           lambda: f"objective={value} expected={target}")


@_check("theorem2-oracle", ["optimizer.closed-form"], {"K": (3, 8)}, {"K": (3, 12)})
def _closed_form_vs_oracle(rec: _Recorder, grid: dict) -> None:
    for K, t, I in _lp_grid(grid):
        closed = optimizer.solve_lp_closed_form(K, K, t, I)
        oracle = optimizer.solve_lp_vertex_oracle(K, K, t, I)
        ok = closed.objective == oracle.objective
        if I <= K - 2:
            ok = ok and closed.weights == oracle.weights
        rec.expect(ok, f"K={K} t={t} I={I}",
                   lambda: f"closed form {closed.weights} ({closed.objective}), "
                           f"oracle {oracle.weights} ({oracle.objective})")
