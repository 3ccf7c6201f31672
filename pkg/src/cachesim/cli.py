"""Command-line front end: ``cachesim analyze|simulate|optimize|verify``.

Exit codes: 0 success, 1 usage or parameter error, 2 verification or
decode failure.
"""
from __future__ import annotations

import argparse
import math
import re
import sys
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from cachesim import analytics, optimizer, verifier
from cachesim.core import (
    InactivityProfile,
    SystemConfig,
    as_fraction,
    sample_inactivity,
    worst_case_demand,
)
from cachesim.delivery import (
    DecodeError,
    centralized_delivery,
    decentralized_delivery_I,
    decentralized_delivery_II,
    decode,
    format_label,
    measured_load,
    weighted_delivery,
)
from cachesim.placement import (
    Library,
    WeightVector,
    compatible_file_size,
    decentralized_placement,
    man_placement,
    weighted_placement,
)

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2

SCHEMES = ("centralized-fixed", "centralized-weighted", "decentralized", "ideal-man", "unicast")
EXTRA_SCHEMES = ("gain-cd", "gap-ideal")
SIMULATED = ("centralized-fixed", "centralized-weighted", "decentralized")
CLI_ORACLE_MAX_K = 12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- scenarios -------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    K: Optional[int] = None
    N: Optional[int] = None
    M: Optional[Fraction] = None
    F: int = 2000
    p: Optional[Fraction] = None
    I: Optional[int] = None
    inactive: Optional[tuple[int, ...]] = None
    scheme: Optional[str] = None
    l: Optional[int] = None
    beta: Optional[tuple[Fraction, ...]] = None
    seed: int = 0
    out: Optional[str] = None

    def require(self, *names: str) -> None:
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise UsageError(f"missing parameter(s): {', '.join(missing)}")

    def inactivity_specs(self) -> list[str]:
        return [n for n in ("I", "inactive", "p") if getattr(self, n) is not None]

    def check(self) -> None:
        specs = self.inactivity_specs()
        if len(specs) > 1:
            raise UsageError(f"give exactly one inactivity spec, got {', '.join(specs)}")
        if self.scheme is not None and self.scheme not in SCHEMES + EXTRA_SCHEMES:
            raise UsageError(f"unknown scheme {self.scheme!r}")
        if self.l is not None and self.scheme not in (None, "centralized-fixed"):
            raise UsageError("l applies to the centralized-fixed scheme only")
        if self.beta is not None and self.scheme not in (None, "centralized-weighted"):
            raise UsageError("beta applies to the centralized-weighted scheme only")


def _parse_int_list(text: str) -> tuple[int, ...]:
    text = text.strip()
    if text in ("", "-"):
        return ()
    return tuple(int(x) for x in re.split(r"[,\s]+", text) if x)


def _parse_beta(text: str) -> tuple[Fraction, ...]:
    """``b0,b1,...,bK`` or sparse ``l:w,l:w`` (unlisted weights are zero)."""
    parts = [x for x in re.split(r"[,\s]+", text.strip()) if x]
    if parts and all(":" in x for x in parts):
        pairs = {int(a): as_fraction(b) for a, b in (x.split(":", 1) for x in parts)}
        return tuple(pairs.get(l, Fraction(0)) for l in range(max(pairs) + 1))
    return tuple(as_fraction(x) for x in parts)


_CONVERTERS = {
    "K": int, "N": int, "M": as_fraction, "F": int, "p": as_fraction, "I": int,
    "inactive": _parse_int_list, "scheme": str, "l": int, "beta": _parse_beta,
    "seed": int, "out": str,
}


def parse_scenario(text: str) -> Scenario:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"scenario line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _CONVERTERS:
            raise UsageError(f"scenario line {lineno}: unknown key {key!r}")
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as err:
            raise UsageError(f"scenario line {lineno}: bad value for {key}: {err}") from None
    return Scenario(**values)


def _scenario_from_args(args: argparse.Namespace) -> Scenario:
    base = Scenario()
    if getattr(args, "scenario", None):
        path = Path(args.scenario)
        if not path.is_file():
            raise UsageError(f"scenario file {path} not found")
        base = parse_scenario(path.read_text())
    overrides = {}
    for f in fields(Scenario):
        value = getattr(args, f.name, None)
        if value is not None:
            overrides[f.name] = value
    scenario = replace(base, **overrides)
    scenario.check()
    return scenario


def _config(s: Scenario, F: Optional[int] = None) -> SystemConfig:
    s.require("K", "N", "M")
    return SystemConfig(s.K, s.N, s.M, s.F if F is None else F, s.p if s.p is not None else 0)


# -- formatting ------------------------------------------------------------------


def _decimal(value) -> str:
    return f"{float(value):.12g}"


def _exact(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def _x(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else _decimal(value)


# -- analyze ---------------------------------------------------------------------


def _parse_sweep(text: str) -> tuple[str, list[Fraction]]:
    m = re.fullmatch(r"\s*([IM])\s*=\s*([^.]+?)\s*\.\.\s*([^:]+?)\s*(?::\s*(.+))?\s*", text)
    if not m:
        raise UsageError(f"sweep must look like I=a..b or M=a..b[:step], got {text!r}")
    var, lo, hi, step = m.group(1), as_fraction(m.group(2)), as_fraction(m.group(3)), m.group(4)
    step = as_fraction(step) if step else Fraction(1)
    if var == "I" and (lo.denominator != 1 or hi.denominator != 1 or step != 1):
        raise UsageError("I sweeps take integer bounds and unit steps")
    if step <= 0 or hi < lo:
        raise UsageError(f"invalid sweep bounds {text!r}")
    count = int((hi - lo) / step) + 1
    return var, [lo + i * step for i in range(count)]


def _point_load(scheme: str, K: int, N: int, M: Fraction, I: int, s: Scenario) -> Fraction:
    t = K * M / N
    if scheme == "centralized-fixed":
        l = s.l if s.l is not None else min(math.floor(t), K)
        return analytics.load_fixed(K, N, M, l, I)
    if scheme == "centralized-weighted":
        weights = WeightVector(s.beta) if s.beta is not None else optimizer.closed_form_weights(K, t)
        return analytics.load_weighted(K, I, weights)
    if scheme == "decentralized":
        return analytics.load_decentralized_exact(K, M, N, I)
    if scheme == "ideal-man":
        return analytics.load_ideal_man(K, N, M, I)
    if scheme == "unicast":
        return analytics.load_unicast(K, N, M, I)
    if t.denominator != 1:
        raise UsageError(f"{scheme} needs an integer t = KM/N, got t = {t} at M = {M}")
    if scheme == "gain-cd":
        return analytics.load_decentralized_exact(K, M, N, I) - analytics.load_fixed(K, N, M, int(t), I)
    if scheme == "gap-ideal":
        return analytics.gap_vs_ideal(K, N, M, I)
    raise UsageError(f"unknown scheme {scheme!r}")


def analyze_rows(s: Scenario, sweep: Optional[str], schemes: Sequence[str]) -> list[tuple[str, str, str, str]]:
    s.require("K", "N")
    K, N = s.K, s.N
    if s.p is not None or s.inactive is not None:
        raise UsageError("analyze takes an explicit I, not a set or a probability")
    if sweep is None:
        s.require("M")
        var, xs = "I", [Fraction(s.I or 0)]
    else:
        var, xs = _parse_sweep(sweep)
    if var == "I":
        s.require("M")
        if xs[0] < 0 or xs[-1] > K - 1:
            raise UsageError(f"I sweep must stay within [0, {K - 1}]")
    else:
        if xs[0] < 0 or xs[-1] > N:
            raise UsageError(f"M sweep must stay within [0, {N}]")
    rows = []
    for x in xs:
        I, M = (int(x), s.M) if var == "I" else (s.I or 0, x)
        for scheme in schemes:
            load = _point_load(scheme, K, N, M, I, s)
            rows.append((_x(x), scheme, _exact(load), _decimal(load)))
    return rows


UNICAST_NOTE = "# unicast baseline: J*(1-M/N), each active user receives its uncached part alone"


def render_csv(rows: Sequence[tuple[str, str, str, str]]) -> str:
    lines = ["x,scheme,load,decimal"] + [",".join(r) for r in rows]
    if any(r[1] == "unicast" for r in rows):
        lines.insert(0, UNICAST_NOTE)
    return "\n".join(lines) + "\n"


def gnuplot_script(csv_path: str, schemes: Sequence[str], xlabel: str) -> str:
    """Script text plotting the decimal column of ``csv_path`` per scheme."""
    names = " ".join(schemes)
    return "\n".join([
        "set datafile separator ','",
        f"set xlabel '{xlabel}'",
        "set ylabel 'backhaul load (files)'",
        "set key top right",
        f"schemes = \"{names}\"",
        f"plot for [s in schemes] \"< awk -F, '$2==\\\"\".s.\"\\\"' {csv_path}\" using 1:4 with linespoints title s",
        "",
    ])


def cmd_analyze(args: argparse.Namespace) -> int:
    s = _scenario_from_args(args)
    if args.schemes:
        schemes = [x.strip() for x in args.schemes.split(",") if x.strip()]
    elif s.scheme:
        schemes = [s.scheme]
    else:
        schemes = list(SCHEMES)
    unknown = [x for x in schemes if x not in SCHEMES + EXTRA_SCHEMES]
    if unknown:
        raise UsageError(f"unknown scheme(s): {', '.join(unknown)}")
    rows = analyze_rows(s, args.sweep, schemes)
    text = render_csv(rows)
    out = args.out or s.out
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.gnuplot:
        xlabel = "M" if args.sweep and args.sweep.strip().startswith("M") else "I"
        Path(args.gnuplot).write_text(gnuplot_script(out or "loads.csv", schemes, xlabel))
    return EXIT_OK


# -- simulate --------------------------------------------------------------------


def _profile(s: Scenario, config: SystemConfig) -> InactivityProfile:
    if s.inactive is not None:
        return InactivityProfile(config.K, frozenset(s.inactive))
    if s.p is not None:
        return sample_inactivity(config, np.random.default_rng([s.seed, 2]))
    return InactivityProfile.last(config.K, s.I or 0)


def _centralized_setup(s: Scenario, config: SystemConfig, auto_F: bool):
    scheme = s.scheme
    if scheme == "centralized-fixed":
        l = s.l if s.l is not None else math.floor(config.t)
        weights = WeightVector.single(config.K, l)
    else:
        weights = WeightVector(s.beta) if s.beta is not None else optimizer.closed_form_weights(config.K, config.t)
    F = config.F
    needed = compatible_file_size(weights, F)
    if needed != F:
        if not auto_F:
            raise UsageError(f"F={F} cannot be split for this plan; minimal valid F is {needed} (or pass --auto-F)")
        print(f"warning: F raised from {F} to {needed} so every fragment is a whole number of bits",
              file=sys.stderr)
        config = config.with_F(needed)
    library = Library(config.N, config.F, s.seed)
    if scheme == "centralized-fixed":
        plan, caches = man_placement(config, l, library)
        return config, plan, caches, library, weights, l
    plan, caches = weighted_placement(config, weights, library)
    return config, plan, caches, library, weights, None


def simulate_report(s: Scenario, auto_F: bool = False, delivery: str = "I",
                    dump: Optional[str] = None) -> tuple[int, str]:
    if s.scheme is None:
        s = replace(s, scheme="centralized-fixed")
    if s.scheme not in SIMULATED:
        raise UsageError(f"scheme {s.scheme} has no simulation; choose one of {', '.join(SIMULATED)}")
    config = _config(s)
    profile = _profile(s, config)
    if profile.J == 0:
        raise UsageError("every user is inactive; nothing to deliver")
    lines = []
    if s.scheme == "decentralized":
        library = Library(config.N, config.F, s.seed)
        caches = decentralized_placement(config, s.seed, library)
        plan = None
        demand = worst_case_demand(config, profile)
        run = decentralized_delivery_I if delivery == "I" else decentralized_delivery_II
        transcript = run(caches, demand, profile)
        analytic = analytics.load_decentralized(config.K, config.M, config.N, profile.I)
        header = f"scheme=decentralized delivery={delivery} seed={s.seed}"
    else:
        config, plan, caches, library, weights, l = _centralized_setup(s, config, auto_F)
        demand = worst_case_demand(config, profile)
        if s.scheme == "centralized-fixed":
            transcript = centralized_delivery(plan, caches, demand, profile)
            analytic = analytics.load_fixed(config.K, config.N, config.M, l, profile.I)
            header = f"scheme=centralized-fixed l={l}"
        else:
            transcript = weighted_delivery(plan, caches, demand, profile)
            analytic = analytics.load_weighted(config.K, profile.I, weights)
            header = f"scheme=centralized-weighted weights: {weights}"
    measured = measured_load(transcript)
    lines.append(header)
    lines.append(f"K={config.K} N={config.N} M={config.M} F={config.F} t={config.t}")
    lines.append(f"inactive={format_label(sorted(profile.inactive))} I={profile.I} J={profile.J}")
    lines.append(f"packets={len(transcript)} bits={transcript.total_bits}")
    lines.append(f"measured_load={_exact(measured)} ({_decimal(measured)})")
    if isinstance(analytic, Fraction):
        lines.append(f"analytic_load={_exact(analytic)} ({_decimal(analytic)})")
        lines.append(f"difference={measured - analytic}")
    else:
        lines.append(f"analytic_load={_decimal(analytic)}")
        diff = float(measured) - analytic
        rel = diff / analytic if analytic else 0.0
        lines.append(f"difference={_decimal(diff)} relative={_decimal(rel)}")
    status = EXIT_OK
    for k in profile.active:
        try:
            bits = decode(k, caches, transcript, plan, demand)
        except DecodeError as err:
            lines.append(f"user {k}: DECODE FAILED, missing {', '.join(format_label(m) for m in err.missing)}")
            status = EXIT_FAILURE
            continue
        ok = np.array_equal(bits, library.bits(demand[k]))
        lines.append(f"user {k}: file {demand[k]} {'decoded' if ok else 'MISMATCH'}")
        if not ok:
            status = EXIT_FAILURE
    lines.append(f"transcript_sha256={transcript.digest()}")
    if dump:
        Path(dump).write_text(transcript.dump())
    return status, "\n".join(lines) + "\n"


def cmd_simulate(args: argparse.Namespace) -> int:
    s = _scenario_from_args(args)
    status, text = simulate_report(s, args.auto_F, args.delivery, args.dump)
    sys.stdout.write(text)
    out = args.out or s.out
    if out:
        Path(out).write_text(text)
    return status


# -- optimize --------------------------------------------------------------------


def optimize_report(K: int, N: int, M: Fraction, I: int, oracle: bool) -> str:
    t = K * M / N
    lines = [f"K={K} N={N} M={M} I={I} t={t}"]
    if oracle and K > CLI_ORACLE_MAX_K:
        raise UsageError(f"the vertex oracle is limited to K <= {CLI_ORACLE_MAX_K}")
    if t >= 1:
        l = optimizer.optimal_fixed_cardinality(K, N, M, I)
        fixed = analytics.load_fixed(K, N, M, l, I)
        lines.append(f"fixed cardinality: l*={l} objective={_exact(fixed)} ({_decimal(fixed)})")
    else:
        lines.append("fixed cardinality: none (t < 1)")
    closed = optimizer.solve_lp_closed_form(K, N, M, I)
    lines.append(f"closed-form weights: {closed.weights} objective={_exact(closed.objective)} "
                 f"({_decimal(closed.objective)})")
    if oracle:
        found = optimizer.solve_lp_vertex_oracle(K, N, M, I)
        verdict = "EQUAL" if found.objective == closed.objective else "DIFFER"
        lines.append(f"vertex oracle: {found.weights} objective={_exact(found.objective)} {verdict}")
    return "\n".join(lines) + "\n"


def cmd_optimize(args: argparse.Namespace) -> int:
    s = _scenario_from_args(args)
    s.require("K", "N", "M", "I")
    text = optimize_report(s.K, s.N, s.M, s.I, args.oracle)
    sys.stdout.write(text)
    out = args.out or s.out
    if out:
        Path(out).write_text(text)
    return EXIT_OK


# -- verify ----------------------------------------------------------------------


def cmd_verify(args: argparse.Namespace) -> int:
    if args.check:
        unknown = [c for c in args.check if c not in verifier.registered_checks()]
        if unknown:
            raise UsageError(f"unknown check(s): {', '.join(unknown)}")
        reports = [verifier.run_check(c, profile=args.profile) for c in args.check]
    else:
        reports = verifier.run_all(args.profile)
    text = verifier.serialize(reports)
    sys.stdout.write(text)
    Path(args.out or f"cachesim-verify-{args.profile}.txt").write_text(text)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILURE


# -- entry point -----------------------------------------------------------------


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", help="key = value scenario file")
    p.add_argument("--K", type=int, help="number of users")
    p.add_argument("--N", type=int, help="number of files")
    p.add_argument("--M", type=as_fraction, help="cache size in files (rational)")
    p.add_argument("--F", type=int, help="file size in bits")
    p.add_argument("--I", type=int, help="number of inactive users (the highest-indexed ones)")
    p.add_argument("--inactive", type=_parse_int_list, help="explicit inactive users, e.g. 2,5")
    p.add_argument("--p", type=as_fraction, help="per-user inactivity probability")
    p.add_argument("--scheme", help="scheme name")
    p.add_argument("--l", type=int, help="label size for centralized-fixed")
    p.add_argument("--beta", type=_parse_beta, help="weights b0,...,bK or l:w,l:w")
    p.add_argument("--seed", type=int, help="seed for files, caches and inactivity")
    p.add_argument("--out", help="output path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cachesim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="closed-form loads as CSV")
    _add_params(p)
    p.add_argument("--sweep", help="I=a..b or M=a..b[:step]")
    p.add_argument("--schemes", help=f"comma list from {', '.join(SCHEMES + EXTRA_SCHEMES)}")
    p.add_argument("--gnuplot", help="also write a gnuplot script to this path")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="bit-exact placement, delivery and decoding")
    _add_params(p)
    p.add_argument("--auto-F", dest="auto_F", action="store_true", help="raise F to the next valid size")
    p.add_argument("--delivery", choices=("I", "II"), default="I", help="decentralized delivery variant")
    p.add_argument("--dump", help="write the transcript dump to this path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="best label size and LP weights")
    _add_params(p)
    p.add_argument("--oracle", action="store_true", help=f"cross-check with the vertex oracle (K <= {CLI_ORACLE_MAX_K})")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("verify", help="run the registered checks")
    p.add_argument("--profile", choices=verifier.PROFILES, default="quick")
    p.add_argument("--check", action="append", help="run only this check (repeatable)")
    p.add_argument("--out", help="ledger path (default cachesim-verify-<profile>.txt)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError) as err:
        print(f"cachesim: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except DecodeError as err:
        print(f"cachesim: decode failure: {err}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
