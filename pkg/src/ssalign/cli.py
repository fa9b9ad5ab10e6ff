"""Command-line front end.

Subcommands
-----------
curve   Emit exact-rational DoF curves as CSV (per-user for finite K,
        total-normalized for ``--k inf``).
build   Sample channels, plan and execute a beamforming construction, verify
        decodability, and dump everything as JSON.
verify  Repeat ``build`` over a seed sweep and summarize pass counts.
lemmas  Run the Monte Carlo rank-identity battery.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 construction
failure (with diagnostic JSON on stdout).
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import __version__
from .channel import (
    SystemConfig,
    channel_to_json,
    deactivate_relay_antennas,
    derived_rng,
    sample_channel_set,
)
from .dof import achievable_basic, achievable_improved, asymptotic_dof, outer_bound_per_user
from .errors import (
    AlignmentDegenerate,
    ExtensionOverflow,
    IndependenceViolation,
    InternalPlanError,
    ProjectorCollapse,
    SupplyExhausted,
)
from .lemmas import (
    check_direct_sum,
    check_intersection,
    check_scaling,
    check_stacked_rank,
    default_battery,
)
from .relay import build_relay_processor, estimate_dof_slope, verify_end_to_end
from .units import RANDOM, execute_plan, plan_alignment

CONSTRUCTION_ERRORS = (
    ExtensionOverflow,
    AlignmentDegenerate,
    SupplyExhausted,
    ProjectorCollapse,
    IndependenceViolation,
    InternalPlanError,
)

CSV_HEADER = "ratio_num,ratio_den,ratio,value_num,value_den,value,mode,capacity_tight"

DEFAULT_SNR_SWEEP_DB = (40.0, 50.0, 60.0)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _parse_ratios(spec: str, parser: argparse.ArgumentParser) -> list[Fraction]:
    spec = spec.strip()
    if spec.startswith("farey:"):
        try:
            top = int(spec.split(":", 1)[1])
        except ValueError:
            parser.error(f"bad ratio grid spec {spec!r}")
        if top < 1:
            parser.error("farey grid denominator bound must be positive")
        grid = {Fraction(p, q) for q in range(1, top + 1) for p in range(1, q + 1)}
        return sorted(grid)
    try:
        ratios = sorted({Fraction(part) for part in spec.split(",") if part.strip()})
    except (ValueError, ZeroDivisionError):
        parser.error(f"bad ratio list {spec!r}")
    if not ratios or any(r <= 0 for r in ratios):
        parser.error("ratios must be positive rationals")
    return ratios


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _frac_json(x: Fraction):
    return {"num": x.numerator, "den": x.denominator, "value": float(x)}


def cmd_curve(args, parser) -> int:
    ratios = _parse_ratios(args.ratios, parser)
    if args.k == "inf":
        if args.mode == "outer":
            parser.error("--mode outer is not defined for --k inf")
        mode_tag = f"asymptotic-{args.mode}"
    else:
        try:
            k = int(args.k)
        except ValueError:
            parser.error(f"--k must be an integer >= 3 or 'inf', got {args.k!r}")
        if k < 3:
            parser.error(f"--k must be >= 3, got {k}")
        mode_tag = args.mode

    lines = [CSV_HEADER]
    for ratio in ratios:
        m, n = ratio.numerator, ratio.denominator
        if args.k == "inf":
            value = asymptotic_dof(ratio, improved=args.mode == "improved")
            tight = False
        elif args.mode == "outer":
            res = outer_bound_per_user(m, n, k)
            value, tight = res.d_user / n, res.capacity_tight
        elif args.mode == "basic":
            res = achievable_basic(m, n, k)
            value, tight = res.d_user / n, res.capacity_tight
        else:
            res = achievable_improved(m, n, k)
            value, tight = res.d_user / n, res.capacity_tight
        if args.half_duplex:
            value = value / 2
        lines.append(
            f"{ratio.numerator},{ratio.denominator},{float(ratio)!r},"
            f"{value.numerator},{value.denominator},{float(value)!r},"
            f"{mode_tag},{str(tight).lower()}"
        )
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _plan_json(plan) -> dict:
    return {
        "m": plan.m,
        "n": plan.n,
        "k": plan.k,
        "improved": plan.improved,
        "extension": plan.extension,
        "active_relay": plan.active_relay,
        "dims_used": plan.dims_used,
        "predicted_d_user": _frac_json(plan.predicted_d_user),
        "allocations": [
            {
                "group": list(a.group),
                "pattern_order": a.pattern_order,  # 0 means random directions
                "count": a.count,
            }
            for a in plan.allocations
        ],
    }


def _vector_json(v) -> list:
    return [[float(z.real), float(z.imag)] for z in v]


def _unit_json(unit) -> dict:
    return {
        "pattern_order": unit.pattern_order,
        "group": list(unit.group),
        "column_block": unit.column_block,
        "beamformers": {f"{a},{b}": _vector_json(u) for (a, b), u in sorted(unit.beamformers.items())},
        "equivalent_uplink": {
            f"{a},{b}": _vector_json(h) for (a, b), h in sorted(unit.equivalent_uplink.items())
        },
    }


def _report_json(report) -> dict:
    d_sum = report.counted_d_sum
    return {
        "pass": report.passed,
        "d_sum": int(d_sum) if d_sum.denominator == 1 else float(d_sum),
        "d_sum_exact": _frac_str(d_sum),
        "streams": [
            {
                "unit": rec.unit,
                "pair": list(rec.pair),
                "desired": rec.desired,
                "partner": rec.partner,
                "leakage": rec.leakage,
            }
            for rec in report.streams
        ],
    }


def _run_construction(m: int, n: int, k: int, seed: int, improved: bool):
    plan = plan_alignment(m, n, k, improved)
    cfg = SystemConfig(m=m, n=n, k=k, extension=plan.extension, seed=seed)
    channels = sample_channel_set(cfg)
    if plan.active_relay < channels.active_relay:
        channels = deactivate_relay_antennas(channels, plan.active_relay)
    units = execute_plan(plan, channels, rng=derived_rng(seed, stream=1))
    processor = build_relay_processor(units, channels, rng=derived_rng(seed, stream=2))
    report = verify_end_to_end(channels, units, processor, cfg.tol)
    return plan, channels, units, processor, report


def cmd_build(args, parser) -> int:
    try:
        plan, channels, units, processor, report = _run_construction(
            args.m, args.n, args.k, args.seed, args.improved
        )
    except CONSTRUCTION_ERRORS as exc:
        _emit(json.dumps({"error": type(exc).__name__, "message": str(exc)}, indent=2) + "\n",
              args.out)
        return 3
    doc = {
        "config": {"m": args.m, "n": args.n, "k": args.k, "seed": args.seed,
                   "improved": args.improved},
        "plan": _plan_json(plan),
        "channels": channel_to_json(channels),
        "units": [_unit_json(u) for u in units],
        "report": _report_json(report),
    }
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0 if report.passed else 1


def cmd_verify(args, parser) -> int:
    expected = (achievable_improved if args.improved else achievable_basic)(
        args.m, args.n, args.k
    )
    expected_sum = expected.d_sum
    rows = []
    passes = 0
    for offset in range(args.seeds):
        seed = args.seed + offset
        try:
            plan, channels, units, processor, report = _run_construction(
                args.m, args.n, args.k, seed, args.improved
            )
        except CONSTRUCTION_ERRORS as exc:
            _emit(json.dumps({"error": type(exc).__name__, "message": str(exc),
                              "seed": seed}, indent=2) + "\n", args.out)
            return 3
        ok = report.passed and report.counted_d_sum == expected_sum
        row = {
            "seed": seed,
            "pass": report.passed,
            "d_sum": _frac_str(report.counted_d_sum),
            "d_sum_matches": report.counted_d_sum == expected_sum,
        }
        if args.snr_sweep:
            slope = estimate_dof_slope(channels, units, processor, DEFAULT_SNR_SWEEP_DB)
            target = float(report.counted_d_sum)
            slope_ok = target > 0 and abs(slope - target) <= 0.05 * target
            row["slope"] = slope
            row["slope_ok"] = slope_ok
            ok = ok and slope_ok
        row["ok"] = ok
        passes += ok
        rows.append(row)
    summary = {
        "config": {"m": args.m, "n": args.n, "k": args.k, "improved": args.improved},
        "expected_d_user": _frac_json(expected.d_user),
        "expected_d_sum": _frac_json(expected_sum),
        "seeds": args.seeds,
        "passes": passes,
        "all_pass": passes == args.seeds,
        "runs": rows,
    }
    _emit(json.dumps(summary, indent=2) + "\n", args.out)
    return 0 if passes == args.seeds else 1


def _lemma_json(result) -> dict:
    return {
        "lemma": result.lemma_id.value,
        "params": result.params,
        "trials": result.trials,
        "failures": result.failures,
        "expected": result.expected_value,
        "observed": {str(k): v for k, v in sorted(result.observed.items())},
        "failure_trials": result.failure_trials,
    }


def cmd_lemmas(args, parser) -> int:
    if args.config:
        with open(args.config) as fh:
            spec = json.load(fh)
        results = []
        for i, (m, n) in enumerate(spec.get("intersection", [])):
            results.append(check_intersection(m, n, args.trials, args.seed + i))
        for i, (k, m, n) in enumerate(spec.get("stacked_rank", [])):
            results.append(check_stacked_rank(k, m, n, args.trials, args.seed + 100 + i))
        for i, row in enumerate(spec.get("direct_sum", [])):
            k, t, m, n = row[:4]
            ext = row[4] if len(row) > 4 else 1
            results.append(check_direct_sum(k, t, m, n, args.trials, args.seed + 200 + i, ext))
        for block in spec.get("scaling", []):
            results.append(check_scaling(
                block["k"],
                [tuple(p) for p in block["grid"]],
                block["sigmas"],
            ))
    else:
        results = default_battery(args.trials, args.seed)
    total_failures = sum(r.failures for r in results)
    doc = {"results": [_lemma_json(r) for r in results], "total_failures": total_failures}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0 if total_failures == 0 else 1


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssalign",
        description="Signal-space alignment construction, verification, and DoF curves "
                    "for MIMO multiway relaying with pairwise data exchange.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    curve = sub.add_parser("curve", help="emit exact DoF curves as CSV")
    curve.add_argument("--k", required=True,
                       help="user count (integer >= 3) or 'inf' for the many-user limit")
    curve.add_argument("--mode", choices=["outer", "basic", "improved"], default="basic")
    curve.add_argument("--ratios", default="farey:48",
                       help="comma list of rationals (e.g. '2/3,7/16') or 'farey:<q>' for "
                            "all reduced fractions in (0, 1] with denominator <= q "
                            "(default farey:48)")
    curve.add_argument("--half-duplex", action="store_true",
                       help="halve emitted values for half-duplex operation")
    curve.add_argument("--out", help="write CSV here instead of stdout")

    build = sub.add_parser("build", help="construct and verify one realization")
    build.add_argument("--m", type=_positive_int, required=True, help="antennas per user")
    build.add_argument("--n", type=_positive_int, required=True, help="relay antennas")
    build.add_argument("--k", type=_positive_int, required=True, help="user count (>= 3)")
    build.add_argument("--seed", type=int, default=0)
    build.add_argument("--improved", action="store_true",
                       help="allow relay-antenna deactivation")
    build.add_argument("--out", help="write JSON here instead of stdout")

    verify = sub.add_parser("verify", help="sweep seeds and summarize verification")
    verify.add_argument("--m", type=_positive_int, required=True)
    verify.add_argument("--n", type=_positive_int, required=True)
    verify.add_argument("--k", type=_positive_int, required=True)
    verify.add_argument("--seeds", type=_positive_int, required=True,
                        help="number of consecutive seeds to run")
    verify.add_argument("--seed", type=int, default=0, help="first seed of the sweep")
    verify.add_argument("--improved", action="store_true")
    verify.add_argument("--snr-sweep", action="store_true",
                        help="also check the high-SNR rate slope per seed")
    verify.add_argument("--out", help="write JSON here instead of stdout")

    lemmas = sub.add_parser("lemmas", help="Monte Carlo rank-identity battery")
    lemmas.add_argument("--trials", type=_positive_int, default=100)
    lemmas.add_argument("--seed", type=int, default=0)
    lemmas.add_argument("--config", help="JSON file overriding the built-in grids")
    lemmas.add_argument("--out", help="write JSON here instead of stdout")

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "curve":
        return cmd_curve(args, parser)
    if args.command == "build":
        if args.k < 3:
            parser.error(f"--k must be >= 3, got {args.k}")
        return cmd_build(args, parser)
    if args.command == "verify":
        if args.k < 3:
            parser.error(f"--k must be >= 3, got {args.k}")
        return cmd_verify(args, parser)
    return cmd_lemmas(args, parser)


if __name__ == "__main__":
    sys.exit(main())
