"""Command-line surface.

Subcommands
-----------
gen      stream generated records (CSV or JSON Lines), with checkpointing
stats    log statistics of a serialized trigger-list form
table    milestone or window summary tables (printed or CSV)
ki       smallest window length k with G >= L for a base index
gl       one window's G/L/R/D values
verify   sweep all per-record checks up to a horizon
oracle   brute-force ground truth on small integers
osc      oscillation geometry: eval, contour, margin-scan, prime-scan,
         deltaphi

Exit codes: 0 success, 1 usage/domain error, 2 resource exhaustion,
3 verification failure, 4 tie witness (two indistinguishable candidate
exponents — never silently resolved).

Every config knob can also be set through an environment variable with
the ``CABUNDANT_`` prefix (e.g. ``CABUNDANT_SIEVE_LIMIT``); explicit
flags win over the environment, which wins over defaults.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, TextIO

from . import engine, oracle, oscillation, robin
from .errors import CabundantError, UsageError, VerificationError
from .factored import (
    DEFAULT_MATERIALIZE_BOUND,
    TopDownForm,
    log_stats,
    materialize,
)
from .primes import build_sieve

ENV_PREFIX = "CABUNDANT_"

#: Default sieve limit for CLI runs: ample headroom for the reference
#: horizon (largest prime touched there is below 2e6).
CLI_SIEVE_LIMIT = 2_000_000

OUTPUT_FORMATS = ("csv", "jsonl")


@dataclass
class RunConfig:
    """Resolved configuration shared by all subcommands."""

    sieve_limit: int = CLI_SIEVE_LIMIT
    count: Optional[int] = None
    checkpoint_path: Optional[str] = None
    resume_path: Optional[str] = None
    output_format: str = "csv"
    k_max: int = 500
    b: float = 0.5
    delta: float = 0.5
    materialize_bound: int = DEFAULT_MATERIALIZE_BOUND
    checkpoint_every: int = 4096

    def __post_init__(self):
        if self.sieve_limit < 2:
            raise UsageError(
                f"sieve limit must be >= 2, got {self.sieve_limit}"
            )
        if self.output_format not in OUTPUT_FORMATS:
            raise UsageError(
                f"output format must be one of {OUTPUT_FORMATS}, "
                f"got {self.output_format!r}"
            )
        if self.k_max < 1:
            raise UsageError(f"k_max must be >= 1, got {self.k_max}")
        if self.materialize_bound < 2:
            raise UsageError(
                f"materialization bound must be >= 2, "
                f"got {self.materialize_bound}"
            )
        if self.checkpoint_every < 1:
            raise UsageError(
                f"checkpoint interval must be >= 1, "
                f"got {self.checkpoint_every}"
            )


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage failures raise :class:`UsageError`
    (exit code 1) instead of calling ``sys.exit(2)``."""

    def error(self, message):
        raise UsageError(message)


def _env(name: str, cast: Callable, default):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError as exc:
        raise UsageError(
            f"environment variable {ENV_PREFIX}{name} is not a valid "
            f"{cast.__name__}: {raw!r}"
        ) from exc


def _pick(flag_value, env_name: str, cast: Callable, default):
    if flag_value is not None:
        return flag_value
    return _env(env_name, cast, default)


def build_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        sieve_limit=_pick(
            getattr(args, "sieve_limit", None),
            "SIEVE_LIMIT",
            int,
            CLI_SIEVE_LIMIT,
        ),
        count=getattr(args, "count", None),
        checkpoint_path=_pick(
            getattr(args, "checkpoint", None), "CHECKPOINT_PATH", str, None
        ),
        resume_path=_pick(
            getattr(args, "resume", None), "RESUME_PATH", str, None
        ),
        output_format=_pick(
            getattr(args, "format", None), "OUTPUT_FORMAT", str, "csv"
        ),
        k_max=_pick(getattr(args, "k_max", None), "K_MAX", int, 500),
        b=_pick(getattr(args, "b", None), "B", float, 0.5),
        delta=_pick(getattr(args, "delta", None), "DELTA", float, 0.5),
        materialize_bound=_pick(
            getattr(args, "materialize_bound", None),
            "MATERIALIZE_BOUND",
            int,
            DEFAULT_MATERIALIZE_BOUND,
        ),
        checkpoint_every=_pick(
            getattr(args, "checkpoint_every", None),
            "CHECKPOINT_EVERY",
            int,
            4096,
        ),
    )


def _open_out(args) -> tuple[TextIO, bool]:
    path = getattr(args, "out", None)
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def _run_to(
    config: RunConfig, final_index: int, keep_forms=False
) -> engine.ArrayRecorder:
    """Cold run to ``final_index`` into a fresh recorder."""
    sieve = build_sieve(config.sieve_limit)
    recorder = engine.ArrayRecorder(final_index, keep_forms=keep_forms)
    engine.run_sequence(sieve, final_index, recorder)
    return recorder


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_gen(args) -> int:
    config = build_config(args)
    if config.count is None or config.count < 1:
        raise UsageError("--count must be a positive integer")
    sieve = build_sieve(config.sieve_limit)
    to_line = (
        engine.record_to_csv
        if config.output_format == "csv"
        else engine.record_to_jsonl
    )
    out, close = _open_out(args)
    try:
        if config.output_format == "csv":
            out.write(engine.CSV_HEADER + "\n")

        def sink(record):
            out.write(to_line(record) + "\n")

        if config.resume_path:
            state = engine.load_checkpoint(config.resume_path, sieve)
            final = state.counter + config.count
        else:
            state = None
            final = engine.SEED_COUNTER + config.count
        engine.run_sequence(
            sieve,
            final,
            sink,
            state=state,
            checkpoint_path=config.checkpoint_path,
            checkpoint_every=config.checkpoint_every,
        )
    finally:
        out.flush()
        if close:
            out.close()
    return 0


def cmd_stats(args) -> int:
    config = build_config(args)
    form = TopDownForm.parse(args.form)
    limit = max(config.sieve_limit, form.largest_prime + 1000)
    sieve = build_sieve(limit)
    stats = log_stats(form, sieve)
    print(f"form={form.serialize()}")
    print(f"v2={stats.v2}")
    print(f"ln_n={stats.ln_n!r}")
    print(f"ln_ln_n={stats.ln_ln_n!r}")
    print(f"lg_n={stats.lg_n!r}")
    print(f"lg_lg_n={stats.lg_lg_n!r}")
    print(f"ln_p1={stats.ln_P1!r}")
    print(f"ln_sigma_minus1={stats.ln_sigma_minus1!r}")
    if stats.ln_n > 1.0:
        print(f"X={robin.x_value(stats.ln_n, stats.ln_sigma_minus1)!r}")
    try:
        print(f"value={materialize(form, config.materialize_bound)}")
    except CabundantError:
        print(f"value=(exceeds bound {config.materialize_bound})")
    return 0


def _parse_indices(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part)
    except ValueError as exc:
        raise UsageError(f"bad index list {text!r}") from exc
    if not values:
        raise UsageError("empty index list")
    return values


def cmd_table(args) -> int:
    config = build_config(args)
    kind = {"table1": "milestones", "table3": "windows"}.get(
        args.kind, args.kind
    )
    out, close = _open_out(args)
    try:
        if kind == "milestones":
            indices = (
                _parse_indices(args.indices)
                if args.indices
                else robin.MILESTONE_INDICES
            )
            horizon = max(max(indices) + 1, 9)
            # k_i scans may look up to k_max past the base index; milestones
            # with an immediate window hit never need that much, so only
            # extend the run where it is cheap to do so.
            horizon = max(horizon, min(max(indices) + config.k_max, 600))
            recorder = _run_to(config, horizon)
            rows = robin.milestone_table(
                recorder, indices, k_max=config.k_max
            )
            text = (
                robin.milestone_table_csv(rows)
                if config.output_format == "csv" and args.printed is False
                else robin.format_milestone_table(rows)
            )
        elif kind == "windows":
            start = args.start if args.start is not None else 8
            stop = args.stop if args.stop is not None else 42
            extras = (
                _parse_indices(args.extras)
                if args.extras
                else (507, 508)
            )
            horizon = max([stop, *extras])
            recorder = _run_to(config, horizon)
            rows = robin.window_table(
                recorder, start=start, stop=stop, extras=extras
            )
            text = (
                robin.window_table_csv(rows)
                if config.output_format == "csv" and args.printed is False
                else robin.format_window_table(rows)
            )
        else:
            raise UsageError(f"unknown table kind {args.kind!r}")
        out.write(text + "\n")
    finally:
        out.flush()
        if close:
            out.close()
    return 0


def cmd_ki(args) -> int:
    config = build_config(args)
    recorder = _run_to(config, args.index + config.k_max)
    k = robin.find_ki(recorder, args.index, k_max=config.k_max)
    print(f"k({args.index}) = {'inf' if k is None else k}")
    return 0


def cmd_gl(args) -> int:
    config = build_config(args)
    recorder = _run_to(config, args.index + args.k)
    window = robin.gl_window(recorder, args.index, args.k)
    print(f"i={window.i} k={window.k}")
    print(f"G={window.g_value!r}")
    print(f"L={window.l_value!r}")
    print(f"R={window.r_value!r}")
    print(f"D={window.d_value!r}")
    print(f"identity_gap={window.identity_gap!r}")
    return 0


def cmd_verify(args) -> int:
    config = build_config(args)
    recorder = _run_to(config, max(args.horizon, 2))
    report = robin.verify_sweep(recorder, horizon=args.horizon)
    print(robin.format_verify_report(report))
    if not report.ok:
        return VerificationError("").exit_code
    return 0


def cmd_oracle(args) -> int:
    what = args.what
    if what == "mertens":
        if args.at is None:
            raise UsageError("oracle --what mertens requires --at N")
        sieve = build_sieve(max(args.at + 1, 100))
        print(f"{oracle.mertens_residual(sieve, args.at)!r}")
        return 0
    table = oracle.build_sigma_table(args.limit)
    if what == "sa":
        for n in oracle.brute_force_sa(table):
            print(n)
    elif what == "ca":
        for entry in oracle.brute_force_ca(table):
            print(f"{entry.n},{entry.witness!r}")
    elif what == "maximality":
        entries = oracle.brute_force_ca(table)
        report = oracle.maximality_report(table, entries)
        print(
            f"range=[{report.lo},{report.hi}] checked={report.checked} "
            f"violations={list(report.violations)}"
        )
        for n, x in report.small_values:
            print(f"excluded n={n} X={x!r}")
        if report.violations:
            return VerificationError("").exit_code
    else:
        raise UsageError(f"unknown oracle mode {what!r}")
    return 0


def cmd_osc(args) -> int:
    config = build_config(args)
    params = oscillation.OscParams(b=config.b, delta=config.delta)
    sub = args.osc_cmd
    out, close = _open_out(args)
    try:
        if sub == "eval":
            if args.mu is None or args.nu is None:
                raise UsageError("osc eval requires --mu and --nu")
            value = oscillation.osc_g(params, args.mu, args.nu)
            out.write(f"{value:.6g}\n")
        elif sub == "contour":
            levels = (
                tuple(float(p) for p in args.levels.split(","))
                if args.levels
                else (0.5, 1.0, 2.0)
            )
            data = oscillation.contour_data(
                params,
                mu_range=(args.lo, args.hi),
                nu_range=(args.lo, args.hi),
                resolution=args.resolution,
                levels=levels,
            )
            text = (
                oscillation.contour_gnuplot(data)
                if args.gnuplot
                else oscillation.contour_csv(data)
            )
            out.write(text + "\n")
        elif sub == "margin-scan":
            recorder = _run_to(config, args.index + args.max_k + 1)
            scan = oscillation.eligible_point_scan(
                params, recorder, args.index, args.max_k
            )
            if scan.found_k is None:
                out.write("not-found\n")
            else:
                out.write(f"found k={scan.found_k}\n")
            out.write("k,mu,nu,g\n")
            for row in range(len(scan.k)):
                out.write(
                    f"{int(scan.k[row])},{float(scan.mu[row])!r},"
                    f"{float(scan.nu[row])!r},{float(scan.g[row])!r}\n"
                )
        elif sub == "prime-scan":
            sieve = build_sieve(config.sieve_limit)
            scan = oscillation.prime_pair_margin_scan(
                params, sieve, args.start, args.pairs
            )
            out.write(f"pairs={scan.count}\n")
            out.write(f"hits={list(scan.hits)}\n")
            out.write(f"final_min={float(scan.final_min)!r}\n")
        elif sub == "deltaphi":
            sweep = oscillation.deltaphi_sweep()
            text = (
                oscillation.deltaphi_gnuplot(sweep)
                if args.gnuplot
                else oscillation.deltaphi_csv(sweep)
            )
            out.write(text + "\n")
        else:
            raise UsageError(f"unknown osc mode {sub!r}")
    finally:
        out.flush()
        if close:
            out.close()
    return 0


# --------------------------------------------------------------------------
# Parser assembly
# --------------------------------------------------------------------------

def _common_parent() -> argparse.ArgumentParser:
    parent = _Parser(add_help=False)
    parent.add_argument("--sieve-limit", type=int, default=None)
    parent.add_argument(
        "--format",
        choices=OUTPUT_FORMATS,
        default=None,
        help="record/table output format",
    )
    parent.add_argument("--k-max", type=int, default=None, dest="k_max")
    parent.add_argument("--b", type=float, default=None)
    parent.add_argument("--delta", type=float, default=None)
    parent.add_argument(
        "--materialize-bound", type=int, default=None
    )
    parent.add_argument("--checkpoint", default=None)
    parent.add_argument(
        "--checkpoint-every", type=int, default=None
    )
    parent.add_argument("--resume", default=None)
    parent.add_argument("--out", default=None, help="output path (- = stdout)")
    return parent


def make_parser() -> argparse.ArgumentParser:
    parent = _common_parent()
    parser = _Parser(prog="cabundant", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[parent])
    p.add_argument("--count", type=int, default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("stats", parents=[parent])
    p.add_argument("form", help="comma-separated trigger list, e.g. 5,2")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("table", parents=[parent])
    p.add_argument(
        "kind",
        choices=("milestones", "windows", "table1", "table3"),
        help="table1/table3 are aliases of milestones/windows",
    )
    p.add_argument("--indices", default=None)
    p.add_argument("--start", type=int, default=None)
    p.add_argument("--stop", type=int, default=None)
    p.add_argument("--extras", default=None)
    p.add_argument(
        "--printed",
        action="store_true",
        help="fixed-width layout instead of CSV",
    )
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("ki", parents=[parent])
    p.add_argument("--index", type=int, required=True)
    p.set_defaults(func=cmd_ki)

    p = sub.add_parser("gl", parents=[parent])
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_gl)

    p = sub.add_parser("verify", parents=[parent])
    p.add_argument("--horizon", type=int, default=508)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", parents=[parent])
    p.add_argument(
        "--what",
        choices=("ca", "sa", "mertens", "maximality"),
        default="ca",
    )
    p.add_argument("--limit", type=int, default=10_000)
    p.add_argument("--at", type=int, default=None)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("osc", parents=[parent])
    p.add_argument(
        "osc_cmd",
        choices=(
            "eval",
            "contour",
            "margin-scan",
            "prime-scan",
            "deltaphi",
        ),
    )
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--levels", default=None)
    p.add_argument("--lo", type=float, default=0.05)
    p.add_argument("--hi", type=float, default=10.0)
    p.add_argument("--resolution", type=int, default=201)
    p.add_argument("--gnuplot", action="store_true")
    p.add_argument("--index", type=int, default=9)
    p.add_argument("--max-k", type=int, default=100, dest="max_k")
    p.add_argument("--start", type=int, default=1)
    p.add_argument("--pairs", type=int, default=10_000)
    p.set_defaults(func=cmd_osc)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        parser = make_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return exc.exit_code
    except CabundantError as exc:
        kind = type(exc).__name__
        print(f"error ({kind}): {exc}", file=sys.stderr)
        return exc.exit_code
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
