"""Command-line interface: ``truncator {orbits,verify,random,spin}``.

Structured results go to stdout (or ``--out``) as JSON carrying
``"schema": "truncator/1"`` and the resolved configuration; histograms are
CSV.  Run metadata that may differ between runs (timestamp, worker count)
only goes to the ``--meta`` side file.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 capacity.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import io
import json
import math
import sys
import warnings

import numpy as np

from . import __version__
from .algebra import ShufflingMap
from .exceptions import CapacityError, TieError, TruncatorError
from .orbits import analyze
from .parallel import DEFAULT_SEED, default_jobs
from .random_maps import (
    MapMeasure,
    annealed_step_law_check,
    increment_chain_comparison,
    kernel_histogram,
    random_measure,
    return_time_distribution,
    uniform_measure,
)
from .spin_market import SpinModelParams, finite_beta_matrix, frozen_phi, frozen_successors, regime_report
from .sweeps import THEOREMS, run_sweep

SCHEMA = "truncator/1"

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_CAPACITY = 0, 1, 2, 3


class InputError(Exception):
    pass


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be a decimal 64-bit unsigned integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _nonnegative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def _beta(text: str) -> float:
    return math.inf if text.lower() in ("inf", "infinity") else float(text)


def _spin_triple(text: str) -> tuple[int, int, float]:
    try:
        L, d, alpha = text.split(",")
        return int(L), int(d), float(alpha)
    except ValueError:
        raise argparse.ArgumentTypeError("expected L,d,alpha (e.g. 4,1,3.0)") from None


def _sweep(text: str) -> tuple[float, float, int]:
    try:
        a0, a1, steps = text.split(":")
        return float(a0), float(a1), int(steps)
    except ValueError:
        raise argparse.ArgumentTypeError("expected A0:A1:steps (e.g. 0:6:601)") from None


def _labels(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated labels") from None


def _add_common(p: argparse.ArgumentParser, seeded: bool = False, parallel: bool = False) -> None:
    p.add_argument("--out", help="write the primary output here instead of stdout")
    p.add_argument("--meta", help="write run metadata (timestamp, jobs, version) to this JSON file")
    if seeded:
        p.add_argument("--seed", type=_seed, default=DEFAULT_SEED, help=f"master seed (default {DEFAULT_SEED})")
    if parallel:
        p.add_argument(
            "--jobs", type=_positive, default=None,
            help="worker processes (default: $TRUNCATOR_JOBS or 1); never changes the output",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="truncator", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("orbits", help="attractors, basins and transients of a map")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--map", help='map JSON file {"n_bits": N, "phi": [...]}; "-" reads stdin')
    src.add_argument("--spin", type=_spin_triple, help="frozen spin model L,d,alpha")
    p.add_argument("--radius", type=_positive, default=1, help="neighborhood radius for --spin")
    _add_common(p)

    p = sub.add_parser("verify", help="exhaustive or sampled theorem sweeps")
    p.add_argument(
        "--theorem", required=True, choices=THEOREMS,
        help="statement to check: 1, 2, 3 (polynomial form), period, gast4 (fourth-power identity)",
    )
    p.add_argument("--m", type=_positive, required=True, help="group order M (a power of two)")
    p.add_argument("--expensive", action="store_true", help="allow the 16.7M-map sweep at M=8")
    p.add_argument("--samples", type=_positive, help="check this many random maps instead of all maps")
    p.add_argument("--counterexamples", help="write counterexample records (JSON lines) to this file")
    p.add_argument("--progress", action="store_true", help="report progress on stderr")
    _add_common(p, seeded=True, parallel=True)

    p = sub.add_parser("random", help="random-map statistics and the annealed chain")
    p.add_argument("--n", type=_nonnegative, required=True, help="number of bits N (M = 2**N)")
    p.add_argument("--samples", type=_nonnegative, required=True, help="Monte Carlo samples")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--kernel-hist", action="store_true", help="kernel-size histogram (CSV)")
    mode.add_argument("--return-time", type=_positive, metavar="G", help="first-return law to element G")
    mode.add_argument("--chapman", action="store_true", help="two-step annealed law against Phi^2")
    mode.add_argument("--increment", type=_positive, metavar="G", help="increment-chain comparison from G")
    p.add_argument("--horizon", type=_positive, default=16, help="horizon for --return-time")
    p.add_argument("--p", type=_positive, default=3, help="number of increments for --increment")
    p.add_argument("--measure", help='measure JSON {"n_bits": N, "nu": [[...], ...]} (default uniform)')
    p.add_argument(
        "--random-measure", action="store_true", help="use a Dirichlet(1) measure drawn from --seed"
    )
    _add_common(p, seeded=True, parallel=True)

    p = sub.add_parser("spin", help="spin market model: frozen map, finite-beta matrix or alpha sweep")
    p.add_argument("--L", type=_positive, required=True, help="sites per axis")
    p.add_argument("--d", type=_positive, default=1, help="lattice dimension")
    p.add_argument("--alpha", type=float, help="global coupling")
    p.add_argument("--beta", type=_beta, default=math.inf, help="inverse temperature (default inf)")
    p.add_argument("--radius", type=_positive, default=1, help="l1 neighborhood radius")
    p.add_argument("--sweep", type=_sweep, help="alpha grid A0:A1:steps for a regime report")
    p.add_argument("--states", type=_labels, help="labels tracked by --sweep (default 1,M,M-1)")
    p.add_argument("--strict", action="store_true", help="treat zero truncation signs as errors")
    _add_common(p)
    return parser


def _config(args: argparse.Namespace) -> dict:
    skip = {"out", "meta", "jobs", "progress", "counterexamples"}
    cfg = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        if isinstance(value, float) and math.isinf(value):
            value = "inf"
        elif isinstance(value, tuple):
            value = list(value)
        cfg[key] = value
    return cfg


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _envelope(args, result) -> str:
    doc = {"schema": SCHEMA, "command": args.command, "config": _config(args), "result": result}
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def cmd_orbits(args) -> tuple[str, int]:
    if args.map is not None:
        phi = ShufflingMap.from_json(_read(args.map))
    else:
        L, d, alpha = args.spin
        phi = frozen_phi(SpinModelParams(L, d, alpha, math.inf, args.radius))
    return _envelope(args, analyze(phi).to_dict()), EXIT_OK


def _report_progress(done: int, total: int) -> None:
    print(f"verify: {done}/{total} chunks", file=sys.stderr)


def cmd_verify(args) -> tuple[str, int]:
    result = run_sweep(
        args.theorem, args.m, expensive=args.expensive, samples=args.samples,
        seed=args.seed, jobs=args.jobs, progress=_report_progress if args.progress else None,
    )
    if args.counterexamples:
        with open(args.counterexamples, "w", encoding="utf-8") as fh:
            for line in result.counterexample_lines():
                fh.write(line + "\n")
    return _envelope(args, result.summary()), EXIT_OK if result.passed else EXIT_FAIL


def _measure(args) -> MapMeasure:
    if args.measure:
        mu = MapMeasure.from_json(_read(args.measure))
        if mu.n_bits != args.n:
            raise InputError(f"measure has n_bits={mu.n_bits} but --n is {args.n}")
        return mu
    if args.random_measure:
        return random_measure(args.n, np.random.default_rng(args.seed))
    return uniform_measure(args.n)


def _csv_float(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def cmd_random(args) -> tuple[str, int]:
    if args.kernel_hist:
        hist = kernel_histogram(args.n, args.samples, args.seed, args.jobs)
        buf = io.StringIO()
        buf.write(f"# schema: {SCHEMA}\n")
        buf.write(f"# config: {json.dumps(_config(args))}\n")
        buf.write("k,exact,limit,estimate,stderr\n")
        for k, exact, limit, est, err in hist.rows():
            buf.write(f"{k},{_csv_float(exact)},{_csv_float(limit)},{_csv_float(est)},{_csv_float(err)}\n")
        return buf.getvalue(), EXIT_OK
    mu = _measure(args)
    if args.return_time is not None:
        dist = return_time_distribution(args.return_time, mu, args.horizon, args.samples, args.seed, args.jobs)
        return _envelope(args, dist.to_dict()), EXIT_OK
    if args.chapman:
        report = annealed_step_law_check(mu, max(args.samples, 10_000), args.seed, args.jobs)
        return _envelope(args, report.to_dict()), EXIT_OK
    report = increment_chain_comparison(args.increment, args.p, mu, max(args.samples, 1), args.seed, args.jobs)
    return _envelope(args, report), EXIT_OK


def cmd_spin(args) -> tuple[str, int]:
    if args.sweep is not None:
        a0, a1, steps = args.sweep
        if steps < 2 or a1 <= a0:
            raise InputError("--sweep needs A0 < A1 and at least 2 steps")
        n = args.L**args.d
        states = args.states or sorted({1, 1 << n, (1 << n) - 1})
        grid = np.linspace(a0, a1, steps)
        report = regime_report(args.L, args.d, grid, states=states, radius=args.radius)
        return _envelope(args, report), EXIT_OK
    if args.alpha is None:
        raise InputError("spin needs --alpha or --sweep")
    params = SpinModelParams(args.L, args.d, args.alpha, args.beta, args.radius)
    if params.frozen:
        phi = frozen_phi(params, strict=args.strict)
        return _envelope(args, phi.to_dict()), EXIT_OK
    matrix = finite_beta_matrix(params)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        succ, _ = frozen_successors(SpinModelParams(args.L, args.d, args.alpha, math.inf, args.radius))
    result = matrix.to_dict()
    result["frozen_successor"] = (succ + 1).tolist()
    result["row_argmax"] = (np.argmax(matrix.matrix, axis=1) + 1).tolist()
    return _envelope(args, result), EXIT_OK


COMMANDS = {"orbits": cmd_orbits, "verify": cmd_verify, "random": cmd_random, "spin": cmd_spin}


def _write_meta(path: str, args) -> None:
    meta = {
        "schema": SCHEMA,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "argv": sys.argv[1:],
        "jobs": getattr(args, "jobs", None),
        "config": _config(args),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "jobs") and args.jobs is None:
        args.jobs = default_jobs()
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            text, code = COMMANDS[args.command](args)
        for w in caught:
            print(f"truncator: warning: {w.message}", file=sys.stderr)
    except CapacityError as exc:
        print(f"truncator: capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (InputError, TieError, TruncatorError, ValueError) as exc:
        print(f"truncator: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.meta:
        _write_meta(args.meta, args)
    return code


if __name__ == "__main__":
    sys.exit(main())
