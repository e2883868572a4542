"""Command-line pipeline: sample -> reconstruct -> evaluate, plus sweeps.

Exit codes: 0 success, 1 a bound check failed, 2 reconstruction failed,
64 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .evaluation import RunConfig, check_bounds, run_pipeline, sweep, write_csv
from .oracle import OrdinalOracle
from .reconstruction import DegenerateSampleError, ReconstructionFailed, ReconstructionResult
from .repair import MetricMatrix
from .spaces import DEFAULT_RESOLUTION, SampleSet, make_space, hausdorff_to_space, sample

EXIT_BOUND = 1
EXIT_RECONSTRUCTION = 2
EXIT_USAGE = 64

THEOREM_FLAGS = ("lemma1", "lemma2", "lemma3", "thm2", "cor", "metric")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    # None defaults are described in the help text itself
    def _get_help_string(self, action):
        if action.default is None:
            return action.help
        return super()._get_help_string(action)


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _space_from_args(args):
    kind = args.space
    if kind == "segment":
        size = (args.length,)
    elif kind in ("circle", "sphere"):
        size = (args.radius,)
    elif args.sides is not None:
        size = tuple(args.sides)
    elif kind in ("box", "euclidean-box"):
        size = (1.0,) * args.dim
    else:
        size = (1.0, 1.0)
    try:
        return make_space(kind, size)
    except ValueError as e:
        raise UsageError(str(e))


def _dump(obj, path):
    text = json.dumps(obj, indent=None, separators=(",", ":"))
    Path(path).write_text(text + "\n")


def _load(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}")
    except json.JSONDecodeError as e:
        raise UsageError(f"{path} is not valid JSON: {e}")


def _sample_digest(obj):
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def _load_sample(path):
    obj = _load(path)
    try:
        return SampleSet.from_json(obj), obj
    except (KeyError, ValueError, TypeError) as e:
        raise UsageError(f"{path} is not a valid sample file: {e}")


def _config(args):
    try:
        return RunConfig(args.p_cap, args.repair_target, args.resolution)
    except ValueError as e:
        raise UsageError(str(e))


def cmd_sample(args) -> int:
    if args.n < 2:
        raise UsageError(f"--n must be at least 2, got {args.n}")
    space = _space_from_args(args)
    smp = sample(space, args.n, args.mode, args.seed)
    _dump(smp.to_json(), args.out)
    d_h = hausdorff_to_space(space, smp, args.resolution)
    print(f"wrote {smp.n} points to {args.out}; d_H = {d_h:.6g}")
    return 0


def cmd_reconstruct(args) -> int:
    smp, raw = _load_sample(args.sample)
    config = _config(args)
    try:
        result, d_n = run_pipeline(smp, config)
    except (ReconstructionFailed, DegenerateSampleError) as e:
        print(f"reconstruction failed: {e}", file=sys.stderr)
        return EXIT_RECONSTRUCTION
    out = result.to_json()
    out["d_n"] = d_n.values.tolist()
    out["repair_t"] = d_n.shift
    out["repair_target"] = config.repair_target
    out["n"] = smp.n
    out["sample_sha256"] = _sample_digest(raw)
    _dump(out, args.out)
    print(f"p_n = {result.p_n}, queries = {result.queries}, repair_t = {d_n.shift:.6g}")
    return 0


def cmd_evaluate(args) -> int:
    smp, raw = _load_sample(args.sample)
    obj = _load(args.result)
    if obj.get("sample_sha256") not in (None, _sample_digest(raw)) or obj.get("n", smp.n) != smp.n:
        raise UsageError(f"{args.result} was not produced from {args.sample}")
    try:
        result = ReconstructionResult.from_json(obj)
        d_n = MetricMatrix(np.array(obj["d_n"], dtype=float), float(obj.get("repair_t", float("nan"))))
    except (KeyError, ValueError, TypeError) as e:
        raise UsageError(f"{args.result} is not a valid result file: {e}")
    if result.brackets.n != smp.n or d_n.n != smp.n:
        raise UsageError(f"{args.result} matrices do not match the sample size {smp.n}")
    d_h = hausdorff_to_space(smp.space, smp, args.resolution)
    report = check_bounds(result, d_n, smp, d_h, OrdinalOracle.from_sample(smp))
    if args.out:
        _dump(report.to_json(), args.out)
    ok = all(report.passed[k] for k in THEOREM_FLAGS)
    for k in THEOREM_FLAGS:
        print(f"{k:8s} {'pass' if report.passed[k] else 'FAIL'}")
    print(f"sup|d - d+| = {report.sup_err_plus:.6g}, bound = {report.theorem2_rhs:.6g}, "
          f"ratio = {report.thm2_ratio:.3g}")
    return 0 if ok else EXIT_BOUND


def cmd_sweep(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    if not args.n_list or args.n_list != sorted(args.n_list) or min(args.n_list) < 2:
        raise UsageError("--n-list must be ascending integers >= 2")
    space = _space_from_args(args)
    config = _config(args)
    rows, fit = sweep(space, args.n_list, args.trials, args.base_seed, config, args.workers)
    with open(args.out, "w", newline="") as fh:
        write_csv(rows, fh)
    summary_path = args.summary or str(Path(args.out).with_suffix(".json"))
    theorem_ok = all(r.failed or (r.pass_lemma3 and r.pass_thm2 and r.pass_cor) for r in rows)
    summary = {
        "space": space.to_json(),
        "dim": space.dim,
        "n_list": fit.n,
        "mean_d_H": fit.mean_d_H,
        "fitted_exponent": fit.exponent,
        "fitted_K": fit.K,
        "rows": len(rows),
        "failed_rows": sum(r.failed for r in rows),
        "all_theorem_checks_passed": theorem_ok,
    }
    _dump(summary, summary_path)
    print(f"{len(rows)} rows -> {args.out}; exponent = {fit.exponent:.4f}, K = {fit.K:.4g}")
    return 0 if theorem_ok else EXIT_BOUND


def _add_space_args(p):
    p.add_argument("--space", required=True,
                   choices=["segment", "circle", "sphere", "torus", "flat-torus", "box", "euclidean-box"])
    p.add_argument("--length", type=float, default=1.0, help="segment length")
    p.add_argument("--radius", type=float, default=1.0, help="circle/sphere radius")
    p.add_argument("--sides", type=_floats, default=None,
                   help="torus/box side lengths, comma separated (default all 1)")
    p.add_argument("--dim", type=int, default=2, help="box dimension when --sides is absent")


def _add_run_args(p):
    p.add_argument("--p-cap", type=int, default=None,
                   help="deepest chain level explored (default: ceil(log2 n) + 2)")
    p.add_argument("--repair-target", choices=["d-plus", "midpoint-of-brackets"], default="d-plus",
                   help="matrix turned into the metric d_n")
    p.add_argument("--resolution", type=float, default=DEFAULT_RESOLUTION,
                   help="Hausdorff bracket resolution on surfaces")


def build_parser() -> argparse.ArgumentParser:
    fmt = _HelpFormatter
    parser = _Parser(prog="ordinal-metric", description=__doc__, formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="draw a sample and write it as JSON", formatter_class=fmt)
    _add_space_args(p)
    p.add_argument("--n", type=int, required=True, help="number of points (at least 2)")
    p.add_argument("--mode", choices=["uniform-iid", "grid"], default="uniform-iid",
                   help="i.i.d. uniform draw or deterministic grid")
    p.add_argument("--seed", type=int, default=0, help="RNG seed, ignored in grid mode")
    p.add_argument("--resolution", type=float, default=DEFAULT_RESOLUTION,
                   help="Hausdorff bracket resolution on surfaces")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("reconstruct", help="rebuild the metric from comparisons", formatter_class=fmt)
    p.add_argument("--sample", required=True)
    p.add_argument("--out", required=True)
    _add_run_args(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", help="check a result against ground truth", formatter_class=fmt)
    p.add_argument("--sample", required=True)
    p.add_argument("--result", required=True)
    p.add_argument("--out", default=None, help="report JSON path")
    p.add_argument("--resolution", type=float, default=DEFAULT_RESOLUTION,
                   help="Hausdorff bracket resolution on surfaces")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="i.i.d. sampling sweep over n", formatter_class=fmt)
    _add_space_args(p)
    p.add_argument("--n-list", type=_ints, default="64,128,256,512",
                   help="ascending sample sizes, comma separated")
    p.add_argument("--trials", type=int, default=20, help="samples per size")
    p.add_argument("--base-seed", type=int, default=0, help="combined with (n, trial) to seed each sample")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--out", required=True, help="CSV path")
    p.add_argument("--summary", default=None, help="summary JSON path (default: CSV path with .json)")
    _add_run_args(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"ordinal-metric {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
