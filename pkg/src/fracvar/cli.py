"""Command-line experiment harness writing CSV.

Exit codes: 0 ok, 1 I/O failure, 2 invalid parameters, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys

from .errors import FracvarError, NumericalFailure
from .kernels import Family, ProcessSpec, validate
from .sampler import (
    DENSE_LEVEL_CAP,
    FFT_LEVEL_CAP,
    dyadic_grid,
    half_integer_grid,
    simulate,
    uniform_grid,
)
from .singularity import Hypothesis, discriminate, power_study
from .variation import (
    calibrate_trifbm,
    estimate_hurst_v2,
    expected_qv,
    kurchenko_statistic,
    p_variation_sum,
    scaled_dyadic_sum,
    trifbm_calibration,
    weighted_qv,
)

STAT_COLUMNS = [
    "experiment", "process", "H", "K", "order", "level", "n",
    "stat", "param", "value", "reference", "rel_error", "seed",
]
PATH_COLUMNS = ["t", "value", "process", "H", "K", "order", "level", "n", "seed", "method"]
CALIBRATION_COLUMNS = [
    "H", "K", "HK", "alpha_critical", "limit", "matched", "level_min", "level_max", "method",
]
PROBE_PAIRS = ((0.5, 0.8), (0.4, 0.5))

log = logging.getLogger(__name__)


class UsageError(FracvarError, ValueError):
    pass


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--process", choices=[f.value for f in Family], default="fbm")
    common.add_argument("--hurst", type=float)
    common.add_argument("--k", type=float)
    common.add_argument("--order", type=int)
    common.add_argument("--t", type=float, default=1.0, help="horizon T")
    size = common.add_mutually_exclusive_group()
    size.add_argument("--level", type=int, help="dyadic level: 2^level intervals")
    size.add_argument("--n", type=int, help="number of intervals (half-integer count for kurchenko)")
    common.add_argument("--p", type=float, default=2.0)
    common.add_argument("--alpha", type=float)
    common.add_argument("--weight-exponent", help="number or 'auto' (2HK - 1)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--paths", type=int, default=1)
    common.add_argument("--alt-hurst", type=float)
    common.add_argument("--alt-k", type=float)
    common.add_argument("--method", choices=["auto", "cholesky", "circulant"], default="auto")
    common.add_argument("--out", default="-")
    common.add_argument("--format", choices=["csv"], default="csv")

    parser = argparse.ArgumentParser(prog="fracvar", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="draw one path")
    qv = sub.add_parser("qv", parents=[common], help="variation statistic of simulated paths")
    qv.add_argument(
        "--stat",
        choices=["pvar", "weighted", "scaled", "kurchenko"],
        help="default: weighted if --weight-exponent is given, scaled if --alpha is, else pvar",
    )
    eq = sub.add_parser("expected-qv", parents=[common], help="exact expectation of a variation sum")
    eq.add_argument("--stat", choices=["pvar", "weighted", "scaled"], default="weighted")
    eh = sub.add_parser("estimate-hurst", parents=[common], help="invert the second-difference statistic")
    eh.add_argument("--value", type=float, help="statistic to invert instead of simulating")
    sub.add_parser("discriminate", parents=[common], help="pick between two hypotheses on one path")
    power = sub.add_parser("power", parents=[common], help="correct-selection rate over many paths")
    power.add_argument("--records", action="store_true", help="also emit one row per path")
    sub.add_parser("calibrate-trifbm", parents=[common], help="critical exponent table for trifbm")
    return parser


def _spec(args, hurst=None, k=None) -> ProcessSpec:
    hurst = args.hurst if hurst is None else hurst
    k = args.k if k is None else k
    if hurst is None:
        raise UsageError("--hurst is required")
    fam = Family(args.process)
    if fam is Family.FBM:
        spec = ProcessSpec.fbm(hurst)
    elif fam is Family.NFBM:
        if args.order is None:
            raise UsageError("--order is required for nfbm")
        spec = ProcessSpec.nfbm(args.order, hurst)
    else:
        if k is None:
            raise UsageError(f"--k is required for {fam.value}")
        spec = ProcessSpec(fam, hurst, k)
    validate(spec)
    return spec


def _grid(args, spec, kurchenko=False):
    if kurchenko:
        if args.n is None:
            raise UsageError("--n (number of unit intervals) is required")
        if args.n < 1:
            raise UsageError("--n must be positive")
        return half_integer_grid(args.n)
    if args.level is not None:
        fft = spec.family is Family.FBM and args.method != "cholesky"
        return dyadic_grid(args.t, args.level, cap=FFT_LEVEL_CAP if fft else DENSE_LEVEL_CAP)
    if args.n is not None:
        return uniform_grid(args.t, args.n)
    raise UsageError("one of --level or --n is required")


def _auto_exponent(args, spec):
    raw = "auto" if args.weight_exponent is None else str(args.weight_exponent)
    if raw == "auto":
        if spec.family in (Family.BIFBM, Family.TRIFBM):
            return 2.0 * spec.hurst * spec.k - 1.0
        return 2.0 * spec.hurst - 1.0
    try:
        return float(raw)
    except ValueError:
        raise UsageError(f"--weight-exponent must be a number or 'auto', got {raw!r}") from None


def _alpha(args, spec):
    if args.alpha is not None:
        return args.alpha
    if spec.family is Family.TRIFBM:
        return trifbm_calibration(spec.hurst, spec.k).alpha
    raise UsageError("--alpha is required for this process")


def _seed(args, i):
    return (args.seed + i) % (1 << 64)


def _base_row(experiment, spec, grid, seed):
    half = spec.family is Family.FBM and experiment in ("discriminate", "power")
    return {
        "experiment": experiment,
        "process": spec.family.value,
        "H": spec.hurst,
        "K": spec.k,
        "order": spec.order,
        "level": grid.dyadic_level,
        # fbm hypotheses live on the half-integer grid of [0, n]
        "n": grid.intervals // 2 if half else grid.intervals,
        "seed": seed,
    }


def _stat_row(experiment, spec, grid, seed, result, param):
    row = _base_row(experiment, spec, grid, seed)
    row.update(
        stat=result.name,
        param=param,
        value=result.value,
        reference=result.reference,
        rel_error=result.rel_error,
    )
    return row


def _cmd_simulate(args):
    spec = _spec(args)
    grid = _grid(args, spec)
    path = simulate(spec, grid, args.seed, args.method)
    base = _base_row("simulate", spec, grid, path.seed)
    base["method"] = args.method
    rows = []
    for t, v in zip(grid.points, path.values):
        row = dict(base)
        row.update(t=float(t), value=float(v))
        rows.append(row)
    return PATH_COLUMNS, rows


def _evaluate(args, spec, path):
    if args.stat == "pvar":
        return p_variation_sum(path, args.p), args.p
    if args.stat == "weighted":
        w = _auto_exponent(args, spec)
        return weighted_qv(path, w), w
    if args.stat == "scaled":
        a = _alpha(args, spec)
        return scaled_dyadic_sum(path, a), a
    return kurchenko_statistic(path), args.n


def _cmd_qv(args):
    if args.stat is None:
        if args.weight_exponent is not None:
            args.stat = "weighted"
        elif args.alpha is not None:
            args.stat = "scaled"
        else:
            args.stat = "pvar"
    spec = _spec(args)
    kurchenko = args.stat == "kurchenko"
    if kurchenko and spec.family is not Family.FBM:
        raise UsageError("--stat kurchenko needs --process fbm")
    grid = _grid(args, spec, kurchenko)
    if args.paths < 1:
        raise UsageError("--paths must be positive")
    rows = []
    for i in range(args.paths):
        path = simulate(spec, grid, _seed(args, i), args.method)
        result, param = _evaluate(args, spec, path)
        row = _stat_row("qv", spec, grid, path.seed, result, param)
        if kurchenko:
            row["n"] = args.n
        rows.append(row)
    return STAT_COLUMNS, rows


def _cmd_expected_qv(args):
    spec = _spec(args)
    grid = _grid(args, spec)
    ref = None
    if args.stat == "scaled":
        if grid.dyadic_level is None:
            raise UsageError("--stat scaled needs --level")
        param = _alpha(args, spec)
        value = expected_qv(spec, grid, 0.0, 2.0 ** (param * grid.dyadic_level))
        if spec.family is Family.TRIFBM and spec.hk <= 0.5:
            cal = trifbm_calibration(spec.hurst, spec.k)
            if math.isclose(param, cal.alpha, abs_tol=0.01):
                ref = cal.limit * grid.horizon ** (2.0 * spec.hk)
    elif args.stat == "pvar":
        if args.p != 2.0:
            raise UsageError("exact expectations exist for p = 2 only")
        param = 2.0
        value = expected_qv(spec, grid)
    else:
        param = _auto_exponent(args, spec)
        value = expected_qv(spec, grid, param)
        if spec.family in (Family.BIFBM, Family.FBM):
            k = spec.k if spec.family is Family.BIFBM else 1.0
            if math.isclose(param, 2.0 * spec.hurst * k - 1.0, abs_tol=1e-9):
                ref = 2.0 ** (1.0 - k) * grid.horizon
    row = _base_row("expected-qv", spec, grid, None)
    row.update(
        stat=f"expected_{args.stat}",
        param=param,
        value=value,
        reference=ref,
        rel_error=None if not ref else abs(value - ref) / abs(ref),
    )
    return STAT_COLUMNS, [row]


def _cmd_estimate_hurst(args):
    if args.value is not None:
        h = estimate_hurst_v2(args.value)
        row = {c: None for c in STAT_COLUMNS}
        row.update(experiment="estimate-hurst", process="fbm", stat="estimate_hurst", param=args.value, value=h)
        return STAT_COLUMNS, [row]
    spec = _spec(args)
    if spec.family is not Family.FBM:
        raise UsageError("estimate-hurst needs --process fbm")
    grid = _grid(args, spec, kurchenko=True)
    rows = []
    for i in range(max(args.paths, 1)):
        path = simulate(spec, grid, _seed(args, i), args.method)
        stat = kurchenko_statistic(path)
        h = estimate_hurst_v2(stat.value)
        row = _base_row("estimate-hurst", spec, grid, path.seed)
        row.update(
            n=args.n,
            stat="estimate_hurst",
            param=stat.value,
            value=h,
            reference=spec.hurst,
            rel_error=abs(h - spec.hurst) / spec.hurst,
        )
        rows.append(row)
    return STAT_COLUMNS, rows


def _hypotheses(args):
    truth = _spec(args)
    if args.alt_hurst is None and args.alt_k is None:
        raise UsageError("--alt-hurst and/or --alt-k are required")
    alt_h = args.alt_hurst if args.alt_hurst is not None else truth.hurst
    alt_k = args.alt_k if args.alt_k is not None else truth.k
    alt = _spec(args, alt_h, alt_k)
    if truth.family is Family.NFBM:
        raise UsageError("no discriminator for nfbm")
    return truth, Hypothesis(truth, truth.label()), Hypothesis(alt, alt.label())


def _cmd_discriminate(args):
    truth, h1, h2 = _hypotheses(args)
    grid = _grid(args, truth, kurchenko=truth.family is Family.FBM)
    path = simulate(truth, grid, args.seed, args.method)
    res = discriminate(path, h1, h2)
    # the fbm discriminator shares one statistic between both hypotheses
    stats = res.statistics if len(res.statistics) == 2 else res.statistics * 2
    rows = []
    for h, stat, d in zip((h1, h2), stats, res.discrepancies):
        row = _base_row("discriminate", h.spec, grid, path.seed)
        row.update(stat=f"discrepancy_{stat.name}", param=h.label, value=d, reference=None, rel_error=None)
        rows.append(row)
    row = _base_row("discriminate", truth, grid, path.seed)
    row.update(stat="selected", param=res.selected, value=res.margin)
    rows.append(row)
    return STAT_COLUMNS, rows


def _cmd_power(args):
    truth, h1, h2 = _hypotheses(args)
    grid = _grid(args, truth, kurchenko=truth.family is Family.FBM)
    study = power_study(truth, h1, h2, args.paths, args.seed, grid, args.method)
    rows = []
    if args.records:
        for i, rec in enumerate(study.records):
            row = _base_row("power", truth, grid, _seed(args, i))
            row.update(stat="selected", param=rec.selected, value=rec.margin)
            rows.append(row)
    row = _base_row("power", truth, grid, args.seed)
    row.update(stat="rate", param=args.paths, value=study.rate, reference=1.0, rel_error=1.0 - study.rate)
    rows.append(row)
    return STAT_COLUMNS, rows


def calibration_rows(pairs):
    rows = []
    for h, k in pairs:
        cal = calibrate_trifbm(h, k)
        rows.append(
            {
                "H": cal.hurst,
                "K": cal.k,
                "HK": cal.hurst * cal.k,
                "alpha_critical": cal.alpha,
                "limit": cal.limit,
                "matched": cal.matched,
                "level_min": cal.levels[0],
                "level_max": cal.levels[-1],
                "method": cal.method,
            }
        )
    return rows


def _cmd_calibrate(args):
    if args.hurst is not None or args.k is not None:
        args.process = "trifbm"
        spec = _spec(args)
        pairs = [(spec.hurst, spec.k)]
    else:
        pairs = PROBE_PAIRS
    return CALIBRATION_COLUMNS, calibration_rows(pairs)


_COMMANDS = {
    "simulate": _cmd_simulate,
    "qv": _cmd_qv,
    "expected-qv": _cmd_expected_qv,
    "estimate-hurst": _cmd_estimate_hurst,
    "discriminate": _cmd_discriminate,
    "power": _cmd_power,
    "calibrate-trifbm": _cmd_calibrate,
}


def render_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        columns, rows = _COMMANDS[args.command](args)
    except NumericalFailure as exc:
        print(f"fracvar: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (FracvarError, ValueError) as exc:
        print(f"fracvar: invalid parameters: {exc}", file=sys.stderr)
        return 2
    text = render_csv(columns, rows)
    try:
        if args.out == "-":
            sys.stdout.write(text)
            sys.stdout.flush()
        else:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
    except OSError as exc:
        print(f"fracvar: cannot write output: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
