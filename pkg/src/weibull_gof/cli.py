"""Command-line interface: ``weibull-gof {test,power,critical-values,fibers}``.

Exit codes: 0 = ran and did not reject, 1 = ``test`` rejected the null,
2 = usage or data error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import backend
from .bootstrap import DEFAULT_B, TestConfig, critical_value, order_index, run_tests
from .datasets import BUILTIN
from .distributions import as_sample
from .errors import GofError, MalformedNumber, NoPositiveValues
from .estimators import EstimatorKind, fit
from .power import (
    DESK_B,
    DESK_REPLICATIONS,
    FULL_B,
    FULL_REPLICATIONS,
    PAPER_TESTS,
    StudyConfig,
    resolve_alternatives,
    run_table,
)
from .statistic import WeightFamily, WeightSpec, closed_form_values

EXIT_ACCEPT, EXIT_REJECT, EXIT_ERROR = 0, 1, 2

#: published p-values for (T1_5, T2_5) on the four fiber datasets
PAPER_FIBER_P = {
    "fibers-1mm": (0.189, 0.180),
    "fibers-10mm": (0.013, 0.019),
    "fibers-20mm": (0.215, 0.219),
    "fibers-50mm": (0.228, 0.218),
}

_SPLIT = re.compile(r"[\s,]+")
# commas inside a row label such as W(1,1.5) do not separate names
_ALT_SPLIT = re.compile(r",(?![^(]*\))")


@dataclass(frozen=True)
class ParseReport:
    parsed_lines: int
    skipped_lines: int
    values: int


@dataclass(frozen=True)
class InputDataset:
    values: np.ndarray
    source: str
    parse_report: ParseReport


def parse_text(text: str, source: str = "<text>") -> InputDataset:
    """Parse decimals separated by whitespace, commas or newlines.

    Blank lines and ``#`` comment lines are skipped and counted.  A token
    that is not a number raises :class:`MalformedNumber` with its line; any
    value that is not finite and positive raises :class:`NoPositiveValues`.
    """
    values: list[float] = []
    parsed = skipped = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.strip()
        if not body or body.startswith("#"):
            skipped += 1
            continue
        parsed += 1
        for token in _SPLIT.split(body):
            if not token:
                continue
            try:
                v = float(token)
            except ValueError:
                raise MalformedNumber(token, lineno) from None
            if not (np.isfinite(v) and v > 0):
                raise NoPositiveValues(f"line {lineno}: {token!r} is not a finite positive value")
            values.append(v)
    if not values:
        raise NoPositiveValues(f"{source}: no values found")
    return InputDataset(np.array(values), source, ParseReport(parsed, skipped, len(values)))


def ingest(path_or_builtin: str) -> InputDataset:
    """Load a builtin dataset by name or parse a text file."""
    if path_or_builtin in BUILTIN:
        vals = np.array(BUILTIN[path_or_builtin], dtype=np.float64)
        return InputDataset(vals, path_or_builtin, ParseReport(vals.size, 0, vals.size))
    path = Path(path_or_builtin)
    if not path.is_file():
        raise FileNotFoundError(f"no such file or builtin dataset: {path_or_builtin}")
    return parse_text(path.read_text(encoding="utf-8"), str(path))


def write_sample(path, values) -> None:
    """Write one value per line with shortest round-trip precision."""
    x = as_sample(values)
    Path(path).write_text("".join(repr(float(v)) + "\n" for v in x), encoding="utf-8")


# -- argument handling ---------------------------------------------------------


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _int_list(text):
    try:
        out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not out or any(v < 2 for v in out):
        raise argparse.ArgumentTypeError("sample sizes must be integers >= 2")
    return out


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _add_test_flags(p, b_default=DEFAULT_B):
    p.add_argument("--weight", choices=["exp", "gauss"], default="exp", help="weight family (default exp)")
    p.add_argument("--a", type=float, default=5.0, help="tuning parameter (default 5)")
    p.add_argument("--estimator", choices=["mle", "moments"], default="mle")
    p.add_argument("--b", type=_positive_int, default=b_default, help="bootstrap replicates")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--json", action="store_true", help="print the machine-readable report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weibull-gof",
        description="Weibull goodness-of-fit tests based on the empirical Laplace transform.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="bootstrap test of one dataset")
    p.add_argument("data", help="text file of positive decimals or a builtin (fibers-1mm, ...)")
    _add_test_flags(p)

    p = sub.add_parser("critical-values", help="bootstrap critical values of all six statistics")
    p.add_argument("data")
    p.add_argument("--estimator", choices=["mle", "moments"], default="mle")
    p.add_argument("--b", type=_positive_int, default=DEFAULT_B)
    p.add_argument("--alpha", type=float, nargs="+", default=[0.10, 0.05, 0.01])
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("fibers", help="the four carbon-fibre datasets with T1_5 and T2_5")
    p.add_argument("--a", type=float, default=5.0)
    p.add_argument("--estimator", choices=["mle", "moments"], default="mle")
    p.add_argument("--b", type=_positive_int, default=DEFAULT_B)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("power", help="Monte Carlo rejection percentages")
    p.add_argument("--alts", default="all", help="comma list: all, weibull-null, alternatives or row labels")
    p.add_argument("--n", type=_int_list, default=[20, 50], help="sample sizes, e.g. 20,50")
    p.add_argument("--tests", default=None, help="comma list of labels such as T1_5,T2_1 (default: all six)")
    p.add_argument("--reps", type=_positive_int, default=None, help=f"replications (default {DESK_REPLICATIONS})")
    p.add_argument("--b", type=_positive_int, default=None, help=f"bootstrap replicates (default {DESK_B})")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--estimator", choices=["mle", "moments"], default="mle")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--full", action="store_true", help=f"{FULL_REPLICATIONS} replications, b={FULL_B}")
    p.add_argument("--quick", action="store_true", help="only the recommended statistic T1_5")
    p.add_argument("--out", default=None, help="write <out>.csv and <out>.txt")
    return parser


# -- commands ------------------------------------------------------------------


def _check_alpha(alpha):
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie strictly between 0 and 1, got {alpha}")


def _format_report(rep, dataset: InputDataset) -> str:
    cfg = rep.config
    lo, med, hi = rep.replicate_summary
    pr = dataset.parse_report
    lines = [
        f"data:            {dataset.source} (n={rep.statistic.n}, {pr.parsed_lines} lines parsed, "
        f"{pr.skipped_lines} skipped)",
        f"fit ({cfg.estimator.value}):       lambda={rep.fitted.lam:.6g}  k={rep.fitted.k:.6g}",
        f"statistic:       {cfg.weight.label} = {rep.statistic.value:.6g}",
        f"bootstrap:       b={cfg.b}, seed={cfg.seed}, replicates min/median/max = "
        f"{lo:.4g} / {med:.4g} / {hi:.4g}",
        f"critical value:  {rep.critical_value:.6g} (order statistic {order_index(cfg.b, cfg.alpha)} of {cfg.b})",
        f"p-value:         {rep.p_value:.4f}",
        f"decision:        {'reject' if rep.reject else 'do not reject'} Weibull at alpha={cfg.alpha:g}",
    ]
    if rep.redraws or rep.ties or rep.failed_replicates:
        lines.append(
            f"notes:           {rep.redraws} replicate redraws, {rep.failed_replicates} failed, "
            f"{rep.ties} replicates tie the statistic"
        )
    return "\n".join(lines)


def cmd_test(args) -> int:
    _check_alpha(args.alpha)
    ds = ingest(args.data)
    cfg = TestConfig(WeightSpec(args.weight, args.a), args.estimator, args.b, args.alpha, args.seed)
    rep = run_tests(ds.values, [cfg.weight], cfg.estimator, cfg.b, cfg.alpha, cfg.seed)[0]
    if args.json:
        print(json.dumps(rep.to_json(), indent=2))
    else:
        print(_format_report(rep, ds))
    return EXIT_REJECT if rep.reject else EXIT_ACCEPT


def cmd_critical_values(args) -> int:
    for a in args.alpha:
        _check_alpha(a)
    ds = ingest(args.data)
    x = ds.values
    kind = EstimatorKind(args.estimator)
    fitted = fit(x, kind)
    stats = closed_form_values(x, fitted, PAPER_TESTS)
    reps, _, _ = backend.kernels.bootstrap(
        [args.seed], [fitted.lam], [fitted.k], x.size, args.b, kind.code,
        [t.code for t in PAPER_TESTS], [t.a for t in PAPER_TESTS], backend.thread_count(),
    )
    srt = np.sort(reps[0], axis=0)
    table = {}
    for j, t in enumerate(PAPER_TESTS):
        col = srt[np.isfinite(srt[:, j]), j]
        table[t.label] = {
            "statistic": float(stats[j]),
            "critical_values": {f"{a:g}": critical_value(col, a) for a in args.alpha},
        }
    if args.json:
        payload = {"n": int(x.size), "b": args.b, "seed": args.seed, "estimator": kind.value,
                   "lambda_hat": fitted.lam, "k_hat": fitted.k, "tests": table}
        print(json.dumps(payload, indent=2))
        return EXIT_ACCEPT
    print(f"{ds.source}: n={x.size}, lambda={fitted.lam:.6g}, k={fitted.k:.6g}, b={args.b}, seed={args.seed}")
    print(f"{'test':<8}{'T_n':>12}" + "".join(f"{'c(' + format(a, 'g') + ')':>12}" for a in args.alpha))
    for label, row in table.items():
        cvs = "".join(f"{v:>12.5g}" for v in row["critical_values"].values())
        print(f"{label:<8}{row['statistic']:>12.5g}{cvs}")
    return EXIT_ACCEPT


def cmd_fibers(args) -> int:
    _check_alpha(args.alpha)
    weights = [WeightSpec(WeightFamily.EXP, args.a), WeightSpec(WeightFamily.GAUSS, args.a)]
    rows = []
    for name in BUILTIN:
        reports = run_tests(BUILTIN[name], weights, args.estimator, args.b, args.alpha, args.seed)
        rows.append((name, reports))
    if args.json:
        print(json.dumps([dict(r.to_json(), dataset=name) for name, reps in rows for r in reps], indent=2))
        return EXIT_ACCEPT
    print(f"p-values of failure stresses (b={args.b}, seed={args.seed}, estimator={args.estimator})")
    head = "".join(f"{w.label:>10}" for w in weights)
    paper = "   paper (T1_5, T2_5)" if args.a == 5.0 else ""
    print(f"{'dataset':<13}{'n':>4}{'lambda':>9}{'k':>8}{head}{paper}")
    for name, reps in rows:
        fit = reps[0].fitted
        ps = "".join(f"{r.p_value:>10.3f}" for r in reps)
        ref = f"   {PAPER_FIBER_P[name][0]:.3f}, {PAPER_FIBER_P[name][1]:.3f}" if paper else ""
        print(f"{name:<13}{reps[0].statistic.n:>4}{fit.lam:>9.4f}{fit.k:>8.4f}{ps}{ref}")
    return EXIT_ACCEPT


def cmd_power(args) -> int:
    _check_alpha(args.alpha)
    alts = resolve_alternatives(_ALT_SPLIT.split(args.alts))
    reps = FULL_REPLICATIONS if args.full else DESK_REPLICATIONS
    b = FULL_B if args.full else DESK_B
    reps = args.reps or reps
    b = args.b or b
    if args.tests:
        tests = tuple(WeightSpec.parse(t) for t in args.tests.split(",") if t.strip())
    elif args.quick:
        tests = (WeightSpec(WeightFamily.EXP, 5.0),)
    else:
        tests = PAPER_TESTS
    cfg = StudyConfig(tuple(alts), tuple(args.n), tests, reps, b, args.alpha, args.estimator, args.seed)

    def progress(alt, n, status):
        print(f"[power] {alt} n={n}: {status}", file=sys.stderr, flush=True)

    table = run_table(cfg, progress=progress)
    text = table.to_text()
    csv_text = table.to_csv()
    if args.out:
        base = Path(args.out)
        if base.suffix in (".csv", ".txt"):
            base = base.with_suffix("")
        base.parent.mkdir(parents=True, exist_ok=True)
        base.with_suffix(".csv").write_text(csv_text, encoding="utf-8")
        base.with_suffix(".txt").write_text(text + "\n", encoding="utf-8")
    print(text)
    statuses = {c.status for c in table.cells}
    failed = any(s.startswith("failed") for s in statuses)
    return EXIT_ERROR if failed and "ok" not in statuses else EXIT_ACCEPT


COMMANDS = {
    "test": cmd_test,
    "critical-values": cmd_critical_values,
    "fibers": cmd_fibers,
    "power": cmd_power,
}


def _error_payload(exc) -> dict:
    return {"error": type(exc).__name__, "message": str(exc), "exit_code": EXIT_ERROR}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (GofError, ValueError, FileNotFoundError, OSError) as exc:
        if getattr(args, "json", False):
            print(json.dumps(_error_payload(exc), indent=2))
        else:
            print(f"weibull-gof: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
