"""Monte Carlo power study: rejection percentages across data-generating laws.

Each row of a table is one (alternative, n) pair.  All tests of a row share
the same simulated samples and the same bootstrap replicates, exactly as if
every test had been run separately with the same seeds.  Row seeds are
derived from the master seed and the row label, so adding or removing rows
leaves the other rows unchanged.
"""

from __future__ import annotations

import csv
import io
import zlib
from dataclasses import dataclass, field

import numpy as np

from .bootstrap import calibrate
from .distributions import PAPER_ALTERNATIVES, UNAVAILABLE_REASON, WEIBULL_NULLS, Alternative
from .errors import GofError
from .estimators import EstimatorKind
from .rng import RngStream, derive_seed
from .statistic import WeightFamily, WeightSpec

PAPER_TESTS = tuple(WeightSpec(f, a) for f in (WeightFamily.EXP, WeightFamily.GAUSS) for a in (1.0, 2.0, 5.0))

DESK_REPLICATIONS, DESK_B = 1000, 200
FULL_REPLICATIONS, FULL_B = 5000, 500
MAX_SKIP_FRACTION = 0.001
# replications whose bootstrap replicates are held in memory at once
_CHUNK = 250

#: Published percentages for the six statistics T1_1, T1_2, T1_5, T2_1, T2_2, T2_5.
PAPER_POWER = {
    20: {
        "W(1,0.9)": (5, 6, 6, 5, 6, 6),
        "W(1,1.5)": (5, 5, 5, 5, 6, 5),
        "W(1,3)": (5, 5, 6, 5, 6, 6),
        "W(1/4,1)": (6, 6, 6, 6, 5, 5),
        "G(8,1)": (2, 5, 9, 5, 8, 11),
        "G(2,1)": (6, 5, 3, 3, 2, 3),
        "G(0.2,1)": (16, 12, 11, 0, 0, 0),
        "LN(0,0.5)": (24, 16, 19, 9, 15, 20),
        "LN(0,0.8)": (25, 15, 19, 8, 13, 22),
        "LN(0,1.2)": (20, 13, 19, 9, 12, 21),
        "iG(3,1)": (40, 47, 51, 49, 51, 51),
        "iG(1.5,1)": (61, 49, 60, 33, 45, 60),
        "GG1": (7, 9, 9, 9, 10, 9),
        "GG2": (10, 7, 11, 8, 11, 15),
        "AddW1": (5, 6, 6, 5, 6, 6),
        "AddW2": (80, 77, 77, 75, 77, 77),
        "P(0.5,2)": (8, 15, 20, 20, 21, 24),
        "P(1.5,2.5)": (9, 7, 10, 6, 9, 12),
        "IG(1,1)": (20, 27, 37, 32, 37, 39),
        "IG(1,2)": (24, 40, 46, 48, 51, 49),
    },
    50: {
        "W(1,0.9)": (5, 4, 5, 5, 5, 5),
        "W(1,1.5)": (5, 6, 5, 5, 6, 5),
        "W(1,3)": (5, 5, 5, 5, 5, 5),
        "W(1/4,1)": (6, 6, 6, 6, 5, 5),
        "G(8,1)": (16, 24, 31, 25, 31, 35),
        "G(2,1)": (11, 9, 7, 6, 4, 7),
        "G(0.2,1)": (31, 24, 19, 0, 0, 0),
        "LN(0,0.5)": (65, 57, 63, 50, 59, 62),
        "LN(0,0.8)": (62, 55, 65, 44, 57, 66),
        "LN(0,1.2)": (51, 40, 61, 30, 42, 62),
        "iG(3,1)": (92, 94, 93, 94, 93, 92),
        "iG(1.5,1)": (97, 96, 98, 93, 97, 98),
        "GG1": (10, 13, 12, 13, 12, 12),
        "GG2": (19, 15, 28, 16, 25, 36),
        "AddW1": (5, 5, 5, 5, 5, 5),
        "AddW2": (99, 99, 99, 99, 98, 98),
        "P(0.5,2)": (22, 35, 42, 43, 46, 48),
        "P(1.5,2.5)": (19, 14, 23, 12, 16, 27),
        "IG(1,1)": (66, 82, 84, 85, 86, 84),
        "IG(1,2)": (73, 90, 91, 93, 93, 90),
    },
}


def paper_value(label: str, n: int, test: WeightSpec):
    row = PAPER_POWER.get(n, {}).get(label)
    if row is None or test not in PAPER_TESTS:
        return None
    return row[PAPER_TESTS.index(test)]


def resolve_alternatives(names) -> list[str]:
    """Expand CLI names: ``all``, ``weibull-null``, ``alternatives`` or row labels (case-insensitive)."""
    lookup = {label.lower(): label for label in PAPER_ALTERNATIVES}
    out: list[str] = []
    for raw in names:
        key = raw.strip().lower()
        if not key:
            continue
        if key == "all":
            group = list(PAPER_ALTERNATIVES)
        elif key in ("weibull-null", "null", "nulls"):
            group = list(WEIBULL_NULLS)
        elif key == "alternatives":
            group = [k for k in PAPER_ALTERNATIVES if k not in WEIBULL_NULLS]
        elif key in lookup:
            group = [lookup[key]]
        else:
            raise ValueError(f"unknown alternative {raw!r}; choose from {', '.join(PAPER_ALTERNATIVES)}")
        out.extend(g for g in group if g not in out)
    return out


@dataclass(frozen=True)
class StudyConfig:
    alternatives: tuple[str, ...] = tuple(PAPER_ALTERNATIVES)
    sample_sizes: tuple[int, ...] = (20, 50)
    tests: tuple[WeightSpec, ...] = PAPER_TESTS
    replications: int = DESK_REPLICATIONS
    bootstrap_b: int = DESK_B
    alpha: float = 0.05
    estimator: EstimatorKind = EstimatorKind.MLE
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "alternatives", tuple(self.alternatives))
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "tests", tuple(self.tests))
        object.__setattr__(self, "estimator", EstimatorKind(self.estimator))
        unknown = [a for a in self.alternatives if a not in PAPER_ALTERNATIVES]
        if unknown:
            raise ValueError(f"unknown alternatives {unknown}")
        if self.replications < 1 or self.bootstrap_b < 1:
            raise ValueError("replications and bootstrap_b must be >= 1")
        if any(n < 2 for n in self.sample_sizes):
            raise ValueError("sample sizes must be >= 2")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie strictly between 0 and 1")
        if not self.tests:
            raise ValueError("at least one test is required")

    def row_stream(self, label: str, n: int) -> RngStream:
        """Substream of one table row, keyed by the row label rather than its position."""
        return RngStream(derive_seed(self.master_seed, zlib.crc32(label.encode()), n))


@dataclass(frozen=True)
class PowerCell:
    alternative: str
    n: int
    test: str
    rate: float | None  # percent
    se: float | None  # percent
    status: str = "ok"
    skipped: int = 0


@dataclass
class PowerTable:
    config: StudyConfig
    cells: list[PowerCell] = field(default_factory=list)

    def cell(self, alternative: str, n: int, test: str) -> PowerCell:
        for c in self.cells:
            if (c.alternative, c.n, c.test) == (alternative, n, test):
                return c
        raise KeyError((alternative, n, test))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["alternative", "n", "test", "rate", "se", "status"])
        for c in self.cells:
            rate = "" if c.rate is None else f"{c.rate:.2f}"
            se = "" if c.se is None else f"{c.se:.2f}"
            w.writerow([c.alternative, c.n, c.test, rate, se, c.status])
        return buf.getvalue()

    def to_text(self, with_paper: bool = True) -> str:
        cfg = self.config
        labels = [t.label for t in cfg.tests]
        out = []
        for n in cfg.sample_sizes:
            out.append(
                f"Percentages of rejection (n={n}, {cfg.replications} replications, "
                f"b={cfg.bootstrap_b} bootstrap samples, alpha={cfg.alpha:g})"
            )
            out.append(f"{'Alt.':<12}" + "".join(f"{lab:>9}" for lab in labels))
            for alt in cfg.alternatives:
                row = [self.cell(alt, n, lab) for lab in labels]
                if row[0].status != "ok" and row[0].rate is None:
                    out.append(f"{alt:<12}  {row[0].status}")
                    continue
                out.append(f"{alt:<12}" + "".join(f"{c.rate:>9.1f}" for c in row))
                if with_paper and PAPER_POWER.get(n, {}).get(alt) is not None:
                    ref = [paper_value(alt, n, t) for t in cfg.tests]
                    out.append(f"{'  (paper)':<12}" + "".join(f"{'-' if v is None else v:>9}" for v in ref))
            out.append("")
        return "\n".join(out)


def _replication_seeds(rng: RngStream, reps: int) -> np.ndarray:
    return np.array([derive_seed(rng.seed, rng.stream_id, j, 1) for j in range(reps)], dtype=np.uint64)


def estimate_rejection_rates(
    spec: Alternative,
    n: int,
    tests,
    replications: int,
    rng: RngStream,
    b: int = DESK_B,
    alpha: float = 0.05,
    estimator=EstimatorKind.MLE,
):
    """Rejection fractions of several tests on shared simulated samples.

    Replication ``j`` draws its data from ``rng.child(j)`` and its bootstrap
    replicates with seed ``derive_seed(rng.seed, rng.stream_id, j, 1)``.
    Replications that cannot be completed (draw underflow, failed fit) are
    skipped and counted; more than 0.1% skipped raises :class:`GofError`.
    Returns ``(rates, std_errors, skipped)`` with fractions in [0, 1].
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    tests = list(tests)
    X = np.empty((replications, n))
    drawn = np.ones(replications, dtype=bool)
    for j in range(replications):
        try:
            X[j] = spec.sample(n, rng.child(j))
        except GofError:
            X[j] = 1.0
            drawn[j] = False
    seeds = _replication_seeds(rng, replications)
    rejected = np.zeros(len(tests), dtype=np.int64)
    used = 0
    for start in range(0, replications, _CHUNK):
        sl = slice(start, min(start + _CHUNK, replications))
        keep = np.flatnonzero(drawn[sl]) + start
        if keep.size == 0:
            continue
        res = calibrate(X[keep], tests, estimator, b, alpha, seeds[keep])
        good = (res.status == 0) & (res.failed < b)
        rejected += res.reject[good].sum(axis=0)
        used += int(good.sum())
    skipped = replications - used
    if skipped > MAX_SKIP_FRACTION * replications:
        raise GofError(f"{skipped} of {replications} replications could not be completed")
    rates = rejected / used
    se = np.sqrt(rates * (1.0 - rates) / used)
    return rates, se, skipped


def estimate_rejection_rate(spec, n, test, replications, rng, b=DESK_B, alpha=0.05, estimator=EstimatorKind.MLE):
    """Single-test form of :func:`estimate_rejection_rates`: ``(rate, std_error)``."""
    rates, se, _ = estimate_rejection_rates(spec, n, [test], replications, rng, b, alpha, estimator)
    return float(rates[0]), float(se[0])


def run_table(config: StudyConfig, progress=None) -> PowerTable:
    """Every (alternative, n, test) cell; failing rows are recorded, not raised."""
    table = PowerTable(config)
    for alt in config.alternatives:
        spec = PAPER_ALTERNATIVES[alt]
        for n in config.sample_sizes:
            if spec is None:
                status, rates = UNAVAILABLE_REASON, None
            else:
                try:
                    rates, se, skipped = estimate_rejection_rates(
                        spec,
                        n,
                        config.tests,
                        config.replications,
                        config.row_stream(alt, n),
                        config.bootstrap_b,
                        config.alpha,
                        config.estimator,
                    )
                    status = "ok"
                except (GofError, ArithmeticError, ValueError) as exc:
                    status, rates = f"failed: {exc}", None
            for i, t in enumerate(config.tests):
                if rates is None:
                    table.cells.append(PowerCell(alt, n, t.label, None, None, status))
                else:
                    table.cells.append(
                        PowerCell(alt, n, t.label, 100.0 * rates[i], 100.0 * se[i], status, skipped)
                    )
            if progress is not None:
                progress(alt, n, status)
    return table


def row_succeeded(table: PowerTable) -> bool:
    return any(c.status == "ok" for c in table.cells)

