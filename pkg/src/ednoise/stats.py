"""One-sided two-sample t test on accuracy summaries, with its own Student-t quantiles.

The statistic compares baseline-noise accuracy ``a`` against EDN accuracy ``b``
over ``n`` runs each:

    T = sqrt(n) * (mean_a - mean_b) / sqrt(std_a**2 + std_b**2)

and the null ``mu_a - mu_b <= 0`` is rejected when ``T >= t_{alpha, 2n-2}``.
"""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAX_ITER = 100_000


@dataclass(frozen=True)
class SampleSummary:
    n: int
    mean: float
    std: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least 2 runs, got n={self.n}")
        if self.std < 0 or math.isnan(self.std):
            raise ValueError("standard deviation must be non-negative")

    @classmethod
    def from_samples(cls, values: Sequence[float]) -> "SampleSummary":
        """Summary with the unbiased (n - 1) sample standard deviation."""
        values = [float(v) for v in values]
        n = len(values)
        if n < 2:
            raise ValueError("need at least 2 runs")
        mean = math.fsum(values) / n
        var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
        return cls(n, mean, math.sqrt(var))


@dataclass(frozen=True)
class TTestReport:
    t_stat: float
    df: float
    alpha: float
    critical: float
    reject: bool
    pooled_var: float
    mean_diff: float
    method: str = "pooled"

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("t_stat", "critical"):
            if math.isnan(out[key]) or math.isinf(out[key]):
                out[key] = str(out[key])
        out["direction"] = "a - b > 0 supported" if self.reject else "a - b > 0 not supported"
        return out


# --- Student-t distribution ---------------------------------------------


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = _CF_TINY if abs(d) < _CF_TINY else d
        c = 1.0 + aa / c
        c = _CF_TINY if abs(c) < _CF_TINY else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = _CF_TINY if abs(d) < _CF_TINY else d
        c = 1.0 + aa / c
        c = _CF_TINY if abs(c) < _CF_TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b})")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf(t: float, df: float) -> float:
    """Upper-tail probability ``P(T > t)`` of Student's t."""
    if df <= 0:
        raise ValueError("df must be positive")
    tail = 0.5 * betainc_regularized(df / 2.0, 0.5, df / (df + t * t))
    return tail if t >= 0 else 1.0 - tail


def t_pdf(t: float, df: float) -> float:
    log_norm = (
        math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
    )
    return math.exp(log_norm - (df + 1) / 2 * math.log1p(t * t / df))


def t_critical(alpha: float, df: float, tol: float = 1e-12) -> float:
    """Upper-tail quantile: the ``t`` with ``P(T >= t) = alpha``.

    Newton steps on the tail probability, safeguarded by a bisection bracket.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    if alpha == 0.5:
        return 0.0
    if alpha > 0.5:
        return -t_critical(1.0 - alpha, df, tol)
    lo, hi = 0.0, 1.0
    while t_sf(hi, df) > alpha:
        lo, hi = hi, 2.0 * hi
    t = 0.5 * (lo + hi)
    for _ in range(500):
        f = t_sf(t, df) - alpha
        if f > 0:
            lo = t
        else:
            hi = t
        step = f / t_pdf(t, df)
        nxt = t + step
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - t) < tol * max(1.0, abs(t)) or hi - lo < tol:
            return nxt
        t = nxt
    return t


# --- the test --------------------------------------------------------------


def pooled_t(a: SampleSummary, b: SampleSummary) -> float:
    """Pooled statistic; ``nan`` when both samples are constant and equal."""
    if a.n != b.n:
        raise ValueError(f"pooled test needs equal run counts, got {a.n} and {b.n}")
    diff = a.mean - b.mean
    spread = math.sqrt(a.std**2 + b.std**2)
    if spread == 0.0:
        return math.nan if diff == 0 else math.copysign(math.inf, diff)
    return math.sqrt(a.n) * diff / spread


def welch_df(a: SampleSummary, b: SampleSummary) -> float:
    va, vb = a.std**2 / a.n, b.std**2 / b.n
    if va + vb == 0:
        return float(a.n + b.n - 2)
    return (va + vb) ** 2 / (va**2 / (a.n - 1) + vb**2 / (b.n - 1))


def run_test(a: SampleSummary, b: SampleSummary, alpha: float = 0.05, welch: bool = False) -> TTestReport:
    """Reject ``H0: mu_a - mu_b <= 0`` when the statistic reaches the critical value.

    ``welch=True`` keeps the statistic (identical for equal run counts) but
    uses Welch-Satterthwaite degrees of freedom instead of ``2n - 2``.
    """
    t = pooled_t(a, b)
    df = welch_df(a, b) if welch else float(2 * a.n - 2)
    crit = t_critical(alpha, df)
    reject = bool(t >= crit) if not math.isnan(t) else False
    return TTestReport(
        t_stat=t,
        df=df,
        alpha=alpha,
        critical=crit,
        reject=reject,
        pooled_var=(a.std**2 + b.std**2) / 2,
        mean_diff=a.mean - b.mean,
        method="welch" if welch else "pooled",
    )


# --- hypothesis summaries ---------------------------------------------------

BANDS = (("Low", 0.05, 0.15), ("Medium", 0.20, 0.35), ("High", 0.40, 0.50))


def noise_band(level: float) -> str | None:
    """Band of a noise level given as a fraction (0.25) or a percentage (25)."""
    level = level / 100.0 if level > 1.0 else level
    for name, lo, hi in BANDS:
        if lo - 1e-9 <= level <= hi + 1e-9:
            return name
    return None


@dataclass(frozen=True)
class BandSummary:
    group: tuple
    band: str
    rejected: int
    total: int

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.rejected, self.total)

    @property
    def decimal(self) -> float:
        return self.rejected / self.total

    def label(self) -> str:
        return f"{self.rejected}/{self.total} ≈ {self.decimal:.2f}"


def summarize_matrix(
    records: Iterable[tuple[Mapping, TTestReport]],
    group_by: Sequence[str] = ("variant",),
) -> list[BandSummary]:
    """Fraction of rejected nulls per group, per noise band and overall.

    Each record is ``(tags, report)`` where ``tags`` carries at least
    ``level`` and the ``group_by`` keys.  Bands without reports are omitted;
    levels outside every band count towards ``Overall`` only.
    """
    counts: dict[tuple, list[int]] = defaultdict(lambda: [0, 0])
    groups = []
    for tags, report in records:
        group = tuple(tags[g] for g in group_by)
        if group not in groups:
            groups.append(group)
        band = noise_band(float(tags["level"]))
        for key in ((group, band), (group, "Overall")):
            if key[1] is None:
                continue
            counts[key][0] += int(report.reject)
            counts[key][1] += 1
    out = []
    for group in groups:
        for band in [b[0] for b in BANDS] + ["Overall"]:
            if (group, band) in counts:
                rejected, total = counts[(group, band)]
                out.append(BandSummary(group, band, rejected, total))
    return out


def summary_csv(rows: list[BandSummary], group_by: Sequence[str] = ("variant",)) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*group_by, "band", "rejected", "total", "fraction", "label"])
    for r in rows:
        writer.writerow([*r.group, r.band, r.rejected, r.total, f"{r.decimal:.6f}", r.label()])
    return buf.getvalue()
