"""Expected graph-wide noise level of a variant, and its inversion for rho.

The expected fraction of corrupted labels is ``sum_d l(d, rho) * P(deg = d)``
with ``l`` the per-degree flip probability of the variant.  Degree-independent
baselines (SLN, PWN) simply have level ``rho``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np

from .flipprob import Variant, flip_prob_curves, flip_prob_table
from .graph import DegreeDistribution

DEFAULT_TOL = 1e-9
SCAN_POINTS = 2001


class CalibrationError(ValueError):
    def __init__(self, message: str, max_level: float | None = None):
        super().__init__(message)
        self.max_level = max_level


def _resolve(variant) -> Variant | None:
    """Map a variant name (``veto``, ``veto-sln``, ``seq-pwn``, ``sln``...) to its flip family."""
    if isinstance(variant, Variant):
        return variant
    name = str(variant).strip().lower()
    if name in ("sln", "pwn"):
        return None
    if name == "ccn":
        raise CalibrationError("calibrating a full CCN rate matrix is not supported")
    if name.startswith(("mv-", "veto-")):
        name = name.split("-")[0]
    return Variant.parse(name)


def expected_noise(dist: DegreeDistribution, variant, rho: float, k: int | None = None) -> float:
    family = _resolve(variant)
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    if family is None:
        return float(rho)
    table = flip_prob_table(family, rho, k, dist.max_degree).probs
    return math.fsum(table[dist.degrees] * dist.weights)


@dataclass(frozen=True)
class CalibrationResult:
    variant: str
    target_level: float
    rho: float
    achieved_level: float
    iterations: int

    def to_dict(self) -> dict:
        return asdict(self)


def _search_interval(family: Variant, k) -> tuple[float, float]:
    """Interval of rho on which the expected level is monotone from 0 to its maximum."""
    if family in (Variant.MV, Variant.VETO):
        return 0.0, 1.0
    if family is Variant.SEQ_SLN:
        return 0.0, (k - 1) / k
    return 0.0, 1.0


def calibrate_rho(
    dist: DegreeDistribution,
    variant,
    k: int | None,
    target_level: float,
    tolerance: float = DEFAULT_TOL,
) -> CalibrationResult:
    """Smallest rho whose expected noise level equals ``target_level`` (within ``tolerance``).

    The root is bracketed by the first sign change of ``level(rho) - target``
    on a uniform scan (sequential PWN is not monotone in rho for high degrees)
    or by the monotone interval directly, then refined by bisection.
    """
    family = _resolve(variant)
    name = variant.value if isinstance(variant, Variant) else str(variant)
    if not 0.0 <= target_level <= 1.0:
        raise CalibrationError(f"target level must lie in [0, 1], got {target_level}")
    if family is None:
        return CalibrationResult(name, target_level, target_level, target_level, 0)
    if family.needs_k and (k is None or k < 2):
        raise CalibrationError(f"{family.value} needs a class count k >= 2")
    if target_level == 0.0:
        return CalibrationResult(name, 0.0, 0.0, 0.0, 0)

    def level(rho):
        return expected_noise(dist, family, rho, k)

    lo, hi = _search_interval(family, k)
    if family is Variant.SEQ_PWN:
        grid = np.linspace(lo, hi, SCAN_POINTS)
        curves = flip_prob_curves(family, grid, k, dist.max_degree)
        values = curves[:, dist.degrees] @ dist.weights
        above = np.flatnonzero(values >= target_level)
        if len(above) == 0:
            raise CalibrationError(
                f"target level {target_level} exceeds the maximum achievable "
                f"level {values.max():.10g} for {name}",
                float(values.max()),
            )
        i = int(above[0])
        if values[i] - target_level < tolerance:
            return CalibrationResult(name, target_level, float(grid[i]), float(values[i]), 0)
        lo, hi = float(grid[i - 1]), float(grid[i])
    else:
        top = level(hi)
        if target_level > top + tolerance:
            raise CalibrationError(
                f"target level {target_level} exceeds the maximum achievable "
                f"level {top:.10g} for {name}",
                top,
            )

    iterations = 0
    rho, achieved = hi, level(hi)
    while abs(achieved - target_level) >= tolerance and hi - lo > 1e-17:
        iterations += 1
        rho = 0.5 * (lo + hi)
        achieved = level(rho)
        if achieved < target_level:
            lo = rho
        else:
            hi = rho
        if iterations > 200:
            break
    return CalibrationResult(name, target_level, rho, achieved, iterations)


def calibration_table(
    dist: DegreeDistribution,
    variants,
    k: int | None,
    levels,
    tolerance: float = DEFAULT_TOL,
) -> list[CalibrationResult]:
    return [
        calibrate_rho(dist, v, k, level, tolerance) for level in levels for v in variants
    ]


def table_csv(results: list[CalibrationResult]) -> str:
    """Rows are noise levels, columns are variants, cells are calibrated rho."""
    variants = list(dict.fromkeys(r.variant for r in results))
    levels = list(dict.fromkeys(r.target_level for r in results))
    cell = {(r.target_level, r.variant): r.rho for r in results}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["level", *variants])
    for lvl in levels:
        writer.writerow([repr(lvl), *(repr(cell[(lvl, v)]) for v in variants)])
    return buf.getvalue()
