"""Per-degree probability that an edge-dependent noise model changes a node's label.

For a node of degree ``d`` whose incident edges are each noisy with
probability ``rho``:

* majority vote, ``q_mv``: at least ``ceil(d/2)`` noisy incident edges;
* veto, ``r_veto``: at least one noisy incident edge;
* sequential + SLN, ``s_seq_sln``: ``(K-1)/K * (1 - (1 - K rho/(K-1))**d)``;
* sequential + PWN, ``s_seq_pwn``: ``P(Binomial(d, rho) != 0 mod K)``.

``q_mv``, ``r_veto`` and ``s_seq_sln`` also accept :class:`fractions.Fraction`
inputs and then return exact rationals.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .transitions import binomial_pmf, matrix_power_reference, q_pwn, q_sln

MAX_BRUTEFORCE_DEGREE = 20


class Variant(str, enum.Enum):
    MV = "mv"
    VETO = "veto"
    SEQ_SLN = "seq-sln"
    SEQ_PWN = "seq-pwn"

    @classmethod
    def parse(cls, name) -> "Variant":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        aliases = {"seqsln": "seq-sln", "seqpwn": "seq-pwn", "majority": "mv"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(
                f"unknown flip-probability variant {name!r}; expected one of "
                + ", ".join(v.value for v in cls)
            ) from None

    @property
    def needs_k(self) -> bool:
        return self in (Variant.SEQ_SLN, Variant.SEQ_PWN)


def _check(deg: int, rho) -> None:
    if deg < 0:
        raise ValueError(f"degree must be non-negative, got {deg}")
    if not 0 <= rho <= 1:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")


def q_mv(deg: int, rho):
    """Majority-vote selection probability; an isolated node is never selected."""
    _check(deg, rho)
    if deg == 0:
        return 0 * rho
    if isinstance(rho, Fraction):
        return sum(
            math.comb(deg, i) * rho**i * (1 - rho) ** (deg - i)
            for i in range((deg + 1) // 2, deg + 1)
        )
    pmf = binomial_pmf(deg, float(rho))
    return min(1.0, math.fsum(pmf[(deg + 1) // 2 :]))


def r_veto(deg: int, rho):
    _check(deg, rho)
    if deg == 0:
        return 0 * rho
    return 1 - (1 - rho) ** deg


def s_seq_sln(deg: int, rho, k: int):
    _check(deg, rho)
    if k < 2:
        raise ValueError("need at least 2 classes")
    if deg == 0:
        return 0 * rho
    base = (k - 1 - k * rho) / (k - 1)
    return (k - 1) * (1 - base**deg) / k


def s_sc(deg: int, rho, k: int):
    """Probability of landing on one specific other class under sequential SLN."""
    return s_seq_sln(deg, rho, k) / (k - 1)


def s_seq_pwn(deg: int, rho: float, k: int) -> float:
    _check(deg, rho)
    if k < 2:
        raise ValueError("need at least 2 classes")
    if deg == 0:
        return 0.0
    pmf = binomial_pmf(deg, float(rho))
    return min(1.0, math.fsum(pmf[np.arange(deg + 1) % k != 0]))


def flip_prob(variant, deg: int, rho: float, k: int | None = None) -> float:
    variant = Variant.parse(variant)
    if variant is Variant.MV:
        return q_mv(deg, rho)
    if variant is Variant.VETO:
        return r_veto(deg, rho)
    if k is None:
        raise ValueError(f"{variant.value} needs the class count k")
    if variant is Variant.SEQ_SLN:
        return s_seq_sln(deg, rho, k)
    return s_seq_pwn(deg, rho, k)


@dataclass(frozen=True, eq=False)
class FlipProbTable:
    variant: Variant
    rho: float
    k: int | None
    probs: np.ndarray

    @property
    def max_degree(self) -> int:
        return len(self.probs) - 1

    def per_class(self) -> np.ndarray:
        """Per-target-class probability (sequential SLN only)."""
        if self.variant is not Variant.SEQ_SLN:
            raise ValueError("per-class probabilities are defined for seq-sln only")
        return self.probs / (self.k - 1)


def _binomial_tail_sums(rho, max_degree: int, keep) -> np.ndarray:
    """``sum(pmf_n[i] for i where keep(n, i))`` for n = 0..max_degree, per rho.

    ``rho`` may be an array; the result then has shape ``(len(rho), max_degree + 1)``.
    Binomial rows come from Pascal's recurrence, which only forms convex
    combinations and so stays accurate for large degrees.
    """
    rho = np.asarray(rho, dtype=np.float64)
    r = rho.reshape(-1, 1)
    out = np.zeros((len(r), max_degree + 1))
    row = np.ones((len(r), 1))
    idx = np.arange(max_degree + 1)
    for n in range(1, max_degree + 1):
        nxt = np.zeros((len(r), n + 1))
        nxt[:, :n] = row * (1.0 - r)
        nxt[:, 1:] += row * r
        row = nxt
        out[:, n] = row[:, keep(n, idx[: n + 1])].sum(axis=1)
    out = np.minimum(out, 1.0)
    return out.reshape(rho.shape + (max_degree + 1,))


def flip_prob_curves(variant, rho, k: int | None, max_degree: int) -> np.ndarray:
    """Flip probabilities for degrees ``0..max_degree``; one row per value of ``rho``."""
    variant = Variant.parse(variant)
    rho = np.asarray(rho, dtype=np.float64)
    if max_degree < 0:
        raise ValueError("max_degree must be non-negative")
    if np.any((rho < 0) | (rho > 1)):
        raise ValueError("rho must lie in [0, 1]")
    if variant.needs_k and (k is None or k < 2):
        raise ValueError(f"{variant.value} needs a class count k >= 2")
    degs = np.arange(max_degree + 1)
    r = rho[..., None]
    if variant is Variant.MV:
        probs = _binomial_tail_sums(rho, max_degree, lambda n, i: i >= (n + 1) // 2)
    elif variant is Variant.SEQ_PWN:
        probs = _binomial_tail_sums(rho, max_degree, lambda n, i: i % k != 0)
    elif variant is Variant.VETO:
        probs = 1.0 - (1.0 - r) ** degs
    else:
        probs = (k - 1) * (1.0 - ((k - 1 - k * r) / (k - 1)) ** degs) / k
    probs[..., 0] = 0.0
    return probs


def flip_prob_table(variant, rho: float, k: int | None, max_degree: int) -> FlipProbTable:
    variant = Variant.parse(variant)
    probs = flip_prob_curves(variant, float(rho), k, max_degree)
    probs.setflags(write=False)
    return FlipProbTable(variant, float(rho), k if variant.needs_k else None, probs)


def flip_prob_bruteforce(variant, rho: float, k: int | None, deg: int) -> float:
    """Exact flip probability by enumerating all ``2**deg`` incident-edge noise patterns.

    Sequential variants evaluate, for each pattern with ``m`` noisy edges, the
    probability that ``m`` forced steps (uniform-other for SLN, next class for
    PWN) end away from the starting class, using repeated matrix multiplication.
    """
    variant = Variant.parse(variant)
    _check(deg, rho)
    if deg > MAX_BRUTEFORCE_DEGREE:
        raise ValueError(
            f"enumeration limited to degree <= {MAX_BRUTEFORCE_DEGREE}; use Monte Carlo"
        )
    patterns = (np.arange(2**deg)[:, None] >> np.arange(deg)) & 1
    weights = np.where(patterns == 1, rho, 1.0 - rho).prod(axis=1)
    noisy = patterns.sum(axis=1)

    if variant is Variant.MV:
        changed = (noisy >= math.ceil(deg / 2)) & (deg >= 1)
    elif variant is Variant.VETO:
        changed = noisy >= 1
    else:
        if k is None:
            raise ValueError(f"{variant.value} needs the class count k")
        step = q_sln(k, 1.0) if variant is Variant.SEQ_SLN else q_pwn(k, 1.0)
        stay = [matrix_power_reference(step, m).rows[0, 0] for m in range(deg + 1)]
        changed = 1.0 - np.asarray(stay)[noisy]
    return math.fsum(weights * changed)
