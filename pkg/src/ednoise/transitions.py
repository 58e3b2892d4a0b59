"""Label-transition matrices for SLN, CCN and PWN, and their n-step powers.

The n-step powers have closed forms: the symmetric SLN matrix is
``J/K + b**n (I - J/K)`` with ``b = 1 - K*rho/(K-1)``, and the circulant PWN
matrix has first row ``row[j] = P(Binomial(n, rho) = j mod K)``.
:func:`matrix_power_reference` is the brute-force check for both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ROW_TOL = 1e-10


def _check_rho(rho: float) -> None:
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")


def _check_k(k: int) -> None:
    if k < 2:
        raise ValueError(f"need at least 2 classes, got k={k}")


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic ``k x k`` matrix; ``rows[i, j] = P(new label j | label i)``."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] != rows.shape[1]:
            raise ValueError(f"transition matrix must be square, got shape {rows.shape}")
        if np.any(rows < -1e-12) or np.any(rows > 1 + 1e-12):
            raise ValueError("transition probabilities must lie in [0, 1]")
        if np.any(np.abs(rows.sum(axis=1) - 1.0) > ROW_TOL):
            raise ValueError("transition matrix rows must sum to 1")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def k(self) -> int:
        return self.rows.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.rows if dtype is None else self.rows.astype(dtype)

    def to_csv(self, path=None) -> str:
        text = "".join(",".join(repr(float(x)) for x in row) + "\n" for row in self.rows)
        if path is not None:
            Path(path).write_text(text)
        return text


@dataclass(frozen=True, eq=False)
class CirculantRow:
    """First row of a circulant transition matrix; row i is row 0 shifted right by i."""

    first_row: np.ndarray

    def __post_init__(self):
        row = np.array(self.first_row, dtype=np.float64)
        if np.any(row < -1e-12) or np.any(row > 1 + 1e-12):
            raise ValueError("entries must lie in [0, 1]")
        if abs(row.sum() - 1.0) > ROW_TOL:
            raise ValueError("circulant row must sum to 1")
        row.setflags(write=False)
        object.__setattr__(self, "first_row", row)

    @property
    def k(self) -> int:
        return len(self.first_row)

    def expand(self) -> TransitionMatrix:
        return TransitionMatrix(np.stack([np.roll(self.first_row, i) for i in range(self.k)]))


def binomial_pmf(n: int, p: float) -> np.ndarray:
    """``P(Binomial(n, p) = i)`` for ``i = 0..n``.

    Terms are built outward from the mode by the ratio recurrence and then
    normalized, so nothing overflows for large ``n`` and far tails underflow
    harmlessly to zero.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    _check_rho(p)
    out = np.zeros(n + 1)
    if p == 0.0:
        out[0] = 1.0
        return out
    if p == 1.0:
        out[n] = 1.0
        return out
    q = 1.0 - p
    mode = min(int((n + 1) * p), n)
    out[mode] = 1.0
    if mode < n:
        i = np.arange(mode, n)
        out[mode + 1 :] = np.cumprod((n - i) / (i + 1) * (p / q))
    if mode > 0:
        i = np.arange(mode, 0, -1)
        out[:mode] = np.cumprod(i / (n - i + 1) * (q / p))[::-1]
    return out / math.fsum(out)


def q_sln(k: int, rho: float) -> TransitionMatrix:
    _check_k(k)
    _check_rho(rho)
    rows = np.full((k, k), rho / (k - 1))
    np.fill_diagonal(rows, 1.0 - rho)
    return TransitionMatrix(rows)


def q_ccn(rho_matrix) -> TransitionMatrix:
    """Class-conditional matrix from off-diagonal rates ``rho_matrix[m, n]``.

    The diagonal of ``rho_matrix`` is ignored and replaced by ``1 - rho_m``.
    """
    rates = np.array(rho_matrix, dtype=np.float64)
    if rates.ndim != 2 or rates.shape[0] != rates.shape[1]:
        raise ValueError("rho_matrix must be square")
    _check_k(rates.shape[0])
    np.fill_diagonal(rates, 0.0)
    if np.any(rates < 0):
        raise ValueError("off-diagonal rates must be non-negative")
    totals = rates.sum(axis=1)
    if np.any(totals > 1.0 + 1e-12):
        bad = int(np.argmax(totals))
        raise ValueError(f"class {bad} has total flip rate {totals[bad]} > 1")
    np.fill_diagonal(rates, 1.0 - totals)
    return TransitionMatrix(rates)


def q_pwn(k: int, rho: float) -> TransitionMatrix:
    _check_k(k)
    _check_rho(rho)
    rows = (1.0 - rho) * np.eye(k) + rho * np.roll(np.eye(k), 1, axis=1)
    return TransitionMatrix(rows)


def sln_power_closed(k: int, rho: float, n: int) -> TransitionMatrix:
    _check_k(k)
    _check_rho(rho)
    if n < 0:
        raise ValueError("n must be non-negative")
    # signed power: the base is negative when rho > (k-1)/k
    bn = ((k - 1 - k * rho) / (k - 1)) ** n
    rows = np.full((k, k), 1.0 / k - bn / k)
    np.fill_diagonal(rows, 1.0 / k + bn * (k - 1) / k)
    return TransitionMatrix(rows)


def pwn_power_closed(k: int, rho: float, n: int) -> CirculantRow:
    _check_k(k)
    pmf = binomial_pmf(n, rho)
    return CirculantRow(np.bincount(np.arange(n + 1) % k, weights=pmf, minlength=k))


def matrix_power_reference(q, n: int) -> TransitionMatrix:
    """``q**n`` by plain repeated multiplication."""
    if n < 0:
        raise ValueError("n must be non-negative")
    base = np.asarray(q, dtype=np.float64)
    out = np.eye(base.shape[0])
    for _ in range(n):
        out = out @ base
    return TransitionMatrix(out)
