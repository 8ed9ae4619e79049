"""Discretized Brownian paths and the weighted integrals of the remainder
analysis: B1 with polynomial weight (t-x)^{k-1} and B2 weighted by
f_k(t) = V_{k-1}(t) - t^{k-1}/((k-1)! mu^{k-1}).

Stochastic sums use the left-point (Ito) rule, under which the discrete
isometry Var(sum g dW) = h * sum g^2 is exact, making the closed-form
variance identities sharp test targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dist import RngStream
from .renewal import RenewalTable


@dataclass
class BmPath:
    """Brownian values on a uniform grid: values[j] = W(j h)."""

    h: float
    values: np.ndarray

    @property
    def horizon(self) -> float:
        return (self.values.size - 1) * self.h


def sample_bm(t_max: float, h: float, stream: RngStream) -> BmPath:
    """Cumulative sum of centered Gaussian increments of variance h."""
    if h <= 0 or t_max < h:
        raise ValueError("need h > 0 and t_max >= h")
    rng = stream.generator()
    steps = int(round(t_max / h))
    w = np.empty(steps + 1, dtype=np.float64)
    w[0] = 0.0
    np.cumsum(rng.normal(0.0, math.sqrt(h), steps), out=w[1:])
    return BmPath(h, w)


def _cells_below(path_h: float, t: float, horizon: float) -> int:
    if t < 0 or t > horizon + 1e-9:
        raise ValueError("t outside path horizon")
    return int(math.floor(t / path_h + 1e-9))


def b1k(path: BmPath, k: int, t: float) -> float:
    """sum_j (t - x_j)^{k-1} dW_j over grid cells below t (left points x_j)."""
    if k < 1:
        raise ValueError("level must be >= 1")
    m = _cells_below(path.h, t, path.horizon)
    if m == 0:
        return 0.0
    if k == 1:
        # unit weights telescope: the sum is W at the last grid point
        return float(path.values[m] - path.values[0])
    dw = np.diff(path.values[: m + 1])
    x = path.h * np.arange(m, dtype=np.float64)
    return float(np.dot((t - x) ** (k - 1), dw))


@dataclass(frozen=True)
class FkTable:
    """Evaluator for f_k(t) = V_{k-1}(t) - t^{k-1}/((k-1)! mu^{k-1}).

    Lattice kind wraps an exact renewal table (step-constant V_{k-1});
    exponential kind is identically zero because the level expectations
    are exactly polynomial there.
    """

    k: int
    mu: float
    kind: str
    span: float = 0.0
    values: np.ndarray | None = None  # V_{k-1}(nd) grid when kind == "lattice"

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("f_k needs k >= 2")
        if self.kind not in ("lattice", "exponential"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.kind == "lattice" and (self.values is None or self.span <= 0):
            raise ValueError("lattice table needs a span and grid values")

    @classmethod
    def from_renewal(cls, table: RenewalTable, k: int) -> "FkTable":
        return cls(k, table.mu, "lattice", table.span, table.level(k - 1))

    @classmethod
    def exponential(cls, k: int, rate: float = 1.0) -> "FkTable":
        return cls(k, 1.0 / rate, "exponential")

    @property
    def horizon(self) -> float:
        if self.kind == "lattice":
            return (self.values.size - 1) * self.span
        return math.inf

    def evaluate(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        if self.kind == "exponential":
            return np.zeros_like(s)
        idx = np.floor(s / self.span + 1e-9).astype(np.int64)
        if np.any(idx < 0) or np.any(idx >= self.values.size):
            raise ValueError("argument outside table horizon")
        c = math.factorial(self.k - 1) * self.mu ** (self.k - 1)
        return self.values[idx] - s ** (self.k - 1) / c


def b2k(path: BmPath, fk: FkTable, t: float) -> float:
    """sum_j f_k(t - x_j) dW_j; the step grid must sit on the path grid."""
    if fk.kind == "lattice":
        ratio = fk.span / path.h
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("grid mismatch: lattice span not a multiple of the path step")
        if fk.horizon + 1e-9 < t:
            raise ValueError("grid mismatch: table does not cover [0, t]")
    m = _cells_below(path.h, t, path.horizon)
    if m == 0:
        return 0.0
    dw = np.diff(path.values[: m + 1])
    x = path.h * np.arange(m, dtype=np.float64)
    return float(np.dot(fk.evaluate(t - x), dw))


def variance_b2k(fk: FkTable, n: float) -> float:
    """integral of f_k^2 over [0, n]: exact per lattice cell, zero for exponential.

    On [md, (m+1)d) the integrand is (v_m - x^{k-1}/c)^2 with constant v_m,
    so each cell integrates in closed form.
    """
    if n < 0:
        raise ValueError("upper limit must be nonnegative")
    if fk.kind == "exponential":
        return 0.0
    d = fk.span
    cells = int(round(n / d))
    if abs(cells * d - n) > 1e-9 * max(1.0, n):
        raise ValueError("upper limit must sit on the lattice grid")
    if cells > fk.values.size - 1:
        raise ValueError("table does not cover [0, n]")
    k = fk.k
    c = math.factorial(k - 1) * fk.mu ** (k - 1)
    m = np.arange(cells, dtype=np.float64)
    lo = m * d
    hi = lo + d
    v = fk.values[:cells]
    a = (hi**k - lo**k) / k
    b = (hi ** (2 * k - 1) - lo ** (2 * k - 1)) / (2 * k - 1)
    cell = v * v * d - 2.0 * v * a / c + b / (c * c)
    return math.fsum(cell.tolist())


def b1k_ensemble(
    k: int, t: float, h: float, replicas: int, stream: RngStream, block: int = 128
) -> np.ndarray:
    """Independent B1 values from one stream, drawn block by block."""
    m = int(round(t / h))
    x = h * np.arange(m, dtype=np.float64)
    weights = (t - x) ** (k - 1)
    return _weighted_sums(weights, h, replicas, stream, block)


def b2k_ensemble(
    fk: FkTable, t: float, h: float, replicas: int, stream: RngStream, block: int = 128
) -> np.ndarray:
    """Independent B2 values from one stream, drawn block by block."""
    if fk.kind == "lattice":
        ratio = fk.span / h
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("grid mismatch: lattice span not a multiple of the path step")
        if fk.horizon + 1e-9 < t:
            raise ValueError("grid mismatch: table does not cover [0, t]")
    m = int(round(t / h))
    x = h * np.arange(m, dtype=np.float64)
    weights = fk.evaluate(t - x)
    return _weighted_sums(weights, h, replicas, stream, block)


def _weighted_sums(
    weights: np.ndarray, h: float, replicas: int, stream: RngStream, block: int
) -> np.ndarray:
    rng = stream.generator()
    out = np.empty(replicas, dtype=np.float64)
    sd = math.sqrt(h)
    filled = 0
    while filled < replicas:
        b = min(block, replicas - filled)
        dw = rng.normal(0.0, sd, (b, weights.size))
        # per-row reduction instead of BLAS keeps results thread-count independent
        out[filled : filled + b] = (dw * weights).sum(axis=1)
        filled += b
    return out


def discrete_variance(weights: np.ndarray, h: float) -> float:
    """Exact variance h * sum g^2 of the discretized weighted sum."""
    return h * math.fsum((weights * weights).tolist())
