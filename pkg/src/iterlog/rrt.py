"""Random recursive trees: uniform attachment and the Yule embedding.

Vertex count convention: n is the number of NON-ROOT vertices, born at
epochs tau_1 < ... < tau_n, so the tree holds n+1 vertices and the level
counts satisfy sum_k X_n(k) = n.  Both growers produce the same profile
law; the Yule grower additionally records the birth epochs, making the
profile literally the generation count of the exponential branching
process sampled at tau_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dist import RngStream

#: The profile statistic needs log log log n > 0.
MIN_STAT_N = math.exp(math.e)

#: Full enumeration is n! sequences; 9! = 362880 is the supported maximum.
MAX_ENUM_N = 9


@dataclass
class ProfileTrace:
    """Growth history of one tree: per-vertex levels, optional epochs.

    ``levels[m]`` is the level of the m-th vertex (index 0 is the root at
    level 0); the full count history X_m(k) is recoverable from it.
    """

    levels: np.ndarray
    max_level: int
    epochs: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.levels.size - 1

    def counts(self, k_max: int | None = None) -> np.ndarray:
        """Final level counts X_n(1..k_max)."""
        k = self.max_level if k_max is None else k_max
        return np.bincount(self.levels[1:], minlength=k + 1)[1 : k + 1].astype(np.int64)

    def counts_at(self, m: int, k_max: int | None = None) -> np.ndarray:
        """Level counts after the first m non-root vertices."""
        if not 0 <= m <= self.n:
            raise ValueError("m outside growth history")
        k = self.max_level if k_max is None else k_max
        return np.bincount(self.levels[1 : m + 1], minlength=k + 1)[1 : k + 1].astype(np.int64)

    def history(self, k: int) -> np.ndarray:
        """X_m(k) for m = 0..n."""
        hits = np.concatenate(([0], (self.levels[1:] == k).astype(np.int64)))
        return np.cumsum(hits)

    def yule_clock(self) -> "YuleClock":
        if self.epochs is None:
            raise ValueError("trace has no epochs: grown by the discrete rule")
        return YuleClock(self.epochs)


@dataclass
class YuleClock:
    """Birth epochs of the embedding pure-birth process (tau_0 = 0 implicit)."""

    epochs: np.ndarray

    def population(self, t: float) -> int:
        """n(t) + 1: tree size at time t."""
        return 1 + int(np.searchsorted(self.epochs, t, side="right"))

    def scaled_population(self) -> float:
        """e^{-tau_n} n, a sample of the almost-sure growth limit."""
        n = self.epochs.size
        if n == 0:
            return 0.0
        return n * math.exp(-float(self.epochs[-1]))


def _build_levels(parents_u: np.ndarray) -> np.ndarray:
    """Levels from uniform parent picks: vertex m attaches to floor(u_m * m)."""
    n = parents_u.size
    levels = np.zeros(n + 1, dtype=np.int64)
    for m in range(1, n + 1):
        parent = int(parents_u[m - 1] * m)
        levels[m] = levels[parent] + 1
    return levels


def grow_discrete(n: int, k_max: int, stream: RngStream) -> ProfileTrace:
    """Uniform attachment: vertex m+1 picks its parent uniformly among 1..m."""
    if n < 1:
        raise ValueError("need at least one non-root vertex")
    rng = stream.generator()
    levels = _build_levels(rng.random(n))
    return ProfileTrace(levels, k_max)


def grow_yule(n: int, k_max: int, stream: RngStream) -> ProfileTrace:
    """Continuous-time growth: each vertex births offspring at unit rate.

    Equivalent to uniform attachment with epoch gaps Exp(current size);
    the recorded epochs make the profile the branching-generation count
    sampled at tau_n.
    """
    if n < 1:
        raise ValueError("need at least one non-root vertex")
    rng = stream.generator()
    sizes = np.arange(1, n + 1, dtype=np.float64)
    epochs = np.cumsum(rng.exponential(1.0, n) / sizes)
    levels = _build_levels(rng.random(n))
    return ProfileTrace(levels, k_max, epochs)


def sample_profiles(n: int, k_max: int, stream: RngStream, replicas: int) -> np.ndarray:
    """Final profiles (X_n(1..k_max)) of many independent trees, one row each.

    Batch variant used by the distributional gates; all trees share the
    given stream, drawn in a fixed order.
    """
    if n < 1 or replicas < 1:
        raise ValueError("need n >= 1 and replicas >= 1")
    rng = stream.generator()
    u = rng.random((replicas, n))
    levels = np.zeros((replicas, n + 1), dtype=np.int32)
    rows = np.arange(replicas)
    for m in range(1, n + 1):
        parents = (u[:, m - 1] * m).astype(np.int64)
        levels[:, m] = levels[rows, parents] + 1
    out = np.empty((replicas, k_max), dtype=np.int64)
    for k in range(1, k_max + 1):
        out[:, k - 1] = (levels[:, 1:] == k).sum(axis=1)
    return out


def bernoulli_level1(n: int, stream: RngStream) -> int:
    """Sum of independent Bernoulli(1/j), j = 1..n: the level-1 count law."""
    if n < 1:
        raise ValueError("need n >= 1")
    rng = stream.generator()
    return int((rng.random(n) * np.arange(1, n + 1) < 1.0).sum())


def bernoulli_level1_sample(n: int, stream: RngStream, replicas: int) -> np.ndarray:
    """Batch of independent Bernoulli-sum draws (one per replica)."""
    rng = stream.generator()
    u = rng.random((replicas, n))
    return (u * np.arange(1, n + 1) < 1.0).sum(axis=1).astype(np.int64)


def rrt_lil_statistic(xnk: float, n: int, k: int) -> float:
    """(k-1)! sqrt(2k-1) (X_n(k) - (log n)^k/k!) / sqrt(2 (log n)^{2k-1} logloglog n)."""
    if n <= MIN_STAT_N:
        raise ValueError("statistic undefined for n <= e^e")
    if k < 1:
        raise ValueError("level must be >= 1")
    ln = math.log(n)
    center = ln**k / math.factorial(k)
    denom = math.sqrt(2.0 * ln ** (2 * k - 1) * math.log(math.log(ln)))
    return math.factorial(k - 1) * math.sqrt(2.0 * k - 1.0) * (xnk - center) / denom


def enumerate_profiles(n: int, k_max: int | None = None) -> dict[tuple, float]:
    """Exact profile law by brute force over all n! attachment sequences.

    Keys are tuples (X_n(1), ..., X_n(k_max)); values are exact
    probabilities (multiples of 1/n!).
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if n > MAX_ENUM_N:
        raise ValueError(f"enumeration capped at n = {MAX_ENUM_N}")
    k_eff = n if k_max is None else min(k_max, n)
    total = math.factorial(n)
    # mixed-radix decode: sequence id -> parent choice for each vertex
    codes = np.arange(total, dtype=np.int64)
    levels = np.zeros((total, n + 1), dtype=np.int8)
    rows = np.arange(total)
    stride = 1
    for m in range(1, n + 1):
        parents = (codes // stride) % m
        levels[:, m] = levels[rows, parents] + 1
        stride *= m
    profiles = np.empty((total, k_eff), dtype=np.int64)
    for k in range(1, k_eff + 1):
        profiles[:, k - 1] = (levels[:, 1:] == k).sum(axis=1)
    uniq, counts = np.unique(profiles, axis=0, return_counts=True)
    return {tuple(int(x) for x in row): int(c) / total for row, c in zip(uniq, counts)}


def profile_pmf_from_samples(samples: np.ndarray) -> dict[tuple, float]:
    """Empirical profile pmf from a (R, K) sample matrix."""
    uniq, counts = np.unique(samples, axis=0, return_counts=True)
    r = samples.shape[0]
    return {tuple(int(x) for x in row): int(c) / r for row, c in zip(uniq, counts)}


def total_variation(p: dict[tuple, float], q: dict[tuple, float]) -> float:
    """TV distance between two pmfs on profile tuples."""
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
