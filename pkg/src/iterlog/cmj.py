"""Generation counts of the branching process driven by an increasing walk.

Each individual born at time s produces offspring at s plus an independent
copy of the walk; Y_k(t) counts generation-k births in [0, t].  Replicas
are simulated on private random streams so ensembles are reproducible
under any parallel schedule.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .dist import Law, Moments, RngStream, SmoothLaw
from .renewal import (
    AsymptoticConstants,
    ExponentialRenewal,
    RenewalTable,
    leading_term,
    lil_constant,
    second_order,
)

E = math.e


def expected_population(k: int, mu: float, t: float) -> float:
    """Leading-order size t^k/(k! mu^k) of generation k, used as admission control."""
    return t**k / (math.factorial(k) * mu**k)


@dataclass(frozen=True)
class SimConfig:
    """One Monte Carlo experiment: laws, horizon, generations, streams."""

    law: Law
    levels: int
    horizon: float
    eta: Law | None = None
    grid: np.ndarray | None = None
    seed: int = 0
    replicas: int = 1
    population_cap: float = 1e7
    retain_gen1: bool = False
    center: str = "formula"
    stream_offset: int = 0

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.levels < 1:
            raise ValueError("need at least one generation")
        if self.replicas < 1:
            raise ValueError("need at least one replica")
        if self.center not in ("formula", "table"):
            raise ValueError("center mode must be 'formula' or 'table'")
        mu = self.law.moments().mean
        expected = sum(expected_population(k, mu, self.horizon) for k in range(1, self.levels + 1))
        if expected > self.population_cap:
            raise ValueError(
                f"horizon/generation cap: expected {expected:.3g} births per replica "
                f"exceeds the cap {self.population_cap:.3g}"
            )
        if self.grid is not None:
            grid = np.asarray(self.grid, dtype=np.float64)
            if grid.ndim != 1 or np.any(np.diff(grid) < 0) or grid.size == 0:
                raise ValueError("grid must be a nondecreasing 1-D array")
            if grid[0] < 0 or grid[-1] > self.horizon:
                raise ValueError("grid must lie within [0, horizon]")
            object.__setattr__(self, "grid", grid)


@dataclass
class SimOutcome:
    """Per-replica generation counts, optional path, optional level-1 times."""

    counts: np.ndarray  # (K,) int64
    path: np.ndarray | None = None  # (K, grid size) int64
    gen1_times: np.ndarray | None = None


@dataclass(frozen=True)
class FluctuationParts:
    """Split of Y_k - V_k into subtree noise I_k and level-1 placement noise J_k."""

    i_k: float
    j_k: float
    total: float


@dataclass(frozen=True)
class LilStatistic:
    k: int
    t: float
    value: float
    center_mode: str


def _walk_points(rng: np.random.Generator, law: Law, t: float, mu: float) -> np.ndarray:
    """All points of one increasing walk that land in [0, t]."""
    block = max(16, int(1.25 * t / mu) + 8)
    origin = 0.0
    parts = []
    while True:
        pts = origin + np.cumsum(law.sample(rng, block))
        n_in = int(np.searchsorted(pts, t, side="right"))
        parts.append(pts[:n_in])
        if n_in < pts.size:
            break
        origin = float(pts[-1])
        block = max(16, block // 2)
    return np.concatenate(parts)


def _perturbed_walk_points(
    rng: np.random.Generator, xi: Law, eta: Law, t: float, mu: float
) -> np.ndarray:
    """Points of S_{n-1} + eta_n in [0, t]; the walk dies once S exceeds t."""
    block = max(16, int(1.25 * t / mu) + 8)
    origin = 0.0
    parts = []
    while True:
        xs = xi.sample(rng, block)
        es = eta.sample(rng, block)
        s = origin + np.cumsum(xs)
        prev = np.empty_like(s)
        prev[0] = origin
        prev[1:] = s[:-1]
        alive = int(np.searchsorted(s, t, side="right"))
        # births exist wherever the pre-step position prev <= t, i.e. the
        # first alive+1 steps of this block
        cand = (prev + es)[: min(alive + 1, block)]
        parts.append(cand[cand <= t])
        if alive < block:
            break
        origin = float(s[-1])
        block = max(16, block // 2)
    return np.concatenate(parts)


def _offspring(
    rng: np.random.Generator, law: Law, parents: np.ndarray, t: float, keep_times: bool
) -> tuple[np.ndarray | None, int]:
    """One generation step: all parents' walks advanced in lockstep rounds.

    Walks are increasing, so a walk whose position passes t is dead; the
    expected number of draws is the number of children plus one per parent.
    """
    cur = parents
    chunks = []
    count = 0
    while cur.size:
        cur = cur + law.sample(rng, cur.size)
        cur = cur[cur <= t]
        count += cur.size
        if keep_times:
            chunks.append(cur)
    if not keep_times:
        return None, count
    times = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.float64)
    return times, count


def _offspring_perturbed(
    rng: np.random.Generator,
    xi: Law,
    eta: Law,
    parents: np.ndarray,
    t: float,
    keep_times: bool,
) -> tuple[np.ndarray | None, int]:
    base = parents
    chunks = []
    count = 0
    while base.size:
        cand = base + eta.sample(rng, base.size)
        ok = cand <= t
        count += int(ok.sum())
        if keep_times:
            chunks.append(cand[ok])
        base = base + xi.sample(rng, base.size)
        base = base[base <= t]
    if not keep_times:
        return None, count
    times = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.float64)
    return times, count


def _is_exponential(law: Law) -> bool:
    return isinstance(law, SmoothLaw) and law.family == "exp"


def _grid_counts(times: np.ndarray, grid: np.ndarray) -> np.ndarray:
    return np.searchsorted(np.sort(times), grid, side="right").astype(np.int64)


def simulate_generations(config: SimConfig, replica: int) -> SimOutcome:
    """Simulate one replica: counts Y_k(t) for k = 1..K, optional path/times.

    Only births inside [0, t] are materialized; for the final generation of
    an exponential standard walk the counts are drawn directly (the number
    of walk points in a window of length w is Poisson(rate * w)), which is
    an exact shortcut, not an approximation.
    """
    rng = RngStream(config.seed, config.stream_offset + replica).generator()
    t = config.horizon
    law, eta = config.law, config.eta
    mu = law.moments().mean
    keep_grid = config.grid is not None

    if eta is None:
        gen = _walk_points(rng, law, t, mu)
    else:
        gen = _perturbed_walk_points(rng, law, eta, t, mu)

    counts = np.zeros(config.levels, dtype=np.int64)
    counts[0] = gen.size
    path = np.zeros((config.levels, config.grid.size), dtype=np.int64) if keep_grid else None
    if keep_grid:
        path[0] = _grid_counts(gen, config.grid)
    gen1 = gen.copy() if config.retain_gen1 else None

    for k in range(2, config.levels + 1):
        need_times = keep_grid or k < config.levels
        if not need_times and eta is None and _is_exponential(law):
            rate = law.params["rate"]
            counts[k - 1] = int(rng.poisson((t - gen) * rate).sum()) if gen.size else 0
            gen = np.empty(0, dtype=np.float64)
        elif eta is None:
            gen, counts[k - 1] = _offspring(rng, law, gen, t, need_times)
        else:
            gen, counts[k - 1] = _offspring_perturbed(rng, law, eta, gen, t, need_times)
        if keep_grid:
            path[k - 1] = _grid_counts(gen, config.grid)
    return SimOutcome(counts, path, gen1)


def clt_statistic(yk: float, k: int, t: float, m: Moments, center: float) -> float:
    """a_k (yk - center) / t^{k-1/2}; asymptotically standard normal."""
    if t <= 0:
        raise ValueError("time must be positive")
    a_k = lil_constant(k, m.mean, m.sigma)
    return a_k * (yk - center) / t ** (k - 0.5)


def lil_statistic(
    yk: float, k: int, t: float, m: Moments, center: float, center_mode: str = "formula"
) -> LilStatistic:
    """a_k (yk - center) / sqrt(2 t^{2k-1} log log t); needs t > e."""
    if t <= E:
        raise ValueError("LIL statistic undefined for t <= e")
    a_k = lil_constant(k, m.mean, m.sigma)
    denom = math.sqrt(2.0 * t ** (2 * k - 1) * math.log(math.log(t)))
    return LilStatistic(k, t, a_k * (yk - center) / denom, center_mode)


def center_value(
    k: int,
    t: float,
    m: Moments,
    mode: str = "formula",
    table: "RenewalTable | ExponentialRenewal | None" = None,
) -> float:
    """Centering for the fluctuation statistics.

    "formula" is t^k/(k! mu^k); "table" uses an exact table when one is
    supplied, else the formula plus the nonlattice second-order term.
    """
    if mode == "formula":
        return leading_term(k, m.mean, t)
    if mode != "table":
        raise ValueError("center mode must be 'formula' or 'table'")
    if table is not None:
        return table.at(k, t)
    ac = AsymptoticConstants.from_moments(k, m)
    return leading_term(k, m.mean, t) + second_order(k, ac, t, "nonlattice")


def decompose_fluctuation(
    gen1_times: np.ndarray | None,
    yk: float,
    k: int,
    t: float,
    v_eval: "RenewalTable | ExponentialRenewal",
) -> FluctuationParts:
    """Split Y_k - V_k into I_k + J_k using retained level-1 birth times.

    J_k is the expected-subtree placement term
    sum_r V_{k-1}(t - S_r) - V_k(t); I_k is the remainder, so the identity
    I_k + J_k = Y_k - V_k holds by construction up to accumulation error.
    """
    if k < 2:
        raise ValueError("decomposition needs k >= 2")
    if gen1_times is None:
        raise ValueError("missing retained birth times: simulate with retain_gen1")
    vk_t = v_eval.at(k, t)
    j_k = math.fsum(v_eval.at(k - 1, t - s) for s in gen1_times.tolist()) - vk_t
    total = yk - vk_t
    return FluctuationParts(total - j_k, j_k, total)


@dataclass
class MonteCarloSummary:
    """Ensemble reduction: counts and fluctuation statistics per generation."""

    config: SimConfig
    counts: np.ndarray  # (R, K) int64
    means: np.ndarray  # (K,)
    variances: np.ndarray  # (K,) ddof=1
    clt: np.ndarray | None  # (R, K)
    lil: np.ndarray | None  # (R, K), None when horizon <= e or sigma = 0
    centers: np.ndarray  # (K,)

    def quantiles(self, qs=(0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99)) -> dict:
        if self.clt is None:
            return {}
        out = {}
        for k in range(1, self.config.levels + 1):
            vals = np.quantile(self.clt[:, k - 1], qs)
            out[k] = {f"{q:g}": float(v) for q, v in zip(qs, vals)}
        return out

    def to_dict(self) -> dict:
        d = {
            "replicas": self.config.replicas,
            "levels": self.config.levels,
            "t": self.config.horizon,
            "seed": self.config.seed,
            "means": [float(x) for x in self.means],
            "variances": [float(x) for x in self.variances],
            "centers": [float(x) for x in self.centers],
        }
        if self.clt is not None:
            d["clt_mean"] = [float(x) for x in self.clt.mean(axis=0)]
            d["clt_variance"] = [float(x) for x in self.clt.var(axis=0, ddof=1)]
            d["clt_quantiles"] = self.quantiles()
        if self.lil is not None:
            d["lil_mean"] = [float(x) for x in self.lil.mean(axis=0)]
        return d


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: explicit argument or cpu count, capped by ITERLOG_THREADS."""
    if workers is None:
        workers = os.cpu_count() or 1
    cap = os.environ.get("ITERLOG_THREADS")
    if cap:
        workers = min(workers, int(cap))
    return max(1, workers)


def _mc_counts_worker(args) -> tuple[int, np.ndarray]:
    config, start, stop = args
    out = np.empty((stop - start, config.levels), dtype=np.int64)
    for i, r in enumerate(range(start, stop)):
        out[i] = simulate_generations(config, r).counts
    return start, out


def _run_replicas(config: SimConfig, workers: int) -> np.ndarray:
    r = config.replicas
    if workers <= 1 or r < 64:
        _, out = _mc_counts_worker((config, 0, r))
        return out
    chunk = max(1, -(-r // (workers * 4)))
    jobs = [(config, s, min(s + chunk, r)) for s in range(0, r, chunk)]
    out = np.empty((r, config.levels), dtype=np.int64)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for start, block in pool.map(_mc_counts_worker, jobs):
            out[start : start + block.shape[0]] = block
    return out


def monte_carlo(
    config: SimConfig,
    workers: int | None = None,
    table: "RenewalTable | ExponentialRenewal | None" = None,
) -> MonteCarloSummary:
    """Run the ensemble and reduce it; a pure function of (config, seed).

    Replica r always owns stream (seed, stream_offset + r), so the summary
    is identical under any worker count or scheduling order.
    """
    if config.replicas < 2:
        raise ValueError("ensemble needs at least two replicas")
    counts = _run_replicas(config, resolve_workers(workers))
    m = config.law.moments()
    ks = np.arange(1, config.levels + 1)
    centers = np.array(
        [center_value(k, config.horizon, m, config.center, table) for k in ks]
    )
    means = counts.mean(axis=0)
    variances = counts.var(axis=0, ddof=1)
    clt = None
    lil = None
    if m.variance > 0:
        a = np.array([lil_constant(k, m.mean, m.sigma) for k in ks])
        t = config.horizon
        clt = a * (counts - centers) / t ** (ks - 0.5)
        if t > E:
            denom = np.sqrt(2.0 * t ** (2 * ks - 1) * math.log(math.log(t)))
            lil = a * (counts - centers) / denom
    return MonteCarloSummary(config, counts, means, variances, clt, lil, centers)


def _decomp_worker(args) -> tuple[int, np.ndarray]:
    config, start, stop, k, v_eval = args
    out = np.empty((stop - start, 3), dtype=np.float64)
    for i, r in enumerate(range(start, stop)):
        sim = simulate_generations(config, r)
        parts = decompose_fluctuation(
            sim.gen1_times, float(sim.counts[k - 1]), k, config.horizon, v_eval
        )
        out[i] = (parts.i_k, parts.j_k, parts.total)
    return start, out


def decomposition_ensemble(
    config: SimConfig,
    k: int,
    v_eval: "RenewalTable | ExponentialRenewal",
    workers: int | None = None,
) -> np.ndarray:
    """Per-replica (I_k, J_k, Y_k - V_k) rows, replicas in index order."""
    if not config.retain_gen1:
        config = replace(config, retain_gen1=True)
    if k < 2 or k > config.levels:
        raise ValueError("decomposition level must satisfy 2 <= k <= K")
    r = config.replicas
    n_workers = resolve_workers(workers)
    if n_workers <= 1 or r < 64:
        _, out = _decomp_worker((config, 0, r, k, v_eval))
        return out
    chunk = max(1, -(-r // (n_workers * 4)))
    jobs = [(config, s, min(s + chunk, r), k, v_eval) for s in range(0, r, chunk)]
    out = np.empty((r, 3), dtype=np.float64)
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        for start, block in pool.map(_decomp_worker, jobs):
            out[start : start + block.shape[0]] = block
    return out
