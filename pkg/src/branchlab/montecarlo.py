"""Forward simulation, conditioned ensembles and total-progeny functionals.

Reproducibility model
---------------------
Replicas are partitioned into fixed-size blocks of ``BLOCK`` consecutive
indices.  Block ``b`` draws from its own counter-based Philox stream keyed
``(seed, b)``, and blocks are processed independently, so results are a
pure function of ``(seed, replicas)`` — identical across worker counts and
scheduling orders.  Within a block the replicas are simulated in lockstep
with vectorized draws; aggregation across blocks is commutative.

Each lockstep generation draws one aggregated variate per (parent type,
child type) component for the whole active set: the component families all
have closed-form laws for sums of i.i.d. copies, so a generation costs
O(N^2) RNG calls however large the population is.  Trajectories whose
population exceeds ``population_cap`` are censored and flagged, never
silently dropped.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import DomainError, FeasibilityError
from .model import ModelSpec
from .pgf_engine import extinction_pmf

__all__ = [
    "BLOCK",
    "McConfig",
    "TrajectorySample",
    "ConditionalEnsemble",
    "ProgenyStats",
    "simulate",
    "extinction_time_counts",
    "snapshot_at",
    "conditional_ensemble",
    "total_progeny",
    "tree_export",
]

BLOCK = 1 << 16  # replicas per RNG block; fixed so results never depend on scheduling

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class McConfig:
    """Simulation budget and reproducibility knobs.

    ``seed`` and the replica index determine every sample (see the module
    docstring for the block-stream construction).  ``workers`` only affects
    scheduling, never results.
    """

    seed: int
    replicas: int
    max_generations: int = 10_000
    population_cap: int = 10_000_000
    workers: int = 1

    def __post_init__(self):
        if self.replicas < 1:
            raise DomainError("replicas must be >= 1")
        if self.max_generations < 1:
            raise DomainError("max_generations must be >= 1")
        if self.population_cap < 1:
            raise DomainError("population_cap must be >= 1")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")


@dataclass(frozen=True)
class TrajectorySample:
    """One trajectory: layer counts for generations 0..T-1 (the alive ones).

    ``extinction_time`` is None when the trajectory was censored (by the
    population cap or the generation horizon) before dying out.
    """

    replica: int
    layers: np.ndarray  # (n_alive_generations, N)
    extinction_time: int | None
    censor_reason: str | None = None

    @property
    def censored(self) -> bool:
        return self.extinction_time is None


def tree_export(sample: TrajectorySample) -> dict:
    """Layered-tree record: generations are layers, types are vertex colors.

    The genealogy of a trajectory that dies at T is a rooted tree of height
    T whose depth-d layer holds the generation-d particles; colors (type
    indices) never decrease from the root to the leaves.  The record keeps
    only the per-layer per-color counts, which is lossless for the layer
    profile (not the genealogy).
    """
    return {
        "height": sample.extinction_time,
        "censored": sample.censored,
        "layers": [[int(v) for v in row] for row in sample.layers],
    }


# ---------------------------------------------------------------------------
# Block machinery
# ---------------------------------------------------------------------------


def _block_rng(seed: int, block: int) -> np.random.Generator:
    key = np.array([seed & _MASK64, block & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _block_sizes(replicas: int) -> list[int]:
    full, rem = divmod(replicas, BLOCK)
    return [BLOCK] * full + ([rem] if rem else [])


def _compile_samplers(spec: ModelSpec):
    """(parent0, child0, draw_fn) triples in canonical order."""
    out = []
    for law in spec.laws:
        for j, comp in law.components:
            out.append((law.type_index - 1, j - 1, comp.sample_total))
    return out


def _offspring_step(state: np.ndarray, rng, samplers, n_types: int) -> np.ndarray:
    new = np.zeros_like(state)
    for pi, ci, fn in samplers:
        new[:, ci] += fn(state[:, pi], rng)
    return new


def _run_blocks(cfg: McConfig, block_fn):
    """Apply ``block_fn(block_index, size, rng)`` to every block, in order."""
    sizes = _block_sizes(cfg.replicas)
    if cfg.workers == 1 or len(sizes) == 1:
        return [
            block_fn(b, size, _block_rng(cfg.seed, b))
            for b, size in enumerate(sizes)
        ]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        futures = [
            pool.submit(block_fn, b, size, _block_rng(cfg.seed, b))
            for b, size in enumerate(sizes)
        ]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# Aggregate kernels
# ---------------------------------------------------------------------------


def extinction_time_counts(
    spec: ModelSpec, cfg: McConfig, n_max: int
) -> tuple[np.ndarray, int]:
    """Histogram of T over replicas: counts[n] = #{T = n}, n <= n_max.

    Trajectories still alive at n_max (or cap-censored) are returned in the
    second slot; they carry the mass P(T > n_max).
    """
    samplers = _compile_samplers(spec)
    n_types = spec.n_types
    cap = cfg.population_cap

    def run(block, size, rng):
        counts = np.zeros(n_max + 1, dtype=np.int64)
        censored = 0
        state = np.zeros((size, n_types), dtype=np.int64)
        state[:, 0] = 1
        for gen in range(1, n_max + 1):
            state = _offspring_step(state, rng, samplers, n_types)
            pop = state.sum(axis=1)
            dead = pop == 0
            counts[gen] += int(np.count_nonzero(dead))
            over = pop > cap
            censored += int(np.count_nonzero(over))
            keep = ~(dead | over)
            if not np.all(keep):
                state = state[keep]
            if state.shape[0] == 0:
                break
        censored += state.shape[0]
        return counts, censored

    parts = _run_blocks(cfg, run)
    counts = np.sum([p[0] for p in parts], axis=0)
    censored = sum(p[1] for p in parts)
    return counts, censored


def snapshot_at(spec: ModelSpec, cfg: McConfig, m: int) -> np.ndarray:
    """Z(m) for every replica (rows of zeros once extinct)."""
    if m < 0:
        raise DomainError("m must be >= 0")
    samplers = _compile_samplers(spec)
    n_types = spec.n_types
    cap = cfg.population_cap

    def run(block, size, rng):
        snap = np.zeros((size, n_types), dtype=np.int64)
        state = np.zeros((size, n_types), dtype=np.int64)
        state[:, 0] = 1
        idx = np.arange(size)
        if m == 0:
            return state
        for _ in range(m):
            state = _offspring_step(state, rng, samplers, n_types)
            pop = state.sum(axis=1)
            keep = (pop > 0) & (pop <= cap)
            if not np.all(keep):
                state = state[keep]
                idx = idx[keep]
            if idx.size == 0:
                break
        snap[idx] = state
        return snap

    return np.concatenate(_run_blocks(cfg, run), axis=0)


@dataclass(frozen=True)
class ConditionalEnsemble:
    """Accepted Z(m) samples given {T_N = n}, with the acceptance report."""

    n: int
    m: int
    z_m: np.ndarray  # (accepted, N)
    attempts: int
    accepted: int
    censored: int
    exact_probability: float

    @property
    def empirical_rate(self) -> float:
        return self.accepted / self.attempts

    def laplace(self, lam: Sequence[float], scales: Sequence[float]) -> tuple[float, float]:
        """Mean and standard error of exp(-sum_l lam_l Z_l(m) / scale_l)."""
        lam = np.asarray(lam, dtype=float)
        scales = np.asarray(scales, dtype=float)
        vals = np.exp(-(self.z_m * (lam / scales)).sum(axis=1))
        return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals)))

    def indicator_prob(self, k: int) -> float:
        """Empirical P(Z_1(m) + ... + Z_k(m) = 0 | T = n)."""
        if k == 0:
            return 1.0
        return float(np.mean(self.z_m[:, :k].sum(axis=1) == 0))

    def mean_population(self) -> np.ndarray:
        return self.z_m.mean(axis=0)


def conditional_ensemble(
    spec: ModelSpec,
    n: int,
    m: int,
    cfg: McConfig,
    *,
    min_expected_accepted: float = 25.0,
) -> ConditionalEnsemble:
    """Unbiased rejection sampling of Z(m) on the exact event {T_N = n}.

    Feasibility is gated against the exact extinction pmf: if the configured
    replica budget cannot be expected to yield ``min_expected_accepted``
    acceptances, the call fails with the required budget estimate instead of
    silently underdelivering.
    """
    if not (1 <= m <= n - 1):
        raise DomainError(f"need 1 <= m <= n - 1, got m = {m}, n = {n}")
    p_exact = extinction_pmf(spec, 1, n).prob(n)
    expected = cfg.replicas * p_exact
    if expected < min_expected_accepted:
        need = math.inf if p_exact == 0.0 else int(math.ceil(min_expected_accepted / p_exact))
        raise FeasibilityError(
            f"rejection sampling infeasible: P(T = {n}) = {p_exact:.3e},"
            f" expected acceptances {expected:.2f} < {min_expected_accepted};"
            f" need >= {need} replicas"
        )
    samplers = _compile_samplers(spec)
    n_types = spec.n_types
    cap = cfg.population_cap

    def run(block, size, rng):
        state = np.zeros((size, n_types), dtype=np.int64)
        state[:, 0] = 1
        idx = np.arange(size)
        snap = np.zeros((size, n_types), dtype=np.int64)
        t_val = np.zeros(size, dtype=np.int64)  # 0 = alive past horizon
        censored = 0
        for gen in range(1, n + 1):
            state = _offspring_step(state, rng, samplers, n_types)
            if gen == m:
                snap[idx] = state
            pop = state.sum(axis=1)
            dead = pop == 0
            t_val[idx[dead]] = gen
            over = pop > cap
            censored += int(np.count_nonzero(over))
            keep = ~(dead | over)
            if not np.all(keep):
                state = state[keep]
                idx = idx[keep]
            if idx.size == 0:
                break
        accepted_mask = t_val == n
        return snap[accepted_mask], int(np.count_nonzero(accepted_mask)), censored

    parts = _run_blocks(cfg, run)
    z_m = np.concatenate([p[0] for p in parts], axis=0)
    accepted = sum(p[1] for p in parts)
    censored = sum(p[2] for p in parts)
    return ConditionalEnsemble(
        n=n,
        m=m,
        z_m=z_m,
        attempts=cfg.replicas,
        accepted=accepted,
        censored=censored,
        exact_probability=p_exact,
    )


@dataclass(frozen=True)
class ProgenyStats:
    """Samples of the total type-j progeny of the types p..i subprocess.

    ``j = None`` aggregates over every child type above ``i``.  Censored
    trajectories (cap or horizon hit before subprocess extinction) keep
    their partial totals and are counted in ``censored``; at the default
    caps their effect on Laplace functionals is far below Monte Carlo noise
    because a censored trajectory's true contribution to exp(-lam W) is
    already essentially zero for the lam of interest.
    """

    p: int
    i: int
    j: int | None
    w: np.ndarray  # (replicas,) int64
    censored: int

    def laplace(self, lam: float) -> tuple[float, float]:
        vals = np.exp(-lam * self.w.astype(float))
        return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals)))

    def one_minus_laplace(self, lam_grid: Sequence[float]) -> np.ndarray:
        return np.array([1.0 - self.laplace(lam)[0] for lam in lam_grid])

    def p_zero(self) -> float:
        return float(np.mean(self.w == 0))


def total_progeny(
    spec: ModelSpec,
    cfg: McConfig,
    p: int,
    i: int,
    j: int | None = None,
) -> ProgenyStats:
    """Simulate the types p..i subprocess to extinction, accumulating its
    type-j children (all types > i when j is None)."""
    n_types = spec.n_types
    if not (1 <= p <= i < n_types):
        raise DomainError(f"need 1 <= p <= i < N, got p = {p}, i = {i}, N = {n_types}")
    if j is not None and not (i < j <= n_types):
        raise DomainError(f"need i < j <= N, got j = {j}")

    width = i - p + 1
    propagate = []  # draws feeding back into the subprocess
    accumulate = []  # draws counted into W
    for law in spec.laws:
        r = law.type_index
        if not (p <= r <= i):
            continue
        for jj, comp in law.components:
            if p <= jj <= i:
                propagate.append((r - p, jj - p, comp.sample_total))
            elif (j is None and jj > i) or jj == j:
                accumulate.append((r - p, comp.sample_total))
    cap = cfg.population_cap
    horizon = cfg.max_generations

    def run(block, size, rng):
        state = np.zeros((size, width), dtype=np.int64)
        state[:, 0] = 1  # one ancestor of type p
        w = np.zeros(size, dtype=np.int64)
        idx = np.arange(size)
        censored = 0
        for _ in range(horizon):
            new = np.zeros_like(state)
            gained = np.zeros(idx.size, dtype=np.int64)
            for pi, ci, fn in propagate:
                new[:, ci] += fn(state[:, pi], rng)
            for pi, fn in accumulate:
                gained += fn(state[:, pi], rng)
            w[idx] += gained
            state = new
            pop = state.sum(axis=1)
            dead = pop == 0
            over = (pop > cap) | (w[idx] > cap)
            censored += int(np.count_nonzero(over & ~dead))
            keep = ~(dead | over)
            if not np.all(keep):
                state = state[keep]
                idx = idx[keep]
            if idx.size == 0:
                break
        censored += idx.size
        return w, censored

    parts = _run_blocks(cfg, run)
    w = np.concatenate([part[0] for part in parts])
    censored = sum(part[1] for part in parts)
    return ProgenyStats(p=p, i=i, j=j, w=w, censored=censored)


# ---------------------------------------------------------------------------
# Per-trajectory simulation (full layer history)
# ---------------------------------------------------------------------------


def simulate(spec: ModelSpec, cfg: McConfig) -> Iterator[TrajectorySample]:
    """Stream TrajectorySample objects in replica order.

    Uses the same block kernels as the aggregate paths (identical streams),
    but materializes the full layer history of every replica; prefer the
    aggregate functions for large-replica statistics.
    """
    samplers = _compile_samplers(spec)
    n_types = spec.n_types
    cap = cfg.population_cap
    horizon = cfg.max_generations

    def run(block, size, rng):
        state = np.zeros((size, n_types), dtype=np.int64)
        state[:, 0] = 1
        idx = np.arange(size)
        history = [(idx, state.copy())]
        t_val = np.zeros(size, dtype=np.int64)
        reason = [None] * size
        for gen in range(1, horizon + 1):
            state = _offspring_step(state, rng, samplers, n_types)
            pop = state.sum(axis=1)
            dead = pop == 0
            t_val[idx[dead]] = gen
            over = pop > cap
            for r in idx[over]:
                reason[r] = "population_cap"
            keep = ~(dead | over)
            live_idx = idx[keep]
            live_state = state[keep]
            if live_idx.size:
                history.append((live_idx, live_state.copy()))
            state = live_state
            idx = live_idx
            if idx.size == 0:
                break
        for r in idx:
            if reason[r] is None:
                reason[r] = "horizon"
        layers: list[list[np.ndarray]] = [[] for _ in range(size)]
        for live_idx, live_state in history:
            for pos, r in enumerate(live_idx):
                layers[r].append(live_state[pos])
        out = []
        for r in range(size):
            t = int(t_val[r])
            out.append(
                TrajectorySample(
                    replica=block * BLOCK + r,
                    layers=np.array(layers[r], dtype=np.int64),
                    extinction_time=t if t > 0 else None,
                    censor_reason=reason[r] if t == 0 else None,
                )
            )
        return out

    for block_samples in _run_blocks(cfg, run):
        yield from block_samples
