"""Convergence harness: recursion iterator, limit extrapolation, theorem tables.

The limit theorems come with no rates, so acceptance is trend-based: a
quantity "verifies" when its ratio to the predicted limit approaches 1
over a decade-spaced grid with monotonically shrinking deviations.  The
extrapolator assumes one power-law correction term ``value + c * n**-delta``
and recovers the limit Richardson-style from the last three grid points.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .model import ModelSpec, moments
from .pgf_engine import (
    ConditionalLawQuery,
    conditional_laplace,
    extinction_pmf,
    survival_sequence,
    yaglom_transform,
)
from .asymptotics import AsymptoticConstants, constants, theorem_rhs

__all__ = [
    "Perturbation",
    "RecursionSpec",
    "lemma_basic_iterate",
    "lemma_basic_checkpoints",
    "limit_estimate",
    "ConvergenceTable",
    "theorem_table",
    "regime_m",
]


# ---------------------------------------------------------------------------
# The scalar recursion  Delta_n = A n^-alpha (1+eps1) + Delta_{n-1}(1 - B n^-beta (1+eps2))
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Perturbation:
    """Vanishing perturbation sequence: zero, c * n**-p, or a user table."""

    kind: str = "zero"
    c: float = 0.0
    p: float = 0.0
    table: tuple = ()

    @classmethod
    def zero(cls) -> "Perturbation":
        return cls(kind="zero")

    @classmethod
    def power(cls, c: float, p: float) -> "Perturbation":
        if p <= 0.0:
            raise DomainError("power perturbation needs p > 0 (must vanish)")
        return cls(kind="power", c=c, p=p)

    @classmethod
    def from_table(cls, values: Sequence[float]) -> "Perturbation":
        return cls(kind="table", table=tuple(float(v) for v in values))

    def values(self, ns: np.ndarray) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros(ns.shape)
        if self.kind == "power":
            return self.c * ns**-self.p
        if self.kind == "table":
            if len(self.table) < ns[-1]:
                raise DomainError(
                    f"perturbation table has {len(self.table)} entries,"
                    f" needs {int(ns[-1])}"
                )
            return np.asarray(self.table, dtype=float)[ns.astype(int) - 1]
        raise DomainError(f"unknown perturbation kind {self.kind!r}")


@dataclass(frozen=True)
class RecursionSpec:
    """Parameters of the scalar recursion; the hypotheses are enforced.

    A may be zero (degenerate control: the sequence stays identically 0),
    otherwise A, B > 0, alpha > beta and beta in (0, 1).
    """

    a: float
    b: float
    alpha: float
    beta: float
    eps1: Perturbation = Perturbation.zero()
    eps2: Perturbation = Perturbation.zero()

    def __post_init__(self):
        if self.a < 0.0 or self.b <= 0.0:
            raise DomainError("need A >= 0 and B > 0")
        if not (self.alpha > self.beta):
            raise DomainError(f"need alpha > beta, got {self.alpha} <= {self.beta}")
        if not (0.0 < self.beta < 1.0):
            raise DomainError(f"need beta in (0, 1), got {self.beta}")


_CHUNK = 1 << 14


def lemma_basic_iterate(rspec: RecursionSpec, n_max: int) -> np.ndarray:
    """Iterate from Delta_0 = 0; returns n^(alpha-beta) Delta_n for n = 1..n_max."""
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    gamma = rspec.alpha - rspec.beta
    out = np.empty(n_max)
    delta = 0.0
    for start in range(1, n_max + 1, _CHUNK):
        ns = np.arange(start, min(start + _CHUNK, n_max + 1), dtype=float)
        drive = rspec.a * ns**-rspec.alpha * (1.0 + rspec.eps1.values(ns))
        decay = 1.0 - rspec.b * ns**-rspec.beta * (1.0 + rspec.eps2.values(ns))
        seg = np.empty(ns.size)
        for k in range(ns.size):
            delta = drive[k] + delta * decay[k]
            seg[k] = delta
        out[start - 1 : start - 1 + ns.size] = seg * ns**gamma
    return out


def lemma_basic_checkpoints(
    rspecs: Sequence[RecursionSpec], n_max: int, checkpoints: Sequence[int]
) -> np.ndarray:
    """Vectorized across parameter sets; returns (len(checkpoints), len(rspecs)).

    Same recursion as :func:`lemma_basic_iterate`, evaluated jointly for a
    family of parameter sets so large-n sweeps stay cheap.
    """
    checkpoints = sorted(int(c) for c in checkpoints)
    if not checkpoints or checkpoints[-1] > n_max or checkpoints[0] < 1:
        raise DomainError("checkpoints must lie in 1..n_max")
    a = np.array([r.a for r in rspecs])
    b = np.array([r.b for r in rspecs])
    alpha = np.array([r.alpha for r in rspecs])
    beta = np.array([r.beta for r in rspecs])
    delta = np.zeros(len(rspecs))
    out = np.empty((len(checkpoints), len(rspecs)))
    next_cp = 0
    for start in range(1, n_max + 1, _CHUNK):
        stop = min(start + _CHUNK, n_max + 1)
        ns = np.arange(start, stop, dtype=float)
        eps1 = np.stack([r.eps1.values(ns) for r in rspecs], axis=1)
        eps2 = np.stack([r.eps2.values(ns) for r in rspecs], axis=1)
        npow_a = ns[:, None] ** -alpha[None, :]
        npow_b = ns[:, None] ** -beta[None, :]
        drive = a[None, :] * npow_a * (1.0 + eps1)
        decay = 1.0 - b[None, :] * npow_b * (1.0 + eps2)
        for k in range(ns.size):
            delta = drive[k] + delta * decay[k]
            n = start + k
            while next_cp < len(checkpoints) and checkpoints[next_cp] == n:
                out[next_cp] = delta * float(n) ** (alpha - beta)
                next_cp += 1
        if next_cp == len(checkpoints):
            break
    return out


# ---------------------------------------------------------------------------
# Limit extrapolation
# ---------------------------------------------------------------------------


def limit_estimate(
    ns: Sequence[float], values: Sequence[float], atol: float = 1e-13
) -> tuple[float, str]:
    """(limit estimate, verdict) assuming one correction term c * n**-delta.

    Verdicts: "converging" when successive deviations shrink monotonically
    with a stable sign, "diverging" when they grow, "inconclusive" otherwise
    (oscillation, too little signal).  A constant tail is converging with
    limit equal to the last value.
    """
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if ns.size != values.size or ns.size < 3:
        raise DomainError("need at least 3 grid points")
    if np.any(np.diff(ns) <= 0):
        raise DomainError("grid must be strictly increasing")
    diffs = np.diff(values)
    mags = np.abs(diffs)
    if np.all(mags <= atol * np.maximum(1.0, np.abs(values[-1]))):
        return float(values[-1]), "converging"
    signs = np.sign(diffs[np.abs(diffs) > 0])
    if signs.size >= 2 and np.any(signs[1:] != signs[:-1]):
        return float(values[-1]), "inconclusive"
    if np.all(mags[1:] < mags[:-1]):
        verdict = "converging"
    elif np.all(mags[1:] > mags[:-1]):
        verdict = "diverging"
    else:
        verdict = "inconclusive"
    d_prev, d_last = diffs[-2], diffs[-1]
    limit = float(values[-1])
    if verdict == "converging" and d_prev != 0.0:
        rho = d_last / d_prev
        ratio = ns[-1] / ns[-2]
        ratio_prev = ns[-2] / ns[-3]
        if abs(ratio / ratio_prev - 1.0) < 0.2 and 0.0 < rho < 1.0:
            limit = float(values[-1] + d_last * rho / (1.0 - rho))
    return limit, verdict


# ---------------------------------------------------------------------------
# Theorem tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceTable:
    """Exact finite-n values against a predicted limit, with a trend verdict."""

    kind: str
    params: dict
    ns: np.ndarray
    exact: np.ndarray
    predicted: np.ndarray
    extrapolated: float
    verdict: str

    @property
    def ratios(self) -> np.ndarray:
        return self.exact / self.predicted

    def deviations(self) -> np.ndarray:
        return np.abs(self.ratios - 1.0)

    def rows(self) -> list[dict]:
        out = []
        for k in range(self.ns.size):
            out.append(
                {
                    "n": int(self.ns[k]),
                    "exact": float(self.exact[k]),
                    "predicted": float(self.predicted[k]),
                    "ratio": float(self.ratios[k]),
                }
            )
        return out

    def render_text(self) -> str:
        header = f"{'n':>10} {'exact':>16} {'predicted':>16} {'ratio':>12}"
        lines = [header]
        for row in self.rows():
            lines.append(
                f"{row['n']:>10d} {row['exact']:>16.9e}"
                f" {row['predicted']:>16.9e} {row['ratio']:>12.7f}"
            )
        lines.append(
            f"extrapolated ratio limit: {self.extrapolated:.7f}   verdict: {self.verdict}"
        )
        return "\n".join(lines)


def regime_m(kind: str, ac: AsymptoticConstants, n: int, *, i=None, y=None, x=None) -> int:
    """Observation-time rules realizing each regime.

    T2: geometric mean of 1 and n^gamma_1 (grows, yet << n^gamma_1; the
    dominant finite-n bias scales like m / n^gamma_1, so the rule stays low);
    T3: m = y n^gamma_i; T4: geometric mean of n^gamma_i and n^gamma_{i+1};
    T5: m = x n.  Results are clamped to 1 <= m <= n - 1.
    """
    if kind == "T2":
        m = n ** (ac.gamma[1] / 2.0)
    elif kind == "T3":
        m = y * n ** ac.gamma[i]
    elif kind == "T4":
        m = n ** ((ac.gamma[i] + ac.gamma[i + 1]) / 2.0)
    elif kind == "T5":
        m = x * n
    else:
        raise DomainError(f"no m rule for kind {kind!r}")
    return max(1, min(n - 1, int(round(m))))


def _conditional_exact(spec, ac, kind, n, *, i=None, y=None, x=None, lam=None,
                       indicator=False, precision="standard"):
    """Exact lhs of the conditional limit theorems at finite n."""
    n_types = spec.n_types
    m = regime_m(kind, ac, n, i=i, y=y, x=x)
    s = [1.0] * n_types
    lam_full = [0.0] * n_types
    scales = [1.0] * n_types
    if kind == "T2":
        for l in range(1, n_types + 1):
            lam_full[l - 1] = float(lam[l - 1])
            scales[l - 1] = float(m) ** l
    elif kind == "T3":
        if indicator:
            for k in range(1, i):
                s[k - 1] = 0.0
        for l in range(i, n_types + 1):
            lam_full[l - 1] = float(lam[l - i])
            scales[l - 1] = float(n) ** ((l - i + 1) * ac.gamma[i])
    elif kind == "T4":
        if indicator:
            for k in range(1, i + 1):
                s[k - 1] = 0.0
        for l in range(i + 1, n_types + 1):
            lam_full[l - 1] = float(lam[l - i - 1])
            scales[l - 1] = float(n) ** ac.gamma[i + 1] * float(m) ** (l - i - 1)
    elif kind == "T5":
        if indicator:
            for k in range(1, n_types):
                s[k - 1] = 0.0
        lam_full[-1] = float(lam)
        scales[-1] = float(moments(spec).b[-1]) * n
    else:
        raise DomainError(f"not a conditional kind: {kind!r}")
    query = ConditionalLawQuery(
        n=n, m=m, s=tuple(s), lam=tuple(lam_full), scales=tuple(scales)
    )
    result = conditional_laplace(spec, query, precision=precision)
    if result.est_rel_error > 1e-6:
        warnings.warn(
            f"conditional law at n={n}, m={m}: estimated relative error"
            f" {result.est_rel_error:.1e}; consider precision='compensated'",
            stacklevel=2,
        )
    return result.value


def theorem_table(
    kind: str,
    spec: ModelSpec,
    ns: Sequence[int],
    *,
    i: int | None = None,
    y: float | None = None,
    x: float | None = None,
    lam=None,
    indicator: bool = False,
    exponent_mode: str = "lemma",
    precision: str = "standard",
    mc_exact: Callable[[int], float] | None = None,
) -> ConvergenceTable:
    """Pair exact finite-n values with the predicted limit over an n-grid.

    kinds: T1 and Surv (extinction pmf / survival asymptotics, argument i),
    T2..T5 (conditional laws; lam as in :func:`theorem_rhs`), Yaglom (lam),
    Tot1 (i; exact side must come from Monte Carlo via ``mc_exact(lam)``,
    here the grid variable is lam instead of n).
    """
    ac = constants(moments(spec))
    ns_arr = np.asarray(sorted(int(v) for v in ns))
    exact = np.empty(ns_arr.size)
    predicted = np.empty(ns_arr.size)

    if kind == "T1":
        if i is None:
            raise DomainError("T1 table needs i")
        pmf = extinction_pmf(spec, i, int(ns_arr[-1]))
        for k, n in enumerate(ns_arr):
            exact[k] = pmf.prob(int(n))
            predicted[k] = theorem_rhs("T1", ac, i=i, n=int(n))
    elif kind == "Surv":
        if i is None:
            raise DomainError("Surv table needs i")
        seq = survival_sequence(spec, int(ns_arr[-1]))
        for k, n in enumerate(ns_arr):
            exact[k] = seq.survival(i, int(n))
            predicted[k] = ac.c[i] / float(n) ** ac.gamma[i]
    elif kind in ("T2", "T3", "T4", "T5"):
        for k, n in enumerate(ns_arr):
            exact[k] = _conditional_exact(
                spec, ac, kind, int(n), i=i, y=y, x=x, lam=lam,
                indicator=indicator, precision=precision,
            )
        if kind == "T2":
            rhs = theorem_rhs("T2", ac, lam=lam)
        elif kind == "T3":
            rhs = theorem_rhs("T3", ac, i=i, y=y, lam=lam, exponent_mode=exponent_mode)
        elif kind == "T4":
            rhs = theorem_rhs("T4", ac, i=i, lam=lam)
        else:
            rhs = theorem_rhs("T5", ac, x=x, lam=lam)
        predicted[:] = rhs
    elif kind == "Yaglom":
        for k, n in enumerate(ns_arr):
            exact[k] = yaglom_transform(spec, int(n), float(lam))
        predicted[:] = theorem_rhs("Yaglom", ac, lam=lam)
    elif kind == "Tot1":
        if mc_exact is None or i is None:
            raise DomainError("Tot1 table needs i and mc_exact(lam)")
        # grid variable is lam = 1/n for n in ns (lam downward to 0)
        for k, n in enumerate(ns_arr):
            lam_k = 1.0 / float(n)
            exact[k] = mc_exact(lam_k)
            predicted[k] = theorem_rhs("Tot1", ac, i=i, lam=lam_k)
    else:
        raise DomainError(f"unknown table kind {kind!r}")

    ratios = exact / predicted
    extrapolated, _ = limit_estimate(ns_arr.astype(float), ratios)
    # The limit of every ratio column is 1 by construction, so the verdict
    # tracks the deviations from 1 rather than successive differences.
    devs = np.abs(ratios - 1.0)
    if np.all(devs[1:] < devs[:-1]) or np.all(devs <= 1e-12):
        verdict = "converging"
    elif np.all(devs[1:] > devs[:-1]):
        verdict = "diverging"
    else:
        verdict = "inconclusive"
    params = {
        "kind": kind, "i": i, "y": y, "x": x,
        "lam": None if lam is None else np.asarray(lam, dtype=float).tolist(),
        "indicator": indicator, "exponent_mode": exponent_mode,
    }
    return ConvergenceTable(
        kind=kind,
        params=params,
        ns=ns_arr,
        exact=exact,
        predicted=predicted,
        extrapolated=extrapolated,
        verdict=verdict,
    )
