"""Exact finite-n laws via generating-function iteration.

Everything here is carried in *survival form*: instead of iterating PGF
values ``H`` (which crowd up against 1), we iterate deficits ``1 - H``
through the per-type stable survival maps.  Survival probabilities decay
like ``n**(-gamma_i)``; the naive form ``1 - h(1 - Q)`` would lose all
precision by ``n ~ 1e4``, the deficit form keeps full relative accuracy to
``n = 1e6`` and beyond.

The conditional law given the extinction moment ``{T_N = n}`` is computed
from the exact identity

    E[u^{Z(m)}; T_N = n] = H_m(u * x) - H_m(u * y),

where ``x_l`` / ``y_l`` are the probabilities that a type-``l`` subtree is
dead after ``n - m`` / ``n - m - 1`` generations.  The difference of two
nearby iterates is the one genuinely ill-conditioned step; the standard
mode monitors its condition number and a compensated mode propagates the
difference itself through exact per-family difference forms, so the result
stays accurate however deep the conditioning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ConditioningError, DomainError
from .model import ModelSpec, compile_survival_diff_steps, compile_survival_steps, moments

__all__ = [
    "SurvivalSequence",
    "ExtinctionPmfTable",
    "ConditionalLawQuery",
    "ConditionalLawValue",
    "survival_sequence",
    "extinction_pmf",
    "pgf_forward",
    "deficit_forward",
    "conditional_laplace",
    "yaglom_transform",
    "mean_matrix_power",
    "second_moments",
]

_EPS = 2.0**-52


# ---------------------------------------------------------------------------
# Survival sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SurvivalSequence:
    """Per-type survival probabilities Q_n^{(i)} = P_i(Z(n) != 0), n = 0..n_max."""

    spec: ModelSpec
    n_max: int
    q: np.ndarray  # shape (N, n_max + 1)

    def survival(self, i: int, n: int) -> float:
        return float(self.q[i - 1, n])

    def extinct_by(self, n: int) -> np.ndarray:
        """Vector over types of P_l(Z(n) = 0) = 1 - Q_n^{(l)}."""
        return 1.0 - self.q[:, n]

    def pmf(self, i: int) -> np.ndarray:
        """P(T_{iN} = n) for n = 0..n_max (entry 0 is 0)."""
        row = self.q[i - 1]
        out = np.empty(self.n_max + 1)
        out[0] = 0.0
        out[1:] = row[:-1] - row[1:]
        return out


def _compute_survival(spec: ModelSpec, n_max: int) -> SurvivalSequence:
    n_types = spec.n_types
    if n_types == 1 and len(spec.law(1).components) == 1:
        sig = spec.law(1).components[0][1].sigma
        x = 1.0
        row = [1.0]
        app = row.append
        for _ in range(n_max):
            x = sig(x)
            app(x)
        rows = [row]
    else:
        fns = compile_survival_steps(spec)
        state = [1.0] * n_types
        rows = [[1.0] for _ in range(n_types)]
        appends = [rows[i].append for i in range(n_types)]
        for _ in range(n_max):
            state = [f(state) for f in fns]
            for app, v in zip(appends, state):
                app(v)
    q = np.array(rows)
    q.setflags(write=False)
    return SurvivalSequence(spec=spec, n_max=n_max, q=q)


@lru_cache(maxsize=64)
def survival_sequence(spec: ModelSpec, n_max: int) -> SurvivalSequence:
    """Q_n by the stable recursion Q_n = K(Q_{n-1}); O(n_max * N) arithmetic.

    Cached per (spec, n_max): specs are immutable and hashable, and the
    asymptotic tables re-request the same sweeps many times.
    """
    if n_max < 1:
        raise DomainError(f"n_max must be >= 1, got {n_max}")
    return _compute_survival(spec, n_max)


@dataclass(frozen=True)
class ExtinctionPmfTable:
    """P(T_{iN} = n) for one starting type, plus the censored tail mass."""

    type_index: int
    n_max: int
    pmf: np.ndarray  # index n = 0..n_max; pmf[0] = 0
    tail: float  # Q_{n_max}^{(i)} = P(T > n_max)

    def prob(self, n: int) -> float:
        return float(self.pmf[n])

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.pmf)


def extinction_pmf(spec: ModelSpec, i: int, n_max: int) -> ExtinctionPmfTable:
    """Extinction-moment law as differences of consecutive survival values."""
    seq = survival_sequence(spec, n_max)
    pmf = seq.pmf(i)
    pmf.setflags(write=False)
    return ExtinctionPmfTable(
        type_index=i, n_max=n_max, pmf=pmf, tail=seq.survival(i, n_max)
    )


# ---------------------------------------------------------------------------
# Forward PGF iterates
# ---------------------------------------------------------------------------


def deficit_forward(spec: ModelSpec, m: int, d0: Sequence[float]) -> list[float]:
    """Iterate the survival map m times from deficit vector d0 = 1 - s.

    Returns 1 - H_m(s) componentwise, each coordinate computed stably.
    """
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    state = list(d0)
    for v in state:
        if not (0.0 <= v <= 1.0):
            raise DomainError(f"deficit component {v!r} outside [0, 1]")
    fns = compile_survival_steps(spec)
    for _ in range(m):
        state = [f(state) for f in fns]
    return state


def pgf_forward(spec: ModelSpec, m: int, s: Sequence[float]) -> np.ndarray:
    """H_m^{(i,N)}(s) for all starting types i; H_0 = s."""
    s = list(s)
    if len(s) != spec.n_types:
        raise DomainError(f"s must have {spec.n_types} coordinates, got {len(s)}")
    for v in s:
        if not (0.0 <= v <= 1.0):
            raise DomainError(f"s component {v!r} outside [0, 1]")
    d = deficit_forward(spec, m, [1.0 - v for v in s])
    return np.array([1.0 - v for v in d])


# ---------------------------------------------------------------------------
# Conditional law given the extinction moment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionalLawQuery:
    """Arguments of E[u^{Z(m)} | T_N = n] with u_l = s_l * exp(-lam_l / scale_l).

    ``s`` realizes indicator patterns (coordinates set to 0) or marginalizes
    (set to 1); ``lam`` with per-coordinate ``scales`` realizes the rescaled
    Laplace arguments of the limit theorems.  Defaults: s = 1, lam = 0.
    """

    n: int
    m: int
    s: tuple | None = None
    lam: tuple | None = None
    scales: tuple | None = None

    def effective_u(self, n_types: int) -> tuple[list[float], list[float]]:
        """(u, 1 - u) with the complement evaluated without cancellation."""
        s = [1.0] * n_types if self.s is None else [float(v) for v in self.s]
        lam = [0.0] * n_types if self.lam is None else [float(v) for v in self.lam]
        scales = (
            [1.0] * n_types if self.scales is None else [float(v) for v in self.scales]
        )
        if not (len(s) == len(lam) == len(scales) == n_types):
            raise DomainError(
                f"query vectors must have {n_types} coordinates"
            )
        u = []
        comp = []
        for sv, lv, cv in zip(s, lam, scales):
            if not (0.0 <= sv <= 1.0):
                raise DomainError(f"s component {sv!r} outside [0, 1]")
            if lv < 0.0:
                raise DomainError(f"lambda component {lv!r} negative")
            if cv <= 0.0:
                raise DomainError(f"scale divisor {cv!r} not positive")
            u.append(sv * math.exp(-lv / cv))
            comp.append((1.0 - sv) - sv * math.expm1(-lv / cv))
        return u, comp


@dataclass(frozen=True)
class ConditionalLawValue:
    """Conditional Laplace value with its cancellation diagnostics."""

    value: float
    numerator: float
    denominator: float
    est_rel_error: float

    def __float__(self) -> float:
        return self.value


def _conditional_numerator_standard(spec, m, da, db):
    """H_m(a) - H_m(b) from the initial deficits, with a condition estimate."""
    fns = compile_survival_steps(spec)
    da = list(da)
    db = list(db)
    for _ in range(m):
        da = [f(da) for f in fns]
        db = [f(db) for f in fns]
    num = db[0] - da[0]
    if num == 0.0:
        # identical iterates (e.g. u = 0): the difference is exactly zero
        return 0.0, 0.0
    h = 1.0 - min(da[0], db[0])
    return num, _EPS * (h / abs(num))


def _conditional_numerator_compensated(spec, m, da, delta0):
    """Difference-propagated H_m(a) - H_m(b): full relative accuracy.

    Carries (p, delta) with p = 1 - H_k(a), delta = H_k(a) - H_k(b) >= 0 and
    r = p + delta = 1 - H_k(b); each step maps the pair through exact
    per-family survival differences, so the final difference has relative
    error O(m * eps) instead of O(eps / difference).
    """
    gns = compile_survival_diff_steps(spec)
    p = list(da)
    delta = list(delta0)
    for _ in range(m):
        r = [pv + dv for pv, dv in zip(p, delta)]
        stepped = [g(p, r) for g in gns]
        p = [sv[0] for sv in stepped]
        delta = [sv[1] for sv in stepped]
    num = delta[0]
    return num, _EPS * (m + 2)


def conditional_laplace(
    spec: ModelSpec,
    query: ConditionalLawQuery,
    *,
    precision: str = "standard",
    floor: float = 1e-300,
) -> ConditionalLawValue:
    """Exact E[u^{Z(m)} | T_N = n] for a process started from one type-1 particle.

    With x_l / y_l the per-type extinction probabilities at horizons
    n - m and n - m - 1, returns
    (H_m(u*x) - H_m(u*y)) / (Q_{n-1}^{(1)} - Q_n^{(1)}).

    precision="compensated" switches the numerator to exact difference
    propagation (recommended for n beyond ~1e4 or when the reported
    ``est_rel_error`` of the standard mode is unacceptable).
    """
    n, m = query.n, query.m
    if n < 2:
        raise DomainError(f"conditioning needs n >= 2, got n = {n}")
    if not (1 <= m <= n - 1):
        raise DomainError(f"m must satisfy 1 <= m <= n - 1, got m = {m}, n = {n}")
    if precision not in ("standard", "compensated"):
        raise DomainError(f"unknown precision mode {precision!r}")
    u, one_minus_u = query.effective_u(spec.n_types)
    seq = survival_sequence(spec, n)
    denominator = seq.survival(1, n - 1) - seq.survival(1, n)
    if not (denominator > floor):
        raise ConditioningError(
            f"conditioning event too rare at this precision:"
            f" P(T = {n}) = {denominator!r} <= floor {floor!r}"
        )
    # initial deficits 1 - u*x = (1 - u) + u*Q, assembled without cancellation
    q_x = seq.q[:, n - m]
    q_y = seq.q[:, n - m - 1]
    da = [min(1.0, omu + uv * qv) for omu, uv, qv in zip(one_minus_u, u, q_x)]
    db = [min(1.0, omu + uv * qv) for omu, uv, qv in zip(one_minus_u, u, q_y)]
    if precision == "standard":
        num, est = _conditional_numerator_standard(spec, m, da, db)
    else:
        delta0 = [uv * (qyv - qxv) for uv, qxv, qyv in zip(u, q_x, q_y)]
        num, est = _conditional_numerator_compensated(spec, m, da, delta0)
    den_est = _EPS * seq.survival(1, n - 1) / denominator
    value = num / denominator
    return ConditionalLawValue(
        value=value,
        numerator=num,
        denominator=denominator,
        est_rel_error=est + den_est,
    )


# ---------------------------------------------------------------------------
# Yaglom transform
# ---------------------------------------------------------------------------


def yaglom_transform(spec: ModelSpec, n: int, lam: float) -> float:
    """Exact E_1[exp(-lam * Z_N(n) / (b_N n)) | Z(n) != 0]."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if lam < 0.0:
        raise DomainError(f"lam must be >= 0, got {lam}")
    if lam == 0.0:
        return 1.0
    b_n = float(moments(spec).b[-1])
    d0 = [0.0] * spec.n_types
    d0[-1] = -math.expm1(-lam / (b_n * n))  # 1 - exp(-lam / (b_N n)), stably
    deficit = deficit_forward(spec, n, d0)[0]
    q_n = survival_sequence(spec, n).survival(1, n)
    return 1.0 - deficit / q_n


# ---------------------------------------------------------------------------
# Moment iterates
# ---------------------------------------------------------------------------


def mean_matrix_power(spec: ModelSpec, n: int) -> np.ndarray:
    """M^n by binary powering; exact for the unit-diagonal triangular case."""
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    m = moments(spec).mean_matrix
    out = np.eye(spec.n_types)
    base = m.copy()
    k = n
    while k:
        if k & 1:
            out = out @ base
        k >>= 1
        if k:
            base = base @ base
    return out


def second_moments(spec: ModelSpec, n: int) -> np.ndarray:
    """Exact factorial second moments b_{ipq}(n) = E_i[Z_p Z_q - delta_{pq} Z_q](n).

    Uses the one-step recursion for S_{ipq}(t) = E_i[Z_p(t) Z_q(t)]:
    S(t+1) = M S(t) + sum_{j,k} b_{ijk} m_{j,p}(t) m_{k,q}(t),
    iterating the mean powers alongside.
    """
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    mom = moments(spec)
    n_types = spec.n_types
    m1 = mom.mean_matrix
    bijk = mom.second_moments
    s = np.zeros((n_types, n_types, n_types))
    idx = np.arange(n_types)
    s[idx, idx, idx] = 1.0  # Z(0) = e_i
    m_t = np.eye(n_types)
    for _ in range(n):
        cross = np.einsum("ijk,jp,kq->ipq", bijk, m_t, m_t)
        s = np.einsum("ij,jpq->ipq", m1, s) + cross
        m_t = m1 @ m_t
    out = s.copy()
    for i in range(n_types):
        out[i] -= np.diag(m_t[i])
    return out
