"""Decomposable multitype offspring models.

A model with ``N`` types assigns to every type ``i`` an offspring law over
child counts of types ``j >= i`` (triangular structure: a particle never
begets a preceding type).  Offspring counts of distinct child types are
mutually independent, each drawn from one of a small family of classical
integer laws with closed-form probability generating functions.  That is
enough to realize any strongly-critical moment configuration while keeping
every downstream computation (PGF iteration, survival maps, simulation)
exact and numerically stable.

Survival maps are the workhorse: ``survival_map(spec, i, q)`` evaluates
``1 - h_i(1 - q)`` without forming ``1 - q``, which is what keeps the
generating-function iteration accurate once survival probabilities decay
to ``1e-5`` and below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DomainError, ModelError

__all__ = [
    "ComponentLaw",
    "Poisson",
    "Geometric",
    "Bernoulli",
    "Binomial",
    "Deterministic",
    "OffspringLaw",
    "ModelSpec",
    "MomentSummary",
    "Finding",
    "ValidationReport",
    "validate_hypothesis_a",
    "pgf",
    "survival_map",
    "moments",
    "sample_offspring",
    "unit_model",
    "single_type_geometric",
    "model_from_toml",
    "model_to_toml",
]


# ---------------------------------------------------------------------------
# Component laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComponentLaw:
    """Marginal law of the number of children of one type.

    Subclasses supply closed forms for the PGF ``f(s)``, the survival map
    ``sigma(q) = 1 - f(1 - q)`` (evaluated without cancellation), the exact
    difference ``sigma(q_hi) - sigma(q_lo)`` (used by the compensated
    conditional-law mode), moments, and an aggregated sampler for the sum
    of ``k`` i.i.d. copies.
    """

    kind = "abstract"

    def mean(self) -> float:
        raise NotImplementedError

    def variance(self) -> float:
        raise NotImplementedError

    def factorial_moment(self) -> float:
        """E[X(X-1)]."""
        raise NotImplementedError

    def pgf(self, s: float) -> float:
        raise NotImplementedError

    def sigma(self, q: float) -> float:
        """1 - pgf(1 - q), computed stably for small q."""
        raise NotImplementedError

    def sigma_diff(self, q_lo: float, q_hi: float) -> float:
        """sigma(q_hi) - sigma(q_lo) to full relative precision, q_lo <= q_hi."""
        raise NotImplementedError

    def sample_total(self, k, rng: np.random.Generator):
        """Sum of ``k`` independent draws; ``k`` may be an integer array."""
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Poisson(ComponentLaw):
    mean_value: float
    kind = "poisson"

    def __post_init__(self):
        if not (self.mean_value > 0 and math.isfinite(self.mean_value)):
            raise ModelError(f"poisson mean must be positive, got {self.mean_value}")

    def mean(self):
        return self.mean_value

    def variance(self):
        return self.mean_value

    def factorial_moment(self):
        return self.mean_value**2

    def pgf(self, s):
        return math.exp(-self.mean_value * (1.0 - s))

    def sigma(self, q):
        return -math.expm1(-self.mean_value * q)

    def sigma_diff(self, q_lo, q_hi):
        return -math.exp(-self.mean_value * q_lo) * math.expm1(
            -self.mean_value * (q_hi - q_lo)
        )

    def sample_total(self, k, rng):
        return rng.poisson(self.mean_value * np.asarray(k))

    def params(self):
        return {"mean": self.mean_value}


@dataclass(frozen=True)
class Geometric(ComponentLaw):
    """Geometric on {0, 1, 2, ...} parameterized by its mean.

    P(X = x) = (1 - r) r^x with r = mean / (1 + mean).  Mean 1 gives the
    canonical critical own-type law with variance 2.
    """

    mean_value: float
    kind = "geometric"

    def __post_init__(self):
        if not (self.mean_value > 0 and math.isfinite(self.mean_value)):
            raise ModelError(f"geometric mean must be positive, got {self.mean_value}")

    def mean(self):
        return self.mean_value

    def variance(self):
        return self.mean_value * (1.0 + self.mean_value)

    def factorial_moment(self):
        return 2.0 * self.mean_value**2

    def pgf(self, s):
        return 1.0 / (1.0 + self.mean_value * (1.0 - s))

    def sigma(self, q):
        mq = self.mean_value * q
        return mq / (1.0 + mq)

    def sigma_diff(self, q_lo, q_hi):
        m = self.mean_value
        return m * (q_hi - q_lo) / ((1.0 + m * q_lo) * (1.0 + m * q_hi))

    def sample_total(self, k, rng):
        k = np.asarray(k)
        out = np.zeros(k.shape, dtype=np.int64)
        pos = k > 0
        if np.any(pos):
            out[pos] = rng.negative_binomial(k[pos], 1.0 / (1.0 + self.mean_value))
        return out

    def params(self):
        return {"mean": self.mean_value}


@dataclass(frozen=True)
class Bernoulli(ComponentLaw):
    p: float
    kind = "bernoulli"

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ModelError(f"bernoulli p must lie in [0, 1], got {self.p}")

    def mean(self):
        return self.p

    def variance(self):
        return self.p * (1.0 - self.p)

    def factorial_moment(self):
        return 0.0

    def pgf(self, s):
        return 1.0 - self.p * (1.0 - s)

    def sigma(self, q):
        return self.p * q

    def sigma_diff(self, q_lo, q_hi):
        return self.p * (q_hi - q_lo)

    def sample_total(self, k, rng):
        return rng.binomial(np.asarray(k), self.p)

    def params(self):
        return {"p": self.p}


@dataclass(frozen=True)
class Binomial(ComponentLaw):
    trials: int
    p: float
    kind = "binomial"

    def __post_init__(self):
        try:
            ok = self.trials == int(self.trials) and int(self.trials) >= 1
        except (TypeError, ValueError):
            ok = False
        if not ok:
            raise ModelError(f"binomial trials must be a positive integer, got {self.trials}")
        object.__setattr__(self, "trials", int(self.trials))
        if not (0.0 <= self.p <= 1.0):
            raise ModelError(f"binomial p must lie in [0, 1], got {self.p}")

    def mean(self):
        return self.trials * self.p

    def variance(self):
        return self.trials * self.p * (1.0 - self.p)

    def factorial_moment(self):
        return self.trials * (self.trials - 1) * self.p**2

    def pgf(self, s):
        return (1.0 - self.p * (1.0 - s)) ** self.trials

    def sigma(self, q):
        pq = self.p * q
        if pq >= 1.0:
            return 1.0
        return -math.expm1(self.trials * math.log1p(-pq))

    def sigma_diff(self, q_lo, q_hi):
        base = 1.0 - self.p * q_lo
        if base <= 0.0:
            return 0.0
        return -(base**self.trials) * math.expm1(
            self.trials * math.log1p(-self.p * (q_hi - q_lo) / base)
        )

    def sample_total(self, k, rng):
        return rng.binomial(self.trials * np.asarray(k), self.p)

    def params(self):
        return {"trials": self.trials, "p": self.p}


@dataclass(frozen=True)
class Deterministic(ComponentLaw):
    count: int
    kind = "deterministic"

    def __post_init__(self):
        try:
            ok = self.count == int(self.count) and int(self.count) >= 0
        except (TypeError, ValueError):
            ok = False
        if not ok:
            raise ModelError(f"deterministic count must be an integer >= 0, got {self.count}")
        object.__setattr__(self, "count", int(self.count))

    def mean(self):
        return float(self.count)

    def variance(self):
        return 0.0

    def factorial_moment(self):
        return float(self.count * (self.count - 1))

    def pgf(self, s):
        return s**self.count

    def sigma(self, q):
        if self.count == 0:
            return 0.0
        if q >= 1.0:
            return 1.0
        return -math.expm1(self.count * math.log1p(-q))

    def sigma_diff(self, q_lo, q_hi):
        if self.count == 0 or q_lo >= 1.0:
            return 0.0
        return -((1.0 - q_lo) ** self.count) * math.expm1(
            self.count * math.log1p(-(q_hi - q_lo) / (1.0 - q_lo))
        )

    def sample_total(self, k, rng):
        return self.count * np.asarray(k)

    def params(self):
        return {"count": self.count}


_KINDS = {cls.kind: cls for cls in (Poisson, Geometric, Bernoulli, Binomial, Deterministic)}


# ---------------------------------------------------------------------------
# Offspring laws and model specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OffspringLaw:
    """Joint offspring law of one parent type: independent components per child type.

    ``components`` maps child type index ``j`` (``i <= j <= N``) to a
    :class:`ComponentLaw`.  An entry for ``j = i`` is mandatory; entries with
    ``j < i`` violate triangularity and are rejected.
    """

    type_index: int
    components: tuple = field(default=())

    def __init__(self, type_index: int, components: Mapping[int, ComponentLaw]):
        object.__setattr__(self, "type_index", int(type_index))
        items = tuple(sorted((int(j), law) for j, law in dict(components).items()))
        object.__setattr__(self, "components", items)
        self._check()

    def _check(self):
        i = self.type_index
        if i < 1:
            raise ModelError(f"type index must be >= 1, got {i}")
        indices = [j for j, _ in self.components]
        if len(set(indices)) != len(indices):
            raise ModelError(f"duplicate component index for type {i}")
        if i not in indices:
            raise ModelError(f"type {i} must include an own-type component (j = {i})")
        for j, law in self.components:
            if j < i:
                raise ModelError(f"type {i} may not produce preceding type {j}")
            if not isinstance(law, ComponentLaw):
                raise ModelError(f"component ({i} -> {j}) is not a ComponentLaw")

    def component(self, j: int) -> ComponentLaw | None:
        for jj, law in self.components:
            if jj == j:
                return law
        return None

    def as_dict(self) -> dict[int, ComponentLaw]:
        return dict(self.components)


@dataclass(frozen=True)
class ModelSpec:
    """Full process definition: one :class:`OffspringLaw` per type 1..N."""

    laws: tuple

    def __init__(self, laws: Iterable[OffspringLaw]):
        object.__setattr__(self, "laws", tuple(laws))
        self._check()

    def _check(self):
        n = len(self.laws)
        if n < 1:
            raise ModelError("a model needs at least one type")
        for pos, law in enumerate(self.laws, start=1):
            if not isinstance(law, OffspringLaw):
                raise ModelError(f"entry {pos} is not an OffspringLaw")
            if law.type_index != pos:
                raise ModelError(
                    f"law at position {pos} has type index {law.type_index};"
                    " exactly one law per type 1..N, in order"
                )
            for j, _ in law.components:
                if j > n:
                    raise ModelError(
                        f"type {pos} has a component for type {j} > N = {n}"
                    )

    @property
    def n_types(self) -> int:
        return len(self.laws)

    def law(self, i: int) -> OffspringLaw:
        return self.laws[i - 1]

    @classmethod
    def from_components(cls, components: Mapping[int, Mapping[int, ComponentLaw]]) -> "ModelSpec":
        return cls(
            OffspringLaw(i, dict(components[i])) for i in sorted(components)
        )


def unit_model(n_types: int) -> ModelSpec:
    """Canonical strongly-critical test model with all unit parameters.

    Own-type offspring Geometric(mean 1) (so each half-variance is 1) and
    next-type offspring Poisson(1) (so each super-diagonal mean is 1).
    """
    comps: dict[int, dict[int, ComponentLaw]] = {}
    for i in range(1, n_types + 1):
        comps[i] = {i: Geometric(1.0)}
        if i < n_types:
            comps[i][i + 1] = Poisson(1.0)
    return ModelSpec.from_components(comps)


def single_type_geometric(mean: float = 1.0) -> ModelSpec:
    """Single-type model with Geometric(mean) offspring; mean 1 is the exact oracle."""
    return ModelSpec.from_components({1: {1: Geometric(mean)}})


# ---------------------------------------------------------------------------
# Moments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentSummary:
    """First and factorial second moments of the offspring laws.

    ``mean_matrix[i-1, j-1]`` is m_{i,j}; ``b[i-1]`` is half the own-type
    variance; ``second_moments[i-1, k-1, l-1]`` is
    E_i[X_k X_l - delta_{kl} X_l] (zero whenever k < i or l < i).
    """

    mean_matrix: np.ndarray
    b: np.ndarray
    second_moments: np.ndarray

    @property
    def n_types(self) -> int:
        return self.mean_matrix.shape[0]


def moments(spec: ModelSpec) -> MomentSummary:
    n = spec.n_types
    m = np.zeros((n, n))
    b = np.zeros(n)
    second = np.zeros((n, n, n))
    for law in spec.laws:
        i = law.type_index
        comps = law.as_dict()
        for j, c in comps.items():
            m[i - 1, j - 1] = c.mean()
        own = comps[i]
        b[i - 1] = own.variance() / 2.0
        for k, ck in comps.items():
            for l, cl in comps.items():
                if k == l:
                    second[i - 1, k - 1, k - 1] = ck.factorial_moment()
                else:
                    second[i - 1, k - 1, l - 1] = ck.mean() * cl.mean()
    m.setflags(write=False)
    b.setflags(write=False)
    second.setflags(write=False)
    return MomentSummary(mean_matrix=m, b=b, second_moments=second)


# ---------------------------------------------------------------------------
# Hypothesis A validation (advisory)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Finding:
    check: str
    passed: bool
    value: float
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple

    @property
    def passed(self) -> bool:
        return all(f.passed for f in self.findings)

    def failures(self) -> list[Finding]:
        return [f for f in self.findings if not f.passed]


def validate_hypothesis_a(spec: ModelSpec, tol: float = 1e-12) -> ValidationReport:
    """Check strong criticality: unit own means, positive next means,
    finite second moments, positive finite half-variances.

    The report is advisory; non-conforming specs remain usable everywhere
    (useful as negative controls), they just will not obey the limit laws.
    """
    mom = moments(spec)
    n = spec.n_types
    findings: list[Finding] = []
    for i in range(1, n + 1):
        mii = float(mom.mean_matrix[i - 1, i - 1])
        findings.append(
            Finding(
                check=f"own_mean[{i}]",
                passed=abs(mii - 1.0) <= tol,
                value=mii,
                detail=f"m_{{{i},{i}}} = {mii!r}, required 1 (tol {tol})",
            )
        )
    for i in range(1, n):
        mnext = float(mom.mean_matrix[i - 1, i])
        findings.append(
            Finding(
                check=f"next_mean[{i}]",
                passed=0.0 < mnext < math.inf,
                value=mnext,
                detail=f"m_{{{i},{i + 1}}} = {mnext!r}, required in (0, inf)",
            )
        )
    for i in range(1, n + 1):
        bi = float(mom.b[i - 1])
        findings.append(
            Finding(
                check=f"half_variance[{i}]",
                passed=0.0 < bi < math.inf,
                value=bi,
                detail=f"b_{i} = {bi!r}, required in (0, inf)",
            )
        )
    # All component families here have finite second moments in closed form;
    # report the largest pairwise second moment so the check is visible.
    worst = float(np.max(mom.second_moments)) if n > 0 else 0.0
    findings.append(
        Finding(
            check="second_moments_finite",
            passed=math.isfinite(worst),
            value=worst,
            detail=f"max pairwise factorial second moment = {worst!r}",
        )
    )
    return ValidationReport(findings=tuple(findings))


# ---------------------------------------------------------------------------
# PGF / survival evaluation and sampling
# ---------------------------------------------------------------------------


def _check_unit_interval(values, name: str):
    for v in values:
        if not (0.0 <= v <= 1.0):
            raise DomainError(f"{name} component {v!r} outside [0, 1]")


def pgf(spec: ModelSpec, i: int, s: Sequence[float]) -> float:
    """Joint offspring PGF of type ``i`` at ``s`` (coordinates i..N)."""
    law = spec.law(i)
    s = list(s)
    if len(s) != spec.n_types - i + 1:
        raise DomainError(
            f"pgf for type {i} expects {spec.n_types - i + 1} coordinates, got {len(s)}"
        )
    _check_unit_interval(s, "s")
    out = 1.0
    for j, comp in law.components:
        out *= comp.pgf(s[j - i])
    return out


def survival_map(spec: ModelSpec, i: int, q: Sequence[float]) -> float:
    """1 - pgf(spec, i, 1 - q) without catastrophic cancellation.

    Accumulates per-component log survival complements so the result keeps
    full relative precision even when every ``q`` coordinate is tiny.
    """
    law = spec.law(i)
    q = list(q)
    if len(q) != spec.n_types - i + 1:
        raise DomainError(
            f"survival_map for type {i} expects {spec.n_types - i + 1} coordinates,"
            f" got {len(q)}"
        )
    _check_unit_interval(q, "q")
    if len(law.components) == 1:
        j, comp = law.components[0]
        return comp.sigma(q[j - i])
    acc = 0.0
    for j, comp in law.components:
        sig = comp.sigma(q[j - i])
        if sig >= 1.0:
            return 1.0
        acc += math.log1p(-sig)
    return -math.expm1(acc)


def sample_offspring(spec: ModelSpec, i: int, rng: np.random.Generator) -> np.ndarray:
    """One exact draw of the offspring vector of a type-``i`` particle.

    Returns counts for child types ``i..N`` (length N - i + 1); deterministic
    given the generator state.
    """
    law = spec.law(i)
    out = np.zeros(spec.n_types - i + 1, dtype=np.int64)
    for j, comp in law.components:
        out[j - i] = int(comp.sample_total(1, rng))
    return out


# ---------------------------------------------------------------------------
# Compiled per-type survival step functions (hot path for the iterators)
# ---------------------------------------------------------------------------


def compile_survival_steps(spec: ModelSpec):
    """Per-type closures ``f_i(q_full) -> sigma_i`` over the full state list.

    ``q_full`` is a length-N sequence of per-type survival deficits; the
    type-``i`` closure only reads coordinates ``i..N``.  Used by every
    sequential iteration (survival sequences, forward PGF deficits).
    """
    fns = []
    for law in spec.laws:
        parts = [(j - 1, comp.sigma) for j, comp in law.components]
        if len(parts) == 1:
            idx, sig = parts[0]

            def f(q, _idx=idx, _sig=sig):
                return _sig(q[_idx])

        else:

            def f(q, _parts=tuple(parts), _log1p=math.log1p, _expm1=math.expm1):
                acc = 0.0
                for idx, sig in _parts:
                    s = sig(q[idx])
                    if s >= 1.0:
                        return 1.0
                    acc += _log1p(-s)
                return -_expm1(acc)

        fns.append(f)
    return fns


def compile_survival_diff_steps(spec: ModelSpec):
    """Per-type closures ``g_i(p, r) -> (sigma_i(p), delta_i)`` for paired states.

    ``p <= r`` componentwise; ``delta_i = sigma_i(r) - sigma_i(p)`` is
    evaluated through per-component exact differences and a telescoping
    product so the returned difference never suffers cancellation.
    """
    fns = []
    for law in spec.laws:
        parts = tuple(
            (j - 1, comp.sigma, comp.sigma_diff) for j, comp in law.components
        )

        def g(p, r, _parts=parts, _log1p=math.log1p, _expm1=math.expm1):
            k = len(_parts)
            a = [0.0] * k  # 1 - sigma at the lower state
            bvals = [0.0] * k  # 1 - sigma at the upper state
            dsig = [0.0] * k
            acc = 0.0
            hit_one = False
            for t, (idx, sig, sdiff) in enumerate(_parts):
                s_lo = sig(p[idx])
                d = sdiff(p[idx], r[idx])
                a[t] = 1.0 - s_lo
                bvals[t] = a[t] - d
                dsig[t] = d
                if s_lo >= 1.0:
                    hit_one = True
                else:
                    acc += _log1p(-s_lo)
            value = 1.0 if hit_one else -_expm1(acc)
            # delta = prod(a) - prod(b) via telescoping
            delta = 0.0
            prefix_b = 1.0
            suffix_a = [1.0] * (k + 1)
            for t in range(k - 1, -1, -1):
                suffix_a[t] = suffix_a[t + 1] * a[t]
            for t in range(k):
                delta += dsig[t] * prefix_b * suffix_a[t + 1]
                prefix_b *= bvals[t]
            return value, delta

        fns.append(g)
    return fns


# ---------------------------------------------------------------------------
# TOML serialization
# ---------------------------------------------------------------------------

# Component key names inside [types.<i>]: "own" is j = i, "next" is j = i + 1,
# "plus<k>" is j = i + k for k >= 2.

_PARAM_KEYS = {
    "poisson": {"mean"},
    "geometric": {"mean"},
    "bernoulli": {"p"},
    "binomial": {"trials", "p"},
    "deterministic": {"count"},
}


def _component_from_table(table: Mapping, where: str) -> ComponentLaw:
    if not isinstance(table, Mapping):
        raise ConfigError(f"{where}: expected an inline table")
    if "kind" not in table:
        raise ConfigError(f"{where}: missing 'kind'")
    kind = table["kind"]
    if kind not in _KINDS:
        raise ConfigError(f"{where}: unknown kind {kind!r}")
    extra = set(table) - {"kind"} - _PARAM_KEYS[kind]
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    missing = _PARAM_KEYS[kind] - set(table)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")
    try:
        if kind == "poisson":
            return Poisson(float(table["mean"]))
        if kind == "geometric":
            return Geometric(float(table["mean"]))
        if kind == "bernoulli":
            return Bernoulli(float(table["p"]))
        if kind == "binomial":
            return Binomial(int(table["trials"]), float(table["p"]))
        return Deterministic(int(table["count"]))
    except ModelError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _offset_from_key(key: str, where: str) -> int:
    if key == "own":
        return 0
    if key == "next":
        return 1
    if key.startswith("plus"):
        try:
            off = int(key[4:])
        except ValueError:
            off = -1
        if off >= 2:
            return off
    raise ConfigError(f"{where}: unknown component key {key!r} (use own/next/plus<k>)")


def model_from_toml_dict(data: Mapping) -> ModelSpec:
    if set(data) != {"types"}:
        raise ConfigError(f"model table must contain exactly 'types', got {sorted(data)}")
    types = data["types"]
    if not isinstance(types, Mapping) or not types:
        raise ConfigError("'types' must be a non-empty table of type indices")
    indices = []
    for key in types:
        try:
            indices.append(int(key))
        except ValueError:
            raise ConfigError(f"type key {key!r} is not an integer") from None
    indices.sort()
    n = len(indices)
    if indices != list(range(1, n + 1)):
        raise ConfigError(f"type indices must be exactly 1..N, got {indices}")
    comps: dict[int, dict[int, ComponentLaw]] = {}
    for i in indices:
        section = types[str(i)] if str(i) in types else types[i]
        if not isinstance(section, Mapping):
            raise ConfigError(f"types.{i} must be a table")
        comps[i] = {}
        for key, table in section.items():
            off = _offset_from_key(key, f"types.{i}")
            comps[i][i + off] = _component_from_table(table, f"types.{i}.{key}")
        if i not in comps[i]:
            raise ConfigError(f"types.{i}: missing 'own' component")
    try:
        return ModelSpec.from_components(comps)
    except ModelError as exc:
        raise ConfigError(str(exc)) from exc


def model_from_toml(text: str) -> ModelSpec:
    try:
        import tomllib  # py >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        data = tomllib.loads(text)
    except Exception as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    return model_from_toml_dict(data)


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    raise ConfigError(f"cannot serialize value {v!r}")


def model_to_toml(spec: ModelSpec) -> str:
    lines = []
    for law in spec.laws:
        i = law.type_index
        lines.append(f"[types.{i}]")
        for j, comp in law.components:
            off = j - i
            key = "own" if off == 0 else ("next" if off == 1 else f"plus{off}")
            fields = ", ".join(
                [f'kind="{comp.kind}"']
                + [f"{k}={_format_value(v)}" for k, v in comp.params().items()]
            )
            lines.append(f"{key} = {{{fields}}}")
        lines.append("")
    return "\n".join(lines)
