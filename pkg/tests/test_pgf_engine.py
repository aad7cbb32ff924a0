import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from branchlab import (
    ConditionalLawQuery,
    ConditioningError,
    DomainError,
    ModelSpec,
    Poisson,
    conditional_laplace,
    extinction_pmf,
    mean_matrix_power,
    moments,
    pgf,
    pgf_forward,
    second_moments,
    single_type_geometric,
    survival_sequence,
    unit_model,
    yaglom_transform,
)
from branchlab.model import Geometric

GEO = single_type_geometric(1.0)
UNIT2 = unit_model(2)
UNIT3 = unit_model(3)


class TestSurvivalSequence:
    def test_single_type_closed_form(self):
        seq = survival_sequence(GEO, 1000)
        for n in (0, 1, 7, 100, 1000):
            assert seq.survival(1, n) == pytest.approx(1.0 / (n + 1), abs=1e-12)

    def test_first_step_is_one_minus_pgf_at_zero(self):
        for spec in (UNIT2, UNIT3):
            seq = survival_sequence(spec, 2)
            for i in range(1, spec.n_types + 1):
                expected = 1.0 - pgf(spec, i, [0.0] * (spec.n_types - i + 1))
                assert seq.survival(i, 1) == pytest.approx(expected, rel=1e-14)

    def test_monotone_nonincreasing(self):
        seq = survival_sequence(UNIT3, 500)
        assert np.all(np.diff(seq.q, axis=1) <= 0.0)

    def test_starts_at_one(self):
        seq = survival_sequence(UNIT3, 5)
        assert np.all(seq.q[:, 0] == 1.0)


class TestExtinctionPmf:
    def test_single_type_closed_form(self):
        table = extinction_pmf(GEO, 1, 1000)
        assert table.prob(3) == pytest.approx(1.0 / 12.0, abs=1e-13)
        for n in (1, 2, 10, 500):
            assert table.prob(n) == pytest.approx(1.0 / (n * (n + 1)), abs=1e-12)

    def test_die_in_one_step(self):
        for spec in (GEO, UNIT2, UNIT3):
            table = extinction_pmf(spec, 1, 3)
            expected = pgf(spec, 1, [0.0] * spec.n_types)
            assert table.prob(1) == pytest.approx(expected, rel=1e-14)

    def test_mass_conservation(self):
        for spec in (UNIT2, UNIT3):
            for i in range(1, spec.n_types + 1):
                table = extinction_pmf(spec, i, 1000)
                total = math.fsum(table.pmf) + table.tail
                assert abs(total - 1.0) <= 1e-12

    def test_nonnegative_and_partial_sums(self):
        table = extinction_pmf(UNIT3, 1, 2000)
        assert np.all(table.pmf >= 0.0)
        assert np.all(np.cumsum(table.pmf) <= 1.0 + 1e-15)

    def test_last_type_pmf_monotone(self):
        # exact monotonicity of P(T_{NN} = n), used in the inductive argument
        for spec in (UNIT2, UNIT3):
            table = extinction_pmf(spec, spec.n_types, 500)
            body = table.pmf[1:]
            assert np.all(np.diff(body) <= 0.0)


class TestPgfForward:
    def test_identity_at_zero_steps(self):
        s = [0.3, 0.8]
        assert np.allclose(pgf_forward(UNIT2, 0, s), s)

    def test_ones_preserved(self):
        for m in (1, 5, 40):
            assert np.allclose(pgf_forward(UNIT3, m, [1.0] * 3), 1.0)

    def test_single_type_closed_form(self):
        # H_n(0) = n / (n + 1) for the critical geometric
        for n in (1, 4, 60):
            val = pgf_forward(GEO, n, [0.0])[0]
            assert val == pytest.approx(1.0 - 1.0 / (n + 1), rel=1e-13)

    @given(
        a=st.integers(0, 50),
        b=st.integers(0, 50),
        s=st.lists(st.floats(0.0, 1.0), min_size=2, max_size=2),
    )
    @settings(max_examples=40, deadline=None)
    def test_semigroup(self, a, b, s):
        lhs = pgf_forward(UNIT2, a + b, s)
        rhs = pgf_forward(UNIT2, a, pgf_forward(UNIT2, b, s))
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-14)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            pgf_forward(UNIT2, 3, [0.5, -0.1])


class TestConditionalLaplace:
    def test_hand_enumerated_two_generation_law(self):
        # N=1 geometric, n=2, m=1: x = 1/2, y = 0, P(T=2) = 1/6
        for u in (0.0, 0.25, 0.5, 1.0):
            res = conditional_laplace(GEO, ConditionalLawQuery(n=2, m=1, s=(u,)))
            hand = (1.0 / (2.0 - u / 2.0) - 0.5) / (1.0 / 6.0)
            assert res.value == pytest.approx(hand, rel=1e-13, abs=1e-13)

    def test_total_mass_is_one(self):
        for spec in (GEO, UNIT2, UNIT3):
            for n, m in ((5, 2), (40, 17), (200, 100)):
                res = conditional_laplace(spec, ConditionalLawQuery(n=n, m=m))
                assert res.value == pytest.approx(1.0, rel=1e-10)

    def test_indicator_partition(self):
        # P(I) + P(not I) = 1 via the s-pattern realization
        spec = UNIT2
        n, m = 60, 30
        p_ind = conditional_laplace(
            spec, ConditionalLawQuery(n=n, m=m, s=(0.0, 1.0))
        ).value
        total = conditional_laplace(spec, ConditionalLawQuery(n=n, m=m)).value
        assert total == pytest.approx(1.0, rel=1e-10)
        assert 0.0 <= p_ind <= 1.0
        assert (p_ind + (total - p_ind)) == pytest.approx(1.0, rel=1e-10)

    def test_lower_types_vanish_at_late_observation_times(self):
        # P(Z_1(m) = 0 | T = n) climbs to 1 as n grows with m = n/2
        prev = 0.0
        for n in (50, 200, 800):
            val = conditional_laplace(
                UNIT2, ConditionalLawQuery(n=n, m=n // 2, s=(0.0, 1.0))
            ).value
            assert val > prev
            prev = val
        assert prev > 0.9

    def test_nonincreasing_in_lambda(self):
        spec = UNIT2
        prev = math.inf
        for lam in (0.0, 0.3, 1.0, 3.0):
            val = conditional_laplace(
                spec,
                ConditionalLawQuery(n=50, m=25, lam=(0.0, lam), scales=(1.0, 50.0)),
            ).value
            assert val <= prev + 1e-14
            prev = val
        assert conditional_laplace(
            spec, ConditionalLawQuery(n=50, m=25, lam=(0.0, 0.0))
        ).value == pytest.approx(1.0, rel=1e-12)

    def test_m_range_enforced(self):
        with pytest.raises(DomainError):
            conditional_laplace(UNIT2, ConditionalLawQuery(n=10, m=0))
        with pytest.raises(DomainError):
            conditional_laplace(UNIT2, ConditionalLawQuery(n=10, m=10))

    def test_compensated_matches_standard(self):
        spec = UNIT2
        for n, m, lam in ((500, 250, 1.0), (2000, 1500, 0.5)):
            q = ConditionalLawQuery(n=n, m=m, lam=(0.0, lam), scales=(1.0, float(n)))
            std = conditional_laplace(spec, q)
            comp = conditional_laplace(spec, q, precision="compensated")
            assert comp.value == pytest.approx(std.value, rel=1e-9)
            assert comp.est_rel_error < std.est_rel_error

    def test_conditioning_floor(self):
        subcritical = ModelSpec.from_components({1: {1: Poisson(0.5)}})
        with pytest.raises(ConditioningError):
            conditional_laplace(subcritical, ConditionalLawQuery(n=2500, m=100))


class TestYaglom:
    def test_unit_at_zero(self):
        assert yaglom_transform(UNIT2, 100, 0.0) == 1.0

    def test_single_type_one_step(self):
        # E[u^{Z(1)} | Z(1) != 0] = u / (2 - u); u = 1/2 realized by lam = ln 2
        val = yaglom_transform(GEO, 1, math.log(2.0))
        assert val == pytest.approx(1.0 / 3.0, rel=1e-12)

    def test_approaches_limit(self):
        target = 1.0 - 2.0**-0.5
        val = yaglom_transform(UNIT2, 10**4, 1.0)
        assert val == pytest.approx(target, rel=0.05)


class TestMomentIterates:
    def test_power_zero_is_identity(self):
        assert np.allclose(mean_matrix_power(UNIT3, 0), np.eye(3))

    def test_two_type_superdiagonal_growth(self):
        spec = ModelSpec.from_components(
            {1: {1: Geometric(1.0), 2: Poisson(2.0)}, 2: {2: Geometric(1.0)}}
        )
        for n in (1, 13, 400):
            assert mean_matrix_power(spec, n)[0, 1] == pytest.approx(2.0 * n, rel=1e-12)

    def test_three_type_corner_growth(self):
        for n in (2, 11, 100):
            val = mean_matrix_power(UNIT3, n)[0, 2]
            assert val == pytest.approx(n * (n - 1) / 2.0, rel=1e-12)

    def test_corner_ratio_approaches_a13(self):
        n = 10**4
        val = mean_matrix_power(UNIT3, n)[0, 2] / n**2
        assert abs(val / 0.5 - 1.0) < 0.01

    def test_second_moments_zero_at_time_zero(self):
        assert np.all(second_moments(UNIT3, 0) == 0.0)

    def test_second_moments_match_summary_at_one(self):
        assert np.allclose(second_moments(UNIT3, 1), moments(UNIT3).second_moments)

    def test_single_type_factorial_moment_growth(self):
        for n in (1, 5, 50):
            assert second_moments(GEO, n)[0, 0, 0] == pytest.approx(2.0 * n, rel=1e-12)
