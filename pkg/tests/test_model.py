import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from branchlab import (
    Bernoulli,
    Binomial,
    ConfigError,
    Deterministic,
    DomainError,
    Geometric,
    ModelError,
    ModelSpec,
    OffspringLaw,
    Poisson,
    model_from_toml,
    model_to_toml,
    moments,
    pgf,
    sample_offspring,
    single_type_geometric,
    survival_map,
    unit_model,
    validate_hypothesis_a,
)


def two_type(own1=None, next1=None, own2=None):
    return ModelSpec.from_components(
        {
            1: {1: own1 or Geometric(1.0), 2: next1 or Poisson(1.0)},
            2: {2: own2 or Geometric(1.0)},
        }
    )


class TestComponentLaws:
    def test_parameter_ranges(self):
        with pytest.raises(ModelError):
            Poisson(0.0)
        with pytest.raises(ModelError):
            Geometric(-1.0)
        with pytest.raises(ModelError):
            Bernoulli(1.5)
        with pytest.raises(ModelError):
            Binomial(0, 0.5)
        with pytest.raises(ModelError):
            Deterministic(-2)

    def test_closed_form_moments(self):
        g = Geometric(1.0)
        assert g.mean() == 1.0
        assert g.variance() == 2.0
        assert g.factorial_moment() == 2.0
        b = Binomial(4, 0.25)
        assert b.mean() == 1.0
        assert math.isclose(b.factorial_moment(), 12 * 0.0625)
        assert Deterministic(3).factorial_moment() == 6.0


class TestStructure:
    def test_missing_own_component(self):
        with pytest.raises(ModelError):
            OffspringLaw(1, {2: Poisson(1.0)})

    def test_preceding_type_rejected(self):
        with pytest.raises(ModelError):
            OffspringLaw(2, {1: Poisson(1.0), 2: Geometric(1.0)})

    def test_component_beyond_n_rejected(self):
        with pytest.raises(ModelError):
            ModelSpec.from_components({1: {1: Geometric(1.0), 3: Poisson(1.0)}})

    def test_laws_must_cover_types_in_order(self):
        with pytest.raises(ModelError):
            ModelSpec([OffspringLaw(2, {2: Geometric(1.0)})])

    def test_specs_hash_and_compare(self):
        assert unit_model(2) == unit_model(2)
        assert hash(unit_model(3)) == hash(unit_model(3))
        assert unit_model(2) != unit_model(3)


class TestPgf:
    def test_normalization_at_ones(self):
        spec = unit_model(3)
        for i in (1, 2, 3):
            assert pgf(spec, i, [1.0] * (3 - i + 1)) == 1.0

    def test_geometric_at_zero(self):
        assert pgf(single_type_geometric(1.0), 1, [0.0]) == pytest.approx(0.5, abs=0)

    def test_poisson_at_zero(self):
        spec = ModelSpec.from_components({1: {1: Poisson(1.0)}})
        assert pgf(spec, 1, [0.0]) == pytest.approx(math.exp(-1.0), rel=1e-15)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            pgf(unit_model(2), 1, [0.5, 1.5])

    @given(
        s=st.lists(st.floats(0.0, 1.0), min_size=2, max_size=2),
        bump=st.floats(0.0, 0.5),
        coord=st.integers(0, 1),
    )
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_each_coordinate(self, s, bump, coord):
        spec = unit_model(2)
        hi = list(s)
        hi[coord] = min(1.0, hi[coord] + bump)
        assert pgf(spec, 1, hi) >= pgf(spec, 1, s) - 1e-15


class TestSurvivalMap:
    def test_fixed_point_at_zero(self):
        assert survival_map(unit_model(2), 1, [0.0, 0.0]) == 0.0

    def test_geometric_full_mass(self):
        assert survival_map(single_type_geometric(1.0), 1, [1.0]) == pytest.approx(0.5)

    @given(
        q=st.lists(st.floats(1e-6, 1.0), min_size=2, max_size=2),
    )
    @settings(max_examples=80, deadline=None)
    def test_agrees_with_complement_pgf(self, q):
        spec = unit_model(2)
        direct = survival_map(spec, 1, q)
        naive = 1.0 - pgf(spec, 1, [1.0 - v for v in q])
        assert direct == pytest.approx(naive, rel=1e-10, abs=1e-12)

    def test_stable_for_tiny_arguments(self):
        spec = unit_model(2)
        val = survival_map(spec, 1, [1e-14, 1e-14])
        # leading order: q1 + mean * q2 for independent components
        assert val == pytest.approx(2e-14, rel=1e-6)


class TestMoments:
    def test_unit_geometric_half_variance(self):
        mom = moments(single_type_geometric(1.0))
        assert mom.b[0] == pytest.approx(1.0)

    def test_poisson_cross_mean(self):
        spec = ModelSpec.from_components(
            {1: {1: Geometric(1.0), 2: Poisson(2.0)}, 2: {2: Geometric(1.0)}}
        )
        assert moments(spec).mean_matrix[0, 1] == pytest.approx(2.0)

    def test_independent_cross_second_moment(self):
        spec = ModelSpec.from_components(
            {1: {1: Poisson(1.0), 2: Poisson(1.0)}, 2: {2: Geometric(1.0)}}
        )
        mom = moments(spec)
        assert mom.second_moments[0, 0, 1] == pytest.approx(1.0)
        assert mom.second_moments[0, 1, 0] == pytest.approx(1.0)

    def test_mean_matrix_upper_triangular(self):
        m = moments(unit_model(3)).mean_matrix
        assert np.all(np.tril(m, -1) == 0.0)


class TestValidation:
    def test_unit_model_satisfies_hypothesis(self):
        assert validate_hypothesis_a(unit_model(2)).passed

    def test_subcritical_own_mean_fails(self):
        report = validate_hypothesis_a(two_type(own1=Poisson(0.9)))
        bad = [f for f in report.failures() if f.check == "own_mean[1]"]
        assert bad and bad[0].value == pytest.approx(0.9)

    def test_zero_next_mean_fails(self):
        report = validate_hypothesis_a(two_type(next1=Deterministic(0)))
        bad = [f for f in report.failures() if f.check == "next_mean[1]"]
        assert bad and bad[0].value == 0.0

    def test_zero_variance_own_fails(self):
        report = validate_hypothesis_a(two_type(own1=Deterministic(1)))
        assert any(f.check == "half_variance[1]" for f in report.failures())


class TestSampling:
    def test_deterministic_component(self):
        spec = ModelSpec.from_components({1: {1: Deterministic(3)}})
        rng = np.random.default_rng(0)
        for _ in range(5):
            assert sample_offspring(spec, 1, rng)[0] == 3

    def test_bernoulli_zero(self):
        spec = ModelSpec.from_components({1: {1: Bernoulli(0.0)}})
        rng = np.random.default_rng(0)
        assert all(sample_offspring(spec, 1, rng)[0] == 0 for _ in range(20))

    def test_triangularity_of_samples(self):
        spec = unit_model(3)
        rng = np.random.default_rng(1)
        out = sample_offspring(spec, 2, rng)
        assert out.shape == (2,)  # only types 2..3 can appear

    def test_geometric_aggregated_mean(self):
        rng = np.random.default_rng(42)
        draws = Geometric(1.0).sample_total(np.ones(10**6, dtype=np.int64), rng)
        assert abs(draws.mean() - 1.0) < 0.005  # 3 sigma CLT band

    def test_empirical_means_match_moment_matrix(self):
        spec = unit_model(2)
        rng = np.random.default_rng(7)
        reps = 10**6
        mom = moments(spec)
        for i in (1, 2):
            law = spec.law(i)
            for j, comp in law.components:
                draws = comp.sample_total(np.ones(reps, dtype=np.int64), rng)
                se = math.sqrt(comp.variance() / reps)
                assert abs(draws.mean() - mom.mean_matrix[i - 1, j - 1]) < 4 * se


class TestToml:
    def test_roundtrip(self):
        spec = ModelSpec.from_components(
            {
                1: {1: Geometric(1.0), 2: Poisson(1.5), 3: Bernoulli(0.25)},
                2: {2: Geometric(2.0), 3: Binomial(3, 0.5)},
                3: {3: Deterministic(1)},
            }
        )
        text = model_to_toml(spec)
        assert model_from_toml(text) == spec
        assert "plus2" in text  # 1 -> 3 component

    def test_documented_example(self):
        text = """
        [types.1]
        own = {kind="geometric", mean=1.0}
        next = {kind="poisson", mean=1.0}
        [types.2]
        own = {kind="geometric", mean=1.0}
        """
        assert model_from_toml(text) == unit_model(2)

    def test_unknown_component_key_rejected(self):
        text = """
        [types.1]
        own = {kind="geometric", mean=1.0}
        sideways = {kind="poisson", mean=1.0}
        """
        with pytest.raises(ConfigError):
            model_from_toml(text)

    def test_unknown_param_rejected(self):
        text = """
        [types.1]
        own = {kind="geometric", mean=1.0, wobble=2}
        """
        with pytest.raises(ConfigError):
            model_from_toml(text)

    def test_gap_in_type_indices_rejected(self):
        text = """
        [types.1]
        own = {kind="geometric", mean=1.0}
        [types.3]
        own = {kind="geometric", mean=1.0}
        """
        with pytest.raises(ConfigError):
            model_from_toml(text)
