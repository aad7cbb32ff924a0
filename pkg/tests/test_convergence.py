import numpy as np
import pytest

from branchlab import (
    Binomial,
    DomainError,
    ModelSpec,
    Perturbation,
    Poisson,
    RecursionSpec,
    constants,
    lemma_basic_checkpoints,
    lemma_basic_iterate,
    limit_estimate,
    moments,
    regime_m,
    theorem_table,
    unit_model,
)

UNIT2 = unit_model(2)

# strongly critical but far from the all-unit point: b1 = 1/2, m12 = 2, b2 = 1/4
SKEW = ModelSpec.from_components(
    {
        1: {1: Poisson(1.0), 2: Poisson(2.0)},
        2: {2: Binomial(2, 0.5)},
    }
)


class TestRecursion:
    def test_basic_limit(self):
        r = RecursionSpec(a=1.0, b=1.0, alpha=1.0, beta=0.5)
        seq = lemma_basic_iterate(r, 10**5)
        assert abs(seq[-1] - 1.0) < 0.01

    def test_scaled_limit(self):
        r = RecursionSpec(a=2.0, b=1.0, alpha=1.5, beta=0.5)
        seq = lemma_basic_iterate(r, 10**5)
        assert abs(seq[-1] / 2.0 - 1.0) < 0.01

    def test_degenerate_zero_drive(self):
        r = RecursionSpec(a=0.0, b=1.0, alpha=1.0, beta=0.5)
        assert np.all(lemma_basic_iterate(r, 1000) == 0.0)

    def test_perturbation_does_not_move_limit(self):
        base = RecursionSpec(a=1.5, b=0.7, alpha=1.2, beta=0.4)
        pert = RecursionSpec(
            a=1.5, b=0.7, alpha=1.2, beta=0.4,
            eps1=Perturbation.power(1.0, 0.25),
            eps2=Perturbation.power(1.0, 0.25),
        )
        v0 = lemma_basic_iterate(base, 10**5)[-1]
        v1 = lemma_basic_iterate(pert, 10**5)[-1]
        target = 1.5 / 0.7
        assert abs(v0 / target - 1) < 0.02
        assert abs(v1 / target - 1) < 0.02

    def test_table_perturbation(self):
        values = 1.0 / np.arange(1, 101) ** 0.25
        pert = Perturbation.from_table(values)
        r = RecursionSpec(a=1.0, b=1.0, alpha=1.0, beta=0.5, eps1=pert)
        seq = lemma_basic_iterate(r, 100)
        assert np.all(np.isfinite(seq))

    def test_hypotheses_enforced(self):
        with pytest.raises(DomainError):
            RecursionSpec(a=1.0, b=1.0, alpha=0.4, beta=0.5)  # alpha <= beta
        with pytest.raises(DomainError):
            RecursionSpec(a=1.0, b=1.0, alpha=2.0, beta=1.0)  # beta not in (0,1)
        with pytest.raises(DomainError):
            RecursionSpec(a=1.0, b=-1.0, alpha=1.0, beta=0.5)

    def test_checkpoints_match_full_iteration(self):
        r = RecursionSpec(a=1.3, b=0.9, alpha=1.1, beta=0.3)
        full = lemma_basic_iterate(r, 5000)
        vals = lemma_basic_checkpoints([r], 5000, [10, 500, 5000])
        assert vals[0, 0] == pytest.approx(full[9], rel=1e-12)
        assert vals[1, 0] == pytest.approx(full[499], rel=1e-12)
        assert vals[2, 0] == pytest.approx(full[4999], rel=1e-12)


class TestLimitEstimate:
    def test_constant_sequence(self):
        limit, verdict = limit_estimate([10, 100, 1000], [2.0, 2.0, 2.0])
        assert limit == 2.0 and verdict == "converging"

    def test_planted_power_law(self):
        for delta in (0.25, 0.5, 1.0):
            ns = [10**2, 10**3, 10**4]
            vals = [1.0 + n**-delta for n in ns]
            limit, verdict = limit_estimate(ns, vals)
            assert verdict == "converging"
            assert abs(limit - 1.0) < 0.02

    def test_oscillating_inconclusive(self):
        _, verdict = limit_estimate([10, 100, 1000, 10000], [1.0, -1.0, 1.0, -1.0])
        assert verdict == "inconclusive"

    def test_growing_deviations_diverge(self):
        _, verdict = limit_estimate([10, 100, 1000], [1.0, 2.0, 4.0])
        assert verdict == "diverging"

    def test_needs_three_points(self):
        with pytest.raises(DomainError):
            limit_estimate([10, 100], [1.0, 1.1])


class TestRegimeRules:
    def test_rules_respect_regime_orderings(self):
        ac = constants(moments(UNIT2))
        n = 10**6
        m2 = regime_m("T2", ac, n)
        m3 = regime_m("T3", ac, n, i=1, y=1.0)
        m4 = regime_m("T4", ac, n, i=1)
        m5 = regime_m("T5", ac, n, x=0.5)
        assert 1 < m2 < n**0.5 < m3 * 2  # m2 << n^gamma_1, m3 ~ n^gamma_1
        assert n**0.5 < m4 < n
        assert m5 == n // 2

    def test_clamped_to_valid_range(self):
        ac = constants(moments(UNIT2))
        assert regime_m("T5", ac, 2, x=0.9) == 1


class TestTheoremTables:
    def test_extinction_table_converges(self):
        tab = theorem_table("T1", UNIT2, (100, 1000, 10000), i=1)
        assert tab.verdict == "converging"
        assert abs(tab.ratios[-1] - 1.0) < 0.02

    def test_survival_table_converges(self):
        tab = theorem_table("Surv", UNIT2, (100, 1000, 10000), i=2)
        assert tab.verdict == "converging"

    def test_yaglom_table(self):
        tab = theorem_table("Yaglom", UNIT2, (100, 1000, 10000), lam=0.5)
        assert tab.verdict == "converging"

    def test_tot1_table_uses_callable(self):
        ac = constants(moments(UNIT2))
        # fabricate an "exact" MC side equal to the prediction plus a vanishing bias
        def fake_mc(lam):
            return float(ac.d[1]) * lam**0.5 * (1.0 + lam**0.5)

        tab = theorem_table("Tot1", UNIT2, (10, 100, 1000), i=1, mc_exact=fake_mc)
        assert tab.verdict == "converging"
        assert abs(tab.ratios[-1] - 1.0) < 0.1

    def test_render_and_rows(self):
        tab = theorem_table("T1", UNIT2, (100, 1000, 10000), i=2)
        text = tab.render_text()
        assert "ratio" in text and "verdict" in text
        rows = tab.rows()
        assert rows[0]["n"] == 100 and len(rows) == 3


class TestCancellationMonitor:
    def test_degraded_conditioning_warns_through_tables(self):
        # deep subcritical conditioning: the exact pmf underflows toward the
        # floor and the forward-difference numerator loses digits
        sub = ModelSpec.from_components({1: {1: Poisson(0.8)}})
        with pytest.warns(UserWarning, match="estimated relative error"):
            theorem_table("T5", sub, (100, 120, 140), x=0.5, lam=1.0)

    def test_healthy_conditioning_is_silent(self):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            theorem_table("T5", UNIT2, (500, 1000, 2000), x=0.5, lam=1.0)


class TestAsymmetricModel:
    """Every law re-checked off the all-unit parameter point.

    The constants here are far from 1 (c_1 = 4, g_1 = 2, D_1 = 2), so these
    tables exercise the full wiring of criticality constants into the
    scalings and the predicted limits.
    """

    def test_constants(self):
        ac = constants(moments(SKEW))
        assert ac.c[1] == pytest.approx(4.0, rel=1e-13)
        assert ac.g[1] == pytest.approx(2.0, rel=1e-13)
        assert ac.d[1] == pytest.approx(2.0, rel=1e-13)

    def test_extinction_and_survival(self):
        grid = (10**3, 10**4, 10**5)
        for kind, i in (("T1", 1), ("Surv", 1), ("Surv", 2)):
            tab = theorem_table(kind, SKEW, grid, i=i)
            assert tab.verdict == "converging"
            assert tab.deviations()[-1] < 0.05

    def test_final_stage_and_yaglom(self):
        tab = theorem_table("T5", SKEW, (500, 2000, 5000), x=0.5, lam=1.0)
        assert tab.verdict == "converging" and tab.deviations()[-1] < 0.05
        tab = theorem_table("Yaglom", SKEW, (10**2, 10**3, 10**4), lam=1.0)
        assert tab.verdict == "converging" and tab.deviations()[-1] < 0.05

    def test_sharp_regime_with_and_without_indicator(self):
        grid = (10**3, 10**4, 10**5)
        lam = np.array([0.5, 0.5])
        marginal = theorem_table("T3", SKEW, grid, i=1, y=1.0, lam=lam)
        indicator = theorem_table("T3", SKEW, grid, i=1, y=1.0, lam=lam, indicator=True)
        assert marginal.verdict == "converging"
        assert indicator.verdict == "converging"
        # below-i mass is already negligible at these n, so the variants agree
        assert np.allclose(marginal.exact, indicator.exact, rtol=1e-6)

    def test_intermediate_regime(self):
        tab = theorem_table(
            "T4", SKEW, (10**3, 10**4, 10**5), i=1, lam=np.array([1.0])
        )
        assert tab.verdict == "converging"
        assert tab.deviations()[-1] < 0.05
