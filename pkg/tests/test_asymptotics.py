import math

import numpy as np
import pytest

from branchlab import (
    ConstantsError,
    Deterministic,
    DomainError,
    Geometric,
    ModelSpec,
    MomentSummary,
    Poisson,
    constants,
    constants_identity_violations,
    moments,
    phi_closed_form_pair,
    phi_solution,
    phi_solve,
    phi_via_pgf_limit,
    theorem_rhs,
    unit_model,
)

UNIT2 = unit_model(2)
UNIT3 = unit_model(3)
AC2 = constants(moments(UNIT2))
AC3 = constants(moments(UNIT3))


def random_constants(rng):
    n_types = int(rng.integers(2, 5))
    b = rng.uniform(0.2, 3.0, n_types)
    mean = np.eye(n_types)
    for i in range(n_types - 1):
        mean[i, i + 1] = rng.uniform(0.2, 3.0)
    return constants(
        MomentSummary(mean_matrix=mean, b=b, second_moments=np.zeros((n_types,) * 3))
    )


class TestConstants:
    def test_unit_model_all_ones(self):
        assert np.allclose(AC2.c[1:], 1.0)
        assert np.allclose(AC2.d, 1.0)
        assert np.allclose(AC2.g[1:], AC2.gamma[1:])
        assert AC2.gamma[1] == 0.5 and AC2.gamma[2] == 1.0

    def test_two_type_worked_example(self):
        spec = ModelSpec.from_components(
            {1: {1: Geometric(1.0), 2: Poisson(2.0)}, 2: {2: Geometric(1.0)}}
        )
        ac = constants(moments(spec))
        assert ac.c[2] == pytest.approx(1.0, rel=1e-14)
        assert ac.c[1] == pytest.approx(math.sqrt(2.0), rel=1e-14)
        assert ac.d[1] == pytest.approx(math.sqrt(2.0), rel=1e-14)
        assert ac.g[1] == pytest.approx(math.sqrt(2.0) / 2.0, rel=1e-14)
        # identity: c_{1,2} = D_1 * sqrt(c_{2,2})
        assert ac.c[1] == pytest.approx(ac.d[1] * math.sqrt(ac.c[2]), rel=1e-14)

    def test_three_type_slope_coefficients(self):
        assert AC3.a[1, 3] == pytest.approx(0.5, rel=1e-14)
        assert AC3.f[1, 3] == pytest.approx(1.0, rel=1e-14)

    def test_identities_on_random_draws(self):
        rng = np.random.default_rng(123)
        for _ in range(25):
            ac = random_constants(rng)
            assert max(constants_identity_violations(ac).values()) <= 1e-12

    def test_undefined_off_the_critical_manifold(self):
        zero_var = ModelSpec.from_components(
            {1: {1: Deterministic(1), 2: Poisson(1.0)}, 2: {2: Geometric(1.0)}}
        )
        with pytest.raises(ConstantsError):
            constants(moments(zero_var))
        zero_next = ModelSpec.from_components(
            {1: {1: Geometric(1.0), 2: Deterministic(0)}, 2: {2: Geometric(1.0)}}
        )
        with pytest.raises(ConstantsError):
            constants(moments(zero_next))


class TestClosedFormPair:
    def test_pure_second_coordinate(self):
        assert phi_closed_form_pair(1, 1, 0, 1) == pytest.approx(math.tanh(1.0), rel=1e-15)

    def test_vanishing_second_coordinate(self):
        assert phi_closed_form_pair(1, 1, 1, 1e-15) == pytest.approx(0.5, rel=1e-9)
        assert phi_closed_form_pair(1, 1, 0, 1e-15) == pytest.approx(0.0, abs=1e-14)

    def test_series_branch_continuity(self):
        lo = phi_closed_form_pair(1.3, 0.7, 2.0, 0.999e-12)
        hi = phi_closed_form_pair(1.3, 0.7, 2.0, 1.001e-12)
        assert lo == pytest.approx(hi, rel=1e-9)


class TestPhiSolver:
    def test_zero_maps_to_zero(self):
        val, err = phi_solve(AC2, 1, [0.0, 0.0])
        assert val == 0.0 and err == 0.0

    def test_tanh_point(self):
        val, err = phi_solve(AC2, 1, [0.0, 1.0])
        assert val == pytest.approx(math.tanh(1.0), rel=1e-9)
        assert err < 1e-8

    def test_classical_single_coordinate_limit(self):
        val, _ = phi_solve(AC2, 1, [1.0, 0.0])
        assert val == pytest.approx(0.5, rel=1e-9)

    def test_grid_against_closed_form(self):
        grid = (0.0, 0.5, 2.0, 10.0)
        for l1 in grid:
            for l2 in grid:
                val, _ = phi_solve(AC2, 1, [l1, l2])
                ref = phi_closed_form_pair(1.0, 1.0, l1, l2)
                if ref > 0:
                    assert val == pytest.approx(ref, rel=1e-8)

    def test_nondecreasing_in_each_coordinate(self):
        rng = np.random.default_rng(5)
        sol = phi_solution(AC3, 1)
        for _ in range(10):
            lam = rng.uniform(0.0, 4.0, 3)
            base = sol.value(lam)
            k = int(rng.integers(0, 3))
            bumped = lam.copy()
            bumped[k] += rng.uniform(0.01, 1.0)
            assert sol.value(bumped) >= base - 1e-10

    def test_characteristic_self_consistency(self):
        # Phi at a scaled-down ray point equals the trajectory value there
        sol = phi_solution(AC2, 1)
        lam = np.array([1.0, 2.0])
        t = -1.0
        along = sol.trajectory(lam, [t])[0]
        scaled = lam * np.exp(np.array([1.0, 2.0]) * t)
        fresh = sol.value(scaled)
        assert along == pytest.approx(fresh, rel=1e-8)

    def test_gradient_modes_agree(self):
        sol = phi_solution(AC3, 1)
        lam = np.array([0.7, 1.3, 0.4])
        _, grad_ode = sol.value_and_gradient(lam)
        grad_fd = sol.gradient_fd(lam)
        assert np.allclose(grad_ode, grad_fd, rtol=2e-5, atol=1e-7)

    def test_gradient_at_origin_is_slope_vector(self):
        _, grad = phi_solution(AC3, 1).value_and_gradient(np.zeros(3))
        assert np.allclose(grad, [1.0, AC3.a[1, 2], AC3.a[1, 3]])

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            phi_solve(AC2, 1, [-0.1, 1.0])
        with pytest.raises(DomainError):
            phi_solve(AC2, 2, [1.0])  # i must be < N


class TestPhiViaPgfLimit:
    def test_zero(self):
        assert phi_via_pgf_limit(UNIT2, 1, [0.0, 0.0], 100) == 0.0

    def test_two_type_tanh_point(self):
        val = phi_via_pgf_limit(UNIT2, 1, [0.0, 1.0], 10**4)
        assert val == pytest.approx(math.tanh(1.0), rel=0.02)

    def test_classical_single_type_form(self):
        # lam on the own coordinate only: the classical lam / (1 + b lam)
        for lam in (0.5, 1.0, 3.0):
            val = phi_via_pgf_limit(UNIT2, 1, [lam, 0.0], 2000)
            assert val == pytest.approx(lam / (1.0 + lam), rel=0.01)


class TestTheoremRhs:
    def test_t1_value(self):
        v = theorem_rhs("T1", AC2, i=1, n=100)
        assert v == pytest.approx(0.5 / 100**1.5, rel=1e-12)

    def test_t2_normalization_and_value(self):
        assert theorem_rhs("T2", AC2, lam=np.zeros(2)) == 1.0
        # dPhi/dlam1 at (0, 1) for the unit pair: sech(1)^2 / 1
        v = theorem_rhs("T2", AC2, lam=np.array([0.0, 1.0]))
        assert v == pytest.approx(1.0 - math.tanh(1.0) ** 2, rel=1e-8)

    def test_t3_exponent_modes_disagree(self):
        lemma = theorem_rhs("T3", AC2, i=1, y=1.0, lam=np.zeros(2), exponent_mode="lemma")
        printed = theorem_rhs("T3", AC2, i=1, y=1.0, lam=np.zeros(2), exponent_mode="theorem")
        assert lemma == pytest.approx(1.0, abs=1e-10)
        assert printed == pytest.approx(0.5, abs=1e-9)

    def test_t3_normalization_all_y(self):
        for y in (0.25, 1.0, 3.0):
            v = theorem_rhs("T3", AC3, i=2, y=y, lam=np.zeros(2))
            assert v == pytest.approx(1.0, abs=1e-9)

    def test_t4_normalization_and_shape(self):
        assert theorem_rhs("T4", AC2, i=1, lam=np.zeros(1)) == pytest.approx(1.0, abs=1e-12)
        # N=2 unit: (1 + lam)^(-1/2)
        v = theorem_rhs("T4", AC2, i=1, lam=np.array([3.0]))
        assert v == pytest.approx(0.5, rel=1e-12)

    def test_t5_values_and_domain(self):
        v = theorem_rhs("T5", AC2, x=0.5, lam=1.0)
        assert v == pytest.approx(0.58423, abs=1e-5)
        assert v == pytest.approx(
            1.0 / (1.5**0.5 * 1.25**1.5), rel=1e-12
        )
        assert theorem_rhs("T5", AC2, x=0.3, lam=0.0) == 1.0
        with pytest.raises(DomainError):
            theorem_rhs("T5", AC2, x=1.0, lam=1.0)

    def test_yaglom_values(self):
        assert theorem_rhs("Yaglom", AC2, lam=0.0) == 1.0
        assert theorem_rhs("Yaglom", AC2, lam=1.0) == pytest.approx(1 - 2**-0.5, rel=1e-14)
        assert theorem_rhs("Yaglom", AC3, lam=1.0) == pytest.approx(1 - 2**-0.25, rel=1e-14)

    def test_tot1_scaling(self):
        assert theorem_rhs("Tot1", AC2, i=1, lam=1e-4) == pytest.approx(1e-2, rel=1e-12)

    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            theorem_rhs("T9", AC2, lam=1.0)
