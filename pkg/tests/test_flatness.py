import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finsler_lab.errors import ProfileDomainError, SpecializationError
from finsler_lab.expr import RadialFunction
from finsler_lab.flatness import (FlatnessParams, RigidityParams, corollary_pq_residuals, default_grid,
                                  dual_flat_residual, fit_k1, fit_k1_psi, fit_k_hash, hamel_residual,
                                  hash_residual_jet, is_riemannian, isotropy_consistency_residual, pfdf_psi_residuals,
                                  pfdf_residual, rigidity_chain_residuals, rigidity_family, star_residual)
from finsler_lab.profiles import EvaluationPoint, funk, get_profile, klein, parse_psi, riemann_sqrt, sqrt_one_plus_s2
from finsler_lab.spray import compute_PQ

from helpers import random_points

EUCLID = get_profile("euclidean")
KLEIN_K = RigidityParams(k_fn=RadialFunction("1/(1-r^2)"))
ZERO_K = RigidityParams(k_fn=RadialFunction("0"))
GRID = default_grid()


def amax(a):
    return float(np.max(np.abs(a)))


def test_default_grid_shape():
    assert len(GRID) == 4 * 17
    assert all(abs(s) <= 0.9 * r + 1e-15 for r, s in GRID)


class TestXYResiduals:
    def test_euclidean(self):
        for p in random_points(EUCLID, 3, 5, seed=1):
            assert amax(hamel_residual(EUCLID.metric(), p)) == 0.0
            assert amax(dual_flat_residual(EUCLID.metric(), p)) == 0.0
            assert amax(pfdf_residual(EUCLID.metric(), p, FlatnessParams(0.0))) == 0.0

    def test_funk_flat(self):
        m = funk().metric()
        for p in random_points(funk(), 3, 10, seed=2):
            assert amax(hamel_residual(m, p)) <= 1e-9
            assert amax(dual_flat_residual(m, p)) <= 1e-9
            assert amax(pfdf_residual(m, p, FlatnessParams(1.0))) <= 1e-9

    def test_funk_wrong_k1(self):
        p = EvaluationPoint([0.5, 0.0, 0.0], [0.0, 1.0, 0.0])
        assert amax(pfdf_residual(funk().metric(), p, FlatnessParams(0.0))) >= 0.1

    def test_sqrt_one_plus_s2_not_projectively_flat(self):
        p = EvaluationPoint([0.5, 0, 0], [0, 1, 0])
        res = hamel_residual(sqrt_one_plus_s2().metric(), p)
        assert amax(res) >= 0.05
        assert res == pytest.approx([0.5, 0.0, 0.0], abs=1e-14)

    def test_klein_projectively_but_not_dually_flat(self):
        m = klein().metric()
        p = EvaluationPoint([0.3, -0.2, 0.1], [0.5, 0.9, -0.4])
        assert amax(hamel_residual(m, p)) <= 1e-12
        assert amax(dual_flat_residual(m, p)) > 1e-2

    def test_hamel_agrees_with_Q(self):
        # projective flatness here is equivalent to Q vanishing
        for prof in (funk(), sqrt_one_plus_s2(), klein()):
            for p in random_points(prof, 3, 4, seed=3):
                Q = compute_PQ(prof, p.r, p.s).Q
                assert (amax(hamel_residual(prof.metric(), p)) <= 1e-9) == (abs(Q) <= 1e-9)

    @pytest.mark.parametrize("prof", [funk(), EUCLID], ids=["funk", "euclidean"])
    def test_combined_flatness_implies_both(self, prof):
        k1, _ = fit_k1(prof.metric(), random_points(prof, 3, 10, seed=4))
        for p in random_points(prof, 3, 10, seed=5):
            if amax(pfdf_residual(prof.metric(), p, FlatnessParams(k1))) <= 1e-9:
                assert amax(hamel_residual(prof.metric(), p)) <= 1e-9
                assert amax(dual_flat_residual(prof.metric(), p)) <= 1e-9

    def test_fit_k1(self):
        k1, resid = fit_k1(funk().metric(), random_points(funk(), 3, 10, seed=6))
        assert k1 == pytest.approx(1.0, abs=1e-12) and resid <= 1e-12
        _, resid = fit_k1(sqrt_one_plus_s2().metric(), random_points(sqrt_one_plus_s2(), 3, 10, seed=6))
        assert resid >= 1e-2


class TestPsiSide:
    def test_euclidean(self):
        assert pfdf_psi_residuals(EUCLID, 0.4, 0.1, FlatnessParams(0.0)) == (0.0, 0.0)

    def test_funk(self):
        for r, s in GRID:
            assert max(map(abs, pfdf_psi_residuals(funk(), r, s, FlatnessParams(1.0)))) <= 1e-10

    def test_funk_small_r_hand_algebra(self):
        # psi -> sqrt(1+s^2) + s as r -> 0, and psi^2 - s psi psi_s = psi_s there
        r, s = 1e-3, 4e-4
        _, second = pfdf_psi_residuals(funk(), r, s, FlatnessParams(1.0))
        assert abs(second) <= 1e-12

    def test_sqrt_one_plus_s2_parity(self):
        k1, resid = fit_k1_psi(sqrt_one_plus_s2(), GRID)
        assert resid >= 1e-2
        for s in (-0.2, 0.2):
            _, second = pfdf_psi_residuals(sqrt_one_plus_s2(), 0.5, s, FlatnessParams(k1))
            assert abs(second) > 1e-3

    def test_corollary(self):
        sc = compute_PQ(funk(), 0.5, 0.2)
        assert max(map(abs, corollary_pq_residuals(sc, sc.psi, FlatnessParams(1.0)))) <= 1e-10
        sc = compute_PQ(sqrt_one_plus_s2(), 0.5, 0.2)
        dP, Q = corollary_pq_residuals(sc, sc.psi, FlatnessParams(0.0))
        assert abs(dP) <= 1e-15 and Q == pytest.approx(1 / (2 * 1.25))

    def test_isotropy_consistency(self):
        r, s = 0.5, 0.2
        sc = compute_PQ(funk(), r, s)
        J = funk().jet(r, s)
        assert abs(isotropy_consistency_residual(sc, J, 0.5)) <= 1e-10
        expected = 0.2 * (J.value - s * J.partial([0, 1]))
        assert isotropy_consistency_residual(sc, J, 0.3) == pytest.approx(expected, abs=1e-12)
        sc = compute_PQ(EUCLID, r, s)
        assert isotropy_consistency_residual(sc, EUCLID.jet(r, s), 0.0) == 0.0

    def test_isotropy_consistency_inapplicable(self):
        sc = compute_PQ(sqrt_one_plus_s2(), 0.5, 0.2)
        with pytest.raises(SpecializationError, match="specialization inapplicable"):
            isotropy_consistency_residual(sc, sqrt_one_plus_s2().jet(0.5, 0.2), 0.0)


class TestRigidityChain:
    def test_euclidean(self):
        assert rigidity_chain_residuals(EUCLID, 0.4, 0.1, ZERO_K) == (0.0, 0.0, 0.0)
        assert star_residual(EUCLID, 0.4, 0.1, ZERO_K) == 0.0

    def test_klein_endpoint(self):
        for r, s in GRID:
            assert max(map(abs, rigidity_chain_residuals(klein(), r, s, KLEIN_K))) <= 1e-9
            assert abs(star_residual(klein(), r, s, KLEIN_K)) <= 1e-9

    def test_funk_chain(self):
        k, _ = fit_k_hash(funk(), 0.5, [0.5 * t for t in np.linspace(-0.9, 0.9, 9)])
        params = RigidityParams(k_fn=RadialFunction(repr(k)))
        worst_2hash = 0.0
        for r, s in GRID:
            _, star2, hash2 = rigidity_chain_residuals(funk(), r, s, params)
            assert abs(star2) <= 1e-12
            worst_2hash = max(worst_2hash, abs(hash2))
        assert worst_2hash > 1e-2

    def test_2star_is_q_numerator(self):
        for prof in (funk(), sqrt_one_plus_s2(), klein()):
            r, s = 0.4, -0.1
            J = prof.jet(r, s)
            numerator = r * J.partial([0, 2]) + s * J.partial([1, 1]) - J.partial([1, 0])
            assert rigidity_chain_residuals(prof, r, s, ZERO_K)[1] == numerator

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.1, 0.8), st.floats(-0.9, 0.9), st.floats(-2, 2), st.floats(0.1, 2))
    def test_star_is_hash_derivative(self, r, t, k, a):
        prof = riemann_sqrt("1 + a*r^2", "a", {"a": a})
        params = RigidityParams(k_fn=RadialFunction(repr(k)))
        s = t * r
        d_hash = hash_residual_jet(prof, r, s, params).partial([1])
        assert d_hash == pytest.approx(star_residual(prof, r, s, params), abs=1e-10)

    def test_gamma_bookkeeping(self):
        params = RigidityParams(gamma_fn=RadialFunction("r"), c=1.0, k1=1.0)
        assert params.k(0.5) == pytest.approx(0.5)
        with pytest.raises(SpecializationError, match="degenerate"):
            RigidityParams(gamma_fn=RadialFunction("r"), c=0.5, k1=1.0).k(0.5)


class TestFamily:
    @pytest.mark.parametrize("k2, k, other", [
        ("1", "0", EUCLID),
        ("1", "1", sqrt_one_plus_s2()),
        ("1/sqrt(1-r^2)", "1/(1-r^2)", klein()),
    ])
    def test_known_members(self, k2, k, other):
        fam = rigidity_family(RigidityParams(k_fn=RadialFunction(k), k2_fn=RadialFunction(k2)), (1e-3, 0.95))
        for r, s in GRID:
            assert abs(fam(r, s) - other(r, s)) <= 1e-14

    def test_domain_error(self):
        with pytest.raises(ProfileDomainError, match="family domain error"):
            rigidity_family(RigidityParams(k_fn=RadialFunction("-4"), k2_fn=RadialFunction("1")))

    def test_members_riemannian(self):
        fam = riemann_sqrt("1 + r^2", "2 - r", {})
        assert is_riemannian(fam.metric(), random_points(fam, 3, 6, seed=8))


def test_riemannian_checks():
    assert is_riemannian(EUCLID.metric(), random_points(EUCLID, 3, 4, seed=9))
    check = is_riemannian(funk().metric(), random_points(funk(), 3, 6, seed=9))
    assert not check and check.max_third >= 1e-2
    assert math.isfinite(check.max_third)
