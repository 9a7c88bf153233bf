from fractions import Fraction

import numpy as np
import pytest

from sls.dataset import standardize_arrays
from sls.errors import NumericalError, ValidationError
from sls.graph import adjacency_from_edges, clique_adjacency
from sls.laplacian import build_laplacian, zero_laplacian
from sls.oracle import (SupportSet, c_min, diagnose, mse_traces, oracle_estimator,
                        target_and_bias, sufficient_conditions, two_predictor, variance_factors)

from conftest import make_data


def orthonormal_ds(n=8, p=4, seed=0):
    """Design with X'X/n = I exactly (centered orthogonal columns)."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, p + 1))
    A[:, 0] = 1.0
    Q, _ = np.linalg.qr(A)
    X = Q[:, 1:] * np.sqrt(n)
    y = rng.standard_normal(n)
    return standardize_arrays(X, y)


class TestSupportSet:
    def test_sorted_and_complement(self):
        s = SupportSet((3, 0), 5)
        assert s.indices == (0, 3) and s.d_o == 2
        np.testing.assert_array_equal(s.complement, [1, 2, 4])

    def test_from_beta(self):
        assert SupportSet.from_beta([0, 1.0, 0, -2]).indices == (1, 3)

    @pytest.mark.parametrize("idx", [(0, 0), (5,), (-1,)])
    def test_invalid(self, idx):
        with pytest.raises(ValidationError):
            SupportSet(idx, 5)


class TestOracleEstimator:
    def test_identity_gram(self):
        ds = orthonormal_ds()
        b = oracle_estimator(ds, None, SupportSet(range(4), 4), 0.0)
        np.testing.assert_allclose(b, ds.X.T @ ds.y / ds.n, atol=1e-12)

    def test_restricted_ols(self, small_ds):
        O = [0, 2, 4]
        b = oracle_estimator(small_ds, None, SupportSet(O, 6), 0.0)
        ref = np.linalg.lstsq(small_ds.X[:, O], small_ds.y, rcond=None)[0]
        np.testing.assert_allclose(b[O], ref, atol=1e-12)
        assert np.all(b[[1, 3, 5]] == 0)

    def test_singular(self):
        ds = make_data(n=5, p=10)
        with pytest.raises(NumericalError):
            oracle_estimator(ds, None, SupportSet(range(8), 10), 0.0)


class TestBias:
    def test_unbiased_laplacian(self, small_ds):
        lap = build_laplacian(clique_adjacency([[0, 1, 2]], 6))
        beta = np.array([0.5, 0.5, 0.5, 0, 0, 0])
        star, C1, C2 = target_and_bias(small_ds, lap, SupportSet((0, 1, 2), 6), 1.3, beta)
        np.testing.assert_allclose(star, beta, atol=1e-14)
        assert C1 == pytest.approx(0, abs=1e-14) and C2 == pytest.approx(0, abs=1e-14)

    def test_zero_lambda2(self, small_ds):
        lap = build_laplacian(adjacency_from_edges([(0, 1, 1.0, 1)], 6))
        beta = np.array([0.5, 0.6, 0, 0, 0, 0])
        star, C1, _ = target_and_bias(small_ds, lap, SupportSet((0, 1), 6), 0.0, beta)
        np.testing.assert_allclose(star, beta, atol=1e-14)
        assert C1 == pytest.approx(np.abs(np.linalg.solve(
            small_ds.X[:, :2].T @ small_ds.X[:, :2] / small_ds.n,
            np.array([-0.1, 0.1]))).max())

    def test_identity_gram_pair(self):
        ds = orthonormal_ds(n=10, p=2)
        lap = build_laplacian(adjacency_from_edges([(0, 1, 1.0, 1)], 2))
        beta = np.array([0.5, 0.6])
        L = lap.toarray()
        star, C1, _ = target_and_bias(ds, lap, SupportSet((0, 1), 2), 1.0, beta)
        M = np.eye(2) + L
        assert C1 == pytest.approx(np.abs(np.linalg.solve(M, L @ beta)).max(), rel=1e-12)
        np.testing.assert_allclose(star, np.linalg.solve(M, beta), atol=1e-14)
        assert np.abs(star - beta).max() == pytest.approx(C1, rel=1e-12)


class TestConditioning:
    def test_identity(self):
        assert c_min(orthonormal_ds(), zero_laplacian(4), 0.0) == pytest.approx(1.0)

    def test_two_by_two(self):
        X = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0],
                      [1.0, 1.0], [-1.0, -1.0]])
        ds = standardize_arrays(X, np.arange(6.0))
        r12 = ds.X[:, 0] @ ds.X[:, 1] / 6
        assert c_min(ds, None, 0.0) == pytest.approx(1 - abs(r12))

    def test_rank_deficient(self):
        assert c_min(make_data(n=8, p=20), None, 0.0) <= 1e-10

    def test_traces_shrink(self, small_ds):
        lap = build_laplacian(clique_adjacency([[0, 1, 2]], 6))
        O = SupportSet((0, 1, 2), 6)
        shrunk, plain = mse_traces(small_ds, lap, O, 1.0)
        assert shrunk < plain
        assert plain == pytest.approx(np.trace(np.linalg.inv(
            small_ds.X[:, :3].T @ small_ds.X[:, :3] / small_ds.n)))
        assert variance_factors(small_ds, lap, O, 0.0).sum() == pytest.approx(plain)


class TestTwoPredictor:
    def test_reference_values(self):
        c = two_predictor(0.6, 0.4, 0.5, 1.0)
        np.testing.assert_allclose(c.b_L, (0.373333333333333, 0.293333333333333), atol=1e-12)
        np.testing.assert_allclose(c.b_ols, (0.533333333333333, 0.133333333333333), atol=1e-12)
        assert c.b_L_inf == pytest.approx(1 / 3)

    def test_exact_rationals(self):
        # b_L1 = ((1+l) r1 - (r12-l) r2) / ((1+l)^2 - (r12-l)^2) with exact arithmetic
        r1, r2, r12, lam = Fraction(3, 5), Fraction(2, 5), Fraction(1, 2), Fraction(1)
        den = (1 + lam) ** 2 - (r12 - lam) ** 2
        b1 = ((1 + lam) * r1 - (r12 - lam) * r2) / den
        b2 = ((1 + lam) * r2 - (r12 - lam) * r1) / den
        assert (b1, b2) == (Fraction(28, 75), Fraction(22, 75))
        c = two_predictor(0.6, 0.4, 0.5, 1.0)
        np.testing.assert_allclose(c.b_L, (float(b1), float(b2)), rtol=1e-14)

    @pytest.mark.parametrize("lam", [0.1, 0.25, 1.0, 4.0, 30.0])
    def test_weighted_average_identities(self, lam):
        c = two_predictor(0.7, -0.2, 0.35, lam)
        for k in range(2):
            assert c.b_L[k] == pytest.approx((1 - c.w_L) * c.b_ols[k] + c.w_L * c.b_L_inf,
                                             abs=1e-12)
            assert (1 + lam) * c.b_R[k] == pytest.approx(
                c.c_lambda * ((1 - c.w_R) * c.b_ols[k] + c.w_R * c.b_univ[k]), abs=1e-12)

    def test_limits(self):
        c0 = two_predictor(0.6, 0.4, 0.5, 0.0)
        np.testing.assert_allclose(c0.b_L, c0.b_ols, atol=1e-15)
        assert c0.w_L == 0
        big = two_predictor(0.6, 0.4, 0.5, 1e9)
        np.testing.assert_allclose(big.b_L, (big.b_L_inf,) * 2, atol=1e-6)

    def test_invalid(self):
        with pytest.raises(ValidationError):
            two_predictor(0.1, 0.2, 1.0, 1.0)


class TestConditions:
    def test_clause_i_identity(self):
        ds = orthonormal_ds(n=12, p=4)
        out = sufficient_conditions(ds, None, SupportSet((0,), 4), 0.0, 0.1, 3.0, 1.0)
        assert out["i"]["passed"] and out["i"]["lhs"] == pytest.approx(1.0)
        assert not out["ii"]["applicable"]

    def test_full_support_is_inapplicable(self, small_ds):
        beta = np.full(6, 0.5)
        lap = build_laplacian(clique_adjacency([range(6)], 6))
        out = sufficient_conditions(small_ds, lap, SupportSet(range(6), 6), 1.0, 0.1, 3.0, 1.0,
                                 eps=1 / 3, beta_true=beta)
        assert out["ii"] == {"applicable": False, "reason": "p == d_o, log of zero"}

    def test_unbiased_clause_ii(self, small_ds):
        lap = build_laplacian(clique_adjacency([[0, 1, 2]], 6))
        beta = np.array([0.5, 0.5, 0.5, 0, 0, 0])
        out = sufficient_conditions(small_ds, lap, SupportSet((0, 1, 2), 6), 1.0, 0.5, 3.0, 0.2,
                                 beta_true=beta, subsets=[[0, 3]])
        xmax = np.linalg.norm(small_ds.X, axis=0).max() / small_ds.n
        rhs = out["C2"] + 0.2 * np.sqrt(2 * np.log(3 / 0.1)) * xmax
        assert out["ii"]["rhs"] == pytest.approx(rhs)
        assert len(out["src_spot_check"]) == 1

    def test_diagnose_report(self, small_ds):
        lap = build_laplacian(clique_adjacency([[0, 1]], 6))
        rep = diagnose(small_ds, lap, SupportSet((0, 1), 6), 0.5)
        d = rep.to_dict()
        assert isinstance(d["oracle_beta"], list) and d["support"] == (0, 1)
        assert rep.c_min > 0
