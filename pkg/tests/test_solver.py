import numpy as np
import pytest

from sls.errors import ValidationError
from sls.graph import adjacency_from_edges, partition_adjacency
from sls.laplacian import augment, build_laplacian
from sls.solver import (FitOptions, Problem, SlsHyperparams, criterion_value, fit, fit_path,
                        kkt_check, lambda_max)

from conftest import make_data

TIGHT = dict(tol=1e-13, kkt_tol=1e-11, max_iter=100_000)


def lasso_cd(X, y, lam, iters=5000):
    """Plain cyclic soft-thresholding on standardized columns, written from scratch."""
    n, p = X.shape
    b = np.zeros(p)
    for _ in range(iters):
        old = b.copy()
        for j in range(p):
            rj = y - X @ b + X[:, j] * b[j]
            z = X[:, j] @ rj / n
            b[j] = np.sign(z) * max(abs(z) - lam, 0.0) / (X[:, j] @ X[:, j] / n)
        if np.max(np.abs(b - old)) < 1e-14:
            break
    return b


@pytest.fixture
def chain_lap():
    return build_laplacian(adjacency_from_edges([(0, 1, 1.0, 1), (1, 2, 0.5, 1),
                                                 (3, 4, 1.0, -1)], 6))


class TestCriterion:
    def test_zero_vector(self, small_ds, chain_lap):
        h = SlsHyperparams(0.3, 0.7)
        v = criterion_value(small_ds, chain_lap, np.zeros(6), h)
        assert v == pytest.approx(small_ds.y @ small_ds.y / (2 * small_ds.n))

    def test_ols_residual(self, small_ds):
        b = np.linalg.lstsq(small_ds.X, small_ds.y, rcond=None)[0]
        r = small_ds.y - small_ds.X @ b
        v = criterion_value(small_ds, None, b, SlsHyperparams(0.0, 0.0))
        assert v == pytest.approx(r @ r / (2 * small_ds.n))

    def test_shape_check(self, small_ds):
        with pytest.raises(ValidationError):
            criterion_value(small_ds, None, np.zeros(3), SlsHyperparams(0.1))


class TestFit:
    def test_above_lambda_max_is_zero(self, small_ds):
        lm = lambda_max(small_ds)
        assert np.all(fit(small_ds, None, SlsHyperparams(lm)).beta == 0)
        assert np.all(fit(small_ds, None, SlsHyperparams(1.01 * lm)).beta == 0)

    def test_descent_trace(self, small_ds, chain_lap):
        res = fit(small_ds, chain_lap, SlsHyperparams(0.1, 0.5), trace=True)
        assert res.converged
        assert np.all(np.diff(res.trace) <= 1e-12)
        assert res.trace[-1] == pytest.approx(res.objective, rel=1e-10)

    def test_ridge_closed_form(self, small_ds, chain_lap):
        lam2 = 0.8
        res = fit(small_ds, chain_lap, SlsHyperparams(0.0, lam2), **TIGHT)
        S = small_ds.X.T @ small_ds.X / small_ds.n
        b = np.linalg.solve(S + lam2 * chain_lap.toarray(),
                            small_ds.X.T @ small_ds.y / small_ds.n)
        np.testing.assert_allclose(res.beta, b, atol=1e-10)
        assert not res.possibly_nonunique

    def test_lambda2_zero_ignores_laplacian(self, small_ds, chain_lap):
        h = SlsHyperparams(0.08, 0.0)
        a = fit(small_ds, chain_lap, h, **TIGHT).beta
        b = fit(small_ds, None, h, **TIGHT).beta
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_augmented_design_matches(self, small_ds, chain_lap):
        lam2 = 0.6
        h = SlsHyperparams(0.05, lam2)
        direct = fit(small_ds, chain_lap, h, **TIGHT)
        aug = fit(augment(small_ds, chain_lap, lam2), None, SlsHyperparams(0.05, 0.0), **TIGHT)
        np.testing.assert_allclose(direct.beta, aug.beta, atol=1e-9)

    def test_converged_kkt(self, small_ds, chain_lap):
        for penalty, gamma in [("mcp", 3.0), ("scad", 3.7), ("l1", 3.0)]:
            res = fit(small_ds, chain_lap, SlsHyperparams(0.05, 0.3, penalty, gamma))
            assert res.converged
            assert kkt_check(small_ds, chain_lap, res) <= 1e-6

    def test_ols_kkt_is_zero(self, small_ds):
        b = np.linalg.solve(small_ds.X.T @ small_ds.X, small_ds.X.T @ small_ds.y)
        res = fit(small_ds, None, SlsHyperparams(0.0), **TIGHT)
        res.beta[:] = b
        assert kkt_check(small_ds, None, res) <= 1e-10

    def test_perturbation_breaks_kkt(self, small_ds, chain_lap):
        res = fit(small_ds, chain_lap, SlsHyperparams(0.05, 0.3))
        res.beta[0] += 0.1
        assert kkt_check(small_ds, chain_lap, res) > 1e-3

    def test_nonunique_flag(self):
        ds = make_data(n=10, p=20)
        res = fit(ds, None, SlsHyperparams(0.0, 0.0), max_iter=50)
        assert res.possibly_nonunique

    def test_not_converged_reported(self, small_ds):
        res = fit(small_ds, None, SlsHyperparams(0.01), max_iter=1)
        assert not res.converged and res.iterations == 1

    def test_bad_init_shape(self, small_ds):
        with pytest.raises(ValidationError):
            fit(small_ds, None, SlsHyperparams(0.1), init=np.zeros(2))

    def test_laplacian_shape_check(self, small_ds):
        with pytest.raises(ValidationError):
            Problem(small_ds, build_laplacian(partition_adjacency([[0, 1]])))


class TestPath:
    def test_single_point_at_lambda_max(self, small_ds):
        path = fit_path(small_ds, None, [lambda_max(small_ds)])
        assert len(path.fits) == 1 and np.all(path.coefs == 0)

    def test_default_grid_starts_at_zero(self, small_ds, chain_lap):
        path = fit_path(small_ds, chain_lap, lambda2=0.5)
        assert np.all(path.fits[0].beta == 0)
        assert path.lambda1_grid.size == 17

    def test_l1_limit_against_independent_cd(self, small_ds):
        lm = lambda_max(small_ds)
        grid = lm * np.array([0.5, 0.2, 0.05])
        path = fit_path(small_ds, None, grid, 0.0, "mcp", 1e9, FitOptions(**TIGHT))
        for lam, f in zip(grid, path.fits):
            np.testing.assert_allclose(f.beta, lasso_cd(small_ds.X, small_ds.y, lam), atol=1e-6)

    def test_rejects_ascending_grid(self, small_ds):
        with pytest.raises(ValidationError):
            fit_path(small_ds, None, [0.1, 0.2])
