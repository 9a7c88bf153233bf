import numpy as np
import pytest

from sls.dataset import standardize_arrays

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def make_data(n=40, p=6, rho=0.5, seed=0, beta=None, sigma=0.5):
    """Standardized AR(1)-correlated design with a sparse linear response."""
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, p))
    X = np.empty_like(Z)
    X[:, 0] = Z[:, 0]
    for j in range(1, p):
        X[:, j] = rho * X[:, j - 1] + np.sqrt(1 - rho ** 2) * Z[:, j]
    if beta is None:
        beta = np.zeros(p)
        beta[: min(3, p)] = [1.0, -0.8, 0.6][: min(3, p)]
    y = X @ beta + sigma * rng.standard_normal(n)
    return standardize_arrays(X, y)


@pytest.fixture
def small_ds():
    return make_data()
