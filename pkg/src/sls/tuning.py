"""V-fold cross-validation over a ``(lambda1, lambda2)`` grid."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .solver import FitOptions, Problem, SlsHyperparams, fit_path, lambda_max


def default_threads() -> int:
    env = os.environ.get("SLS_THREADS")
    if env:
        return max(1, int(env))
    return 1


def default_grid(ds, lambda1_top: float | None = None):
    """``lambda1 = lambda_max * 2^{0, -0.5, ..., -8}``, ``lambda2 = 2^{-4, -3.5, ..., 4}``."""
    top = lambda_max(ds) if lambda1_top is None else lambda1_top
    expo = np.arange(0, 17) * 0.5
    return top * 2.0 ** -expo, 2.0 ** (expo - 4.0)


@dataclass
class CvResult:
    grid: list[tuple[float, float]]
    cv_errors: np.ndarray
    se: np.ndarray
    best: tuple[float, float]
    fold_assignment: np.ndarray
    seed: int
    fold_errors: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "best": {"lambda1": self.best[0], "lambda2": self.best[1]},
            "seed": self.seed,
            "folds": int(self.fold_assignment.max()) + 1,
            "fold_assignment": self.fold_assignment.tolist(),
            "grid": [{"lambda1": a, "lambda2": b, "cv_error": float(e), "se": float(s)}
                     for (a, b), e, s in zip(self.grid, self.cv_errors, self.se)],
        }

    def surface_tsv(self) -> str:
        lines = ["lambda1\tlambda2\tcv_error\tse"]
        for (a, b), e, s in zip(self.grid, self.cv_errors, self.se):
            lines.append(f"{a:.17g}\t{b:.17g}\t{e:.17g}\t{s:.17g}")
        return "\n".join(lines) + "\n"


def fold_assignment(n: int, V: int, seed: int) -> np.ndarray:
    """Shuffle indices with ``seed`` and deal them round-robin into ``V`` folds."""
    if V < 2:
        raise ValidationError("V >= 2 required")
    if V > n:
        raise ValidationError(f"V={V} exceeds n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    folds = np.empty(n, dtype=int)
    folds[perm] = np.arange(n) % V
    return folds


class _Split:
    """Training fold re-standardized on its own statistics."""

    def __init__(self, X, y, test_mask):
        Xtr, ytr = X[~test_mask], y[~test_mask]
        n = Xtr.shape[0]
        self.means = Xtr.mean(axis=0)
        Xc = Xtr - self.means
        self.scales = np.sqrt(np.sum(Xc ** 2, axis=0) / n)
        # a column constant within the fold carries no information there
        self.scales[self.scales <= 1e-12] = np.inf
        self.X = Xc / self.scales
        self.y_mean = ytr.mean()
        self.y = ytr - self.y_mean
        self.n = n
        self.X_test = (X[test_mask] - self.means) / self.scales
        self.y_test = y[test_mask]

    def held_out_mse(self, beta) -> float:
        pred = self.y_mean + self.X_test @ beta
        return float(np.mean((self.y_test - pred) ** 2))


def _fold_line(split, lap, lam1_desc, lam2, penalty, gamma, options):
    prob = Problem(split, lap)
    path = fit_path(None, None, lam1_desc, lam2, penalty, gamma, options, problem=prob)
    return np.array([split.held_out_mse(f.beta) for f in path.fits])


def cv_select(ds, lap, lambda1_grid=None, lambda2_grid=None, V: int = 5,
              penalty: str = "mcp", gamma: float = 3.0, seed: int = 0,
              options: FitOptions | None = None, threads: int | None = None) -> CvResult:
    """Pick ``(lambda1, lambda2)`` minimizing the mean held-out squared error.

    The Laplacian is held fixed across folds. Ties go to the larger
    ``lambda1`` and then the larger ``lambda2``.
    """
    d1, d2 = default_grid(ds)
    g1 = np.unique(np.asarray(d1 if lambda1_grid is None else lambda1_grid, dtype=float))[::-1]
    g2 = np.unique(np.asarray(d2 if lambda2_grid is None else lambda2_grid, dtype=float))
    if g1.size == 0 or g2.size == 0:
        raise ValidationError("empty tuning grid")
    if np.any(g1 < 0) or np.any(g2 < 0):
        raise ValidationError("tuning grid values must be nonnegative")
    SlsHyperparams(float(g1[0]), float(g2[0]), penalty, gamma)

    X = np.asarray(ds.X, dtype=float)
    y = np.asarray(ds.y, dtype=float)
    folds = fold_assignment(X.shape[0], V, seed)
    splits = [_Split(X, y, folds == v) for v in range(V)]

    tasks = [(v, k) for v in range(V) for k in range(g2.size)]
    run = lambda t: _fold_line(splits[t[0]], lap, g1, float(g2[t[1]]), penalty, gamma, options)
    nthreads = threads or default_threads()
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            lines = list(ex.map(run, tasks))
    else:
        lines = [run(t) for t in tasks]

    # errs[v, k, i]: fold v, lambda2 index k, lambda1 index i
    errs = np.empty((V, g2.size, g1.size))
    for (v, k), line in zip(tasks, lines):
        errs[v, k] = line
    mean = errs.mean(axis=0)
    se = errs.std(axis=0, ddof=1) / np.sqrt(V)

    best_val = mean.min()
    tied = np.argwhere(mean <= best_val * (1 + 1e-12) + 1e-300)
    # larger lambda1 = smaller index in descending g1; then larger lambda2
    k, i = min(tied, key=lambda ki: (ki[1], -ki[0]))
    grid = [(float(a), float(b)) for b in g2 for a in g1]
    return CvResult(grid=grid, cv_errors=mean.ravel(), se=se.ravel(),
                    best=(float(g1[i]), float(g2[k])), fold_assignment=folds, seed=seed,
                    fold_errors=errs)
