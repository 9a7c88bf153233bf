"""Coordinate descent for least squares + concave penalty + Laplacian quadratic.

The criterion is::

    M(b) = ||y - X b||^2 / (2n) + sum_j rho(|b_j|) + (lambda2 / 2) b' L b

Each coordinate step minimizes ``M`` exactly in ``b_j`` with the others
fixed, so the objective never increases. With ``c_j = x_j'x_j / n`` the
step solves ``argmin (v_j/2) b^2 - z_j b + rho(|b|)`` where::

    v_j = c_j + lambda2 L_jj
    z_j = x_j'r / n + c_j b_j - lambda2 sum_{k != j} L_jk b_k

and ``r`` is the current residual, updated in place.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from numba import njit

from .errors import NumericalError, ValidationError
from .laplacian import Laplacian
from .penalty import (
    PenaltyConfig,
    _penalty_derivative,
    _penalty_value,
    _univariate_minimize,
)

NONUNIQUE_EIG = 1e-12


@dataclass(frozen=True)
class SlsHyperparams:
    lambda1: float
    lambda2: float = 0.0
    penalty: str = "mcp"
    gamma: float = 3.0

    def __post_init__(self):
        if not self.lambda2 >= 0:
            raise ValidationError("lambda2 must be nonnegative")
        self.penalty_config  # validates the rest

    @property
    def penalty_config(self) -> PenaltyConfig:
        return PenaltyConfig(self.penalty, self.lambda1, self.gamma)


@dataclass(frozen=True)
class FitOptions:
    max_iter: int = 10_000
    tol: float = 1e-7
    kkt_tol: float = 1e-6
    init: np.ndarray | None = None
    trace: bool = False


@dataclass
class SlsFit:
    beta: np.ndarray
    hyper: SlsHyperparams
    iterations: int
    converged: bool
    objective: float
    kkt_residual: float
    possibly_nonunique: bool = False
    trace: np.ndarray | None = field(default=None, repr=False)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.beta)


@dataclass
class SlsPath:
    lambda1_grid: np.ndarray
    lambda2: float
    penalty: str
    gamma: float
    fits: list[SlsFit]

    @property
    def coefs(self) -> np.ndarray:
        """Coefficients as a ``(len(grid), p)`` array."""
        return np.array([f.beta for f in self.fits])


@njit(cache=True, nogil=True)
def _max_score(X, y, n_scale):
    # same summation order as _sweep, so lambda1 == lambda_max gives exact zeros
    n, p = X.shape
    best = 0.0
    for j in range(p):
        g = 0.0
        for i in range(n):
            g += X[i, j] * y[i]
        g = abs(g / n_scale)
        if g > best:
            best = g
    return best


# ---------------------------------------------------------------------------
# compiled kernel


@njit(cache=True, nogil=True)
def _row_offdiag(Lptr, Lind, Ldat, beta, j):
    s = 0.0
    for t in range(Lptr[j], Lptr[j + 1]):
        k = Lind[t]
        if k != j:
            s += Ldat[t] * beta[k]
    return s


@njit(cache=True, nogil=True)
def _objective(X, y, n_scale, Lptr, Lind, Ldat, beta, r, lam1, lam2, gamma, kind):
    loss = 0.0
    for i in range(r.shape[0]):
        loss += r[i] * r[i]
    pen = 0.0
    quad = 0.0
    p = beta.shape[0]
    for j in range(p):
        if beta[j] != 0.0:
            pen += _penalty_value(beta[j], lam1, gamma, kind)
            for t in range(Lptr[j], Lptr[j + 1]):
                quad += beta[j] * Ldat[t] * beta[Lind[t]]
    return loss / (2.0 * n_scale) + pen + 0.5 * lam2 * quad


@njit(cache=True, nogil=True)
def _residual(X, y, beta, r):
    n, p = X.shape
    for i in range(n):
        r[i] = y[i]
    for j in range(p):
        b = beta[j]
        if b != 0.0:
            for i in range(n):
                r[i] -= X[i, j] * b


@njit(cache=True, nogil=True)
def _kkt(X, n_scale, Lptr, Lind, Ldat, beta, r, lam1, lam2, gamma, kind):
    n, p = X.shape
    worst = 0.0
    for j in range(p):
        g = 0.0
        for i in range(n):
            g += X[i, j] * r[i]
        g /= n_scale
        lb = 0.0
        for t in range(Lptr[j], Lptr[j + 1]):
            lb += Ldat[t] * beta[Lind[t]]
        g -= lam2 * lb
        if beta[j] != 0.0:
            v = abs(g - _penalty_derivative(beta[j], lam1, gamma, kind))
        else:
            v = abs(g) - lam1
        if v > worst:
            worst = v
    return worst


@njit(cache=True, nogil=True)
def _sweep(X, n_scale, colsq, Lptr, Lind, Ldat, Ldiag, beta, r, lam1, lam2, gamma, kind,
           y, trace, nt):
    n, p = X.shape
    maxdelta = 0.0
    for j in range(p):
        v = colsq[j] + lam2 * Ldiag[j]
        if v <= 0.0:
            continue
        bj = beta[j]
        g = 0.0
        for i in range(n):
            g += X[i, j] * r[i]
        z = g / n_scale + colsq[j] * bj
        if lam2 != 0.0:
            z -= lam2 * _row_offdiag(Lptr, Lind, Ldat, beta, j)
        bnew = _univariate_minimize(z, v, lam1, gamma, kind)
        d = bnew - bj
        if d != 0.0:
            for i in range(n):
                r[i] -= d * X[i, j]
            beta[j] = bnew
            if abs(d) > maxdelta:
                maxdelta = abs(d)
        if nt < trace.shape[0]:
            trace[nt] = _objective(X, y, n_scale, Lptr, Lind, Ldat, beta, r,
                                   lam1, lam2, gamma, kind)
            nt += 1
    return maxdelta, nt


@njit(cache=True, nogil=True)
def _cd(X, y, n_scale, colsq, Lptr, Lind, Ldat, Ldiag, beta, lam1, lam2, gamma, kind,
        max_iter, tol, kkt_tol, trace):
    # a quiet sweep ends the loop only if the KKT check also passes
    n, p = X.shape
    r = np.empty(n)
    _residual(X, y, beta, r)
    it = 0
    converged = False
    kkt = np.inf
    nt = 0
    while it < max_iter:
        it += 1
        maxdelta, nt = _sweep(X, n_scale, colsq, Lptr, Lind, Ldat, Ldiag, beta, r, lam1,
                              lam2, gamma, kind, y, trace, nt)
        if maxdelta <= tol:
            # refresh the residual to shed accumulated rounding before judging
            _residual(X, y, beta, r)
            kkt = _kkt(X, n_scale, Lptr, Lind, Ldat, beta, r, lam1, lam2, gamma, kind)
            if kkt <= kkt_tol:
                converged = True
                break
    if not converged:
        _residual(X, y, beta, r)
        kkt = _kkt(X, n_scale, Lptr, Lind, Ldat, beta, r, lam1, lam2, gamma, kind)
    return it, converged, kkt, nt


# ---------------------------------------------------------------------------


def _laplacian_arrays(lap, p):
    if lap is None:
        L = sp.csr_matrix((p, p))
    else:
        L = lap.L if isinstance(lap, Laplacian) else sp.csr_matrix(lap)
        if L.shape != (p, p):
            raise ValidationError(f"Laplacian is {L.shape[0]}x{L.shape[1]}, design has p={p}")
    L = sp.csr_matrix(L, dtype=float)
    L.sort_indices()
    return (L.indptr.astype(np.int64), L.indices.astype(np.int64),
            L.data.astype(float), L.diagonal().astype(float), L)


class Problem:
    """Data, scaling and Laplacian prepared once for repeated fits.

    ``data`` is any object exposing ``X``, ``y`` and ``n``; ``n`` scales the
    loss and may differ from the row count (augmented designs).
    """

    def __init__(self, data, lap=None):
        X = np.asarray(data.X, dtype=float)
        y = np.asarray(data.y, dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValidationError("X and y dimensions do not agree")
        self.X = np.asfortranarray(X)
        self.y = np.ascontiguousarray(y)
        self.n = int(getattr(data, "n", X.shape[0]))
        self.p = X.shape[1]
        self.colsq = np.einsum("ij,ij->j", X, X) / self.n
        self.Lptr, self.Lind, self.Ldat, self.Ldiag, self.L = _laplacian_arrays(lap, self.p)

    def lambda_max(self) -> float:
        return float(_max_score(self.X, self.y, float(self.n)))

    def criterion(self, b, hyper: SlsHyperparams) -> float:
        b = np.asarray(b, dtype=float)
        if b.shape != (self.p,):
            raise ValidationError(f"coefficient vector has shape {b.shape}, expected ({self.p},)")
        r = self.y - self.X @ b
        cfg = hyper.penalty_config
        pen = sum(_penalty_value(float(t), cfg.lambda1, cfg.gamma, cfg.code) for t in b if t != 0.0)
        return float(r @ r / (2 * self.n) + pen + 0.5 * hyper.lambda2 * (b @ (self.L @ b)))

    def gradient_terms(self, b) -> np.ndarray:
        """``x_j'(y - X b)/n`` for every ``j``."""
        return self.X.T @ (self.y - self.X @ b) / self.n

    def c_min(self, lambda2: float) -> float:
        M = self.X.T @ self.X / self.n + lambda2 * self.L.toarray()
        return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])

    def solve(self, hyper: SlsHyperparams, options: FitOptions | None = None,
              beta0=None) -> SlsFit:
        opts = options or FitOptions()
        cfg = hyper.penalty_config
        if beta0 is None:
            beta0 = opts.init
        beta = np.zeros(self.p) if beta0 is None else np.array(beta0, dtype=float)
        if beta.shape != (self.p,):
            raise ValidationError(f"initial vector has shape {beta.shape}, expected ({self.p},)")
        trace = np.empty(opts.max_iter * self.p if opts.trace else 0)
        it, conv, kkt, nt = _cd(
            self.X, self.y, float(self.n), self.colsq, self.Lptr, self.Lind, self.Ldat,
            self.Ldiag, beta, float(cfg.lambda1), float(hyper.lambda2), float(cfg.gamma),
            cfg.code, int(opts.max_iter), float(opts.tol), float(opts.kkt_tol), trace)
        obj = self.criterion(beta, hyper)
        if not np.isfinite(obj):
            raise NumericalError("non-finite objective; check input scaling")
        nonunique = False
        if hyper.lambda1 == 0.0:
            nonunique = self.c_min(hyper.lambda2) <= NONUNIQUE_EIG
        return SlsFit(beta=beta, hyper=hyper, iterations=int(it), converged=bool(conv),
                      objective=obj, kkt_residual=float(kkt), possibly_nonunique=nonunique,
                      trace=trace[:nt] if opts.trace else None)


def lambda_max(data) -> float:
    """Smallest ``lambda1`` at which the zero vector solves the MCP/L1 problem (``lambda2 = 0``)."""
    return Problem(data).lambda_max()


def criterion_value(data, lap, b, hyper: SlsHyperparams) -> float:
    return Problem(data, lap).criterion(b, hyper)


def fit(data, lap, hyper: SlsHyperparams, options: FitOptions | None = None, **kw) -> SlsFit:
    """Fit at a single ``(lambda1, lambda2)``.

    Keyword arguments override fields of ``options`` (``max_iter``, ``tol``,
    ``kkt_tol``, ``init``, ``trace``).
    """
    opts = replace(options or FitOptions(), **kw)
    return Problem(data, lap).solve(hyper, opts)


def fit_path(data, lap, lambda1_grid=None, lambda2: float = 0.0, penalty: str = "mcp",
             gamma: float = 3.0, options: FitOptions | None = None,
             problem: Problem | None = None) -> SlsPath:
    """Warm-started fits along a strictly descending ``lambda1`` grid."""
    prob = problem or Problem(data, lap)
    if lambda1_grid is None:
        lmax = prob.lambda_max()
        lambda1_grid = lmax * 2.0 ** -np.arange(0, 8.5, 0.5)
    grid = np.asarray(lambda1_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValidationError("lambda1 grid must be a nonempty vector")
    if np.any(np.diff(grid) >= 0):
        raise ValidationError("lambda1 grid must be strictly descending")
    opts = options or FitOptions()
    fits = []
    beta = opts.init
    for lam1 in grid:
        f = prob.solve(SlsHyperparams(float(lam1), lambda2, penalty, gamma), opts, beta0=beta)
        fits.append(f)
        beta = f.beta
    return SlsPath(lambda1_grid=grid, lambda2=float(lambda2), penalty=penalty,
                   gamma=float(gamma), fits=fits)


def kkt_check(data, lap, fit_: SlsFit) -> float:
    """Largest stationarity violation of ``fit_`` (0 means exactly stationary).

    For ``b_j != 0``: ``|g_j - rho'(b_j)|``; for ``b_j == 0``:
    ``max(0, |g_j| - lambda1)``, with ``g_j = x_j'r/n - lambda2 (L b)_j``.
    """
    prob = Problem(data, lap)
    b = np.asarray(fit_.beta, dtype=float)
    cfg = fit_.hyper.penalty_config
    g = prob.gradient_terms(b) - fit_.hyper.lambda2 * (prob.L @ b)
    worst = 0.0
    for j in range(prob.p):
        if b[j] != 0.0:
            v = abs(g[j] - _penalty_derivative(b[j], cfg.lambda1, cfg.gamma, cfg.code))
        else:
            v = abs(g[j]) - cfg.lambda1
        worst = max(worst, v)
    return float(worst)
