"""Graph Laplacians and the quantities derived from them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

from .errors import NumericalError, ValidationError
from .graph import AdjacencyMatrix

EIG_CLAMP = 1e-10


@dataclass(frozen=True)
class Laplacian:
    L: sp.csr_matrix
    normalized: bool = False

    @property
    def p(self) -> int:
        return self.L.shape[0]

    def toarray(self) -> np.ndarray:
        return self.L.toarray()

    def submatrix(self, rows, cols=None) -> np.ndarray:
        rows = np.asarray(rows, dtype=int)
        cols = rows if cols is None else np.asarray(cols, dtype=int)
        return self.L[rows][:, cols].toarray()


def zero_laplacian(p: int) -> Laplacian:
    return Laplacian(sp.csr_matrix((p, p)))


def build_laplacian(adj: AdjacencyMatrix, normalized: bool = False) -> Laplacian:
    """``D - A`` with signed ``A``, or ``I - D^{-1/2} A D^{-1/2}``.

    In the normalized form isolated vertices get an all-zero row, so they
    are never shrunk by the Laplacian term.
    """
    A = adj.signed()
    d = adj.degrees
    if not normalized:
        L = sp.diags(d) - A
    else:
        inv_sqrt = np.zeros_like(d)
        conn = d > 0
        inv_sqrt[conn] = 1.0 / np.sqrt(d[conn])
        Dm = sp.diags(inv_sqrt)
        L = sp.diags(conn.astype(float)) - Dm @ A @ Dm
    L = sp.csr_matrix(L)
    L.eliminate_zeros()
    L.sort_indices()
    return Laplacian(L, normalized=normalized)


def laplacian_quadratic(lap: Laplacian, b) -> float:
    b = np.asarray(b, dtype=float)
    if b.shape != (lap.p,):
        raise ValidationError(f"vector has shape {b.shape}, expected ({lap.p},)")
    return float(b @ (lap.L @ b))


def pairwise_quadratic(adj: AdjacencyMatrix, b) -> float:
    """``sum_{j<k} |a_jk| (b_j - s_jk b_k)**2`` evaluated edge by edge."""
    b = np.asarray(b, dtype=float)
    coo = sp.triu(adj.weights, k=1).tocoo()
    s = np.asarray(adj.signs[coo.row, coo.col]).ravel()
    return float(np.sum(coo.data * (b[coo.row] - s * b[coo.col]) ** 2))


def connected_components(adj: AdjacencyMatrix) -> list[list[int]]:
    """Vertex sets of the connected components, ordered by smallest member."""
    _, labels = _cc(adj.weights, directed=False)
    groups: dict[int, list[int]] = {}
    for j, g in enumerate(labels):
        groups.setdefault(int(g), []).append(j)
    return sorted(groups.values(), key=lambda g: g[0])


def is_unbiased(lap: Laplacian, support, beta, tol: float = 1e-8) -> tuple[bool, float]:
    """Check ``L_O beta_O == 0``; returns the flag and ``||L_O beta_O||_inf``."""
    O = np.asarray(sorted(support), dtype=int)
    if O.size == 0:
        raise ValidationError("support must be nonempty")
    beta = np.asarray(beta, dtype=float)
    resid = lap.submatrix(O) @ beta[O]
    r = float(np.max(np.abs(resid))) if resid.size else 0.0
    return r <= tol, r


def psd_sqrt(M: np.ndarray, tol: float = EIG_CLAMP) -> np.ndarray:
    """Symmetric square root of a PSD matrix via eigen-decomposition."""
    M = 0.5 * (M + M.T)
    w, V = np.linalg.eigh(M)
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    if w.size and w.min() < -tol * scale:
        raise NumericalError(
            f"matrix is not positive semi-definite (min eigenvalue {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.T


@dataclass(frozen=True)
class AugmentedData:
    """Stacked design with ``X'X/n + lambda2 L == X_aug'X_aug/n`` and ``X_aug'y_aug == X'y``.

    ``n`` is the original sample size; it, not the row count, scales the loss.
    """

    X: np.ndarray
    y: np.ndarray
    n: int
    lambda2: float

    @property
    def p(self) -> int:
        return self.X.shape[1]


def augment(ds, lap: Laplacian, lambda2: float) -> AugmentedData:
    if lambda2 < 0:
        raise ValidationError("lambda2 must be nonnegative")
    n, p = ds.X.shape
    if lap.p != p:
        raise ValidationError(f"Laplacian is {lap.p}x{lap.p}, design has p={p}")
    bottom = psd_sqrt(n * lambda2 * lap.toarray())
    X_aug = np.vstack([ds.X, bottom])
    y_aug = np.concatenate([ds.y, np.zeros(p)])
    return AugmentedData(X=X_aug, y=y_aug, n=n, lambda2=float(lambda2))
