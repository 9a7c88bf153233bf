"""Signed adjacency matrices built from predictor correlations.

Four schemes are supported, keyed ``n1`` .. ``n4``:

* ``n1`` dissimilarity threshold: ``a_jk = 1{r_jk > r}``, all signs ``+1``
* ``n2`` signed threshold: ``a_jk = 1{|r_jk| > r}``, ``s_jk = sgn(r_jk)``
* ``n3`` power: ``|a_jk| = max(0, r_jk)**alpha``, all signs ``+1``
* ``n4`` signed power: ``|a_jk| = |r_jk|**alpha``, ``s_jk = sgn(r_jk)``

plus ``partition``, which links every pair inside a block with weight
``1/v_g`` so that the raw Laplacian is ``I - 1 1'/v_g`` on each block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError

SCHEMES = ("n1", "n2", "n3", "n4", "partition")
DEFAULT_CUTOFF = {"n1": 3.09, "n2": 3.29}
DEFAULT_ALPHA = 6.0
SPARSITY_FLOOR = 1e-8


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Edge weights ``|a_jk|`` and signs ``s_jk`` as sparse symmetric CSR matrices."""

    weights: sp.csr_matrix
    signs: sp.csr_matrix

    @property
    def p(self) -> int:
        return self.weights.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return np.asarray(self.weights.sum(axis=1)).ravel()

    @property
    def nnz(self) -> int:
        return self.weights.nnz

    def signed(self) -> sp.csr_matrix:
        """The signed adjacency ``A`` with entries ``s_jk |a_jk|``."""
        return self.weights.multiply(self.signs).tocsr()

    def edges(self):
        """Yield ``(j, k, weight, sign)`` for ``j < k``."""
        coo = sp.triu(self.weights, k=1).tocoo()
        S = self.signs.tocsr()
        for j, k, w in zip(coo.row, coo.col, coo.data):
            yield int(j), int(k), float(w), int(S[j, k])

    def restrict(self, idx) -> "AdjacencyMatrix":
        """Adjacency of the subgraph induced by ``idx`` (same ``p``, other edges removed)."""
        mask = np.zeros(self.p, dtype=bool)
        mask[np.asarray(idx, dtype=int)] = True
        D = sp.diags(mask.astype(float))
        return _make(D @ self.weights @ D, D @ self.signs @ D)


@dataclass(frozen=True)
class AdjacencyScheme:
    kind: str = "n1"
    cutoff: float | None = None      # normal-scale c for n1/n2
    threshold: float | None = None   # correlation-scale r for n1/n2; overrides cutoff
    alpha: float = DEFAULT_ALPHA     # exponent for n3/n4
    blocks: Sequence[Sequence[int]] | None = field(default=None)
    floor: float = SPARSITY_FLOOR

    def __post_init__(self):
        if self.kind not in SCHEMES:
            raise ValidationError(f"unknown adjacency scheme {self.kind!r}; choose from {SCHEMES}")
        if self.kind in ("n3", "n4") and not self.alpha > 0:
            raise ValidationError("alpha must be positive")
        if self.threshold is not None and not 0 < self.threshold < 1:
            raise ValidationError("correlation threshold must lie in (0, 1)")
        if self.cutoff is not None and not self.cutoff > 0:
            raise ValidationError("cutoff c must be positive")
        if self.kind == "partition" and self.blocks is None:
            raise ValidationError("partition scheme needs blocks")

    def correlation_threshold(self, n: int) -> float:
        if self.threshold is not None:
            return self.threshold
        c = self.cutoff if self.cutoff is not None else DEFAULT_CUTOFF[self.kind]
        return fisher_cutoff(c, n)


def correlations(ds) -> np.ndarray:
    """Pearson correlations of the standardized columns, ``X'X/n``."""
    X = ds.X
    r = X.T @ X / X.shape[0]
    r = 0.5 * (r + r.T)
    np.clip(r, -1.0, 1.0, out=r)
    np.fill_diagonal(r, 1.0)
    return r


def fisher_cutoff(c: float, n: int) -> float:
    """Correlation threshold matching a normal-scale cutoff ``c`` on ``sqrt(n-3) * atanh(r)``."""
    if n <= 3:
        raise ValidationError("fisher_cutoff needs n >= 4")
    if not c > 0:
        raise ValidationError("cutoff c must be positive")
    # (exp(2u) - 1) / (exp(2u) + 1) == tanh(u), which does not overflow
    return math.tanh(c / math.sqrt(n - 3))


def _make(weights, signs) -> AdjacencyMatrix:
    W = sp.csr_matrix(weights, dtype=float)
    W.setdiag(0.0)
    W.eliminate_zeros()
    S = sp.csr_matrix(signs, dtype=float)
    # signs live exactly on the weight support
    support = W.copy()
    support.data[:] = 1.0
    S = support.multiply(S).tocsr()
    S.data = np.where(S.data < 0, -1.0, 1.0)
    W.sort_indices()
    S.sort_indices()
    return AdjacencyMatrix(weights=W, signs=S)


def build_adjacency(corr: np.ndarray, scheme: AdjacencyScheme, n: int | None = None) -> AdjacencyMatrix:
    """Apply ``scheme`` to a correlation matrix.

    ``n`` is needed only when a threshold scheme is given its cutoff on the
    normal scale.
    """
    r = np.asarray(corr, dtype=float)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ValidationError("correlation matrix must be square")
    kind = scheme.kind
    if kind == "partition":
        return partition_adjacency(scheme.blocks, p=r.shape[0])

    if kind in ("n1", "n2"):
        if scheme.threshold is None and n is None:
            raise ValidationError("sample size n is required to convert the cutoff")
        thr = scheme.correlation_threshold(n)
        if kind == "n1":
            w = (r > thr).astype(float)
            s = np.ones_like(r)
        else:
            w = (np.abs(r) > thr).astype(float)
            s = np.sign(r)
    elif kind == "n3":
        w = np.maximum(r, 0.0) ** scheme.alpha
        w[w < scheme.floor] = 0.0
        s = np.ones_like(r)
    else:
        w = np.abs(r) ** scheme.alpha
        w[w < scheme.floor] = 0.0
        s = np.sign(r)
    np.fill_diagonal(w, 0.0)
    return _make(w, s)


def _check_blocks(blocks, p: int | None):
    flat = [int(j) for b in blocks for j in b]
    if len(flat) != len(set(flat)):
        raise ValidationError("partition blocks overlap")
    if p is None:
        p = len(flat)
    if sorted(flat) != list(range(p)):
        raise ValidationError("partition blocks do not cover 0..p-1 exactly")
    return p


def partition_adjacency(blocks: Sequence[Sequence[int]], p: int | None = None) -> AdjacencyMatrix:
    """Weight ``1/v_g`` between every pair of a block of size ``v_g``."""
    p = _check_blocks(blocks, p)
    rows, cols, vals = [], [], []
    for b in blocks:
        b = [int(j) for j in b]
        v = len(b)
        for j in b:
            for k in b:
                if j != k:
                    rows.append(j)
                    cols.append(k)
                    vals.append(1.0 / v)
    W = sp.csr_matrix((vals, (rows, cols)), shape=(p, p))
    S = sp.csr_matrix((np.ones(len(vals)), (rows, cols)), shape=(p, p))
    return _make(W, S)


def clique_adjacency(blocks: Sequence[Sequence[int]], p: int) -> AdjacencyMatrix:
    """Unit-weight positive edges between every pair inside each block.

    Blocks need not cover all indices; uncovered indices are isolated.
    """
    rows, cols = [], []
    seen = set()
    for b in blocks:
        b = [int(j) for j in b]
        if seen.intersection(b):
            raise ValidationError("blocks overlap")
        seen.update(b)
        for j in b:
            for k in b:
                if j != k:
                    rows.append(j)
                    cols.append(k)
    ones = np.ones(len(rows))
    W = sp.csr_matrix((ones, (rows, cols)), shape=(p, p))
    return _make(W, W)


def adjacency_from_edges(edges, p: int) -> AdjacencyMatrix:
    """Inverse of :meth:`AdjacencyMatrix.edges`; each undirected edge listed once."""
    rows, cols, w, s = [], [], [], []
    for j, k, weight, sign in edges:
        if j == k:
            continue
        if not (0 <= j < p and 0 <= k < p):
            raise ValidationError(f"edge ({j}, {k}) out of range for p={p}")
        if weight < 0:
            raise ValidationError(f"negative weight on edge ({j}, {k})")
        if sign not in (-1, 1):
            raise ValidationError(f"sign must be -1 or +1 on edge ({j}, {k})")
        rows += [j, k]
        cols += [k, j]
        w += [weight, weight]
        s += [sign, sign]
    W = sp.csr_matrix((w, (rows, cols)), shape=(p, p))
    S = sp.csr_matrix((s, (rows, cols)), shape=(p, p))
    return _make(W, S)
