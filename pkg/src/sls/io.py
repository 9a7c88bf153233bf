"""Text and JSON formats: coordinate-list graphs, fit summaries, support files."""

from __future__ import annotations

import json

import numpy as np
import scipy.sparse as sp

from .dataset import coefficients_to_original_scale
from .errors import ValidationError
from .graph import AdjacencyMatrix, adjacency_from_edges
from .laplacian import Laplacian


def write_adjacency(adj: AdjacencyMatrix, path) -> None:
    """One ``j k weight sign`` line per undirected edge, 0-based, ``j < k``."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# p={adj.p}\n")
        for j, k, w, s in adj.edges():
            fh.write(f"{j} {k} {w:.17g} {s}\n")


def read_adjacency(path, p: int | None = None) -> AdjacencyMatrix:
    edges = []
    header_p = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line[1:].strip().startswith("p="):
                    header_p = int(line[1:].strip()[2:])
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValidationError(f"{path}:{lineno}: expected 'j k weight sign'")
            try:
                edges.append((int(parts[0]), int(parts[1]), float(parts[2]), int(parts[3])))
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: malformed edge line") from None
    if p is None:
        p = header_p
    if p is None:
        p = 1 + max((max(j, k) for j, k, _, _ in edges), default=-1)
    return adjacency_from_edges(edges, p)


def write_laplacian(lap: Laplacian, path) -> None:
    """Upper triangle (diagonal included) as ``j k value`` lines."""
    coo = sp.triu(lap.L).tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# p={lap.p} normalized={int(lap.normalized)}\n")
        for j, k, v in sorted(zip(coo.row, coo.col, coo.data)):
            fh.write(f"{j} {k} {v:.17g}\n")


def read_laplacian(path) -> Laplacian:
    rows, cols, vals = [], [], []
    p, normalized = None, False
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    key, _, val = tok.partition("=")
                    if key == "p":
                        p = int(val)
                    elif key == "normalized":
                        normalized = bool(int(val))
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValidationError(f"{path}:{lineno}: expected 'j k value'")
            j, k, v = int(parts[0]), int(parts[1]), float(parts[2])
            rows.append(j)
            cols.append(k)
            vals.append(v)
            if j != k:
                rows.append(k)
                cols.append(j)
                vals.append(v)
    if p is None:
        p = 1 + max(rows + cols, default=-1)
    L = sp.csr_matrix((vals, (rows, cols)), shape=(p, p))
    L.sort_indices()
    return Laplacian(L, normalized=normalized)


def read_support(path, p: int) -> list[int]:
    """Whitespace- or comma-separated 0-based indices."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read().replace(",", " ")
    try:
        idx = [int(t) for t in text.split() if not t.startswith("#")]
    except ValueError:
        raise ValidationError(f"{path}: support file must hold integer indices") from None
    bad = [j for j in idx if not 0 <= j < p]
    if bad:
        raise ValidationError(f"{path}: indices out of range 0..{p - 1}: {bad[:5]}")
    return idx


def fit_to_dict(fit, ds) -> dict:
    intercept, coefs = coefficients_to_original_scale(fit.beta, ds)
    names = list(ds.column_names) if ds.column_names else [f"x{j + 1}" for j in range(ds.p)]
    support = [int(j) for j in np.flatnonzero(fit.beta)]
    return {
        "hyperparameters": {
            "lambda1": fit.hyper.lambda1,
            "lambda2": fit.hyper.lambda2,
            "penalty": fit.hyper.penalty,
            "gamma": fit.hyper.gamma,
        },
        "intercept": intercept,
        "coefficients": dict(zip(names, coefs.tolist())),
        "coefficients_standardized": fit.beta.tolist(),
        "support": support,
        "support_names": [names[j] for j in support],
        "objective": fit.objective,
        "kkt_residual": fit.kkt_residual,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "possibly_nonunique": fit.possibly_nonunique,
    }


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=False)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return text
