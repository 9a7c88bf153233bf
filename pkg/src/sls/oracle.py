"""Oracle Laplacian shrinkage estimator and bias/conditioning diagnostics.

Notation: ``O`` is the true support, ``S = X'X/n``, ``S_O(l2) = S_O + l2 L_O``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError
from .laplacian import Laplacian

INVERTIBLE_EIG = 1e-12


@dataclass(frozen=True)
class SupportSet:
    indices: tuple[int, ...]
    p: int

    def __post_init__(self):
        idx = tuple(sorted(int(j) for j in self.indices))
        if len(set(idx)) != len(idx):
            raise ValidationError("support indices must be distinct")
        if idx and (idx[0] < 0 or idx[-1] >= self.p):
            raise ValidationError(f"support indices must lie in 0..{self.p - 1}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_beta(cls, beta) -> "SupportSet":
        beta = np.asarray(beta)
        return cls(tuple(np.flatnonzero(beta)), beta.size)

    @property
    def d_o(self) -> int:
        return len(self.indices)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=int)

    @property
    def complement(self) -> np.ndarray:
        mask = np.ones(self.p, dtype=bool)
        mask[self.array] = False
        return np.flatnonzero(mask)


@dataclass
class DiagnosticsReport:
    oracle_beta: np.ndarray
    target_beta: np.ndarray
    C1: float
    C2: float
    c_min: float
    v_diag: np.ndarray
    unbiased: bool
    bias_residual: float
    lambda2: float
    support: tuple[int, ...]
    conditions: dict | None = field(default=None)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, np.ndarray):
                d[k] = v.tolist()
        return d


def _gram(ds) -> np.ndarray:
    X = np.asarray(ds.X, dtype=float)
    return X.T @ X / X.shape[0]


def _lap_dense(lap, p) -> np.ndarray:
    if lap is None:
        return np.zeros((p, p))
    return lap.toarray() if isinstance(lap, Laplacian) else np.asarray(lap, dtype=float)


def _restricted(ds, lap, support: SupportSet, lambda2):
    S = _gram(ds)
    L = _lap_dense(lap, S.shape[0])
    O = support.array
    S_O = S[np.ix_(O, O)]
    M = S_O + lambda2 * L[np.ix_(O, O)]
    if O.size:
        eig = np.linalg.eigvalsh(0.5 * (M + M.T))[0]
        if eig <= INVERTIBLE_EIG:
            raise NumericalError(
                f"restricted matrix S_O + lambda2 L_O is singular (min eigenvalue {eig:.3e})")
    return S, L, O, S_O, M


def oracle_estimator(ds, lap, support: SupportSet, lambda2: float) -> np.ndarray:
    """``(S_O + lambda2 L_O)^{-1} X_O'y/n`` on ``O``, zero elsewhere."""
    S, L, O, S_O, M = _restricted(ds, lap, support, lambda2)
    beta = np.zeros(S.shape[0])
    if O.size:
        X = np.asarray(ds.X, dtype=float)
        beta[O] = np.linalg.solve(M, X[:, O].T @ np.asarray(ds.y, dtype=float) / X.shape[0])
    return beta


def target_and_bias(ds, lap, support: SupportSet, lambda2: float, beta_true):
    """Return ``(beta_star, C1, C2)``.

    ``beta_star_O = S_O(l2)^{-1} S_O beta_O``; ``C1`` and ``C2`` bound the
    Laplacian bias on and off the support. Raises if the identity
    ``||beta_star_O - beta_O||_inf == lambda2 * C1`` fails to 1e-10.
    """
    S, L, O, S_O, M = _restricted(ds, lap, support, lambda2)
    p = S.shape[0]
    beta_true = np.asarray(beta_true, dtype=float)
    bO = beta_true[O]
    beta_star = np.zeros(p)
    if O.size == 0:
        return beta_star, 0.0, 0.0
    beta_star[O] = np.linalg.solve(M, S_O @ bO)
    L_O = L[np.ix_(O, O)]
    u = np.linalg.solve(M, L_O @ bO)
    C1 = float(np.max(np.abs(u)))
    Oc = support.complement
    if Oc.size:
        S_cO = S[np.ix_(Oc, O)] + lambda2 * L[np.ix_(Oc, O)]
        w = S_cO @ u - L[np.ix_(Oc, O)] @ bO
        C2 = float(np.max(np.abs(w)))
    else:
        C2 = 0.0
    gap = float(np.max(np.abs(beta_star[O] - bO)))
    if abs(gap - lambda2 * C1) > 1e-10 * max(1.0, gap):
        raise NumericalError(f"bias identity failed: {gap} vs {lambda2 * C1}")
    return beta_star, C1, C2


def c_min(ds, lap, lambda2: float) -> float:
    """Smallest eigenvalue of ``S + lambda2 L``."""
    S = _gram(ds)
    M = S + lambda2 * _lap_dense(lap, S.shape[0])
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])


def variance_factors(ds, lap, support: SupportSet, lambda2: float) -> np.ndarray:
    """Diagonal of ``S_O(l2)^{-1} S_O S_O(l2)^{-1}``."""
    S, L, O, S_O, M = _restricted(ds, lap, support, lambda2)
    Minv = np.linalg.inv(M)
    return np.diag(Minv @ S_O @ Minv).copy()


def mse_traces(ds, lap, support: SupportSet, lambda2: float) -> tuple[float, float]:
    """``(tr(S_O(l2)^{-1} S_O S_O(l2)^{-1}), tr(S_O^{-1}))``.

    Multiplied by ``sigma^2/n`` these are the oracle MSEs with and without
    Laplacian shrinkage when the Laplacian is unbiased.
    """
    shrunk = float(np.sum(variance_factors(ds, lap, support, lambda2)))
    plain = float(np.sum(variance_factors(ds, lap, support, 0.0)))
    return shrunk, plain


@dataclass
class TwoPredictorCase:
    r1: float
    r2: float
    r12: float
    lambda2: float
    b_L: tuple[float, float]
    b_R: tuple[float, float]
    b_ols: tuple[float, float]
    b_univ: tuple[float, float]
    b_L_inf: float
    w_L: float
    w_R: float
    c_lambda: float


def two_predictor(r1: float, r2: float, r12: float, lambda2: float) -> TwoPredictorCase:
    """Closed forms for two standardized predictors joined by one positive edge.

    ``r1 = x1'y/n``, ``r2 = x2'y/n``, ``r12 = x1'x2/n``.
    """
    if not abs(r12) < 1:
        raise ValidationError("|r12| < 1 required")
    if lambda2 < 0:
        raise ValidationError("lambda2 must be nonnegative")
    lam = lambda2
    den_L = (1 + lam) ** 2 - (r12 - lam) ** 2
    b_L = (((1 + lam) * r1 - (r12 - lam) * r2) / den_L,
           ((1 + lam) * r2 - (r12 - lam) * r1) / den_L)
    den_R = (1 + lam) ** 2 - r12 ** 2
    b_R = (((1 + lam) * r1 - r12 * r2) / den_R,
           ((1 + lam) * r2 - r12 * r1) / den_R)
    b_ols = ((r1 - r12 * r2) / (1 - r12 ** 2), (r2 - r12 * r1) / (1 - r12 ** 2))
    b_inf = (r1 + r2) / (2 * (1 + r12))
    w_L = 2 * lam / (1 - r12 + 2 * lam)
    w_R = lam / (1 + lam - r12 ** 2)
    c_lam = ((1 + lam) ** 2 - (1 + lam) * r12 ** 2) / den_R
    return TwoPredictorCase(r1, r2, r12, lam, b_L, b_R, b_ols, (r1, r2), b_inf, w_L, w_R, c_lam)


def sufficient_conditions(ds, lap, support: SupportSet, lambda2: float, lambda1: float,
                       gamma: float, sigma: float, eps: float = 0.1, beta_true=None,
                       subsets=None) -> dict:
    """Evaluate the clauses of the convex-case sufficient conditions.

    Clause (i): ``c_min(lambda2) > 1/gamma``. Clause (ii): ``lambda1`` at
    least ``lambda2*C2 + sigma*sqrt(2 log((p-d)/eps)) * max_j ||x_j||/n``.
    Clause (iii): ``min_j |beta*_j| sqrt(n/v_j) >= sigma*sqrt(2 log(d/eps))``.
    Each entry reports ``lhs``, ``rhs``, ``margin`` and ``passed`` (or
    ``applicable: False`` when the clause's threshold is undefined).
    Optional ``subsets`` are spot-checked for the extreme eigenvalues of
    ``S_B + lambda2 L_B``. Purely numerical; no probability is claimed.
    """
    if not 0 < eps < 1:
        raise ValidationError("eps must lie in (0, 1)")
    X = np.asarray(ds.X, dtype=float)
    n, p = X.shape
    d = support.d_o
    out: dict = {"lambda1": lambda1, "lambda2": lambda2, "gamma": gamma,
                 "sigma": sigma, "eps": eps}

    cm = c_min(ds, lap, lambda2)
    out["i"] = _clause(cm, 1.0 / gamma)

    if beta_true is None:
        C2 = None
        out["ii"] = {"applicable": False, "reason": "beta_true not supplied"}
    else:
        _, C1, C2 = target_and_bias(ds, lap, support, lambda2, beta_true)
        out["C1"], out["C2"] = C1, C2
    if C2 is not None:
        if p - d <= 0:
            out["ii"] = {"applicable": False, "reason": "p == d_o, log of zero"}
        else:
            xmax = float(np.max(np.linalg.norm(X, axis=0))) / n
            rhs = lambda2 * C2 + sigma * math.sqrt(2 * math.log((p - d) / eps)) * xmax
            out["ii"] = _clause(lambda1, rhs, strict=False)

    if beta_true is None or d == 0:
        out["iii"] = {"applicable": False,
                      "reason": "beta_true not supplied" if beta_true is None else "empty support"}
    else:
        beta_star, _, _ = target_and_bias(ds, lap, support, lambda2, beta_true)
        v = variance_factors(ds, lap, support, lambda2)
        lhs = float(np.min(np.abs(beta_star[support.array]) * np.sqrt(n / v)))
        rhs = sigma * math.sqrt(2 * math.log(d / eps))
        out["iii"] = _clause(lhs, rhs, strict=False)

    if subsets:
        S = _gram(ds)
        L = _lap_dense(lap, p)
        checks = []
        for B in subsets:
            B = np.asarray(sorted(B), dtype=int)
            w = np.linalg.eigvalsh(S[np.ix_(B, B)] + lambda2 * L[np.ix_(B, B)])
            checks.append({"subset": B.tolist(), "c_lower": float(w[0]), "c_upper": float(w[-1])})
        out["src_spot_check"] = checks
    return out


def _clause(lhs, rhs, strict=True) -> dict:
    passed = lhs > rhs if strict else lhs >= rhs
    return {"applicable": True, "lhs": float(lhs), "rhs": float(rhs),
            "margin": float(lhs - rhs), "passed": bool(passed)}


def diagnose(ds, lap, support: SupportSet, lambda2: float, beta_true=None,
             tol: float = 1e-8, **condition_kw) -> DiagnosticsReport:
    """Bundle the oracle estimator, target, bias constants and conditioning.

    Without ``beta_true`` the oracle estimate stands in for it.
    """
    oracle_beta = oracle_estimator(ds, lap, support, lambda2)
    ref = oracle_beta if beta_true is None else np.asarray(beta_true, dtype=float)
    target, C1, C2 = target_and_bias(ds, lap, support, lambda2, ref)
    v = variance_factors(ds, lap, support, lambda2)
    if support.d_o and lap is not None:
        O = support.array
        resid = _lap_dense(lap, support.p)[np.ix_(O, O)] @ ref[O]
        bias_res = float(np.max(np.abs(resid)))
    else:
        bias_res = 0.0
    conditions = None
    if condition_kw:
        conditions = sufficient_conditions(ds, lap, support, lambda2, beta_true=ref, **condition_kw)
    return DiagnosticsReport(
        oracle_beta=oracle_beta, target_beta=target, C1=C1, C2=C2,
        c_min=c_min(ds, lap, lambda2), v_diag=v, unbiased=bias_res <= tol,
        bias_residual=bias_res, lambda2=float(lambda2), support=support.indices,
        conditions=conditions)
