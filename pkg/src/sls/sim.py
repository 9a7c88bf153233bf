"""Simulation harness: clustered Gaussian designs, sparse coefficients, replicate loop.

Every replicate draws its random streams from ``(seed, replicate, stream)``
so results do not depend on execution order or thread count.
"""

from __future__ import annotations

import json
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import standardize_arrays, coefficients_to_original_scale
from .errors import SlsError, ValidationError
from .graph import AdjacencyScheme, build_adjacency, correlations
from .laplacian import build_laplacian, is_unbiased, zero_laplacian
from .oracle import SupportSet
from .solver import Problem, SlsHyperparams
from .tuning import cv_select, default_grid, default_threads

log = logging.getLogger(__name__)

_DESIGN, _COEF, _NOISE, _TEST_DESIGN, _TEST_NOISE, _CV = range(6)


@dataclass(frozen=True)
class SimConfig:
    n: int = 100
    p: int = 500
    cluster_size: int = 5
    n_nonzero_clusters: int = 5
    structure: str = "I"
    rho: float = 0.5
    coef_scenario: tuple = ("equal", 0.5)
    sigma: float = 1.0
    n_replicates: int = 50
    n_test: int = 100
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "coef_scenario", tuple(self.coef_scenario))
        if self.structure not in ("I", "II"):
            raise ValidationError("structure must be 'I' or 'II'")
        if not 0 <= self.rho < 1:
            raise ValidationError("rho must lie in [0, 1)")
        if self.cluster_size < 1 or self.p % self.cluster_size:
            raise ValidationError("p must be divisible by cluster_size")
        if self.n_nonzero_clusters * self.cluster_size > self.p:
            raise ValidationError("more nonzero coefficients than predictors")
        if self.n < 2 or self.n_test < 1 or self.n_replicates < 1:
            raise ValidationError("n >= 2, n_test >= 1 and n_replicates >= 1 required")
        if self.sigma < 0:
            raise ValidationError("sigma must be nonnegative")
        kind = self.coef_scenario[0]
        if kind == "equal" and len(self.coef_scenario) == 2:
            pass
        elif kind == "uniform" and len(self.coef_scenario) == 3:
            if self.coef_scenario[1] > self.coef_scenario[2]:
                raise ValidationError("uniform scenario needs lo <= hi")
        else:
            raise ValidationError("coef_scenario must be ('equal', v) or ('uniform', lo, hi)")

    @property
    def n_nonzero(self) -> int:
        return self.n_nonzero_clusters * self.cluster_size

    @property
    def clusters(self) -> list[list[int]]:
        c = self.cluster_size
        return [list(range(g * c, (g + 1) * c)) for g in range(self.p // c)]


@dataclass(frozen=True)
class MethodSpec:
    """How a replicate is analysed.

    ``scheme=None`` means no Laplacian (plain penalized regression).
    """

    name: str = "SLS"
    penalty: str = "mcp"
    gamma: float = 3.0
    scheme: AdjacencyScheme | None = field(default_factory=lambda: AdjacencyScheme("n1"))
    normalized: bool = False
    folds: int = 5
    lambda1_grid_exponents: tuple | None = None
    lambda2_grid: tuple | None = None


@dataclass
class ReplicateMetrics:
    positives: int
    true_positives: int
    pmse: float
    replicate: int = -1
    lambda1: float = float("nan")
    lambda2: float = float("nan")
    unbiased_residual: float | None = None


def _rng(seed: int, replicate: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(replicate), int(stream)])


def _ar1_columns(Z, rho, starts):
    # lower bidiagonal Cholesky recursion x_k = rho x_{k-1} + sqrt(1-rho^2) e_k
    X = np.empty_like(Z)
    c = np.sqrt(1.0 - rho * rho)
    for j in range(Z.shape[1]):
        if starts[j]:
            X[:, j] = Z[:, j]
        else:
            X[:, j] = rho * X[:, j - 1] + c * Z[:, j]
    return X


def generate_design(cfg: SimConfig, replicate_seed, n_rows: int | None = None) -> np.ndarray:
    """Gaussian rows with block-AR(1) (structure I) or AR(1) (structure II) covariance.

    ``replicate_seed`` is an int or a ``numpy.random.Generator``.
    """
    rng = (replicate_seed if isinstance(replicate_seed, np.random.Generator)
           else np.random.default_rng(replicate_seed))
    n = cfg.n if n_rows is None else n_rows
    Z = rng.standard_normal((n, cfg.p))
    starts = np.zeros(cfg.p, dtype=bool)
    starts[0] = True
    if cfg.structure == "I":
        starts[::cfg.cluster_size] = True
    X = _ar1_columns(Z, cfg.rho, starts)
    if not np.all(np.isfinite(X)):
        raise SlsError("design generation produced non-finite values")
    return X


def ar1_covariance(cfg: SimConfig) -> np.ndarray:
    idx = np.arange(cfg.p)
    C = cfg.rho ** np.abs(idx[:, None] - idx[None, :])
    if cfg.structure == "I":
        g = idx // cfg.cluster_size
        C = np.where(g[:, None] == g[None, :], C, 0.0)
    return C


def make_coefficients(cfg: SimConfig, replicate_seed):
    rng = (replicate_seed if isinstance(replicate_seed, np.random.Generator)
           else np.random.default_rng(replicate_seed))
    beta = np.zeros(cfg.p)
    k = cfg.n_nonzero
    if cfg.coef_scenario[0] == "equal":
        beta[:k] = cfg.coef_scenario[1]
    else:
        beta[:k] = rng.uniform(cfg.coef_scenario[1], cfg.coef_scenario[2], size=k)
    return beta, SupportSet(tuple(range(k)), cfg.p)


def generate_response(X, beta, sigma: float, seed) -> np.ndarray:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    X = np.asarray(X, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if X.shape[1] != beta.shape[0]:
        raise ValidationError("X and beta dimensions do not agree")
    return X @ beta + sigma * rng.standard_normal(X.shape[0])


def evaluate(coef, beta_true, test_X, test_y, intercept: float = 0.0) -> ReplicateMetrics:
    """Selection counts and test-set prediction error for original-scale coefficients."""
    coef = np.asarray(coef, dtype=float)
    beta_true = np.asarray(beta_true, dtype=float)
    if coef.shape != beta_true.shape or test_X.shape[1] != coef.shape[0]:
        raise ValidationError("dimension mismatch in evaluate")
    sel = coef != 0
    pred = intercept + test_X @ coef
    return ReplicateMetrics(
        positives=int(sel.sum()),
        true_positives=int(np.sum(sel & (beta_true != 0))),
        pmse=float(np.mean((np.asarray(test_y) - pred) ** 2)),
    )


def simulate_replicate(cfg: SimConfig, replicate: int):
    """Training design/response, test design/response and coefficients for one replicate."""
    X = generate_design(cfg, _rng(cfg.seed, replicate, _DESIGN))
    beta, support = make_coefficients(cfg, _rng(cfg.seed, replicate, _COEF))
    y = generate_response(X, beta, cfg.sigma, _rng(cfg.seed, replicate, _NOISE))
    Xt = generate_design(cfg, _rng(cfg.seed, replicate, _TEST_DESIGN), n_rows=cfg.n_test)
    yt = generate_response(Xt, beta, cfg.sigma, _rng(cfg.seed, replicate, _TEST_NOISE))
    return X, y, Xt, yt, beta, support


def method_laplacian(ds, method: MethodSpec, cfg: SimConfig | None = None):
    if method.scheme is None:
        return None, None
    adj = build_adjacency(correlations(ds), method.scheme, n=ds.n)
    return adj, build_laplacian(adj, normalized=method.normalized)


def run_replicate(cfg: SimConfig, method: MethodSpec, replicate: int) -> ReplicateMetrics:
    X, y, Xt, yt, beta, support = simulate_replicate(cfg, replicate)
    ds = standardize_arrays(X, y)
    adj, lap = method_laplacian(ds, method)

    unb = None
    if lap is not None and support.d_o and method.scheme.kind in ("n1", "n3"):
        # positive-sign schemes: the graph restricted to equal coefficients is unbiased
        if cfg.coef_scenario[0] == "equal":
            restricted = build_laplacian(adj.restrict(support.array), method.normalized)
            ok, unb = is_unbiased(restricted, support.indices, beta, tol=1e-10)
            assert ok, f"restricted Laplacian not unbiased (residual {unb})"

    g1, g2 = default_grid(ds)
    if method.lambda1_grid_exponents is not None:
        g1 = g1[0] * 2.0 ** np.asarray(method.lambda1_grid_exponents, dtype=float)
    if lap is None:
        g2 = np.array([0.0])
    elif method.lambda2_grid is not None:
        g2 = np.asarray(method.lambda2_grid, dtype=float)
    cv = cv_select(ds, lap, g1, g2, V=method.folds, penalty=method.penalty,
                   gamma=method.gamma, seed=int(_rng(cfg.seed, replicate, _CV).integers(2**31)),
                   threads=1)
    lam1, lam2 = cv.best
    prob = Problem(ds, lap)
    # refit along the lambda1 path down to the chosen value, mirroring the CV warm starts
    beta_hat = None
    for a in g1[g1 >= lam1]:
        beta_hat = prob.solve(SlsHyperparams(float(a), lam2, method.penalty, method.gamma),
                              beta0=beta_hat).beta
    intercept, coef = coefficients_to_original_scale(beta_hat, ds)
    m = evaluate(coef, beta, Xt, yt, intercept)
    m.replicate, m.lambda1, m.lambda2, m.unbiased_residual = replicate, lam1, lam2, unb
    return m


@dataclass
class StudyResult:
    config: SimConfig
    method: MethodSpec
    replicates: list[ReplicateMetrics]
    failed: list[tuple[int, str]]

    @property
    def medians(self) -> dict:
        if not self.replicates:
            return {"positives": float("nan"), "true_positives": float("nan"),
                    "pmse_x100": float("nan")}
        return {
            "positives": float(np.median([m.positives for m in self.replicates])),
            "true_positives": float(np.median([m.true_positives for m in self.replicates])),
            "pmse_x100": float(np.median([m.pmse for m in self.replicates]) * 100),
        }

    def table_tsv(self) -> str:
        md = self.medians
        head = "method\tstructure\trho\tcoefficients\tpositives\ttrue_positives\tpmse_x100"
        coef = ":".join(str(c) for c in self.config.coef_scenario)
        row = (f"{self.method.name}\t{self.config.structure}\t{self.config.rho:g}\t{coef}\t"
               f"{md['positives']:g}\t{md['true_positives']:g}\t{md['pmse_x100']:.2f}")
        return head + "\n" + row + "\n"

    def replicates_tsv(self) -> str:
        lines = ["replicate\tpositives\ttrue_positives\tpmse\tlambda1\tlambda2"]
        for m in self.replicates:
            lines.append(f"{m.replicate}\t{m.positives}\t{m.true_positives}\t{m.pmse:.17g}\t"
                         f"{m.lambda1:.17g}\t{m.lambda2:.17g}")
        return "\n".join(lines) + "\n"


def run_study(cfg: SimConfig, method: MethodSpec, threads: int | None = None) -> StudyResult:
    """Run every replicate; failures are logged, warned about and excluded."""

    def one(r):
        try:
            return run_replicate(cfg, method, r), None
        except (SlsError, np.linalg.LinAlgError) as exc:
            return None, (r, repr(exc))

    nthreads = threads or default_threads()
    reps = range(cfg.n_replicates)
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            results = list(ex.map(one, reps))
    else:
        results = [one(r) for r in reps]
    ok = [m for m, err in results if m is not None]
    failed = [err for m, err in results if err is not None]
    for r, msg in failed:
        log.warning("replicate %d failed: %s", r, msg)
        warnings.warn(f"replicate {r} failed and was excluded: {msg}", RuntimeWarning)
    return StudyResult(cfg, method, ok, failed)


def load_study_config(path):
    """Read a study file (TOML or JSON) into ``(SimConfig, [MethodSpec, ...])``.

    Layout: a ``[config]`` table with :class:`SimConfig` fields and one or
    more ``[[method]]`` tables with :class:`MethodSpec` fields, where the
    adjacency scheme is given as ``scheme = "n1"`` (or ``"none"``) plus
    optional ``cutoff``, ``threshold``, ``alpha``.
    """
    path = str(path)
    try:
        if path.endswith(".json"):
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        else:
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}") from None
    except ValueError as exc:
        raise ValidationError(f"cannot parse {path}: {exc}") from None

    known = set(SimConfig.__dataclass_fields__)
    cfg_raw = dict(raw.get("config", {}))
    unknown = set(cfg_raw) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    try:
        cfg = SimConfig(**cfg_raw)
    except TypeError as exc:
        raise ValidationError(str(exc)) from None

    methods = []
    for m in raw.get("method", [{}]):
        m = dict(m)
        kind = m.pop("scheme", "n1")
        scheme_kw = {k: m.pop(k) for k in ("cutoff", "threshold", "alpha") if k in m}
        unknown = set(m) - set(MethodSpec.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown method keys: {sorted(unknown)}")
        for k in ("lambda1_grid_exponents", "lambda2_grid"):
            if k in m:
                m[k] = tuple(m[k])
        scheme = None if kind in (None, "none") else AdjacencyScheme(kind, **scheme_kw)
        methods.append(MethodSpec(scheme=scheme, **m))
    return cfg, methods


def config_to_dict(cfg: SimConfig) -> dict:
    d = asdict(cfg)
    d["coef_scenario"] = list(cfg.coef_scenario)
    return d
