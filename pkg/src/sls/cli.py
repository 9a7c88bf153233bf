"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or arguments, 2 numerical failure.
The worker count defaults to ``$SLS_THREADS`` (or 1) and is capped by
``--threads``.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import io
from .dataset import coefficients_to_original_scale, load_csv, standardize
from .errors import NumericalError, ValidationError
from .graph import AdjacencyScheme, build_adjacency, correlations
from .laplacian import build_laplacian
from .oracle import SupportSet, diagnose
from .sim import load_study_config, run_study
from .solver import FitOptions, SlsHyperparams, fit, fit_path
from .tuning import cv_select, default_grid

log = logging.getLogger("sls")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _add_data_args(sp):
    sp.add_argument("--input", required=True, help="CSV file with response and predictors")
    sp.add_argument("--response", default="0",
                    help="response column name or 0-based index (default 0)")
    sp.add_argument("--no-header", action="store_true", help="CSV has no header row")


def _add_graph_args(sp, default_scheme="n1"):
    sp.add_argument("--scheme", default=default_scheme,
                    choices=["n1", "n2", "n3", "n4", "none"],
                    help="adjacency scheme built from the data ('none' drops the Laplacian)")
    sp.add_argument("--cutoff", type=float, help="normal-scale cutoff c for n1/n2")
    sp.add_argument("--threshold", type=float, help="correlation threshold r for n1/n2")
    sp.add_argument("--alpha", type=float, default=6.0, help="exponent for n3/n4")
    sp.add_argument("--normalized", action="store_true", help="use the normalized Laplacian")
    sp.add_argument("--adjacency", help="read adjacency edges from this file instead")


def _add_penalty_args(sp):
    sp.add_argument("--penalty", default="mcp", choices=["mcp", "scad", "l1"])
    sp.add_argument("--gamma", type=float, default=3.0)
    sp.add_argument("--max-iter", type=int, default=10_000)
    sp.add_argument("--tol", type=float, default=1e-7)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sls", description="Sparse Laplacian shrinkage regression")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("graph", help="build adjacency/Laplacian from a CSV")
    _add_data_args(g)
    _add_graph_args(g)
    g.add_argument("--output", required=True, help="adjacency edge list")
    g.add_argument("--laplacian-out", help="also write the Laplacian")

    f = sub.add_parser("fit", help="single fit at (lambda1, lambda2)")
    _add_data_args(f)
    _add_graph_args(f)
    _add_penalty_args(f)
    f.add_argument("--lambda1", type=float, required=True)
    f.add_argument("--lambda2", type=float, default=0.0)
    f.add_argument("--output", help="JSON output (default stdout)")

    pa = sub.add_parser("path", help="warm-started lambda1 path at fixed lambda2")
    _add_data_args(pa)
    _add_graph_args(pa)
    _add_penalty_args(pa)
    pa.add_argument("--lambda2", type=float, default=0.0)
    pa.add_argument("--lambda1-grid", type=float, nargs="+",
                    help="descending lambda1 values (default lambda_max * 2^{0..-8})")
    pa.add_argument("--output", help="TSV output: lambda1, df, objective, coefficients")

    c = sub.add_parser("cv", help="V-fold cross-validation, then refit at the best pair")
    _add_data_args(c)
    _add_graph_args(c)
    _add_penalty_args(c)
    c.add_argument("--folds", type=int, default=5)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--threads", type=int)
    c.add_argument("--output", help="JSON fit at the selected pair (default stdout)")
    c.add_argument("--surface", help="TSV of the full cv-error surface")

    d = sub.add_parser("diagnose", help="oracle estimator and bias diagnostics")
    _add_data_args(d)
    _add_graph_args(d)
    d.add_argument("--support", required=True, help="file of 0-based support indices")
    d.add_argument("--lambda2", type=float, required=True)
    d.add_argument("--lambda1", type=float, help="evaluate the sufficient conditions at this lambda1")
    d.add_argument("--gamma", type=float, default=3.0)
    d.add_argument("--sigma", type=float, help="noise level (default: residual estimate)")
    d.add_argument("--eps", type=float, default=0.1)
    d.add_argument("--output", help="JSON output (default stdout)")

    s = sub.add_parser("simulate", help="run a simulation study from a TOML/JSON file")
    s.add_argument("--config", required=True)
    s.add_argument("--output", help="summary TSV of median metrics per method (default stdout)")
    s.add_argument("--replicates-out", help="per-replicate TSV")
    s.add_argument("--threads", type=int)
    return p


def _load(args):
    raw = load_csv(args.input, has_header=not args.no_header, response_column=args.response)
    return standardize(raw)


def _laplacian(args, ds):
    if args.adjacency:
        adj = io.read_adjacency(args.adjacency, p=ds.p)
    elif args.scheme == "none":
        return None, None
    else:
        scheme = AdjacencyScheme(args.scheme, cutoff=args.cutoff, threshold=args.threshold,
                                 alpha=args.alpha)
        adj = build_adjacency(correlations(ds), scheme, n=ds.n)
    return adj, build_laplacian(adj, normalized=args.normalized)


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _cmd_graph(args):
    ds = _load(args)
    if args.scheme == "none" and not args.adjacency:
        raise ValidationError("graph needs an adjacency scheme other than 'none'")
    adj, lap = _laplacian(args, ds)
    io.write_adjacency(adj, args.output)
    if args.laplacian_out:
        io.write_laplacian(lap, args.laplacian_out)
    log.info("wrote %d edges", adj.nnz // 2)


def _cmd_fit(args):
    ds = _load(args)
    _, lap = _laplacian(args, ds)
    hyper = SlsHyperparams(args.lambda1, args.lambda2, args.penalty, args.gamma)
    res = fit(ds, lap, hyper, FitOptions(max_iter=args.max_iter, tol=args.tol))
    _emit(io.dump_json(io.fit_to_dict(res, ds)), args.output)


def _cmd_path(args):
    ds = _load(args)
    _, lap = _laplacian(args, ds)
    grid = args.lambda1_grid or default_grid(ds)[0]
    path = fit_path(ds, lap, grid, args.lambda2, args.penalty, args.gamma,
                    FitOptions(max_iter=args.max_iter, tol=args.tol))
    names = list(ds.column_names)
    lines = ["lambda1\tdf\tobjective\tconverged\t" + "\t".join(names)]
    for lam, f in zip(path.lambda1_grid, path.fits):
        _, coefs = coefficients_to_original_scale(f.beta, ds)
        lines.append(f"{lam:.17g}\t{len(f.support)}\t{f.objective:.17g}\t{int(f.converged)}\t"
                     + "\t".join(f"{c:.17g}" for c in coefs))
    _emit("\n".join(lines), args.output)


def _cmd_cv(args):
    ds = _load(args)
    _, lap = _laplacian(args, ds)
    g1, g2 = default_grid(ds)
    if lap is None:
        g2 = np.array([0.0])
    opts = FitOptions(max_iter=args.max_iter, tol=args.tol)
    cv = cv_select(ds, lap, g1, g2, V=args.folds, penalty=args.penalty, gamma=args.gamma,
                   seed=args.seed, options=opts, threads=args.threads)
    lam1, lam2 = cv.best
    # refit down the path to the selected lambda1, as in the folds
    path = fit_path(ds, lap, g1[g1 >= lam1], lam2, args.penalty, args.gamma, opts)
    out = io.fit_to_dict(path.fits[-1], ds)
    out["cv"] = {"best": {"lambda1": lam1, "lambda2": lam2}, "folds": args.folds,
                 "seed": args.seed, "min_cv_error": float(cv.cv_errors.min())}
    if args.surface:
        _emit(cv.surface_tsv(), args.surface)
    print(f"best lambda1={lam1:.6g} lambda2={lam2:.6g}", file=sys.stderr)
    _emit(io.dump_json(out), args.output)


def _cmd_diagnose(args):
    ds = _load(args)
    _, lap = _laplacian(args, ds)
    support = SupportSet(tuple(io.read_support(args.support, ds.p)), ds.p)
    kw = {}
    if args.lambda1 is not None:
        sigma = args.sigma
        if sigma is None:
            # residual scale of the unpenalized fit on the support
            from .oracle import oracle_estimator
            b = oracle_estimator(ds, lap, support, args.lambda2)
            dof = max(ds.n - support.d_o, 1)
            sigma = float(np.linalg.norm(ds.y - ds.X @ b) / np.sqrt(dof))
        kw = dict(lambda1=args.lambda1, gamma=args.gamma, sigma=sigma, eps=args.eps)
    rep = diagnose(ds, lap, support, args.lambda2, **kw)
    _emit(io.dump_json(rep.to_dict()), args.output)


def _cmd_simulate(args):
    cfg, methods = load_study_config(args.config)
    rows, reps = [], []
    for m in methods:
        res = run_study(cfg, m, threads=args.threads)
        head, row = res.table_tsv().splitlines()
        rows.append(row)
        rep_head, *rep_rows = res.replicates_tsv().splitlines()
        reps += [f"{m.name}\t{r}" for r in rep_rows]
    _emit("\n".join([head] + rows), args.output)
    if args.replicates_out:
        _emit("\n".join([f"method\t{rep_head}"] + reps), args.replicates_out)


COMMANDS = {
    "graph": _cmd_graph,
    "fit": _cmd_fit,
    "path": _cmd_path,
    "cv": _cmd_cv,
    "diagnose": _cmd_diagnose,
    "simulate": _cmd_simulate,
}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
