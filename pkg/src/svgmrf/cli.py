"""Command-line driver: generate, estimate, tune, evaluate, verify-theory, benchmark.

File layouts
------------
samples      one CSV per cluster (``samples_k<k>.csv``, rows are observations)
             or a single CSV whose leading integer column is the 1-based
             cluster id.
edge lists   ``edges_k<k>.csv`` with header ``i,j,value``; 1-based indices,
             nonzeros with i <= j only.
manifests    ``key: value`` lines; nested keys dotted, sequences comma-joined.
reports      CSV tables; report commands also render a companion PNG unless
             ``--no-plots`` is given.

Exit codes
----------
0 success, 1 unexpected error, 2 configuration/usage error,
3 singular backward mapping, 4 no valid model in the grid,
5 solver failure, 6 file-format error, 7 theory checks failed.
Failures print one machine-readable line ``ERROR code=<n> kind=<kind>
detail=<message>`` to stderr.
"""

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import evaluation, fileio, plots, synthetic
from .covariance import sample_covariances, threshold_from_constant
from .errors import (FormatError, InvalidArgumentError, NoValidModelError,
                     NotPositiveDefiniteError, SingularBackwardMappingError,
                     SolverFailureError, SvgmrfError)
from .pairs import WeightGraph
from .solver import solve_svgmrf
from .tuning import DEFAULT_GRID, HyperParams, estimate_weights, tune_parameters

log = logging.getLogger("svgmrf")

EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_SINGULAR = 3
EXIT_NO_MODEL = 4
EXIT_SOLVER = 5
EXIT_FORMAT = 6
EXIT_THEORY = 7


def _parse_range(text, name):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise InvalidArgumentError(f"--{name} expects lo:hi, got {text!r}")
    return lo, hi


def _parse_counts(text):
    vals = [int(v) for v in text.split(",")]
    return vals[0] if len(vals) == 1 else tuple(vals)


def _parse_grid(text):
    """``c1=v:v:...,c2=...,c3=...`` with colon-separated values per constant."""
    grids = {}
    for part in text.split(","):
        if "=" not in part:
            raise InvalidArgumentError(
                f"--grid parts must look like c1=0.1:1:10, got {part!r}")
        key, _, vals = part.partition("=")
        key = key.strip().lower()
        if key not in ("c1", "c2", "c3"):
            raise InvalidArgumentError(f"--grid key must be c1/c2/c3, got {key!r}")
        grids[key] = [float(v) for v in vals.split(":") if v]
    out = tuple(grids.get(k, list(DEFAULT_GRID)) for k in ("c1", "c2", "c3"))
    if any(len(g) == 0 for g in out):
        raise InvalidArgumentError("--grid has an empty value list")
    return out


def _resolve_weights(choice, covs, K, q):
    if choice == "auto":
        W = estimate_weights(covs) if K >= 2 else np.zeros((1, 1))
        source = "estimate-from-data"
    else:
        W = fileio.load_weights(choice, expected_K=K)
        source = str(choice)
    return WeightGraph(K, W, q), source


def _timing_lines(meta):
    for phase, secs in meta.get("timings", {}).items():
        log.info("%s: %.3fs", phase.replace("_s", ""), secs)


def _estimate_metadata(est, weight_source, data):
    return {
        "kind": "estimate",
        "method": f"elementwise-q{est.q}",
        "q": est.q,
        "d": est.d,
        "K": est.K,
        "n": list(data.counts) if data is not None else "",
        "mu": est.mu,
        "gamma": est.gamma,
        "nu": list(est.nus),
        "weights": weight_source,
        "coordinates": est.meta["coordinates"],
        "penalize_diagonal": est.meta["penalize_diagonal"],
        "tol_kkt": est.meta["tol_kkt"],
        "kkt_max": est.meta["kkt_max"],
        "kkt_mean": est.meta["kkt_mean"],
        "workers": est.meta["workers"],
        "timing": est.meta["timings"],
    }


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_generate(args):
    cfg = synthetic.SynthConfig(
        K=args.K, d=args.d, M=args.M, n=_parse_counts(args.n), seed=args.seed,
        ba_attach=args.ba_attach, perturb_prob=args.perturb_prob,
        weight_range=_parse_range(args.weight_range, "weight-range"),
        perturb_range=_parse_range(args.perturb_range, "perturb-range"),
        diag_factor=args.diag_factor)
    t0 = time.perf_counter()
    truth, data = synthetic.generate_instance(cfg)
    log.info("generation: %.3fs", time.perf_counter() - t0)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fileio.write_edge_lists(out / "truth", truth.thetas)
    fileio.write_samples(out / "samples", data)
    manifest = {
        "kind": "ground-truth",
        "config": {
            "K": cfg.K, "d": cfg.d, "M": cfg.M, "n": list(cfg.n),
            "seed": cfg.seed, "ba_attach": cfg.ba_attach,
            "perturb_prob": cfg.perturb_prob,
            "weight_range": list(cfg.weight_range),
            "perturb_range": list(cfg.perturb_range),
            "diag_factor": cfg.diag_factor,
        },
        # parent of cluster k+1 as a 1-based id; 0 marks the root
        "tree": [p + 1 for p in truth.tree],
    }
    for k, plog in enumerate(truth.perturbations):
        if plog is None:
            continue
        manifest[f"perturb.k{k + 1}.reweighted"] = \
            ",".join(str(m + 1) for m in plog["reweighted"]) or "none"
        manifest[f"perturb.k{k + 1}.regenerated"] = plog["regenerated"] + 1
    fileio.write_manifest(out / "manifest.txt", manifest)
    log.info("wrote ground truth bundle to %s", out)
    return 0


def _load_data(args):
    data = fileio.load_samples(args.data)
    log.info("loaded %d clusters, d=%d, n=%s", data.K, data.d,
             list(data.counts))
    return data


def cmd_estimate(args):
    data = _load_data(args)
    covs = sample_covariances(data, center=args.center)
    graph, weight_source = _resolve_weights(args.weights, covs, data.K, args.q)
    params = HyperParams(
        mu=args.mu, gamma=args.gamma,
        nus=tuple(threshold_from_constant(args.nu_const, data.d, n)
                  for n in data.counts),
        q=args.q, c3=args.nu_const, d=data.d, n_min=min(data.counts))
    est = solve_svgmrf(data, graph, params, workers=args.workers,
                       penalize_diagonal=args.diag_penalty == "on",
                       tol_kkt=args.tol_kkt, center=args.center)
    _timing_lines(est.meta)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fileio.write_edge_lists(out, est.matrices)
    fileio.write_manifest(out / "run_metadata.txt",
                          _estimate_metadata(est, weight_source, data))
    log.info("wrote estimate to %s (kkt max %.2e)", out, est.meta["kkt_max"])
    return 0


def cmd_tune(args):
    data = _load_data(args)
    covs = sample_covariances(data, center=args.center)
    if args.weights == "auto":
        W = None
        weight_source = "estimate-from-data"
    else:
        W = fileio.load_weights(args.weights, expected_K=data.K)
        weight_source = str(args.weights)
    grids = _parse_grid(args.grid) if args.grid else None
    t0 = time.perf_counter()
    params, report = tune_parameters(data, args.q, grids=grids, weights=W,
                                     workers=args.workers,
                                     parallel=args.parallel,
                                     center=args.center,
                                     tol_kkt=args.tol_kkt)
    log.info("tune: %.3fs over %d triples", time.perf_counter() - t0,
             len(report.rows))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fileio.write_bic_report(out / "bic_report.csv", report, data.counts)
    if not args.no_plots:
        plots.save_bic_figure(report, out / "bic_report.png")

    graph, _ = _resolve_weights(args.weights, covs, data.K, args.q)
    est = solve_svgmrf(data, graph, params, workers=args.workers,
                       tol_kkt=args.tol_kkt, center=args.center)
    _timing_lines(est.meta)
    fileio.write_edge_lists(out / "best", est.matrices)
    meta = _estimate_metadata(est, weight_source, data)
    meta["kind"] = "tuned-estimate"
    meta["selected"] = {"c1": params.c1, "c2": params.c2, "c3": params.c3}
    fileio.write_manifest(out / "run_metadata.txt", meta)
    best = report.best
    log.info("selected c1=%g c2=%g c3=%g (score %.6g)", best.c1, best.c2,
             best.c3, best.score)
    return 0


def cmd_evaluate(args):
    est_dir = Path(args.estimate)
    meta = fileio.load_manifest(est_dir / "run_metadata.txt")
    d, K, q = int(meta["d"]), int(meta["K"]), int(meta["q"])
    est_mats = fileio.load_edge_lists(
        est_dir if (est_dir / "edges_k1.csv").exists() else est_dir / "best",
        d, K)
    truth_dir = Path(args.truth)
    tmanifest = fileio.load_manifest(truth_dir / "manifest.txt")
    td, tk = int(tmanifest["config.d"]), int(tmanifest["config.K"])
    if (td, tk) != (d, K):
        raise InvalidArgumentError(
            f"estimate is K={K}, d={d} but truth is K={tk}, d={td}")
    truth_mats = fileio.load_edge_lists(truth_dir / "truth", d, K)
    counts = tmanifest["config.n"]
    if not isinstance(counts, list):
        counts = [counts] * K

    per_cluster = evaluation.support_metrics(est_mats, truth_mats, pooled=False)
    pooled = evaluation.support_metrics(est_mats, truth_mats, pooled=True)
    diff = evaluation.difference_support_metrics(est_mats, truth_mats)
    errors = evaluation.estimation_errors(est_mats, truth_mats)

    rows = []
    base = {"experiment": args.experiment_id, "d": d, "K": K,
            "method": meta.get("method", f"elementwise-q{q}"), "q": q}
    for k, m in enumerate(per_cluster):
        rows.append({**base, "scope": m.scope, "n": counts[k],
                     "tp": m.tp, "fp": m.fp, "fn": m.fn,
                     "precision": m.precision, "recall": m.recall, "f1": m.f1,
                     "max_norm": errors["max_norm"][k]})
    for m, n in ((pooled, min(counts)), (diff, min(counts))):
        rows.append({**base, "scope": m.scope, "n": n,
                     "tp": m.tp, "fp": m.fp, "fn": m.fn,
                     "precision": m.precision, "recall": m.recall, "f1": m.f1,
                     "coord_l2_max": errors["coord_l2_max"],
                     "coord_l2_mean": errors["coord_l2_mean"]})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fields = ["experiment", "scope", "n", "d", "K", "method", "q",
              "tp", "fp", "fn", "precision", "recall", "f1",
              "max_norm", "coord_l2_max", "coord_l2_mean"]
    fileio.write_table(out / "metrics.csv", rows, fields)
    if not args.no_plots:
        plots.save_metrics_figure(per_cluster, pooled, out / "metrics.png")
    log.info("pooled precision=%s recall=%s f1=%s",
             *(f"{v:.3f}" if v is not None else "undefined"
               for v in (pooled.precision, pooled.recall, pooled.f1)))
    return 0


def cmd_verify_theory(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    ic_records = evaluation.irrepresentability_sweep()
    inc_records = evaluation.incoherence_sweep()
    elapsed = time.perf_counter() - t0
    ic_fail = [r for r in ic_records if not r["ok"]]
    inc_fail = [r for r in inc_records if not r["ok"]]

    lines = [
        f"irrepresentability sweep: {len(ic_records)} patterns, "
        f"{len(ic_fail)} failures -> {'PASS' if not ic_fail else 'FAIL'}",
        f"mutual incoherence sweep: {len(inc_records)} supports, "
        f"{len(inc_fail)} failures -> {'PASS' if not inc_fail else 'FAIL'}",
        f"elapsed: {elapsed:.2f}s",
    ]
    fileio.write_manifest(out / "theory_report.txt", {
        "kind": "theory-report",
        "irrepresentability": {
            "patterns": len(ic_records), "failures": len(ic_fail),
            "pass": not ic_fail,
        },
        "incoherence": {
            "supports": len(inc_records), "failures": len(inc_fail),
            "pass": not inc_fail,
        },
        "elapsed_s": elapsed,
    })
    fileio.write_table(out / "irrepresentability.csv", ic_records,
                       ["K", "ratio", "pattern", "alpha_hat", "kappa_ic",
                        "ic_holds", "ok"])
    fileio.write_table(out / "incoherence.csv", inc_records,
                       ["K", "weights", "gamma", "support_size", "value", "ok"])
    for line in lines:
        print(line)
    if ic_fail or inc_fail:
        raise _TheoryFailure(f"{len(ic_fail) + len(inc_fail)} conditions failed")
    return 0


class _TheoryFailure(SvgmrfError):
    pass


def cmd_benchmark(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sizes = [int(v) for v in args.sizes.split(",")]
    rows = []
    for size in sizes:
        if args.vary == "d":
            K, d, M, n = args.K, size, args.M, max(size // 2, 10)
        else:
            K, d, M, n = size, args.d, args.M, args.n_per_cluster
        cfg = synthetic.SynthConfig(K=K, d=d, M=M, n=n, seed=args.seed)
        truth, data = synthetic.generate_instance(cfg)
        covs_t0 = time.perf_counter()
        covs = sample_covariances(data)
        cov_s = time.perf_counter() - covs_t0
        graph, _ = _resolve_weights("auto", covs, K, args.q)
        params = HyperParams.from_constants(args.c1, args.c2, args.c3, d,
                                            data.counts, args.q)
        est = solve_svgmrf(data, graph, params, workers=args.workers,
                           tol_kkt=args.tol_kkt)
        t = est.meta["timings"]
        variables = K * d * (d + 1) // 2
        row = {
            "experiment": f"scaling-{args.vary}", "K": K, "d": d, "n": n,
            "q": args.q, "variables": variables,
            "covariance_s": cov_s + t["covariance_s"],
            "backward_mapping_s": t["backward_mapping_s"],
            "solve_s": t["solve_s"],
            "total_s": cov_s + sum(t.values()),
        }
        rows.append(row)
        log.info("K=%d d=%d: %d variables, solve %.2fs", K, d, variables,
                 row["solve_s"])
    fields = ["experiment", "K", "d", "n", "q", "variables", "covariance_s",
              "backward_mapping_s", "solve_s", "total_s"]
    fileio.write_table(out / "scaling.csv", rows, fields)
    xkey = "variables" if args.vary == "d" else "K"
    slope = None
    if len(rows) >= 2:
        xs = np.log([r[xkey] for r in rows])
        ys = np.log([max(r["solve_s"], 1e-9) for r in rows])
        slope = float(np.polyfit(xs, ys, 1)[0])
        log.info("fitted log-log slope of solve time vs %s: %.3f", xkey, slope)
    fileio.write_manifest(out / "scaling_summary.txt", {
        "kind": "benchmark", "vary": args.vary, "q": args.q,
        "sizes": sizes, "slope": "" if slope is None else slope,
    })
    if not args.no_plots:
        plots.save_benchmark_figure(rows, out / "scaling.png", xkey=xkey)
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _add_common(p, data=True):
    if data:
        p.add_argument("--data", required=True,
                       help="samples directory or single CSV with cluster ids")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1,
                   help="thread count for coordinate blocks (default 1)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("--tol-kkt", type=float, default=1e-9,
                   help="per-coordinate optimality tolerance")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="svgmrf",
        description="Estimate sparse spatially-varying Gaussian Markov "
                    "random fields by decomposable elementwise solvers.",
        epilog=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic ground-truth bundle")
    g.add_argument("--K", type=int, default=5)
    g.add_argument("--d", type=int, default=250)
    g.add_argument("--M", type=int, default=5)
    g.add_argument("--n", default="500",
                   help="samples per cluster (int or comma list)")
    g.add_argument("--ba-attach", type=int, default=1)
    g.add_argument("--perturb-prob", type=float, default=0.5)
    g.add_argument("--weight-range", default="0.4:1.0")
    g.add_argument("--perturb-range", default="-0.04:0.04")
    g.add_argument("--diag-factor", type=float, default=1.1)
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("estimate", help="solve for explicit (mu, gamma, nu)")
    _add_common(e)
    e.add_argument("--q", type=int, choices=(1, 2), default=2)
    e.add_argument("--mu", type=float, required=True)
    e.add_argument("--gamma", type=float, required=True)
    e.add_argument("--nu-const", type=float, default=1.0,
                   help="C3 in nu_k = C3 sqrt(log d / n_k)")
    e.add_argument("--weights", default="auto",
                   help="'auto' (from covariance distances) or a K x K CSV")
    e.add_argument("--center", action="store_true",
                   help="mean-center samples first (deviation for real data)")
    e.add_argument("--diag-penalty", choices=("on", "off"), default="on",
                   help="apply the sparsity penalty to diagonal entries")
    e.set_defaults(func=cmd_estimate)

    t = sub.add_parser("tune", help="extended-BIC grid search, then solve")
    _add_common(t)
    t.add_argument("--q", type=int, choices=(1, 2), default=2)
    t.add_argument("--grid", default=None,
                   help="c1=0.1:1:10,c2=...,c3=... (colon-separated values)")
    t.add_argument("--weights", default="auto")
    t.add_argument("--center", action="store_true")
    t.add_argument("--parallel", choices=("coordinates", "triples"),
                   default="coordinates",
                   help="where --workers applies (never both)")
    t.add_argument("--no-plots", action="store_true")
    t.set_defaults(func=cmd_tune)

    v = sub.add_parser("evaluate", help="score an estimate against ground truth")
    v.add_argument("--estimate", required=True,
                   help="estimate output directory")
    v.add_argument("--truth", required=True,
                   help="generate output directory")
    v.add_argument("--out", required=True)
    v.add_argument("--experiment-id", default="adhoc")
    v.add_argument("--no-plots", action="store_true")
    v.set_defaults(func=cmd_evaluate)

    y = sub.add_parser("verify-theory",
                       help="numeric sweeps of the recovery conditions")
    y.add_argument("--out", required=True)
    y.set_defaults(func=cmd_verify_theory)

    b = sub.add_parser("benchmark", help="runtime scaling tables and figure")
    b.add_argument("--out", required=True)
    b.add_argument("--vary", choices=("d", "K"), default="d")
    b.add_argument("--sizes", default="200,400,650",
                   help="d values (vary=d) or K values (vary=K)")
    b.add_argument("--K", type=int, default=5, help="fixed K when varying d")
    b.add_argument("--d", type=int, default=500, help="fixed d when varying K")
    b.add_argument("--M", type=int, default=5)
    b.add_argument("--n-per-cluster", type=int, default=250)
    b.add_argument("--q", type=int, choices=(1, 2), default=2)
    b.add_argument("--c1", type=float, default=1.0)
    b.add_argument("--c2", type=float, default=1.0)
    b.add_argument("--c3", type=float, default=1.0)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--tol-kkt", type=float, default=1e-9)
    b.add_argument("--no-plots", action="store_true")
    b.set_defaults(func=cmd_benchmark)
    return parser


_ERROR_KINDS = (
    (SingularBackwardMappingError, EXIT_SINGULAR, "singular-backward-mapping"),
    (NoValidModelError, EXIT_NO_MODEL, "no-valid-model"),
    (SolverFailureError, EXIT_SOLVER, "solver-failure"),
    (NotPositiveDefiniteError, EXIT_CONFIG, "not-positive-definite"),
    (FormatError, EXIT_FORMAT, "format-error"),
    (InvalidArgumentError, EXIT_CONFIG, "invalid-argument"),
    (_TheoryFailure, EXIT_THEORY, "theory-check-failed"),
    (FileNotFoundError, EXIT_FORMAT, "missing-file"),
)


def main(argv=None):
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # mapped to documented exit codes
        for klass, code, kind in _ERROR_KINDS:
            if isinstance(exc, klass):
                print(f"ERROR code={code} kind={kind} detail={exc}",
                      file=sys.stderr)
                return code
        print(f"ERROR code={EXIT_UNEXPECTED} kind=unexpected detail={exc}",
              file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
