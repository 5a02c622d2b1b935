"""Figure rendering for the report-producing commands.

Each report CSV has a companion PNG: evaluation metrics as per-cluster bars,
tuning as the BIC trace over the grid, benchmarking as a log-log runtime
curve with its fitted slope.  Rendering is file-only (Agg backend).
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_metrics_figure(per_cluster, pooled, path):
    """Per-cluster precision/recall/F1 bars with pooled values as dashed lines."""
    K = len(per_cluster)
    x = np.arange(K)
    width = 0.27
    fig, ax = plt.subplots(figsize=(max(5, 1.2 * K + 2), 3.6))
    series = [("precision", -width), ("recall", 0.0), ("f1", width)]
    for name, off in series:
        vals = [getattr(m, name) for m in per_cluster]
        vals = [np.nan if v is None else v for v in vals]
        ax.bar(x + off, vals, width, label=name)
        pv = getattr(pooled, name)
        if pv is not None:
            ax.axhline(pv, ls="--", lw=0.8, color="gray")
    ax.set_xticks(x)
    ax.set_xticklabels([f"k{k + 1}" for k in range(K)])
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("score")
    ax.legend(loc="lower right", fontsize=8)
    ax.set_title("edge recovery per cluster (dashed: pooled)")
    return _save(fig, path)


def save_bic_figure(report, path):
    """BIC score across the grid; invalid triples marked, winner highlighted."""
    scores = [r.score if r.valid else np.nan for r in report.rows]
    fig, ax = plt.subplots(figsize=(6, 3.6))
    idx = np.arange(len(scores))
    ax.plot(idx, scores, ".-", lw=0.8, ms=4)
    bad = [i for i, r in enumerate(report.rows) if not r.valid]
    if bad:
        ymin = np.nanmin(scores) if np.any(np.isfinite(scores)) else 0.0
        ax.plot(bad, [ymin] * len(bad), "x", color="red", ms=5,
                label="invalid")
    ax.plot([report.selected], [report.rows[report.selected].score], "o",
            color="green", ms=8, mfc="none", label="selected")
    ax.set_xlabel("grid triple index (c3 outer, then c2, then c1)")
    ax.set_ylabel("extended BIC")
    ax.legend(fontsize=8)
    return _save(fig, path)


def save_benchmark_figure(rows, path, xkey="variables", ykey="solve_s"):
    """Log-log runtime against problem size with the fitted slope."""
    xs = np.array([float(r[xkey]) for r in rows])
    ys = np.array([float(r[ykey]) for r in rows])
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.loglog(xs, ys, "o-", label="measured")
    if len(xs) >= 2 and np.all(ys > 0):
        slope, intercept = np.polyfit(np.log(xs), np.log(ys), 1)
        grid = np.linspace(xs.min(), xs.max(), 50)
        ax.loglog(grid, np.exp(intercept) * grid ** slope, "--",
                  label=f"fit slope {slope:.2f}")
    ax.set_xlabel(xkey)
    ax.set_ylabel(f"{ykey} (wall seconds)")
    ax.legend(fontsize=8)
    return _save(fig, path)


def save_trend_figure(rows, path, xkey, ykeys, logx=False):
    """Generic metric-vs-size trend curves (one line per y key)."""
    xs = np.array([float(r[xkey]) for r in rows])
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for ykey in ykeys:
        ys = np.array([np.nan if r.get(ykey) is None else float(r[ykey])
                       for r in rows])
        ax.plot(xs, ys, "o-", label=ykey)
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xkey)
    ax.legend(fontsize=8)
    return _save(fig, path)
