"""Scoring against ground truth and numeric checks of the recovery conditions.

Support metrics compare strict upper-triangle off-diagonal patterns (network
edges; self-loops excluded), either per cluster or pooled (counts summed
before ratios).  The theory checks evaluate, on concrete instances, the
irrepresentability condition and compatibility constant of the stacked
penalty matrix B = [(gamma/mu) G A; I], and the mutual incoherence of the
q=2 quadratic form's Cholesky columns.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .pairs import WeightGraph
from .solver import quad_matrix

PINV_RCOND = 1e-10


def _matrices(obj):
    if hasattr(obj, "matrices"):
        return obj.matrices
    if hasattr(obj, "thetas"):
        return obj.thetas
    return [np.asarray(M, dtype=float) for M in obj]


@dataclass(frozen=True)
class SupportMetrics:
    """Edge-recovery counts and ratios; undefined ratios are None, never 0."""

    tp: int
    fp: int
    fn: int
    precision: float | None
    recall: float | None
    f1: float | None
    scope: str

    @classmethod
    def from_counts(cls, tp, fp, fn, scope):
        precision = tp / (tp + fp) if tp + fp > 0 else None
        recall = tp / (tp + fn) if tp + fn > 0 else None
        if precision is None or recall is None:
            f1 = None
        elif precision + recall == 0:
            f1 = 0.0
        else:
            f1 = 2 * precision * recall / (precision + recall)
        return cls(tp, fp, fn, precision, recall, f1, scope)


def _edge_counts(est_mat, truth_mat):
    iu = np.triu_indices(est_mat.shape[0], k=1)
    e = est_mat[iu] != 0.0
    t = truth_mat[iu] != 0.0
    tp = int(np.count_nonzero(e & t))
    fp = int(np.count_nonzero(e & ~t))
    fn = int(np.count_nonzero(~e & t))
    return tp, fp, fn


def support_metrics(est, truth, pooled=True):
    """Edge precision/recall/F1, pooled over clusters or one record per cluster."""
    est_m = _matrices(est)
    tru_m = _matrices(truth)
    if len(est_m) != len(tru_m):
        raise InvalidArgumentError("estimate and truth cluster counts differ")
    for E, T in zip(est_m, tru_m):
        if E.shape != T.shape:
            raise InvalidArgumentError("estimate and truth dimensions differ")
    counts = [_edge_counts(E, T) for E, T in zip(est_m, tru_m)]
    if pooled:
        tp, fp, fn = (sum(c[i] for c in counts) for i in range(3))
        return SupportMetrics.from_counts(tp, fp, fn, "pooled")
    return [SupportMetrics.from_counts(*c, f"cluster-{k + 1}")
            for k, c in enumerate(counts)]


def estimation_errors(est, truth):
    """Elementwise max error per cluster and per-coordinate l2-error stats."""
    est_m = _matrices(est)
    tru_m = _matrices(truth)
    if len(est_m) != len(tru_m):
        raise InvalidArgumentError("estimate and truth cluster counts differ")
    d = est_m[0].shape[0]
    max_norms = []
    for E, T in zip(est_m, tru_m):
        if E.shape != T.shape:
            raise InvalidArgumentError("estimate and truth dimensions differ")
        max_norms.append(float(np.abs(E - T).max()))
    iu, ju = np.triu_indices(d)
    diffs = np.stack([E[iu, ju] - T[iu, ju] for E, T in zip(est_m, tru_m)])
    l2 = np.sqrt(np.sum(diffs * diffs, axis=0))
    return {
        "max_norm": max_norms,
        "coord_l2_max": float(l2.max()),
        "coord_l2_mean": float(l2.mean()),
    }


def difference_support_metrics(est, truth, tol=0.0):
    """Recovery of the pairwise difference supports (which entries change
    between cluster pairs), counted over strict upper-triangle coordinates.
    """
    est_m = _matrices(est)
    tru_m = _matrices(truth)
    K = len(est_m)
    d = est_m[0].shape[0]
    iu = np.triu_indices(d, k=1)
    tp = fp = fn = 0
    for k in range(K):
        for l in range(k + 1, K):
            e = np.abs(est_m[k][iu] - est_m[l][iu]) > tol
            t = np.abs(tru_m[k][iu] - tru_m[l][iu]) > tol
            tp += int(np.count_nonzero(e & t))
            fp += int(np.count_nonzero(e & ~t))
            fn += int(np.count_nonzero(~e & t))
    return SupportMetrics.from_counts(tp, fp, fn, "difference-pooled")


# ---------------------------------------------------------------------------
# theory diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IcDiagnostics:
    """Irrepresentability diagnostics of one stacked coordinate."""

    B: np.ndarray
    support: tuple
    lhs_norm: float
    alpha_hat: float
    kappa_ic: float
    ic_holds: bool


def penalty_matrix(weights, mu, gamma):
    """Stacked generalized-penalty matrix [(gamma/mu) G A; I]; needs mu > 0."""
    if mu <= 0:
        raise InvalidArgumentError("the stacked penalty matrix needs mu > 0")
    GA = weights.scaled_incidence()
    return np.vstack([(gamma / mu) * GA, np.eye(weights.K)])


def check_irrepresentability(theta_star, W, mu, gamma, tol=1e-9):
    """Evaluate the irrepresentability condition at a true stacked coordinate.

    Support rows of B theta* are pseudo-inverted (singular values below
    1e-10 of the largest are treated as zero); the condition holds when the
    off-support response to the support signs stays below 1 - tol.
    """
    theta_star = np.asarray(theta_star, dtype=float).ravel()
    if not np.all(np.isfinite(theta_star)):
        raise InvalidArgumentError("theta* has non-finite entries")
    K = theta_star.shape[0]
    weights = WeightGraph(K, W, 1)
    B = penalty_matrix(weights, mu, gamma)
    z = B @ theta_star
    support = tuple(int(i) for i in np.nonzero(z != 0.0)[0])
    comp = tuple(i for i in range(B.shape[0]) if i not in support)
    if not comp:
        return IcDiagnostics(B, support, 0.0, 1.0, 1.0, True)
    if not support:
        # B theta* = 0 everywhere: the condition is vacuous
        return IcDiagnostics(B, support, 0.0, 1.0, 1.0, True)
    Bs = B[list(support)]
    Bc = B[list(comp)]
    pinv = np.linalg.pinv(Bs, rcond=PINV_RCOND)
    proj = Bc @ pinv
    lhs = float(np.abs(proj @ np.sign(z[list(support)])).max())
    kappa = float(np.abs(proj).sum(axis=1).max() + 1.0)
    return IcDiagnostics(B, support, lhs, 1.0 - lhs, kappa, lhs <= 1.0 - tol)


def check_mutual_incoherence(W, gamma, S):
    """max_{j not in S} ||(C_S^T C_S)^{-1} C_S^T C_j||_1 for the q=2 form.

    C^T C = I + gamma A^T G^T G A, so the quantity only needs submatrices of
    that strictly diagonally dominant matrix.  Returns (value, value <= 1/2).
    """
    if gamma < 0:
        raise InvalidArgumentError("gamma must be >= 0")
    W = np.asarray(W, dtype=float)
    K = W.shape[0]
    weights = WeightGraph(K, W, 2)
    Q = quad_matrix(weights, gamma)
    S = sorted(int(i) for i in S)
    comp = [j for j in range(K) if j not in S]
    if not S or not comp:
        return 0.0, True
    Qss = Q[np.ix_(S, S)]
    value = 0.0
    for j in comp:
        x = np.linalg.solve(Qss, Q[np.ix_(S, [j])])
        value = max(value, float(np.abs(x).sum()))
    return value, value <= 0.5


def irrepresentability_sweep(Ks=range(2, 9), ratios=(1.0, 1.5, 2.0),
                             levels=(0.0, 1.0, 2.0), mu=1.0, tol=1e-9):
    """Exhaustive fused/support patterns with uniform unit weights.

    For mu <= gamma <= 2 mu the condition is expected to hold with margin
    alpha >= mu/gamma and compatibility constant in [1, 5]; each record
    reports whether the instance met those bounds.
    """
    records = []
    for K in Ks:
        W = np.ones((K, K)) - np.eye(K)
        patterns = itertools.product(levels, repeat=K)
        for theta_star in patterns:
            theta_star = np.array(theta_star)
            for ratio in ratios:
                gamma = ratio * mu
                diag = check_irrepresentability(theta_star, W, mu, gamma,
                                                tol=tol)
                ok = (diag.ic_holds
                      and diag.alpha_hat >= mu / gamma - 1e-9
                      and 1.0 - 1e-9 <= diag.kappa_ic <= 5.0 + 1e-9)
                records.append({
                    "K": K, "ratio": ratio,
                    "pattern": "".join(str(int(v)) for v in theta_star),
                    "alpha_hat": diag.alpha_hat, "kappa_ic": diag.kappa_ic,
                    "ic_holds": diag.ic_holds, "ok": bool(ok),
                })
    return records


def incoherence_sweep(Ks=range(1, 7), gamma_fracs=(0.5, 0.999), seed=7):
    """All supports S for uniform and random weights with gamma below the
    1/(2K max W) threshold; each record reports value <= 1/2 (+1e-9).
    """
    rng = np.random.default_rng(seed)
    records = []
    for K in Ks:
        Ws = [np.ones((K, K)) - np.eye(K)]
        R = rng.uniform(0.2, 1.0, size=(K, K))
        R = 0.5 * (R + R.T)
        np.fill_diagonal(R, 0.0)
        Ws.append(R)
        for wi, W in enumerate(Ws):
            wmax = W.max() if K > 1 else 1.0
            for frac in gamma_fracs:
                gamma = frac / (2 * K * wmax)
                for r in range(K + 1):
                    for S in itertools.combinations(range(K), r):
                        value, _ = check_mutual_incoherence(W, gamma, S)
                        records.append({
                            "K": K, "weights": "uniform" if wi == 0 else "random",
                            "gamma": gamma, "support_size": r,
                            "value": value, "ok": bool(value <= 0.5 + 1e-9),
                        })
    return records
