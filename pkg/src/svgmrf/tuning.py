"""Weight estimation and extended-BIC hyperparameter selection.

Pair weights come from covariance distances, W_kl = 1 / (1 + D_kl) with
D_kl the Frobenius distance between sample covariances.  The scale of
(mu, gamma, nu_k) follows sqrt(log d / n) with grid constants (C1, C2, C3),
and the grid is scored by an extended BIC whose printed form is

    sum_k  n_k [ tr(S_k T_k) - log det T_k ] + log(n_k) df_k + 4 df_k log d

with df_k the number of nonzero upper-triangle entries (diagonal included).
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .covariance import backward_mappings, sample_covariances, \
    threshold_from_constant
from .errors import InvalidArgumentError, NoValidModelError, \
    SingularBackwardMappingError
from .pairs import WeightGraph
from .solver import solve_svgmrf

DEFAULT_GRID = tuple(np.logspace(-2, 2, 8))


@dataclass(frozen=True)
class HyperParams:
    """Penalty strengths plus the grid constants that generated them.

    Constants are None when (mu, gamma, nus) were given explicitly.
    """

    mu: float
    gamma: float
    nus: tuple
    q: int
    c1: float | None = None
    c2: float | None = None
    c3: float | None = None
    n_min: int | None = None
    d: int | None = None

    def __post_init__(self):
        if self.mu < 0 or self.gamma < 0:
            raise InvalidArgumentError("mu and gamma must be >= 0")
        if self.q not in (1, 2):
            raise InvalidArgumentError(f"q must be 1 or 2, got {self.q}")
        nus = tuple(float(v) for v in self.nus)
        if any(v < 0 for v in nus):
            raise InvalidArgumentError("thresholds must be >= 0")
        object.__setattr__(self, "nus", nus)

    @classmethod
    def from_constants(cls, c1, c2, c3, d, counts, q):
        """gamma = C1 sqrt(log d / n_min), mu = C2 ..., nu_k = C3 sqrt(log d / n_k)."""
        if c1 < 0 or c2 < 0:
            raise InvalidArgumentError("grid constants must be >= 0")
        counts = tuple(int(n) for n in counts)
        n_min = min(counts)
        scale = math.sqrt(math.log(d) / n_min)
        nus = tuple(threshold_from_constant(c3, d, n) for n in counts)
        return cls(mu=c2 * scale, gamma=c1 * scale, nus=nus, q=q,
                   c1=float(c1), c2=float(c2), c3=float(c3),
                   n_min=n_min, d=int(d))


def estimate_weights(covariances):
    """W_kl = 1 / (1 + ||S_k - S_l||_F); symmetric, zero diagonal, entries in (0, 1]."""
    covs = [np.asarray(S, dtype=float) for S in covariances]
    K = len(covs)
    if K < 2:
        raise InvalidArgumentError("need at least two covariances")
    d = covs[0].shape
    for k, S in enumerate(covs):
        if S.shape != d:
            raise InvalidArgumentError(
                f"covariance {k} has shape {S.shape}, expected {d}")
    W = np.zeros((K, K))
    for k in range(K):
        for l in range(k + 1, K):
            dist = np.linalg.norm(covs[k] - covs[l])
            W[k, l] = W[l, k] = 1.0 / (1.0 + dist)
    return W


@dataclass(frozen=True)
class BicResult:
    """Score of one fitted model; invalid models score +inf in selection."""

    score: float
    valid: bool
    dfs: tuple


def bic_score(estimate, covariances, counts, d):
    """Extended BIC of an estimate; invalid when any cluster is not PD."""
    covs = [np.asarray(S, dtype=float) for S in covariances]
    mats = estimate.matrices if hasattr(estimate, "matrices") else estimate
    if len(mats) != len(covs) or len(covs) != len(counts):
        raise InvalidArgumentError("estimate, covariances, counts disagree on K")
    total = 0.0
    dfs = []
    valid = True
    logd = math.log(d)
    for T, S, n in zip(mats, covs, counts):
        T = np.asarray(T, dtype=float)
        if T.shape != S.shape:
            raise InvalidArgumentError("estimate and covariance dimensions differ")
        df = int(np.count_nonzero(np.triu(T)))
        dfs.append(df)
        try:
            L = np.linalg.cholesky(T)
        except np.linalg.LinAlgError:
            valid = False
            continue
        logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
        total += n * (float(np.sum(S * T)) - logdet) \
            + math.log(n) * df + 4.0 * df * logd
    return BicResult(total if valid else math.inf, valid, tuple(dfs))


@dataclass(frozen=True)
class BicRow:
    c1: float
    c2: float
    c3: float
    mu: float
    gamma: float
    score: float
    valid: bool
    reason: str
    dfs: tuple


@dataclass(frozen=True)
class BicReport:
    rows: tuple
    selected: int  # index into rows

    @property
    def best(self):
        return self.rows[self.selected]


def tune_parameters(data, q, grids=None, weights=None, workers=1,
                    parallel="coordinates", center=False, tol_kkt=1e-9):
    """Grid search over (C1, C2, C3) scored by extended BIC.

    ``grids`` is a triple of value lists (defaults: 8 log-spaced points in
    [1e-2, 1e2] each).  ``weights`` may be a K x K matrix or None to estimate
    from covariance distances.  Triples whose threshold makes any backward
    mapping singular are recorded invalid, never selected.  Ties break toward
    larger mu, then larger gamma.  Parallelism is either across grid triples
    or across coordinates inside each solve, never both.
    """
    if grids is None:
        grids = (DEFAULT_GRID, DEFAULT_GRID, DEFAULT_GRID)
    g1, g2, g3 = (sorted(float(v) for v in g) for g in grids)
    if not (g1 and g2 and g3):
        raise InvalidArgumentError("all three grids must be non-empty")
    if parallel not in ("coordinates", "triples"):
        raise InvalidArgumentError("parallel must be 'coordinates' or 'triples'")

    covs = sample_covariances(data, center=center)
    counts = data.counts
    d = data.d
    K = data.K
    if weights is None:
        W = estimate_weights(covs) if K >= 2 else np.zeros((1, 1))
    else:
        W = np.asarray(weights, dtype=float)
    graph = WeightGraph(K, W, q)

    # backward mappings depend on c3 only; compute once per value
    maps_by_c3 = {}
    fail_by_c3 = {}
    for c3 in g3:
        nus = [threshold_from_constant(c3, d, n) for n in counts]
        try:
            maps_by_c3[c3] = backward_mappings(covs, nus)
        except SingularBackwardMappingError as exc:
            fail_by_c3[c3] = str(exc)

    triples = [(c1, c2, c3) for c3 in g3 for c2 in g2 for c1 in g1]

    def evaluate(triple, inner_workers):
        c1, c2, c3 = triple
        params = HyperParams.from_constants(c1, c2, c3, d, counts, q)
        if c3 in fail_by_c3:
            return BicRow(c1, c2, c3, params.mu, params.gamma, math.inf,
                          False, fail_by_c3[c3], ())
        est = solve_svgmrf(maps_by_c3[c3], graph, params,
                           workers=inner_workers, tol_kkt=tol_kkt)
        res = bic_score(est, covs, counts, d)
        reason = "" if res.valid else "estimate not positive definite"
        return BicRow(c1, c2, c3, params.mu, params.gamma, res.score,
                      res.valid, reason, res.dfs)

    if parallel == "triples" and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = tuple(pool.map(lambda t: evaluate(t, 1), triples))
    else:
        rows = tuple(evaluate(t, workers) for t in triples)

    valid_idx = [i for i, r in enumerate(rows) if r.valid]
    if not valid_idx:
        raise NoValidModelError(
            [((r.c1, r.c2, r.c3), r.reason or "invalid") for r in rows])
    # argmin by score; ties resolved toward larger mu, then larger gamma
    best = min(valid_idx, key=lambda i: (rows[i].score, -rows[i].mu,
                                         -rows[i].gamma))
    report = BicReport(rows, best)
    row = rows[best]
    params = HyperParams.from_constants(row.c1, row.c2, row.c3, d, counts, q)
    return params, report
