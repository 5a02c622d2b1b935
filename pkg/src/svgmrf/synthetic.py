"""Ground-truth generator: modular power-law precision matrices on a cluster tree.

Each cluster's precision matrix is block diagonal with M modules of d/M
nodes; module graphs follow preferential attachment, edge weights are drawn
from +-[weight_range], and each row's diagonal is a fixed multiple of its
absolute off-diagonal sum, which keeps every block strictly diagonally
dominant and hence positive definite.  Clusters hang off a uniform random
spanning tree; a child perturbs its parent by reweighting a random subset of
modules and regenerating exactly one, so support differences accumulate with
tree distance.
"""

import heapq
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .covariance import ClusterDataset
from .errors import InvalidArgumentError, NotPositiveDefiniteError


@dataclass(frozen=True)
class SynthConfig:
    K: int
    d: int
    M: int
    n: tuple          # samples per cluster; an int is broadcast
    seed: int
    ba_attach: int = 1
    perturb_prob: float = 0.5
    weight_range: tuple = (0.4, 1.0)
    perturb_range: tuple = (-0.04, 0.04)
    diag_factor: float = 1.1

    def __post_init__(self):
        if self.K < 1 or self.d < 1 or self.M < 1:
            raise InvalidArgumentError("K, d, M must be positive")
        if self.d % self.M:
            raise InvalidArgumentError(f"d={self.d} not divisible by M={self.M}")
        n = self.n
        if np.isscalar(n):
            n = (int(n),) * self.K
        n = tuple(int(v) for v in n)
        if len(n) != self.K or any(v < 1 for v in n):
            raise InvalidArgumentError("need one positive sample count per cluster")
        object.__setattr__(self, "n", n)
        lo, hi = self.weight_range
        if not (0 < lo <= hi):
            raise InvalidArgumentError("weight_range must lie in (0, inf)")
        if self.diag_factor <= 1:
            raise InvalidArgumentError("diag_factor must be > 1")
        if self.module_size < self.ba_attach + 1:
            raise InvalidArgumentError(
                f"module size {self.module_size} too small for attach={self.ba_attach}")
        if not (0 <= self.perturb_prob <= 1):
            raise InvalidArgumentError("perturb_prob must be in [0, 1]")

    @property
    def module_size(self):
        return self.d // self.M

    def module_slice(self, m):
        s = m * self.module_size
        return slice(s, s + self.module_size)


def barabasi_albert_module(m_nodes, attach, rng):
    """Preferential-attachment graph: seed clique of attach+1 nodes, then each
    new node links to ``attach`` distinct nodes chosen proportionally to degree.
    """
    if attach < 1:
        raise InvalidArgumentError(f"attach must be >= 1, got {attach}")
    if m_nodes < attach + 1:
        raise InvalidArgumentError(
            f"need at least attach+1={attach + 1} nodes, got {m_nodes}")
    adj = np.zeros((m_nodes, m_nodes), dtype=bool)
    seed = attach + 1
    adj[:seed, :seed] = True
    np.fill_diagonal(adj, False)
    # nodes repeated once per incident edge; sampling from it is degree-proportional
    repeated = [v for v in range(seed) for _ in range(seed - 1)]
    for new in range(seed, m_nodes):
        targets = set()
        while len(targets) < attach:
            targets.add(repeated[rng.integers(len(repeated))])
        for t in sorted(targets):
            adj[new, t] = adj[t, new] = True
            repeated.extend((new, t))
    return adj


def module_precision(adj, rng, cfg):
    """Dense precision block for one module graph.

    Edge magnitudes are uniform on weight_range with a fair-coin sign; each
    diagonal is diag_factor times the row's absolute off-diagonal sum, and an
    isolated node gets diagonal 1.
    """
    adj = np.asarray(adj, dtype=bool)
    m = adj.shape[0]
    lo, hi = cfg.weight_range
    B = np.zeros((m, m))
    ii, jj = np.nonzero(np.triu(adj, 1))
    for i, j in zip(ii, jj):
        mag = rng.uniform(lo, hi)
        sign = 1.0 if rng.integers(2) else -1.0
        B[i, j] = B[j, i] = sign * mag
    _set_dominant_diagonal(B, cfg.diag_factor)
    return B


def _set_dominant_diagonal(B, factor):
    np.fill_diagonal(B, 0.0)
    rowsum = np.abs(B).sum(axis=1)
    diag = np.where(rowsum > 0, factor * rowsum, 1.0)
    np.fill_diagonal(B, diag)


def build_cluster_tree(K, rng):
    """Uniform random labeled tree via a Pruefer sequence, rooted at node 0.

    Returns parent pointers; parent[0] = -1.
    """
    if K < 1:
        raise InvalidArgumentError("K must be >= 1")
    if K == 1:
        return (-1,)
    if K == 2:
        return (-1, 0)
    seq = [int(rng.integers(K)) for _ in range(K - 2)]
    degree = [1] * K
    for v in seq:
        degree[v] += 1
    edges = []
    leaves = [v for v in range(K) if degree[v] == 1]
    heapq.heapify(leaves)
    for v in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, v))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, v)
    u = heapq.heappop(leaves)
    w = heapq.heappop(leaves)
    edges.append((u, w))
    # orient away from the root with a BFS
    nbrs = {v: [] for v in range(K)}
    for a, b in edges:
        nbrs[a].append(b)
        nbrs[b].append(a)
    parent = [-2] * K
    parent[0] = -1
    queue = [0]
    while queue:
        cur = queue.pop(0)
        for nxt in sorted(nbrs[cur]):
            if parent[nxt] == -2:
                parent[nxt] = cur
                queue.append(nxt)
    return tuple(parent)


def perturb_child(parent_theta, rng, cfg):
    """Child precision from a parent: per-module reweighting plus one
    regenerated module.  Returns (child, log) with the touched module indices.
    """
    child = np.array(parent_theta, dtype=float)
    lo, hi = cfg.perturb_range
    reweighted = []
    for m in range(cfg.M):
        if rng.random() >= cfg.perturb_prob:
            continue
        reweighted.append(m)
        sl = cfg.module_slice(m)
        block = child[sl, sl]
        ii, jj = np.nonzero(np.triu(block, 1))
        for i, j in zip(ii, jj):
            delta = rng.uniform(lo, hi)
            block[i, j] += delta
            block[j, i] = block[i, j]
        _set_dominant_diagonal(block, cfg.diag_factor)
        child[sl, sl] = block
    regen = int(rng.integers(cfg.M))
    sl = cfg.module_slice(regen)
    adj = barabasi_albert_module(cfg.module_size, cfg.ba_attach, rng)
    child[sl, sl] = module_precision(adj, rng, cfg)
    return child, {"reweighted": reweighted, "regenerated": regen}


def sample_gaussian(theta, n, rng):
    """n zero-mean draws whose covariance is the exact inverse of theta."""
    theta = np.asarray(theta, dtype=float)
    try:
        L = np.linalg.cholesky(theta)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            "precision matrix is not positive definite") from exc
    Z = rng.standard_normal((n, theta.shape[0]))
    # x = L^{-T} z  =>  cov(x) = (L L^T)^{-1} = theta^{-1}
    return scipy.linalg.solve_triangular(L, Z.T, trans="T", lower=True).T


@dataclass(frozen=True)
class GroundTruth:
    thetas: tuple
    tree: tuple
    config: SynthConfig
    perturbations: tuple  # one log dict per cluster; root entry is None

    @property
    def K(self):
        return len(self.thetas)

    @property
    def d(self):
        return self.thetas[0].shape[0]

    def support(self, k):
        return self.thetas[k] != 0.0


def _root_precision(cfg, rng):
    theta = np.zeros((cfg.d, cfg.d))
    for m in range(cfg.M):
        sl = cfg.module_slice(m)
        adj = barabasi_albert_module(cfg.module_size, cfg.ba_attach, rng)
        theta[sl, sl] = module_precision(adj, rng, cfg)
    return theta


def generate_ground_truth(cfg, tree=None):
    """Precision matrices for all clusters along the (or a given) cluster tree.

    One seeded stream per cluster keeps the output bit-reproducible and lets
    independent instances run in parallel.
    """
    streams = _streams(cfg)
    if tree is None:
        tree = build_cluster_tree(cfg.K, streams["tree"])
    else:
        tree = tuple(int(v) for v in tree)
        if len(tree) != cfg.K or tree.count(-1) != 1:
            raise InvalidArgumentError("tree needs one parent per cluster, one root")
    thetas = [None] * cfg.K
    logs = [None] * cfg.K
    order = _traversal_order(tree)
    for k in order:
        rng = streams["structure"][k]
        if tree[k] == -1:
            thetas[k] = _root_precision(cfg, rng)
        else:
            thetas[k], logs[k] = perturb_child(thetas[tree[k]], rng, cfg)
    return GroundTruth(tuple(thetas), tree, cfg, tuple(logs))


def sample_dataset(truth):
    """Gaussian samples for every cluster of a ground truth."""
    streams = _streams(truth.config)
    mats = [sample_gaussian(truth.thetas[k], truth.config.n[k],
                            streams["sampling"][k])
            for k in range(truth.K)]
    return ClusterDataset(tuple(mats))


def generate_instance(cfg, tree=None):
    truth = generate_ground_truth(cfg, tree=tree)
    return truth, sample_dataset(truth)


def _streams(cfg):
    ss = np.random.SeedSequence(cfg.seed)
    children = ss.spawn(2 * cfg.K + 1)
    make = lambda s: np.random.Generator(np.random.PCG64(s))
    return {
        "tree": make(children[0]),
        "structure": [make(children[1 + k]) for k in range(cfg.K)],
        "sampling": [make(children[1 + cfg.K + k]) for k in range(cfg.K)],
    }


def _traversal_order(tree):
    K = len(tree)
    root = tree.index(-1)
    children = {k: [] for k in range(K)}
    for k, p in enumerate(tree):
        if p >= 0:
            children[p].append(k)
    order = []
    queue = [root]
    while queue:
        cur = queue.pop(0)
        order.append(cur)
        queue.extend(sorted(children[cur]))
    return order
