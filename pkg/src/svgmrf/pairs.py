"""Cluster-pair combinatorics: pair labeling, incidence, and weight scaling.

For K clusters the K(K-1)/2 unordered pairs (k, l), l > k, are laid out in a
fixed row-major order.  The incidence matrix A has one row per pair with +1 at
column k and -1 at column l, and the diagonal scaling G carries the pair
weights so that ``norm(G @ A @ theta, q) ** q`` equals the weighted sum of
q-th powers of pairwise differences.  All indices are 0-based in memory.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class PairLabeling:
    """Bijection between ordered pairs (k, l), l > k, and labels 0..K(K-1)/2-1."""

    K: int

    def __post_init__(self):
        if self.K < 1:
            raise InvalidArgumentError(f"K must be >= 1, got {self.K}")

    @property
    def n_pairs(self):
        return self.K * (self.K - 1) // 2

    def label(self, k, l):
        """Row-major label of the pair (k, l) with l > k."""
        if not (0 <= k < l < self.K):
            raise InvalidArgumentError(f"need 0 <= k < l < K, got ({k}, {l})")
        # pairs (0,1),(0,2),...,(0,K-1),(1,2),... in row-major order
        return k * self.K - k * (k + 1) // 2 + (l - k - 1)

    def pair(self, m):
        """Inverse of :meth:`label`."""
        if not (0 <= m < self.n_pairs):
            raise InvalidArgumentError(f"label {m} out of range")
        k = 0
        offset = 0
        while m >= offset + (self.K - k - 1):
            offset += self.K - k - 1
            k += 1
        return k, k + 1 + (m - offset)

    def pairs(self):
        """All pairs in label order, as an (n_pairs, 2) integer array."""
        idx = np.array([(k, l) for k in range(self.K)
                        for l in range(k + 1, self.K)], dtype=int)
        return idx.reshape(self.n_pairs, 2)


def make_labeling(K):
    """Canonical row-major pair labeling for K clusters."""
    return PairLabeling(int(K))


def build_incidence(labeling):
    """Signed incidence matrix: row label(k,l) is +1 at k and -1 at l."""
    A = np.zeros((labeling.n_pairs, labeling.K))
    if labeling.n_pairs:
        pr = labeling.pairs()
        rows = np.arange(labeling.n_pairs)
        A[rows, pr[:, 0]] = 1.0
        A[rows, pr[:, 1]] = -1.0
    return A


def _check_weights(W, K):
    W = np.asarray(W, dtype=float)
    if W.shape != (K, K):
        raise InvalidArgumentError(f"weight matrix must be {K}x{K}, got {W.shape}")
    if not np.all(np.isfinite(W)):
        raise InvalidArgumentError("weight matrix has non-finite entries")
    if np.min(W) < 0:
        raise InvalidArgumentError("weight matrix has a negative entry")
    if not np.allclose(W, W.T, rtol=0, atol=1e-12 * max(1.0, np.abs(W).max())):
        raise InvalidArgumentError("weight matrix is not symmetric")
    return 0.5 * (W + W.T)


def build_weight_diag(W, labeling, q):
    """Diagonal of G: entry m is W_(k,l)^(1/q) for the pair with label m.

    Returned as a 1-D vector; apply with elementwise multiplication against
    rows of A.
    """
    if q not in (1, 2):
        raise InvalidArgumentError(f"q must be 1 or 2, got {q}")
    W = _check_weights(W, labeling.K)
    if labeling.n_pairs == 0:
        return np.zeros(0)
    pr = labeling.pairs()
    w = W[pr[:, 0], pr[:, 1]]
    return w if q == 1 else np.sqrt(w)


@dataclass(frozen=True)
class WeightGraph:
    """Pair weights W together with the derived incidence and scaling.

    Immutable after construction; shared read-only by parallel workers.
    """

    K: int
    W: np.ndarray
    q: int
    labeling: PairLabeling = field(init=False)
    A: np.ndarray = field(init=False)
    g: np.ndarray = field(init=False)  # diagonal of G as a vector

    def __post_init__(self):
        labeling = make_labeling(self.K)
        W = _check_weights(self.W, self.K)
        if np.any(np.diag(W) != 0):
            raise InvalidArgumentError("weight matrix must have zero diagonal")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "labeling", labeling)
        object.__setattr__(self, "A", build_incidence(labeling))
        object.__setattr__(self, "g", build_weight_diag(W, labeling, self.q))
        self.W.setflags(write=False)
        self.A.setflags(write=False)
        self.g.setflags(write=False)

    @property
    def n_pairs(self):
        return self.labeling.n_pairs

    def scaled_incidence(self):
        """G @ A as a dense (n_pairs, K) matrix."""
        return self.g[:, None] * self.A

    def pair_weights(self):
        """W_(k,l) in label order (independent of q)."""
        if self.n_pairs == 0:
            return np.zeros(0)
        pr = self.labeling.pairs()
        return self.W[pr[:, 0], pr[:, 1]]

    def fusion_penalty(self, theta):
        """sum_{l>k} W_kl |theta_k - theta_l|^q, evaluated through (G, A)."""
        z = self.scaled_incidence() @ np.asarray(theta, dtype=float)
        return float(np.sum(np.abs(z) ** self.q))


@dataclass(frozen=True)
class StackedCoordinate:
    """The (i, j) entry of every cluster matrix, stacked into K-vectors."""

    i: int
    j: int
    theta: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if theta.shape != f.shape or theta.ndim != 1:
            raise InvalidArgumentError("theta and f must be 1-D with equal length")
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(f))):
            raise InvalidArgumentError("stacked coordinate has non-finite entries")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "f", f)


def stack_coordinate(matrices, i, j):
    """Extract the (i, j) entry of each matrix in a K-list as a K-vector."""
    return np.array([M[i, j] for M in matrices], dtype=float)
