"""Per-cluster sample covariances and the thresholded-inverse backward mapping.

The estimator never inverts the raw sample covariance: off-diagonal entries
are first shrunk by a soft threshold, which keeps the matrix invertible even
when the sample count is far below the dimension.  The backward mapping of a
cluster is the exact inverse of that thresholded matrix.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, SingularBackwardMappingError

DEFAULT_COND_CAP = 1e12


@dataclass(frozen=True)
class ClusterDataset:
    """Per-cluster sample matrices, rows are observations of d variables."""

    samples: tuple

    def __post_init__(self):
        mats = tuple(np.ascontiguousarray(X, dtype=float) for X in self.samples)
        if not mats:
            raise InvalidArgumentError("dataset needs at least one cluster")
        d = mats[0].shape[1] if mats[0].ndim == 2 else -1
        for k, X in enumerate(mats):
            if X.ndim != 2 or X.shape[0] < 1:
                raise InvalidArgumentError(f"cluster {k} needs an n x d matrix with n >= 1")
            if X.shape[1] != d:
                raise InvalidArgumentError(
                    f"cluster {k} has {X.shape[1]} variables, expected {d}")
            if not np.all(np.isfinite(X)):
                raise InvalidArgumentError(f"cluster {k} has non-finite samples")
        object.__setattr__(self, "samples", mats)

    @property
    def K(self):
        return len(self.samples)

    @property
    def d(self):
        return self.samples[0].shape[1]

    @property
    def counts(self):
        return tuple(X.shape[0] for X in self.samples)


def sample_covariance(X, center=False):
    """Second-moment matrix (1/n) sum_i x_i x_i^T of one cluster.

    The model is zero-mean, so no centering is applied by default; ``center``
    subtracts column means first (documented deviation for real data).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise InvalidArgumentError("need an n x d sample matrix with n >= 1")
    if center:
        X = X - X.mean(axis=0)
    S = X.T @ X / X.shape[0]
    return 0.5 * (S + S.T)


def sample_covariances(data, center=False):
    """Sample covariance of every cluster in a :class:`ClusterDataset`."""
    return [sample_covariance(X, center=center) for X in data.samples]


def soft_threshold(M, nu):
    """Shrink off-diagonal magnitudes by nu, clipping at zero; diagonal kept."""
    if nu < 0:
        raise InvalidArgumentError(f"threshold must be >= 0, got {nu}")
    M = np.asarray(M, dtype=float)
    out = np.sign(M) * np.maximum(np.abs(M) - nu, 0.0)
    np.fill_diagonal(out, np.diag(M))
    return out


def backward_mapping(sigma, nu, cluster=0, cond_cap=DEFAULT_COND_CAP):
    """Exact inverse of the soft-thresholded covariance, symmetrized.

    Raises :class:`SingularBackwardMappingError` when the thresholded matrix
    is numerically singular (condition number above ``cond_cap``), which
    signals that nu is too small for the available samples.
    """
    T = soft_threshold(sigma, nu)
    # symmetric eigen-factorization: gives the exact 2-norm condition number
    # and an inverse that is symmetric up to round-off
    vals, vecs = np.linalg.eigh(T)
    amax = np.abs(vals).max()
    amin = np.abs(vals).min()
    if amax == 0 or amin == 0 or amax / amin > cond_cap:
        cond = np.inf if amin == 0 else amax / amin
        raise SingularBackwardMappingError(cluster, nu, cond)
    F = (vecs / vals) @ vecs.T
    return 0.5 * (F + F.T)


def threshold_from_constant(c3, d, n):
    """Per-cluster threshold c3 * sqrt(log(d) / n) (natural log)."""
    if c3 <= 0:
        raise InvalidArgumentError(f"threshold constant must be > 0, got {c3}")
    if d < 2:
        raise InvalidArgumentError(f"dimension must be >= 2, got {d}")
    if n < 1:
        raise InvalidArgumentError(f"sample count must be >= 1, got {n}")
    return c3 * math.sqrt(math.log(d) / n)


@dataclass(frozen=True)
class BackwardMapping:
    """Backward mapping of every cluster plus the thresholds that produced it."""

    mappings: tuple
    nus: tuple

    def __post_init__(self):
        mats = tuple(np.asarray(F, dtype=float) for F in self.mappings)
        if len(mats) != len(self.nus):
            raise InvalidArgumentError("one threshold per cluster required")
        object.__setattr__(self, "mappings", mats)
        object.__setattr__(self, "nus", tuple(float(v) for v in self.nus))

    @property
    def K(self):
        return len(self.mappings)

    @property
    def d(self):
        return self.mappings[0].shape[0]


def backward_mappings(covariances, nus, cond_cap=DEFAULT_COND_CAP):
    """Backward mapping per cluster; nus may be a scalar or one per cluster."""
    covs = list(covariances)
    if np.isscalar(nus):
        nus = [float(nus)] * len(covs)
    nus = [float(v) for v in nus]
    if len(nus) != len(covs):
        raise InvalidArgumentError("one threshold per cluster required")
    maps = [backward_mapping(S, v, cluster=k, cond_cap=cond_cap)
            for k, (S, v) in enumerate(zip(covs, nus))]
    return BackwardMapping(tuple(maps), tuple(nus))


def diagnostics(precisions, covariances=None, p=0.5):
    """Norm bounds and weak-sparsity sums of a known ground truth.

    These quantities appear only inside theoretical constants; they never
    enter the estimator and are measurable on synthetic truth only.
    """
    out = {}
    thetas = [np.asarray(T, dtype=float) for T in precisions]
    inf_norms = [np.abs(T).sum(axis=1).max() for T in thetas]
    out["theta_inf_norm"] = max(inf_norms)
    # inf over unit-inf-norm w of |Sigma w|_inf equals 1 / |Theta|_inf
    out["sigma_min_gain"] = min(1.0 / v for v in inf_norms)
    if covariances is None:
        covariances = [np.linalg.inv(T) for T in thetas]
    covs = [np.asarray(S, dtype=float) for S in covariances]
    out["sigma_max_norm"] = max(np.abs(S).max() for S in covs)
    out["weak_sparsity"] = max(
        (np.abs(S) ** p).sum(axis=1).max() for S in covs)
    out["weak_sparsity_p"] = p
    return out
