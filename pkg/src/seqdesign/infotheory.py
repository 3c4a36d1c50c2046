"""k-nearest-neighbor information estimators.

Differential entropy uses the Kozachenko-Leonenko construction; mutual
information uses the Kraskov-Stoegbauer-Grassberger estimator (their first
algorithm): the distance to the k-th neighbor is measured in the joint space
under the Chebyshev (max) norm and marginal neighbors are counted strictly
inside that radius.  All values are in nats.

Neighbor search runs on an exact k-d tree for large sample sets and falls
back to brute-force pairwise distances below ``BRUTE_FORCE_LIMIT`` samples;
the brute-force path doubles as the test oracle for the tree path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import EstimatorError, InvalidInput

#: Below this many samples pairwise distances beat tree construction.
BRUTE_FORCE_LIMIT = 200

#: Fixed seed for the deterministic tie-breaking jitter.
_TIE_BREAK_SEED = 987654321

#: Relative amplitude of the tie-breaking jitter.
_JITTER_SCALE = 1e-10


@dataclass(frozen=True)
class MiEstimate:
    """A mutual-information estimate plus the sample/neighbor counts used."""

    value: float
    k: int
    n: int


_psi_cache = np.array([-np.euler_gamma])


def _psi_table(mmax: int) -> np.ndarray:
    """Values psi(1..mmax), built by running the unit recurrence once.

    The table is extended sequentially (cumsum carries the previous entry
    forward), so ``table[m] == table[m-1] + 1/m`` holds bit-exactly; callers
    rely on that identity.
    """
    global _psi_cache
    if _psi_cache.size < mmax:
        grow_to = max(mmax, 2 * _psi_cache.size)
        start = _psi_cache.size
        tail = np.cumsum(
            np.concatenate([[_psi_cache[start - 1]], 1.0 / np.arange(start, grow_to)])
        )
        _psi_cache = np.concatenate([_psi_cache[: start - 1], tail])
    return _psi_cache


def digamma(m):
    """Digamma at positive integer arguments.

    Defined by psi(1) = -C (C the Euler-Mascheroni constant) and the unit
    recurrence psi(m+1) = psi(m) + 1/m, evaluated exactly as that recursion.
    Accepts a scalar or an integer array.
    """
    arr = np.asarray(m)
    if not np.issubdtype(arr.dtype, np.integer):
        if arr.size == 0 or not np.all(arr == np.floor(arr)):
            raise InvalidInput("digamma is defined here for integers only")
        arr = arr.astype(np.int64)
    if arr.size == 0:
        raise InvalidInput("digamma needs at least one argument")
    if np.any(arr < 1):
        raise InvalidInput("digamma argument must be >= 1")
    out = _psi_table(int(arr.max()))[arr - 1]
    return float(out) if np.ndim(m) == 0 else out


def _as_samples(a, name="samples"):
    x = np.asarray(a, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise InvalidInput(f"{name} must be an (n, d) matrix, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise InvalidInput(f"{name} must be finite")
    return x


def _tie_break(blocks):
    """Add deterministic jitter (1e-10 of each column's spread) to every block.

    A column whose spread sits at rounding level (including a collapsed
    ensemble, where ``std`` of identical values comes out as accumulated
    roundoff rather than exact zero) falls back to the column's magnitude,
    so duplicated sample sets still separate into measurably distinct points.
    """
    rng = np.random.default_rng(_TIE_BREAK_SEED)
    out = []
    for x in blocks:
        std = x.std(axis=0)
        magnitude = np.maximum(np.abs(x.mean(axis=0)), 1.0)
        scale = np.where(std > 1e-12 * magnitude, std, magnitude)
        out.append(x + rng.standard_normal(x.shape) * (_JITTER_SCALE * scale))
    return out


def _kth_neighbor_distances(x, k):
    """Chebyshev distance from each point to its k-th nearest neighbor."""
    n = x.shape[0]
    if n <= BRUTE_FORCE_LIMIT:
        diff = np.abs(x[:, None, :] - x[None, :, :]).max(axis=-1)
        diff.sort(axis=1)
        return diff[:, k]  # column 0 is the self-distance
    dist, _ = cKDTree(x).query(x, k=k + 1, p=np.inf)
    return dist[:, k]


def _strict_counts(x, radii):
    """Number of points strictly within ``radii`` of each point (self excluded)."""
    n = x.shape[0]
    if n <= BRUTE_FORCE_LIMIT:
        diff = np.abs(x[:, None, :] - x[None, :, :]).max(axis=-1)
        return (diff < radii[:, None]).sum(axis=1) - 1
    shrunk = np.nextafter(radii, 0.0)  # query_ball_point is inclusive
    counts = cKDTree(x).query_ball_point(x, r=shrunk, p=np.inf, return_length=True)
    return counts - 1


def kl_entropy(samples, k=6, jitter=True):
    """Kozachenko-Leonenko differential entropy estimate in nats.

    Parameters
    ----------
    samples : array_like, shape (n,) or (n, d)
        Sample matrix; one row per draw.
    k : int
        Neighbor order used for the radius statistic.
    jitter : bool
        Apply the deterministic tie-breaking jitter before the search.
        Disable only for data guaranteed free of duplicates.
    """
    x = _as_samples(samples)
    n, d = x.shape
    if k < 1:
        raise InvalidInput("k must be >= 1")
    if n < k + 1:
        raise InvalidInput(f"need at least k+1={k + 1} samples, got {n}")
    if jitter:
        (x,) = _tie_break([x])
    eps = _kth_neighbor_distances(x, k)
    if np.any(eps <= 0.0):
        raise EstimatorError("duplicate samples remain after tie-breaking jitter")
    return float(-digamma(k) + digamma(n) + d * np.log(2.0) + d * np.mean(np.log(eps)))


def ksg_mi(x, y, k=6, jitter=True) -> MiEstimate:
    """Mutual information between two sample blocks, KSG first algorithm.

    Each coordinate is standardized to zero mean and unit spread before the
    neighbor search; mutual information is invariant under such per-coordinate
    affine maps, and the standardization keeps the joint Chebyshev balls
    comparable across blocks measured in different units.

    Returns
    -------
    MiEstimate
        Estimate in nats (may be slightly negative at small n) plus the
        ``k`` and ``n`` actually used.
    """
    x = _as_samples(x, "x")
    y = _as_samples(y, "y")
    if x.shape[0] != y.shape[0]:
        raise InvalidInput("x and y must hold the same number of samples")
    n = x.shape[0]
    if k < 1:
        raise InvalidInput("k must be >= 1")
    if n <= k:
        raise InvalidInput(f"need more than k={k} samples, got {n}")

    def standardize(a):
        centered = a - a.mean(axis=0)
        std = centered.std(axis=0)
        return centered / np.where(std > 0.0, std, 1.0)

    x = standardize(x)
    y = standardize(y)
    if jitter:
        x, y = _tie_break([x, y])
    joint = np.hstack([x, y])
    eps = _kth_neighbor_distances(joint, k)
    if np.any(eps <= 0.0):
        raise EstimatorError("duplicate samples remain after tie-breaking jitter")
    n_x = _strict_counts(x, eps)
    n_y = _strict_counts(y, eps)
    value = digamma(k) + digamma(n) - float(np.mean(digamma(n_x + 1) + digamma(n_y + 1)))
    return MiEstimate(value=value, k=k, n=n)


def mi_decomposition(theta, d, k=6):
    """Split the information in ``d`` about ``theta`` into H(d) and H(d|theta).

    Returns ``(h_d, h_d_given_theta)`` with ``h_d_given_theta = h_d - I(theta; d)``.
    The conditional term is the diagnostic that tells whether observable
    entropy alone can rank designs: it is flat across designs only when the
    state is a deterministic function of the parameters.
    """
    h_d = kl_entropy(d, k)
    mi = ksg_mi(theta, d, k)
    return h_d, h_d - mi.value
