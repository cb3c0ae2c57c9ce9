"""Nonparametric copula entropy and mutual information from raw samples.

Estimation proceeds in two steps: a rank-based empirical copula transform
maps each column to pseudo-observations in (0, 1], then a k-nearest-neighbor
differential-entropy estimate is taken on the transformed sample. Mutual
information is the negative of the copula entropy, so one estimator serves
both quantities. All functions are pure and deterministic for fixed inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma
from scipy.stats import rankdata

from .errors import DegenerateSampleError, InvalidInputError, ParameterError

DEFAULT_K = 3


@dataclass(frozen=True)
class EntropyEstimate:
    """A differential-entropy or mutual-information estimate.

    Attributes
    ----------
    value : float
        Estimate in nats.
    k : int
        Neighbor count used by the estimator.
    n_samples : int
        Number of observations the estimate was computed from.
    """

    value: float
    k: int
    n_samples: int


def _as_sample_matrix(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise InvalidInputError(f"expected a T x N sample matrix, got {x.ndim} dimensions")
    if x.shape[0] < 2 or x.shape[1] < 1:
        raise InvalidInputError(f"need at least 2 observations of 1 variable, got shape {x.shape}")
    if not np.isfinite(x).all():
        t, i = np.argwhere(~np.isfinite(x))[0]
        raise InvalidInputError(f"non-finite entry at row {t}, column {i}")
    return x


def _jittered(x: np.ndarray, scale: float, seed: int) -> np.ndarray:
    """Add deterministic uniform noise, sized relative to per-column spread."""
    rng = np.random.default_rng(seed)
    spread = x.std(axis=0)
    spread = np.where(spread > 0.0, spread, 1.0)
    return x + scale * spread * rng.uniform(-0.5, 0.5, size=x.shape)


def empirical_copula(samples) -> np.ndarray:
    """Map samples to empirical-copula pseudo-observations in (0, 1].

    Entry (t, i) is the fraction of observations in column i that are less
    than or equal to the value at row t. Tied values therefore share the
    maximal rank, and the output depends only on within-column rank order,
    which makes the transform invariant under strictly increasing
    per-column maps.
    """
    x = _as_sample_matrix(samples)
    ranks = rankdata(x, method="max", axis=0)
    return ranks / x.shape[0]


def knn_entropy(samples, k: int = DEFAULT_K,
                jitter_scale: float = 0.0, jitter_seed: int = 0) -> EntropyEstimate:
    """Differential entropy in nats from k-th nearest-neighbor distances.

    Uses the max-norm variant of the classic nearest-neighbor estimator:

        H = psi(T) - psi(k) + (d / T) * sum_t log(2 * eps_t)

    where eps_t is the exact max-norm distance from row t to its k-th
    nearest neighbor (the unit-ball volume constant is 1 under the
    max-norm). Neighbor search is exact.

    Parameters
    ----------
    samples : array_like, shape (T, N)
        Observations by rows; all entries finite.
    k : int
        Neighbor count, 1 <= k < T.
    jitter_scale : float
        If positive, add deterministic uniform noise of this relative scale
        before the search; off by default so results stay reproducible.
    jitter_seed : int
        Seed for the optional jitter.

    Raises
    ------
    ParameterError
        If k is outside [1, T).
    DegenerateSampleError
        If any k-th neighbor distance is exactly zero (duplicate rows).
    """
    x = _as_sample_matrix(samples)
    t, d = x.shape
    if not 1 <= int(k) < t:
        raise ParameterError(f"k must satisfy 1 <= k < T; got k={k}, T={t}")
    k = int(k)
    if jitter_scale > 0.0:
        x = _jittered(x, jitter_scale, jitter_seed)
    eps = cKDTree(x).query(x, k=k + 1, p=np.inf)[0][:, k]
    if np.any(eps == 0.0):
        dup = np.flatnonzero(eps == 0.0)
        shown = ", ".join(str(i) for i in dup[:10])
        raise DegenerateSampleError(
            f"{dup.size} rows have a zero distance to their {k}-th neighbor "
            f"(duplicated rows, e.g. {shown}); deduplicate or enable jitter",
            rows=tuple(int(i) for i in dup),
        )
    # Sorting before the sum makes the estimate exactly invariant to row order.
    value = digamma(t) - digamma(k) + d * float(np.sum(np.sort(np.log(2.0 * eps)))) / t
    return EntropyEstimate(value=float(value), k=k, n_samples=t)


def copula_entropy(samples, k: int = DEFAULT_K,
                   jitter_scale: float = 0.0, jitter_seed: int = 0) -> EntropyEstimate:
    """Copula entropy in nats: entropy of the rank-transformed sample.

    Zero for independent variables, increasingly negative with stronger
    dependence. Exactly invariant under strictly increasing per-column
    transforms because only ranks enter.
    """
    x = _as_sample_matrix(samples)
    if x.shape[1] < 2:
        raise ParameterError("copula entropy needs at least 2 variables")
    if jitter_scale > 0.0:
        x = _jittered(x, jitter_scale, jitter_seed)
    return knn_entropy(empirical_copula(x), k=k)


def mutual_information(samples, k: int = DEFAULT_K,
                       jitter_scale: float = 0.0, jitter_seed: int = 0) -> EntropyEstimate:
    """Mutual information in nats, computed as negative copula entropy."""
    h = copula_entropy(samples, k=k, jitter_scale=jitter_scale, jitter_seed=jitter_seed)
    return EntropyEstimate(value=-h.value, k=h.k, n_samples=h.n_samples)
