"""Comparison models: bag-of-syscalls featurization and a Local Outlier
Factor detector.

LOF follows the classical k-distance / reachability-distance / local
reachability density definitions with tie-inclusive neighborhoods (every
point within the k-distance belongs to the neighborhood, so it can hold
more than k points). Duplicate-heavy data is handled by the k-distance
floor; when a denominator still collapses to zero the density is treated
as infinite and the ratio of two infinite densities as 1, so duplicated
benign points do not flag themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptySequence, TooFewPoints
from .ingest import MAX_SYSCALL_ID, SyscallSequence

ALPHABET_SIZE = MAX_SYSCALL_ID + 1
DEFAULT_K = 20


def bosc_features(seq: SyscallSequence) -> np.ndarray:
    """Count vector over the full syscall-ID alphabet (length 323)."""
    if len(seq.ids) == 0:
        raise EmptySequence("cannot featurize an empty window")
    return np.bincount(np.asarray(seq.ids), minlength=ALPHABET_SIZE)


def bosc_feature_names() -> list[str]:
    return [f"c{i:03d}" for i in range(ALPHABET_SIZE)]


@dataclass
class LofModel:
    points: np.ndarray
    k: int
    k_distances: np.ndarray
    lrd: np.ndarray  # local reachability density per training point


def _neighborhood(dists: np.ndarray, k: int):
    """k-distance and indices of all points within it (ties included)."""
    kdist = float(np.partition(dists, k - 1)[k - 1])
    return kdist, np.nonzero(dists <= kdist)[0]


def _lrd(dists_to_neighbors, neighbor_kdists):
    reach = np.maximum(neighbor_kdists, dists_to_neighbors)
    total = reach.sum()
    if total == 0.0:
        return math.inf
    return len(reach) / total


def train_lof(X, k: int = DEFAULT_K) -> LofModel:
    """Precompute k-distances and densities for all training points."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise TooFewPoints(f"expected a 2-D sample matrix, got shape {X.shape}")
    n = X.shape[0]
    if not 1 <= k < n:
        raise TooFewPoints(f"need more than k={k} training points, got {n}")
    diff = X[:, None, :] - X[None, :, :]
    dmat = np.sqrt((diff * diff).sum(axis=2))
    kdists = np.empty(n)
    neighborhoods = []
    for i in range(n):
        d = np.delete(dmat[i], i)
        others = np.delete(np.arange(n), i)
        kd, local = _neighborhood(d, k)
        kdists[i] = kd
        neighborhoods.append((others[local], d[local]))
    lrd = np.empty(n)
    for i, (idx, d) in enumerate(neighborhoods):
        lrd[i] = _lrd(d, kdists[idx])
    return LofModel(points=X, k=k, k_distances=kdists, lrd=lrd)


def lof_score(m: LofModel, x) -> float:
    """Density ratio of x's neighbors to x; > 1 leans outlier."""
    x = np.asarray(x, dtype=float)
    if x.shape != (m.points.shape[1],):
        raise DimensionMismatch(f"expected {m.points.shape[1]} features, got {x.shape}")
    d = np.sqrt(((m.points - x) ** 2).sum(axis=1))
    _, neigh = _neighborhood(d, m.k)
    lrd_x = _lrd(d[neigh], m.k_distances[neigh])
    ratios = []
    for j in neigh:
        lrd_j = m.lrd[j]
        if math.isinf(lrd_j) and math.isinf(lrd_x):
            ratios.append(1.0)
        elif math.isinf(lrd_x):
            ratios.append(0.0)
        elif math.isinf(lrd_j):
            ratios.append(math.inf)
        else:
            ratios.append(lrd_j / lrd_x)
    return float(sum(ratios) / len(ratios))


def lof_score_many(m: LofModel, X) -> np.ndarray:
    return np.array([lof_score(m, row) for row in np.asarray(X, dtype=float)])
