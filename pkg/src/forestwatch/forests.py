"""From-scratch tree ensembles: a random-forest classifier and an
isolation forest with the standard 2^(-E(h)/c(n)) anomaly score.

Trees are plain nested dicts so they persist as structured text unchanged:
random-forest internal nodes are {"f": feature, "t": threshold, "l":..,
"r":..} with `x <= t` going left, leaves are {"counts": [per-class]};
isolation-tree internal nodes are {"f":.., "v":.., "l":.., "r":..} with
`x < v` going left, external nodes are {"size": n}.

Every tree draws its randomness from a generator seeded with
(seed, tree_index), so training is reproducible and independent of
evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataset, DimensionMismatch

EULER_GAMMA = 0.5772156649


@dataclass(frozen=True)
class RfConfig:
    num_trees: int = 100
    max_features: int | None = None  # None -> floor(sqrt(d))
    min_samples_split: int = 2
    rng_seed: int = 0


@dataclass(frozen=True)
class IfConfig:
    num_trees: int = 100
    subsample: int = 256  # capped at the training-set size
    rng_seed: int = 0


@dataclass
class RandomForestModel:
    trees: list
    class_names: tuple
    n_features: int
    config: RfConfig


@dataclass
class IsolationForestModel:
    itrees: list
    subsample: int
    train_size: int
    n_features: int
    config: IfConfig


# --- random forest ---

def _gini_best_split(Xn, yn, feats, n_classes):
    """Best (feature, threshold) by weighted Gini over candidate features.

    Thresholds are midpoints between consecutive distinct sorted values.
    Ties keep the lowest feature index, then the smallest threshold.
    Returns None when every candidate feature is constant on the node.
    """
    m = len(yn)
    best_impurity = math.inf
    best = None
    for f in feats:
        col = Xn[:, f]
        order = np.argsort(col, kind="stable")
        xs = col[order]
        if xs[0] == xs[-1]:
            continue
        onehot = np.zeros((m, n_classes))
        onehot[np.arange(m), yn[order]] = 1.0
        cum = np.cumsum(onehot, axis=0)
        cut = np.nonzero(xs[1:] > xs[:-1])[0]
        nl = (cut + 1).astype(float)
        nr = m - nl
        left = cum[cut]
        right = cum[-1] - left
        gini_l = 1.0 - np.sum((left / nl[:, None]) ** 2, axis=1)
        gini_r = 1.0 - np.sum((right / nr[:, None]) ** 2, axis=1)
        weighted = (nl * gini_l + nr * gini_r) / m
        j = int(np.argmin(weighted))  # first minimum -> smallest threshold
        if weighted[j] < best_impurity:
            best_impurity = float(weighted[j])
            best = (int(f), float((xs[cut[j]] + xs[cut[j] + 1]) / 2.0))
    return best


def _grow_rf_tree(X, y, idx, rng, n_classes, max_features, min_split):
    counts = np.bincount(y[idx], minlength=n_classes)
    if counts.max() == counts.sum() or len(idx) < min_split:
        return {"counts": counts.tolist()}
    feats = np.sort(rng.choice(X.shape[1], size=max_features, replace=False))
    split = _gini_best_split(X[idx], y[idx], feats, n_classes)
    if split is None:
        return {"counts": counts.tolist()}
    f, thr = split
    mask = X[idx, f] <= thr
    return {
        "f": f,
        "t": thr,
        "l": _grow_rf_tree(X, y, idx[mask], rng, n_classes, max_features, min_split),
        "r": _grow_rf_tree(X, y, idx[~mask], rng, n_classes, max_features, min_split),
    }


def train_random_forest(X, y, cfg: RfConfig = RfConfig()) -> RandomForestModel:
    """Bagged Gini trees: one bootstrap sample of size n per tree."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 1:
        raise DegenerateDataset(f"need a (n>=2, d>=1) matrix, got shape {X.shape}")
    if len(y) != X.shape[0]:
        raise DegenerateDataset("X and y lengths differ")
    class_names = tuple(sorted(set(y)))
    if len(class_names) < 2:
        raise DegenerateDataset("training data holds a single class")
    to_idx = {c: i for i, c in enumerate(class_names)}
    y_idx = np.array([to_idx[v] for v in y], dtype=np.int64)
    n, d = X.shape
    max_features = cfg.max_features if cfg.max_features is not None else max(1, int(math.sqrt(d)))
    max_features = min(max_features, d)
    trees = []
    for t in range(cfg.num_trees):
        rng = np.random.default_rng([cfg.rng_seed, t])
        boot = rng.integers(0, n, size=n)
        trees.append(
            _grow_rf_tree(
                X, y_idx, boot, rng, len(class_names), max_features, cfg.min_samples_split
            )
        )
    return RandomForestModel(trees=trees, class_names=class_names, n_features=d, config=cfg)


def _leaf_for(tree, x):
    node = tree
    while "counts" not in node:
        node = node["l"] if x[node["f"]] <= node["t"] else node["r"]
    return node


def rf_predict_proba(m: RandomForestModel, x) -> np.ndarray:
    """Average of per-tree leaf class frequencies; sums to 1."""
    x = np.asarray(x, dtype=float)
    if x.shape != (m.n_features,):
        raise DimensionMismatch(f"expected {m.n_features} features, got {x.shape}")
    acc = np.zeros(len(m.class_names))
    for tree in m.trees:
        counts = np.array(_leaf_for(tree, x)["counts"], dtype=float)
        acc += counts / counts.sum()
    return acc / len(m.trees)


def rf_predict_proba_many(m: RandomForestModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.array([rf_predict_proba(m, row) for row in X])


def rf_predict(m: RandomForestModel, x):
    """Most probable class; ties resolve to the lowest class index."""
    return m.class_names[int(np.argmax(rf_predict_proba(m, x)))]


# --- isolation forest ---

def avg_path_c(n: int) -> float:
    """Expected unsuccessful-search path length in a BST of n points.

    Uses the harmonic approximation H(i) = ln(i) + Euler-Mascheroni.
    """
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    return 2.0 * (math.log(n - 1) + EULER_GAMMA) - 2.0 * (n - 1) / n


def _grow_itree(Xs, idx, depth, limit, rng):
    if depth >= limit or len(idx) <= 1:
        return {"size": int(len(idx))}
    sub = Xs[idx]
    mins = sub.min(axis=0)
    maxs = sub.max(axis=0)
    candidates = np.nonzero(maxs > mins)[0]
    if len(candidates) == 0:
        return {"size": int(len(idx))}  # all duplicate points
    f = int(candidates[int(rng.integers(len(candidates)))])
    lo, hi = float(mins[f]), float(maxs[f])
    v = rng.uniform(lo, hi)
    while v <= lo:  # guard: split must fall strictly between min and max
        v = rng.uniform(lo, hi)
    mask = sub[:, f] < v
    return {
        "f": f,
        "v": float(v),
        "l": _grow_itree(Xs, idx[mask], depth + 1, limit, rng),
        "r": _grow_itree(Xs, idx[~mask], depth + 1, limit, rng),
    }


def train_isolation_forest(X, cfg: IfConfig = IfConfig()) -> IsolationForestModel:
    """Ensemble of random-partition trees over seeded subsamples."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DegenerateDataset(f"need >= 2 points, got shape {X.shape}")
    n = X.shape[0]
    psi = min(cfg.subsample, n)
    limit = math.ceil(math.log2(psi))
    itrees = []
    for t in range(cfg.num_trees):
        rng = np.random.default_rng([cfg.rng_seed, t])
        idx = rng.choice(n, size=psi, replace=False)
        itrees.append(_grow_itree(X, idx, 0, limit, rng))
    return IsolationForestModel(
        itrees=itrees, subsample=psi, train_size=n, n_features=X.shape[1], config=cfg
    )


def _path_length(tree, x):
    node = tree
    edges = 0
    while "size" not in node:
        node = node["l"] if x[node["f"]] < node["v"] else node["r"]
        edges += 1
    return edges + avg_path_c(node["size"])


def score_from_mean_path(mean_path: float, psi: int) -> float:
    """Anomaly score 2^(-E(h)/c(psi)); 0.5 at the average path length."""
    return float(2.0 ** (-mean_path / avg_path_c(psi)))


def if_score(m: IsolationForestModel, x) -> float:
    """Anomaly score in (0, 1]; higher means more isolated."""
    x = np.asarray(x, dtype=float)
    if x.shape != (m.n_features,):
        raise DimensionMismatch(f"expected {m.n_features} features, got {x.shape}")
    mean_path = sum(_path_length(t, x) for t in m.itrees) / len(m.itrees)
    return score_from_mean_path(mean_path, m.subsample)


def if_score_many(m: IsolationForestModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.array([if_score(m, row) for row in X])
