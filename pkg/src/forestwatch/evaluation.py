"""Dataset splitting, detection metrics, and ROC sweeps.

Undefined ratios (0/0) are reported as None rather than 0 so they cannot
silently corrupt averages. ROC thresholds run over a quantile grid of the
observed scores (default 200 steps), which keeps curves stable on skewed
score distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .detector import combine_inliers, draw_contamination
from .errors import EmptyInput, InsufficientData, SingleClassInput


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    s_set_fraction: float = 0.7
    contamination_rate: float = 0.025
    synthetic_contamination_rate: float = 0.05
    rng_seed: int = 0

    def validate(self):
        for name in ("train_fraction", "s_set_fraction", "contamination_rate",
                     "synthetic_contamination_rate"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {v}")


@dataclass
class DatasetSplit:
    train: dict  # class -> benign training vectors
    test_benign: dict
    test_attacks: dict  # expected class -> attack vectors (all test-only)
    s_set: tuple  # (X, labels) for the supervised stage
    u_sets: dict  # class -> vectors for that class's anomaly stage


@dataclass(frozen=True)
class Metrics:
    tpr: float | None
    fpr: float | None
    precision: float | None
    f1: float | None
    m_n: int
    m_a: int
    m_tp: int
    m_fp: int


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    fpr: float
    tpr: float


def split_dataset(benign: dict, attacks: dict | None, spec: SplitSpec = SplitSpec()) -> DatasetSplit:
    """Per-class benign train/test split; every attack sample is test-only.

    Also materializes the supervised subset (s_set_fraction of the training
    pool, stratified) and the per-class contaminated sets used by the
    unsupervised stage.
    """
    spec.validate()
    classes = sorted(benign)
    arrays = {c: np.asarray(benign[c], dtype=float) for c in classes}
    for c in classes:
        if len(arrays[c]) < 10:
            raise InsufficientData(f"class {c!r} has {len(arrays[c])} samples, need >= 10")
    rng = np.random.default_rng([spec.rng_seed, 1])
    train, test_benign = {}, {}
    for c in classes:
        a = arrays[c]
        n = len(a)
        k = min(max(int(round(spec.train_fraction * n)), 1), n - 1)
        perm = rng.permutation(n)
        train[c] = a[perm[:k]]
        test_benign[c] = a[perm[k:]]

    s_rng = np.random.default_rng([spec.rng_seed, 2])
    s_parts, s_labels = [], []
    for c in classes:
        a = train[c]
        k = min(max(int(round(spec.s_set_fraction * len(a))), 1), len(a))
        perm = s_rng.permutation(len(a))
        s_parts.append(a[perm[:k]])
        s_labels.extend([c] * k)
    s_set = (np.vstack(s_parts), s_labels)

    u_rng = np.random.default_rng([spec.rng_seed, 3])
    u_sets = {}
    for c in classes:
        foreign = np.vstack([train[o] for o in classes if o != c])
        u_sets[c] = np.vstack([train[c], draw_contamination(foreign, spec.contamination_rate, u_rng)])

    test_attacks = {}
    if attacks:
        for c, rows in sorted(attacks.items()):
            test_attacks[c] = np.asarray(rows, dtype=float)
    return DatasetSplit(
        train=train,
        test_benign=test_benign,
        test_attacks=test_attacks,
        s_set=s_set,
        u_sets=u_sets,
    )


def synth_contaminate(train, rate: float, rng_seed: int) -> np.ndarray:
    """Append ceil(rate*n) synthetic rows, each coordinate drawn
    independently from that coordinate's empirical distribution."""
    train = np.asarray(train, dtype=float)
    if not 0.0 < rate < 1.0:
        raise ValueError(f"rate must be in (0, 1), got {rate}")
    n, d = train.shape
    m = math.ceil(rate * n)
    rng = np.random.default_rng(rng_seed)
    synthetic = np.empty((m, d))
    for j in range(d):
        synthetic[:, j] = train[rng.integers(0, n, size=m), j]
    return np.vstack([train, synthetic])


def f1_score(precision, tpr) -> float | None:
    """Harmonic mean of precision and detection rate; None when undefined."""
    if precision is None or tpr is None or (precision + tpr) <= 0:
        return None
    return 2.0 * precision * tpr / (precision + tpr)


def compute_metrics(verdicts) -> Metrics:
    """Aggregate (is_attack, flagged) pairs into detection metrics."""
    pairs = list(verdicts)
    if not pairs:
        raise EmptyInput("no verdicts to score")
    m_a = sum(1 for is_attack, _ in pairs if is_attack)
    m_n = len(pairs) - m_a
    m_tp = sum(1 for is_attack, flagged in pairs if is_attack and flagged)
    m_fp = sum(1 for is_attack, flagged in pairs if not is_attack and flagged)
    tpr = m_tp / m_a if m_a > 0 else None
    fpr = m_fp / m_n if m_n > 0 else None
    precision = m_tp / (m_tp + m_fp) if (m_tp + m_fp) > 0 else None
    return Metrics(tpr=tpr, fpr=fpr, precision=precision, f1=f1_score(precision, tpr),
                   m_n=m_n, m_a=m_a, m_tp=m_tp, m_fp=m_fp)


def _threshold_grid(scores: np.ndarray, num_steps: int) -> np.ndarray:
    return np.quantile(scores, np.linspace(0.0, 1.0, num_steps + 1))


def roc_curve(scores, labels, num_steps: int = 200) -> list[RocPoint]:
    """Sweep a scalar anomaly score (higher = more anomalous).

    A sample is flagged when its score is >= the threshold. Points come
    back sorted by (fpr, tpr); with thresholds on a common scalar the
    resulting curve is a monotone staircase.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    if labels.all() or not labels.any():
        raise SingleClassInput("need both attack and benign samples")
    points = []
    n_a = int(labels.sum())
    n_n = len(labels) - n_a
    for theta in _threshold_grid(scores, num_steps):
        flagged = scores >= theta
        tpr = float((flagged & labels).sum() / n_a)
        fpr = float((flagged & ~labels).sum() / n_n)
        points.append(RocPoint(threshold=float(theta), fpr=fpr, tpr=tpr))
    return sorted(points, key=lambda p: (p.fpr, p.tpr))


def max_normality_scores(if_scores) -> np.ndarray:
    """Scalar anomaly statistic per sample: the best (lowest) class score.

    A window that fits no class keeps a high value even at its most
    favorable class, so thresholding this scalar yields a monotone ROC for
    the ensemble pipeline.
    """
    return np.asarray(if_scores, dtype=float).min(axis=1)


def pipeline_roc(if_scores, expected_idx, labels, num_steps: int = 200) -> list[RocPoint]:
    """Rule-table sweep: at each shared threshold a sample is flagged when
    its verdict is not its expected benign class."""
    if_scores = np.asarray(if_scores, dtype=float)
    expected_idx = np.asarray(expected_idx, dtype=int)
    labels = np.asarray(labels, dtype=bool)
    if labels.all() or not labels.any():
        raise SingleClassInput("need both attack and benign samples")
    n_a = int(labels.sum())
    n_n = len(labels) - n_a
    points = []
    for theta in _threshold_grid(if_scores.ravel(), num_steps):
        flagged = np.empty(len(if_scores), dtype=bool)
        for i, row in enumerate(if_scores < theta):
            winner = combine_inliers(row)
            flagged[i] = winner is None or winner != expected_idx[i]
        tpr = float((flagged & labels).sum() / n_a)
        fpr = float((flagged & ~labels).sum() / n_n)
        points.append(RocPoint(threshold=float(theta), fpr=fpr, tpr=tpr))
    return sorted(points, key=lambda p: (p.fpr, p.tpr))


def _fmt(v) -> str:
    return "" if v is None else f"{v:.6g}"


def metrics_csv_lines(rows: dict, header_comment: str | None = None) -> list[str]:
    """CSV lines `scenario,tpr,fpr,precision,f1` (absent metrics left empty)."""
    lines = []
    if header_comment:
        lines.append(f"# {header_comment}")
    lines.append("scenario,tpr,fpr,precision,f1")
    for scenario, m in rows.items():
        lines.append(
            f"{scenario},{_fmt(m.tpr)},{_fmt(m.fpr)},{_fmt(m.precision)},{_fmt(m.f1)}"
        )
    return lines


def roc_csv_lines(points, header_comment: str | None = None) -> list[str]:
    lines = []
    if header_comment:
        lines.append(f"# {header_comment}")
    lines.append("threshold,fpr,tpr")
    for p in points:
        lines.append(f"{p.threshold:.9g},{p.fpr:.6g},{p.tpr:.6g}")
    return lines
