"""Three-stage detector: embedding -> random-forest class probabilities ->
per-class isolation forests -> rule-based verdict.

Score orientation: isolation scores are "higher = more anomalous", so a
window is an inlier of class k when its k-th score is strictly below the
shared threshold. The decision rules are stated over those inlier flags:

- exactly one inlier, class n  -> the window belongs to class n;
- zero inliers                 -> anomaly (fits nothing);
- two or more inliers          -> anomaly (ambiguous fit).

Stage 3 sees only the stage-2 probability vector (dimension = number of
classes), not the raw embedding. One global threshold is shared by all
class forests; it is calibrated on benign validation data held out of the
stage-2 training subset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .embedding import exact_embedding
from .errors import (
    EmptyValidation,
    InsufficientData,
    UnknownExpectedClass,
)
from .forests import (
    IfConfig,
    IsolationForestModel,
    RandomForestModel,
    RfConfig,
    if_score,
    if_score_many,
    rf_predict_proba,
    rf_predict_proba_many,
    train_isolation_forest,
    train_random_forest,
)
from .graph import build_bigram_graph, to_random_walk_graph
from .ingest import SyscallSequence

ALERT_OK = "ok"
ALERT_MISMATCH = "mismatch"
ALERT_ANOMALY = "anomaly"

MIN_SAMPLES_PER_CLASS = 20


@dataclass(frozen=True)
class PipelineConfig:
    aw_len: int = 4
    num_trees: int = 100
    s_set_fraction: float = 0.7
    contamination_rate: float = 0.025
    target_fpr: float = 0.05
    if_subsample: int = 256
    rng_seed: int = 0


@dataclass(frozen=True)
class CalibrationResult:
    threshold: float
    fpr: float
    warning: bool  # set when no threshold reached the target rate


@dataclass
class PipelineModel:
    rf: RandomForestModel
    class_ifs: list[IsolationForestModel]
    threshold: float
    aw_len: int
    class_names: tuple
    config: PipelineConfig
    calibration: CalibrationResult | None = None
    contamination_actual: tuple[float, ...] = ()


@dataclass(frozen=True)
class DetectionResult:
    rf_class: str
    rf_probs: np.ndarray
    if_scores: np.ndarray
    verdict_class: str | None  # None means anomaly
    class_names: tuple
    mismatch: bool | None = None

    @property
    def is_anomaly(self) -> bool:
        return self.verdict_class is None


def combine_inliers(inliers) -> int | None:
    """Index of the single inlier class, or None for an anomaly verdict."""
    hits = [i for i, flag in enumerate(inliers) if flag]
    return hits[0] if len(hits) == 1 else None


def draw_contamination(foreign: np.ndarray, rate: float, rng) -> np.ndarray:
    """Seeded draw (without replacement) of ceil(rate * |foreign|) rows,
    capped at the pool size."""
    want = math.ceil(rate * len(foreign))
    take = min(want, len(foreign))
    pick = np.sort(rng.choice(len(foreign), size=take, replace=False))
    return foreign[pick]


def _score_matrix(m: PipelineModel, probs: np.ndarray) -> np.ndarray:
    return np.column_stack([if_score_many(f, probs) for f in m.class_ifs])


def calibrate_threshold(
    m: PipelineModel,
    validation_X,
    validation_y,
    target_fpr: float,
) -> CalibrationResult:
    """Smallest threshold whose benign FPR on validation is <= target_fpr.

    A benign validation sample counts as a false positive when its verdict
    is not its own class. The FPR as a function of the threshold only
    changes where a threshold crosses an observed score, so the candidates
    are the values just above each distinct score; the first qualifying one
    is returned. If none reaches the target, the FPR-minimizing candidate
    comes back with the warning flag set.
    """
    validation_X = np.asarray(validation_X, dtype=float)
    if len(validation_X) == 0:
        raise EmptyValidation("no validation samples")
    if not 0.0 <= target_fpr < 1.0:
        raise ValueError(f"target_fpr must be in [0, 1), got {target_fpr}")
    idx_of = {c: i for i, c in enumerate(m.class_names)}
    try:
        y_idx = np.array([idx_of[v] for v in validation_y])
    except KeyError as exc:
        raise UnknownExpectedClass(f"validation label {exc} not a model class") from exc
    probs = rf_predict_proba_many(m.rf, validation_X)
    scores = _score_matrix(m, probs)
    candidates = np.nextafter(np.unique(scores), 1.0)
    candidates = candidates[(candidates > 0.0) & (candidates < 1.0)]
    if len(candidates) == 0:
        return CalibrationResult(threshold=0.5, fpr=1.0, warning=True)
    own = np.arange(len(scores)), y_idx
    best_theta, best_fpr = None, math.inf
    for theta in candidates:
        inliers = scores < theta
        ok = (inliers.sum(axis=1) == 1) & inliers[own]
        fpr = float(1.0 - ok.mean())
        if fpr <= target_fpr:
            return CalibrationResult(threshold=float(theta), fpr=fpr, warning=False)
        if fpr < best_fpr:
            best_theta, best_fpr = float(theta), fpr
    return CalibrationResult(threshold=best_theta, fpr=best_fpr, warning=True)


def train_pipeline(training: dict, cfg: PipelineConfig = PipelineConfig()) -> PipelineModel:
    """Train stage 2 and stage 3 from per-class feature vectors.

    The random forest learns from a seeded s_set_fraction subsample of each
    class; the held-out remainder calibrates the threshold. Each class
    forest is trained on the probability vectors of all of that class's
    samples plus a contamination draw from the other classes.
    """
    class_names = tuple(sorted(training))
    if len(class_names) < 2:
        raise InsufficientData(f"need >= 2 classes, got {len(class_names)}")
    arrays = {}
    dims = set()
    for c in class_names:
        a = np.asarray(training[c], dtype=float)
        if a.ndim != 2 or len(a) < MIN_SAMPLES_PER_CLASS:
            raise InsufficientData(
                f"class {c!r} needs >= {MIN_SAMPLES_PER_CLASS} samples, got {a.shape}"
            )
        arrays[c] = a
        dims.add(a.shape[1])
    if len(dims) != 1:
        raise InsufficientData(f"inconsistent feature dimensions {sorted(dims)}")

    split_rng = np.random.default_rng([cfg.rng_seed, 101])
    cont_rng = np.random.default_rng([cfg.rng_seed, 102])

    s_parts, s_labels, val_parts, val_labels = [], [], [], []
    for c in class_names:
        a = arrays[c]
        n = len(a)
        k = min(max(int(round(cfg.s_set_fraction * n)), 1), n - 1)
        perm = split_rng.permutation(n)
        s_parts.append(a[perm[:k]])
        s_labels.extend([c] * k)
        val_parts.append(a[perm[k:]])
        val_labels.extend([c] * (n - k))
    rf = train_random_forest(
        np.vstack(s_parts), s_labels, RfConfig(num_trees=cfg.num_trees, rng_seed=cfg.rng_seed)
    )

    class_ifs = []
    actual_rates = []
    for ci, c in enumerate(class_names):
        foreign = np.vstack([arrays[o] for o in class_names if o != c])
        picked = draw_contamination(foreign, cfg.contamination_rate, cont_rng)
        u_set = np.vstack([arrays[c], picked])
        actual_rates.append(len(picked) / len(foreign))
        probs = rf_predict_proba_many(rf, u_set)
        class_ifs.append(
            train_isolation_forest(
                probs,
                IfConfig(
                    num_trees=cfg.num_trees,
                    subsample=cfg.if_subsample,
                    rng_seed=cfg.rng_seed + ci,
                ),
            )
        )

    model = PipelineModel(
        rf=rf,
        class_ifs=class_ifs,
        threshold=0.5,
        aw_len=cfg.aw_len,
        class_names=class_names,
        config=cfg,
        contamination_actual=tuple(actual_rates),
    )
    cal = calibrate_threshold(model, np.vstack(val_parts), val_labels, cfg.target_fpr)
    model.threshold = cal.threshold
    model.calibration = cal
    return model


def detect_features(
    m: PipelineModel, features, expected: str | None = None
) -> DetectionResult:
    """Run stages 2-3 and the decision rules on an embedding vector."""
    probs = rf_predict_proba(m.rf, features)
    scores = np.array([if_score(f, probs) for f in m.class_ifs])
    winner = combine_inliers(scores < m.threshold)
    verdict = m.class_names[winner] if winner is not None else None
    mismatch = None
    if expected is not None:
        if expected not in m.class_names:
            raise UnknownExpectedClass(f"{expected!r} not in {m.class_names}")
        mismatch = verdict is not None and verdict != expected
    return DetectionResult(
        rf_class=m.class_names[int(np.argmax(probs))],
        rf_probs=probs,
        if_scores=scores,
        verdict_class=verdict,
        class_names=m.class_names,
        mismatch=mismatch,
    )


def detect(m: PipelineModel, seq: SyscallSequence, expected: str | None = None) -> DetectionResult:
    """Embed one window and classify it."""
    emb = exact_embedding(to_random_walk_graph(build_bigram_graph(seq)), m.aw_len)
    return detect_features(m, emb.probabilities, expected=expected)


def check_expected(result: DetectionResult, expected: str) -> str:
    """Collapse a verdict to the alert surfaced for a monitored container."""
    if expected not in result.class_names:
        raise UnknownExpectedClass(f"{expected!r} not in {result.class_names}")
    if result.is_anomaly:
        return ALERT_ANOMALY
    if result.verdict_class != expected:
        return ALERT_MISMATCH
    return ALERT_OK
