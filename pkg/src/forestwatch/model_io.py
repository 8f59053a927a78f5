"""Versioned structured-text (JSON) persistence for trained models.

Tree structures are stored as the same nested dicts the forests module
builds, so a save/load round trip reproduces predictions exactly.
"""

from __future__ import annotations

import json
from dataclasses import asdict

from .detector import CalibrationResult, PipelineConfig, PipelineModel
from .errors import ModelFormatError
from .forests import IfConfig, IsolationForestModel, RandomForestModel, RfConfig

SCHEMA_VERSION = 1


def rf_to_dict(m: RandomForestModel) -> dict:
    return {
        "config": asdict(m.config),
        "class_names": list(m.class_names),
        "n_features": m.n_features,
        "trees": m.trees,
    }


def rf_from_dict(doc: dict) -> RandomForestModel:
    return RandomForestModel(
        trees=doc["trees"],
        class_names=tuple(doc["class_names"]),
        n_features=int(doc["n_features"]),
        config=RfConfig(**doc["config"]),
    )


def iforest_to_dict(m: IsolationForestModel) -> dict:
    return {
        "config": asdict(m.config),
        "subsample": m.subsample,
        "train_size": m.train_size,
        "n_features": m.n_features,
        "itrees": m.itrees,
    }


def iforest_from_dict(doc: dict) -> IsolationForestModel:
    return IsolationForestModel(
        itrees=doc["itrees"],
        subsample=int(doc["subsample"]),
        train_size=int(doc["train_size"]),
        n_features=int(doc["n_features"]),
        config=IfConfig(**doc["config"]),
    )


def _save_json(doc: dict, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def _load_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"unreadable model file {path}: {exc}") from exc


def _check_header(doc: dict, kind: str):
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ModelFormatError(
            f"model schema version {version} unsupported (expected {SCHEMA_VERSION})"
        )
    if doc.get("kind") != kind:
        raise ModelFormatError(f"expected a {kind} document, got kind={doc.get('kind')!r}")


def save_random_forest(m: RandomForestModel, path):
    _save_json({"schema_version": SCHEMA_VERSION, "kind": "forestwatch-random-forest",
                **rf_to_dict(m)}, path)


def load_random_forest(path) -> RandomForestModel:
    doc = _load_json(path)
    _check_header(doc, "forestwatch-random-forest")
    try:
        return rf_from_dict(doc)
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed random-forest document: {exc}") from exc


def save_isolation_forest(m: IsolationForestModel, path):
    _save_json({"schema_version": SCHEMA_VERSION, "kind": "forestwatch-isolation-forest",
                **iforest_to_dict(m)}, path)


def load_isolation_forest(path) -> IsolationForestModel:
    doc = _load_json(path)
    _check_header(doc, "forestwatch-isolation-forest")
    try:
        return iforest_from_dict(doc)
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed isolation-forest document: {exc}") from exc


def pipeline_to_dict(m: PipelineModel) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "forestwatch-pipeline",
        "aw_len": m.aw_len,
        "threshold": m.threshold,
        "class_names": list(m.class_names),
        "config": asdict(m.config),
        "calibration": None if m.calibration is None else asdict(m.calibration),
        "contamination_actual": list(m.contamination_actual),
        "rf": rf_to_dict(m.rf),
        "class_ifs": [iforest_to_dict(f) for f in m.class_ifs],
    }


def pipeline_from_dict(doc: dict) -> PipelineModel:
    try:
        version = doc["schema_version"]
        if version != SCHEMA_VERSION:
            raise ModelFormatError(
                f"model schema version {version} unsupported (expected {SCHEMA_VERSION})"
            )
        if doc.get("kind") != "forestwatch-pipeline":
            raise ModelFormatError(f"not a pipeline model document: kind={doc.get('kind')!r}")
        cal = doc["calibration"]
        return PipelineModel(
            rf=rf_from_dict(doc["rf"]),
            class_ifs=[iforest_from_dict(d) for d in doc["class_ifs"]],
            threshold=float(doc["threshold"]),
            aw_len=int(doc["aw_len"]),
            class_names=tuple(doc["class_names"]),
            config=PipelineConfig(**doc["config"]),
            calibration=None if cal is None else CalibrationResult(**cal),
            contamination_actual=tuple(doc["contamination_actual"]),
        )
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from exc


def save_pipeline(m: PipelineModel, path):
    _save_json(pipeline_to_dict(m), path)


def load_pipeline(path) -> PipelineModel:
    return pipeline_from_dict(_load_json(path))
