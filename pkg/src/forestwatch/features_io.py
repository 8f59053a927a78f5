"""Window feature vectors as CSV with a provenance header comment.

Layout: lines starting with '#' carry the generating configuration; the
first regular line is the header `container_id,window_start_ns,
window_len_ns,label,is_attack,<feature columns...>`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

META_COLUMNS = ["container_id", "window_start_ns", "window_len_ns", "label", "is_attack"]


@dataclass
class FeatureTable:
    meta: list[dict]
    X: np.ndarray
    feature_names: list[str]


def write_features_csv(path, meta_rows, X, feature_names, config: dict | None = None):
    X = np.asarray(X, dtype=float)
    if len(meta_rows) != len(X):
        raise ValueError(f"{len(meta_rows)} metadata rows for {len(X)} feature rows")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if config:
            fh.write("# forestwatch " + " ".join(f"{k}={v}" for k, v in sorted(config.items())) + "\n")
        writer = csv.writer(fh)
        writer.writerow(META_COLUMNS + list(feature_names))
        for meta, row in zip(meta_rows, X):
            writer.writerow(
                [
                    meta.get("container_id", ""),
                    meta.get("window_start_ns", 0),
                    meta.get("window_len_ns", 0),
                    meta.get("label", ""),
                    int(meta.get("is_attack", 0)),
                ]
                + [repr(float(v)) for v in row]
            )


def read_features_csv(path) -> FeatureTable:
    meta, rows = [], []
    feature_names: list[str] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader, None)
        if header is None or header[: len(META_COLUMNS)] != META_COLUMNS:
            raise ValueError(f"{path} is not a feature CSV (bad header)")
        feature_names = header[len(META_COLUMNS):]
        for record in reader:
            if not record:
                continue
            meta.append(
                {
                    "container_id": record[0],
                    "window_start_ns": int(record[1]),
                    "window_len_ns": int(record[2]),
                    "label": record[3],
                    "is_attack": int(record[4]),
                }
            )
            rows.append([float(v) for v in record[len(META_COLUMNS):]])
    return FeatureTable(meta=meta, X=np.array(rows, dtype=float), feature_names=feature_names)
