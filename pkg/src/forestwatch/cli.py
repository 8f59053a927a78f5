"""Command-line front end.

Exit codes: 0 = clean run, 2 = at least one alert (mismatch or anomaly),
1 = operational error (bad arguments, unreadable files, model mismatch).
Every command is reproducible under a fixed --seed, and emitted files
carry the generating configuration in a leading '#' comment.
"""

from __future__ import annotations

import argparse
import json
import pathlib
import sys

import numpy as np

from . import __version__
from .baselines import bosc_feature_names, bosc_features
from .detector import (
    ALERT_ANOMALY,
    ALERT_OK,
    PipelineConfig,
    check_expected,
    detect_features,
    train_pipeline,
)
from .embedding import (
    enumerate_aw_types,
    exact_embedding,
    feature_names,
)
from .errors import ForestwatchError, NoCompleteWalks, NoStartNodes
from .evaluation import (
    compute_metrics,
    max_normality_scores,
    metrics_csv_lines,
    roc_csv_lines,
    roc_curve,
)
from .features_io import read_features_csv, write_features_csv
from .graph import build_bigram_graph, to_random_walk_graph
from .ingest import load_trace, window_trace, write_trace
from .model_io import load_pipeline, save_pipeline
from .synth import (
    BUNDLED_OVERLAY,
    BUNDLED_WORKLOADS,
    AnomalySpec,
    bundled_workload,
    gen_anomalous_trace,
    gen_workload_trace,
    load_workload_spec,
)


def _positive_float(text):
    v = float(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forestwatch",
        description="Container workload fingerprinting and anomaly detection "
        "from kernel syscall traces.",
    )
    parser.add_argument("--version", action="version", version=f"forestwatch {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic workload traces")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--duration-s", type=_positive_float, default=100.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workloads", default=",".join(BUNDLED_WORKLOADS),
                   help="comma-separated bundled workload names")
    p.add_argument("--spec", action="append", default=[],
                   help="extra workload spec file (repeatable)")
    p.add_argument("--attack-mix", type=float, default=0.0,
                   help="also emit miner-overlaid traces at this rate share")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("featurize", help="turn traces into per-window feature CSV")
    p.add_argument("traces", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--features", choices=("aw", "bosc"), default="aw")
    p.add_argument("--window-s", type=_positive_float, default=10.0)
    p.add_argument("--aw-len", type=int, default=4)
    p.add_argument("--max-windows", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("canonical", "perf"), default="canonical")
    p.add_argument("--container", default=None, help="keep only this container id")
    p.add_argument("--label", default="", help="class label for every window")
    p.add_argument("--attack", action="store_true", help="mark windows as attack samples")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="train the detection pipeline from feature CSVs")
    p.add_argument("features", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--contamination", type=float, default=0.025)
    p.add_argument("--target-fpr", type=float, default=0.05)
    p.add_argument("--s-fraction", type=float, default=0.7)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="classify every window of a trace")
    p.add_argument("--model", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--expected-class", default=None)
    p.add_argument("--window-s", type=_positive_float, default=10.0)
    p.add_argument("--max-windows", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("canonical", "perf"), default="canonical")
    p.add_argument("--container", default=None)
    p.add_argument("--out", default=None, help="report file (default stdout)")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("evaluate", help="score a model on labeled test features")
    p.add_argument("features", nargs="+")
    p.add_argument("--model", required=True)
    p.add_argument("--metrics-out", required=True)
    p.add_argument("--roc-out", required=True)
    p.add_argument("--num-steps", type=int, default=200)
    p.set_defaults(func=cmd_evaluate)

    return parser


def _trace_format(name: str) -> str:
    return "perf_text" if name == "perf" else "canonical"


def cmd_synth(args) -> int:
    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    specs = [bundled_workload(n) for n in args.workloads.split(",") if n]
    specs += [load_workload_spec(p) for p in args.spec]
    overlay = bundled_workload(BUNDLED_OVERLAY)
    for spec in specs:
        trace = gen_workload_trace(spec, args.duration_s, args.seed)
        path = out_dir / f"{spec.name}.tsv"
        write_trace(trace, path, config={
            "workload": spec.name, "duration_s": args.duration_s, "seed": args.seed,
        })
        print(f"wrote {path} ({len(trace.records)} events)")
        if args.attack_mix > 0:
            atk = gen_anomalous_trace(
                AnomalySpec(base=spec, overlay=overlay, mix_ratio=args.attack_mix),
                args.duration_s,
                args.seed,
            )
            path = out_dir / f"{spec.name}_{overlay.name}.tsv"
            write_trace(atk, path, config={
                "workload": spec.name, "overlay": overlay.name,
                "mix": args.attack_mix, "duration_s": args.duration_s, "seed": args.seed,
            })
            print(f"wrote {path} ({len(atk.records)} events)")
    return 0


def cmd_featurize(args) -> int:
    window_ns = int(round(args.window_s * 1e9))
    if args.features == "aw":
        names = feature_names(args.aw_len)
    else:
        names = bosc_feature_names()
    meta_rows, vectors = [], []
    skipped = 0
    for trace_path in args.traces:
        trace = load_trace(trace_path, format=_trace_format(args.format),
                           container_filter=args.container)
        windows = window_trace(trace, window_ns, max_windows=args.max_windows,
                               rng_seed=args.seed)
        for w in windows:
            if args.features == "aw":
                try:
                    emb = exact_embedding(
                        to_random_walk_graph(build_bigram_graph(w)), args.aw_len
                    )
                except (NoCompleteWalks, NoStartNodes):
                    skipped += 1
                    continue
                vec = emb.probabilities
            else:
                vec = bosc_features(w)
            meta_rows.append({
                "container_id": w.container_id,
                "window_start_ns": w.window_start_ns,
                "window_len_ns": w.window_len_ns,
                "label": args.label,
                "is_attack": 1 if args.attack else 0,
            })
            vectors.append(vec)
    if skipped:
        print(f"skipped {skipped} windows too sparse to embed", file=sys.stderr)
    if not vectors:
        raise ForestwatchError("no usable windows in the given traces")
    write_features_csv(args.out, meta_rows, np.array(vectors, dtype=float), names, config={
        "features": args.features, "window_s": args.window_s,
        "aw_len": args.aw_len if args.features == "aw" else "",
        "seed": args.seed, "version": __version__,
    })
    print(f"wrote {args.out} ({len(vectors)} windows x {len(names)} features)")
    return 0


def _infer_aw_len(names: list[str]) -> int:
    if not names or not all(n.startswith("aw_") for n in names):
        raise ForestwatchError(
            "training expects anonymous-walk feature CSVs (aw_* columns)"
        )
    length = len(names[0]) - 3
    if len(names) != len(enumerate_aw_types(length)):
        raise ForestwatchError(
            f"feature count {len(names)} does not match walk length {length}"
        )
    return length


def cmd_train(args) -> int:
    by_class: dict[str, list] = {}
    names = None
    for path in args.features:
        table = read_features_csv(path)
        names = table.feature_names if names is None else names
        if table.feature_names != names:
            raise ForestwatchError(f"feature columns of {path} differ from earlier files")
        for meta, row in zip(table.meta, table.X):
            if meta["is_attack"]:
                continue  # the pipeline trains on normal behavior only
            if not meta["label"]:
                raise ForestwatchError(f"unlabeled benign row in {path}")
            by_class.setdefault(meta["label"], []).append(row)
    aw_len = _infer_aw_len(names or [])
    cfg = PipelineConfig(
        aw_len=aw_len,
        num_trees=args.trees,
        s_set_fraction=args.s_fraction,
        contamination_rate=args.contamination,
        target_fpr=args.target_fpr,
        rng_seed=args.seed,
    )
    model = train_pipeline({c: np.array(v) for c, v in by_class.items()}, cfg)
    save_pipeline(model, args.out)
    cal = model.calibration
    print(f"wrote {args.out}")
    print(f"classes: {', '.join(model.class_names)}")
    print(f"threshold: {model.threshold:.6f} (validation fpr {cal.fpr:.4f}"
          f"{', WARNING: target fpr unattainable' if cal.warning else ''})")
    return 0


def cmd_detect(args) -> int:
    model = load_pipeline(args.model)
    trace = load_trace(args.trace, format=_trace_format(args.format),
                       container_filter=args.container)
    windows = window_trace(trace, int(round(args.window_s * 1e9)),
                           max_windows=args.max_windows, rng_seed=args.seed)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    alerts = 0
    skipped = 0
    try:
        out.write(f"# forestwatch detect model={args.model} trace={args.trace} "
                  f"window_s={args.window_s} seed={args.seed}\n")
        for w in windows:
            try:
                emb = exact_embedding(
                    to_random_walk_graph(build_bigram_graph(w)), model.aw_len
                )
            except (NoCompleteWalks, NoStartNodes):
                skipped += 1
                continue
            result = detect_features(model, emb.probabilities)
            if args.expected_class is not None:
                alert = check_expected(result, args.expected_class)
            else:
                alert = ALERT_ANOMALY if result.is_anomaly else ALERT_OK
            if alert != ALERT_OK:
                alerts += 1
            out.write(json.dumps({
                "window_start_ns": w.window_start_ns,
                "window_len_ns": w.window_len_ns,
                "container_id": w.container_id,
                "rf_class": result.rf_class,
                "probs": [round(float(v), 9) for v in result.rf_probs],
                "scores": [round(float(v), 9) for v in result.if_scores],
                "verdict": result.verdict_class if result.verdict_class else "anomaly",
                "alert": alert,
            }) + "\n")
    finally:
        if args.out:
            out.close()
    if skipped:
        print(f"skipped {skipped} windows too sparse to embed", file=sys.stderr)
    return 2 if alerts else 0


def cmd_evaluate(args) -> int:
    model = load_pipeline(args.model)
    pairs = []
    by_scenario: dict[str, list] = {}
    scores = []
    labels = []
    for path in args.features:
        table = read_features_csv(path)
        for meta, row in zip(table.meta, table.X):
            expected = meta["label"]
            if expected not in model.class_names:
                raise ForestwatchError(
                    f"label {expected!r} in {path} is not a model class"
                )
            result = detect_features(model, row, expected=expected)
            flagged = result.is_anomaly or bool(result.mismatch)
            is_attack = bool(meta["is_attack"])
            pairs.append((is_attack, flagged))
            by_scenario.setdefault(expected, []).append((is_attack, flagged))
            scores.append(result.if_scores)
            labels.append(is_attack)
    rows = {"overall": compute_metrics(pairs)}
    for scenario in sorted(by_scenario):
        rows[scenario] = compute_metrics(by_scenario[scenario])
    provenance = f"model={args.model} num_steps={args.num_steps}"
    with open(args.metrics_out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(metrics_csv_lines(rows, header_comment=provenance)) + "\n")
    points = roc_curve(max_normality_scores(np.array(scores)), labels,
                       num_steps=args.num_steps)
    with open(args.roc_out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(roc_csv_lines(points, header_comment=provenance)) + "\n")
    overall = rows["overall"]
    print(f"wrote {args.metrics_out} and {args.roc_out}")
    print(f"overall: tpr={overall.tpr} fpr={overall.fpr} "
          f"precision={overall.precision} f1={overall.f1}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (ForestwatchError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
