import numpy as np
import pytest

from forestwatch.embedding import exact_embedding
from forestwatch.graph import build_bigram_graph, to_random_walk_graph
from forestwatch.ingest import window_trace
from forestwatch.synth import (
    AnomalySpec,
    bundled_workload,
    gen_anomalous_trace,
    gen_workload_trace,
)

WINDOW_NS = 10_000_000_000


def embed_windows(windows, aw_len=4):
    rows = []
    for w in windows:
        emb = exact_embedding(to_random_walk_graph(build_bigram_graph(w)), aw_len)
        rows.append(emb.probabilities)
    return np.array(rows)


def workload_features(name, n_windows, seed, aw_len=4, mix=None, window_s=10):
    """AW feature matrix for n_windows windows of a bundled workload.

    With mix set, the miner overlay is interleaved at that rate share.
    """
    spec = bundled_workload(name)
    duration = float(n_windows * window_s)
    if mix is None:
        trace = gen_workload_trace(spec, duration, seed)
    else:
        trace = gen_anomalous_trace(
            AnomalySpec(base=spec, overlay=bundled_workload("miner"), mix_ratio=mix),
            duration,
            seed,
        )
    windows = window_trace(trace, window_s * 1_000_000_000)
    return embed_windows(windows, aw_len)


@pytest.fixture(scope="session")
def small_workload_features():
    """40 windows per bundled class plus 20 miner-overlaid windows each."""
    benign = {name: workload_features(name, 40, seed=50 + i) for i, name in
              enumerate(("dataproc", "mediasrv", "searchidx"))}
    attacked = {name: workload_features(name, 20, seed=90 + i, mix=0.3) for i, name in
                enumerate(("dataproc", "mediasrv", "searchidx"))}
    return benign, attacked
