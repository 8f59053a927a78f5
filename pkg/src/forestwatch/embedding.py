"""Anonymous-walk embedding of a random-walk graph.

A walk is anonymized by replacing every node with the position (1-based) of
its first occurrence in the walk, e.g. (a, b, a, c) -> (1, 2, 1, 3). The
embedding of a graph at walk length l is the probability, under the
random-walk process, of each anonymous-walk type of length l.

Conventions fixed here and relied on by trained models:
- "length l" counts node visits (l - 1 steps), so length 4 has Bell(4) = 15
  types;
- walk starts are uniform over non-sink nodes;
- walks that reach a sink before their last visit are dropped and the
  remaining mass renormalized to 1;
- embedding index order is lexicographic over the anonymized patterns.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import EmptyWalk, LengthOutOfRange, NoCompleteWalks, NoStartNodes
from .graph import RandomWalkGraph

MAX_WALK_LEN = 8  # Bell(8) = 4140 features; longer is impractical


def anonymize(walk) -> tuple[int, ...]:
    """Map a walk of node IDs to its first-occurrence index pattern."""
    if len(walk) == 0:
        raise EmptyWalk("cannot anonymize an empty walk")
    order: dict = {}
    out = []
    for node in walk:
        rank = order.get(node)
        if rank is None:
            rank = len(order) + 1
            order[node] = rank
        out.append(rank)
    return tuple(out)


@lru_cache(maxsize=None)
def enumerate_aw_types(walk_len: int) -> tuple[tuple[int, ...], ...]:
    """All anonymous-walk patterns of a given length, lexicographically.

    Patterns are exactly the restricted growth strings: first element 1,
    each next element at most one above the running maximum. This order
    defines the embedding index everywhere, including persisted models.
    """
    if not 1 <= walk_len <= MAX_WALK_LEN:
        raise LengthOutOfRange(f"walk_len must be in 1..{MAX_WALK_LEN}, got {walk_len}")
    patterns: list[tuple[int, ...]] = []

    def extend(prefix: list[int], mx: int):
        if len(prefix) == walk_len:
            patterns.append(tuple(prefix))
            return
        for v in range(1, mx + 2):
            prefix.append(v)
            extend(prefix, max(mx, v))
            prefix.pop()

    extend([1], 1)
    return tuple(patterns)


@dataclass(frozen=True)
class AwEmbedding:
    """Probability vector over anonymous-walk types in canonical order."""

    probabilities: np.ndarray
    walk_len: int


def _start_nodes(r: RandomWalkGraph) -> list[int]:
    starts = sorted(n for n in r.nodes if n not in r.sink_nodes)
    if not starts:
        raise NoStartNodes("every node is a sink")
    return starts


def exact_embedding(r: RandomWalkGraph, walk_len: int) -> AwEmbedding:
    """Exact anonymous-walk distribution by full walk enumeration.

    Walks are aggregated by anonymized pattern while being extended, so two
    walks only diverge in the recursion when their patterns or node bindings
    differ. Raises NoCompleteWalks when every walk dies at a sink.
    """
    patterns = enumerate_aw_types(walk_len)
    index = {p: i for i, p in enumerate(patterns)}
    starts = _start_nodes(r)
    trans = r.transitions
    acc = np.zeros(len(patterns))
    pattern: list[int] = [1]

    def walk_from(node: int, prob: float, order: dict[int, int]):
        if len(pattern) == walk_len:
            acc[index[tuple(pattern)]] += prob
            return
        outs = trans.get(node)
        if outs is None:  # sink before the walk is complete: mass is dropped
            return
        for dst, p in outs:
            rank = order.get(dst)
            if rank is None:
                order[dst] = len(order) + 1
                pattern.append(order[dst])
                walk_from(dst, prob * p, order)
                pattern.pop()
                del order[dst]
            else:
                pattern.append(rank)
                walk_from(dst, prob * p, order)
                pattern.pop()

    w0 = 1.0 / len(starts)
    for s in starts:
        walk_from(s, w0, {s: 1})

    total = acc.sum()
    if total <= 0.0:
        raise NoCompleteWalks(
            f"no walk of {walk_len} visits survives; graph too shallow before its sink"
        )
    return AwEmbedding(probabilities=acc / total, walk_len=walk_len)


def _has_complete_walk(r: RandomWalkGraph, walk_len: int) -> bool:
    # nodes reachable at visit i; sinks extend no further
    alive = {n for n in r.nodes if n not in r.sink_nodes}
    for _ in range(walk_len - 1):
        alive = {dst for n in alive for dst, _ in r.transitions.get(n, ())}
        if not alive:
            return False
    return True


def sampled_embedding(
    r: RandomWalkGraph, walk_len: int, num_samples: int, rng_seed: int
) -> AwEmbedding:
    """Monte-Carlo estimate of exact_embedding.

    Starts are drawn uniformly over non-sink nodes; a walk that hits a sink
    early is discarded and redrawn, mirroring the renormalization of the
    exact computation.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    patterns = enumerate_aw_types(walk_len)
    index = {p: i for i, p in enumerate(patterns)}
    starts = _start_nodes(r)
    if not _has_complete_walk(r, walk_len):
        raise NoCompleteWalks("no complete walk exists; sampling would never terminate")

    # per-node cumulative transition table for O(log deg) stepping
    table: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for src, outs in r.transitions.items():
        dsts = np.array([d for d, _ in outs], dtype=np.int64)
        cum = np.cumsum([p for _, p in outs])
        cum[-1] = 1.0  # guard against float round-off in the last bin
        table[src] = (dsts, cum)

    rng = np.random.default_rng(rng_seed)
    counts = np.zeros(len(patterns))
    n_starts = len(starts)
    done = 0
    while done < num_samples:
        node = starts[int(rng.integers(n_starts))]
        walk = [node]
        for _ in range(walk_len - 1):
            entry = table.get(node)
            if entry is None:
                break  # sink: restart this walk
            dsts, cum = entry
            node = int(dsts[int(np.searchsorted(cum, rng.random(), side="right"))])
            walk.append(node)
        if len(walk) < walk_len:
            continue
        counts[index[anonymize(walk)]] += 1
        done += 1
    return AwEmbedding(probabilities=counts / num_samples, walk_len=walk_len)


def feature_names(walk_len: int) -> list[str]:
    """CSV column names for the embedding, e.g. aw_1213 for (1,2,1,3)."""
    return ["aw_" + "".join(str(v) for v in p) for p in enumerate_aw_types(walk_len)]
