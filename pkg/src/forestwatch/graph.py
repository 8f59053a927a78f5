"""Bigram graph of a syscall window and its row-normalized random-walk form."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .errors import SequenceTooShort
from .ingest import SyscallSequence


@dataclass(frozen=True)
class BigramGraph:
    """Weighted directed graph: edge (a, b) counts adjacent pairs a->b.

    Nodes are only the syscall IDs observed in the window. Self-loops are
    allowed; total_edge_weight always equals sequence length - 1.
    """

    nodes: frozenset[int]
    edges: dict[tuple[int, int], int]
    total_edge_weight: int


@dataclass(frozen=True)
class RandomWalkGraph:
    """BigramGraph with each node's out-weights normalized to probabilities.

    transitions maps a source node to (destination, probability) pairs
    sorted by destination. Nodes without outgoing edges are listed in
    sink_nodes and have no transitions entry.
    """

    nodes: frozenset[int]
    transitions: dict[int, tuple[tuple[int, float], ...]]
    sink_nodes: frozenset[int]


def build_bigram_graph(seq: SyscallSequence) -> BigramGraph:
    """Count adjacent syscall-ID pairs of a window into a directed graph."""
    ids = seq.ids
    if len(ids) < 2:
        raise SequenceTooShort(f"need >= 2 syscalls to form a bigram, got {len(ids)}")
    counts = Counter(zip(ids[:-1], ids[1:]))
    return BigramGraph(
        nodes=frozenset(ids),
        edges=dict(counts),
        total_edge_weight=len(ids) - 1,
    )


def to_random_walk_graph(g: BigramGraph) -> RandomWalkGraph:
    """Divide each out-edge weight by its source's total out-weight."""
    out_sums: dict[int, int] = {}
    for (src, _), w in g.edges.items():
        out_sums[src] = out_sums.get(src, 0) + w
    by_src: dict[int, list[tuple[int, float]]] = {}
    for (src, dst), w in g.edges.items():
        by_src.setdefault(src, []).append((dst, w / out_sums[src]))
    transitions = {src: tuple(sorted(dsts)) for src, dsts in by_src.items()}
    sinks = frozenset(n for n in g.nodes if n not in transitions)
    return RandomWalkGraph(nodes=g.nodes, transitions=transitions, sink_nodes=sinks)


def edge_list_text(g: BigramGraph) -> str:
    """Debug export: one `src<TAB>dst<TAB>weight` line per edge, sorted."""
    lines = [f"{s}\t{d}\t{w}" for (s, d), w in sorted(g.edges.items())]
    return "\n".join(lines) + "\n" if lines else ""
