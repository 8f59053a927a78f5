"""Seeded synthetic syscall traces with known ground truth.

Workloads are Markov chains over a syscall alphabet with exponential
inter-arrival times. An anomalous trace interleaves a base workload with
an overlay chain (a hidden process sharing the container): the overlay
runs at mix_ratio of the total event rate and the two streams are merged
by timestamp.

Three bundled workload specs with overlapping alphabets but distinct
transition structure, plus a "miner" overlay, live under data/workloads/.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import InvalidSpec
from .ingest import MAX_SYSCALL_ID, SyscallRecord, SyscallTrace

ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class WorkloadSpec:
    name: str
    alphabet: tuple[int, ...]
    transition_matrix: tuple[tuple[float, ...], ...]
    rate_hz: float
    initial_distribution: tuple[float, ...]

    def validate(self):
        n = len(self.alphabet)
        if n == 0:
            raise InvalidSpec(f"{self.name}: empty alphabet")
        if any(not 0 <= s <= MAX_SYSCALL_ID for s in self.alphabet):
            raise InvalidSpec(f"{self.name}: alphabet outside [0, {MAX_SYSCALL_ID}]")
        if len(set(self.alphabet)) != n:
            raise InvalidSpec(f"{self.name}: duplicate alphabet entries")
        if self.rate_hz <= 0:
            raise InvalidSpec(f"{self.name}: rate_hz must be positive")
        if len(self.transition_matrix) != n or any(
            len(row) != n for row in self.transition_matrix
        ):
            raise InvalidSpec(f"{self.name}: transition matrix is not {n}x{n}")
        for i, row in enumerate(self.transition_matrix):
            if any(p < 0 for p in row):
                raise InvalidSpec(f"{self.name}: negative probability in row {i}")
            if abs(sum(row) - 1.0) > ROW_SUM_TOL:
                raise InvalidSpec(f"{self.name}: row {i} sums to {sum(row)!r}, not 1")
        if len(self.initial_distribution) != n:
            raise InvalidSpec(f"{self.name}: initial distribution length mismatch")
        if abs(sum(self.initial_distribution) - 1.0) > ROW_SUM_TOL:
            raise InvalidSpec(f"{self.name}: initial distribution does not sum to 1")


@dataclass(frozen=True)
class AnomalySpec:
    base: WorkloadSpec
    overlay: WorkloadSpec
    mix_ratio: float

    def validate(self):
        self.base.validate()
        self.overlay.validate()
        if not 0.0 < self.mix_ratio < 1.0:
            raise InvalidSpec(f"mix_ratio must be in (0, 1), got {self.mix_ratio}")


def _event_times(rate_hz: float, duration_s: float, rng) -> np.ndarray:
    """Poisson-process arrival times in [0, duration_s)."""
    expected = duration_s * rate_hz
    chunk = int(expected + 6.0 * math.sqrt(expected) + 16)
    times = np.cumsum(rng.exponential(1.0 / rate_hz, size=chunk))
    while times[-1] < duration_s:
        more = rng.exponential(1.0 / rate_hz, size=max(chunk // 4, 16))
        times = np.concatenate([times, times[-1] + np.cumsum(more)])
    return times[times < duration_s]


def _sample_chain(spec: WorkloadSpec, count: int, rng) -> np.ndarray:
    """Markov-chain syscall IDs of the given length."""
    cum_rows = [list(np.cumsum(row)) for row in spec.transition_matrix]
    for row in cum_rows:
        row[-1] = 1.0  # absorb float round-off
    cum_init = list(np.cumsum(spec.initial_distribution))
    cum_init[-1] = 1.0
    uniforms = rng.random(count + 1)
    state = bisect_right(cum_init, uniforms[0])
    out = np.empty(count, dtype=np.int64)
    alphabet = np.asarray(spec.alphabet, dtype=np.int64)
    for i in range(count):
        out[i] = state
        state = bisect_right(cum_rows[state], uniforms[i + 1])
    return alphabet[out]


def _records(times_s: np.ndarray, ids: np.ndarray, container: str):
    stamps = np.round(times_s * 1e9).astype(np.int64)
    return [
        SyscallRecord(timestamp_ns=int(t), container_id=container, syscall_id=int(s))
        for t, s in zip(stamps, ids)
    ]


def gen_workload_trace(
    spec: WorkloadSpec, duration_s: float, seed: int, container_id: str | None = None
) -> SyscallTrace:
    """Sample one benign trace; deterministic for a given seed."""
    spec.validate()
    if duration_s <= 0:
        raise InvalidSpec(f"duration_s must be positive, got {duration_s}")
    container = container_id if container_id is not None else spec.name
    rng = np.random.default_rng([seed, 0])
    times = _event_times(spec.rate_hz, duration_s, rng)
    ids = _sample_chain(spec, len(times), rng)
    return SyscallTrace(
        records=tuple(_records(times, ids, container)),
        container_id=container,
        duration_ns=int(round(duration_s * 1e9)),
    )


def gen_anomalous_trace(
    spec: AnomalySpec, duration_s: float, seed: int, container_id: str | None = None
) -> SyscallTrace:
    """Base workload at (1 - mix) of its rate merged with the overlay at mix."""
    spec.validate()
    if duration_s <= 0:
        raise InvalidSpec(f"duration_s must be positive, got {duration_s}")
    container = container_id if container_id is not None else spec.base.name
    total_rate = spec.base.rate_hz
    rng_base = np.random.default_rng([seed, 1])
    rng_overlay = np.random.default_rng([seed, 2])
    t_base = _event_times(total_rate * (1.0 - spec.mix_ratio), duration_s, rng_base)
    t_over = _event_times(total_rate * spec.mix_ratio, duration_s, rng_overlay)
    id_base = _sample_chain(spec.base, len(t_base), rng_base)
    id_over = _sample_chain(spec.overlay, len(t_over), rng_overlay)
    times = np.concatenate([t_base, t_over])
    ids = np.concatenate([id_base, id_over])
    order = np.argsort(times, kind="stable")
    return SyscallTrace(
        records=tuple(_records(times[order], ids[order], container)),
        container_id=container,
        duration_ns=int(round(duration_s * 1e9)),
    )


# --- spec file I/O ---

def workload_spec_from_dict(doc: dict) -> WorkloadSpec:
    try:
        spec = WorkloadSpec(
            name=doc["name"],
            alphabet=tuple(int(v) for v in doc["alphabet"]),
            transition_matrix=tuple(tuple(float(p) for p in row) for row in doc["transition_matrix"]),
            rate_hz=float(doc["rate_hz"]),
            initial_distribution=tuple(float(p) for p in doc["initial_distribution"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidSpec(f"bad workload spec document: {exc}") from exc
    spec.validate()
    return spec


def workload_spec_to_dict(spec: WorkloadSpec) -> dict:
    return {
        "name": spec.name,
        "alphabet": list(spec.alphabet),
        "transition_matrix": [list(row) for row in spec.transition_matrix],
        "rate_hz": spec.rate_hz,
        "initial_distribution": list(spec.initial_distribution),
    }


def load_workload_spec(path) -> WorkloadSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return workload_spec_from_dict(json.load(fh))


def save_workload_spec(spec: WorkloadSpec, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(workload_spec_to_dict(spec), fh, indent=2)
        fh.write("\n")


BUNDLED_WORKLOADS = ("dataproc", "mediasrv", "searchidx")
BUNDLED_OVERLAY = "miner"


def bundled_workload(name: str) -> WorkloadSpec:
    """Load one of the specs shipped with the package."""
    path = resources.files("forestwatch.data").joinpath(f"workloads/{name}.json")
    return workload_spec_from_dict(json.loads(path.read_text()))
