"""Parse syscall trace files and cut them into fixed-duration windows.

The canonical trace format is one record per line, tab-separated:
``timestamp_ns<TAB>container_id<TAB>syscall_id``. A best-effort parser for
``perf trace`` text output is also provided; it maps syscall names to IDs
through the bundled Linux syscall table (IDs 0..322).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import EmptyTrace, MalformedLine, NoWindows, UnknownSyscallId

MAX_SYSCALL_ID = 322

# perf trace style: " 1234.567 ( 0.004 ms): comm/4242 read(fd: 3, ...) = 12"
_PERF_LINE = re.compile(
    r"^\s*(?P<ts>\d+(?:\.\d+)?)\s*\(\s*[\d.]+\s*ms\):\s+"
    r"(?P<comm>\S+?)/(?P<pid>\d+)\s+(?P<name>\w+)\("
)


def _load_name_table() -> dict[str, int]:
    table = {}
    text = resources.files("forestwatch.data").joinpath("syscall_table.tsv").read_text()
    for line in text.splitlines():
        name, _, num = line.partition("\t")
        table[name] = int(num)
    return table


_NAME_TO_ID: dict[str, int] | None = None


def syscall_name_table() -> dict[str, int]:
    """Bundled name -> ID map for the Linux syscall table (0..322)."""
    global _NAME_TO_ID
    if _NAME_TO_ID is None:
        _NAME_TO_ID = _load_name_table()
    return _NAME_TO_ID


@dataclass(frozen=True)
class SyscallRecord:
    timestamp_ns: int
    container_id: str
    syscall_id: int

    def __post_init__(self):
        if not 0 <= self.syscall_id <= MAX_SYSCALL_ID:
            raise UnknownSyscallId(f"syscall id {self.syscall_id} outside [0, {MAX_SYSCALL_ID}]")
        if self.timestamp_ns < 0:
            raise MalformedLine(f"negative timestamp {self.timestamp_ns}")


@dataclass(frozen=True)
class SyscallTrace:
    """Time-ordered records of a single container plus total duration."""

    records: tuple[SyscallRecord, ...]
    container_id: str
    duration_ns: int


@dataclass(frozen=True)
class SyscallSequence:
    """Syscall IDs observed in one window of a trace."""

    ids: tuple[int, ...]
    window_start_ns: int
    window_len_ns: int
    label: str | None = None
    container_id: str = ""


def parse_trace_line(line: str, format: str = "canonical") -> SyscallRecord:
    """Parse one trace line into a record.

    Raises MalformedLine on layout violations and UnknownSyscallId when the
    ID is out of range (canonical) or the name is not in the table (perf).
    """
    if not line or not line.strip():
        raise MalformedLine("empty line")
    if format == "canonical":
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 3:
            raise MalformedLine(f"expected 3 tab-separated fields, got {len(parts)}")
        try:
            ts = int(parts[0])
            sid = int(parts[2])
        except ValueError as exc:
            raise MalformedLine(f"non-numeric field in {line!r}") from exc
        return SyscallRecord(timestamp_ns=ts, container_id=parts[1], syscall_id=sid)
    if format == "perf_text":
        m = _PERF_LINE.match(line)
        if m is None:
            raise MalformedLine(f"unparseable perf line {line!r}")
        name = m.group("name")
        sid = syscall_name_table().get(name)
        if sid is None:
            raise UnknownSyscallId(f"unknown syscall name {name!r}")
        # perf trace prints the event time in milliseconds since trace start
        ts = int(round(float(m.group("ts")) * 1e6))
        return SyscallRecord(
            timestamp_ns=ts,
            container_id=f"{m.group('comm')}/{m.group('pid')}",
            syscall_id=sid,
        )
    raise ValueError(f"unknown trace format {format!r}")


@dataclass
class LoadStats:
    parsed: int = 0
    skipped: int = 0


def load_trace(
    path,
    format: str = "canonical",
    container_filter: str | None = None,
    stats: LoadStats | None = None,
) -> SyscallTrace:
    """Load a trace file, keeping only records of one container.

    In perf_text mode unparseable lines are skipped and counted in `stats`;
    in canonical mode they raise. Records are sorted by timestamp. Raises
    EmptyTrace when nothing survives the filter.
    """
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip() or line.startswith("#"):
                continue
            try:
                rec = parse_trace_line(line, format=format)
            except (MalformedLine, UnknownSyscallId):
                if format == "perf_text":
                    if stats is not None:
                        stats.skipped += 1
                    continue
                raise
            if container_filter is not None and rec.container_id != container_filter:
                continue
            records.append(rec)
            if stats is not None:
                stats.parsed += 1
    if not records:
        raise EmptyTrace(f"no records for filter {container_filter!r} in {path}")
    if container_filter is None:
        seen = {r.container_id for r in records}
        if len(seen) > 1:
            raise ValueError(
                f"trace {path} holds {len(seen)} containers; pass container_filter"
            )
    records.sort(key=lambda r: r.timestamp_ns)
    container = container_filter if container_filter is not None else records[0].container_id
    duration = records[-1].timestamp_ns - records[0].timestamp_ns
    return SyscallTrace(records=tuple(records), container_id=container, duration_ns=duration)


def write_trace(trace: SyscallTrace, path, config: dict | None = None):
    """Write a trace in the canonical TSV format, with an optional
    provenance comment line."""
    with open(path, "w", encoding="utf-8") as fh:
        if config:
            fh.write("# forestwatch " + " ".join(f"{k}={v}" for k, v in sorted(config.items())) + "\n")
        for r in trace.records:
            fh.write(f"{r.timestamp_ns}\t{r.container_id}\t{r.syscall_id}\n")


def window_trace(
    trace: SyscallTrace,
    window_len_ns: int,
    max_windows: int | None = None,
    rng_seed: int = 0,
) -> list[SyscallSequence]:
    """Cut a trace into non-overlapping windows of syscall IDs.

    Candidate slots tile the trace from its first record. With max_windows
    set, slots are drawn without replacement by a seeded generator;
    otherwise every slot is kept. Windows holding fewer than 2 syscalls are
    discarded (no bigram can be formed). Raises NoWindows if nothing is left.
    """
    if window_len_ns <= 0:
        raise ValueError("window_len_ns must be positive")
    n_slots = trace.duration_ns // window_len_ns
    if n_slots == 0:
        raise NoWindows(
            f"trace duration {trace.duration_ns} ns shorter than one window of {window_len_ns} ns"
        )
    origin = trace.records[0].timestamp_ns
    if max_windows is not None and max_windows < n_slots:
        rng = np.random.default_rng(rng_seed)
        chosen = np.sort(rng.choice(int(n_slots), size=max_windows, replace=False))
    else:
        chosen = np.arange(int(n_slots))

    stamps = np.array([r.timestamp_ns for r in trace.records], dtype=np.int64)
    ids = np.array([r.syscall_id for r in trace.records], dtype=np.int64)
    windows = []
    for slot in chosen:
        lo = origin + int(slot) * window_len_ns
        hi = lo + window_len_ns
        a, b = np.searchsorted(stamps, [lo, hi], side="left")
        if b - a < 2:
            continue
        windows.append(
            SyscallSequence(
                ids=tuple(int(v) for v in ids[a:b]),
                window_start_ns=int(lo),
                window_len_ns=int(window_len_ns),
                container_id=trace.container_id,
            )
        )
    if not windows:
        raise NoWindows("all candidate windows held fewer than 2 syscalls")
    return windows
