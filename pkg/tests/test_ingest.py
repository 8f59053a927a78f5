import numpy as np
import pytest

from forestwatch.errors import EmptyTrace, MalformedLine, NoWindows, UnknownSyscallId
from forestwatch.ingest import (
    LoadStats,
    SyscallRecord,
    SyscallTrace,
    load_trace,
    parse_trace_line,
    syscall_name_table,
    window_trace,
)


def make_trace(stamps, ids, container="c1", duration=None):
    recs = tuple(SyscallRecord(t, container, i) for t, i in zip(stamps, ids))
    dur = duration if duration is not None else stamps[-1] - stamps[0]
    return SyscallTrace(records=recs, container_id=container, duration_ns=dur)


class TestParseLine:
    def test_canonical(self):
        rec = parse_trace_line("1000\tc1\t0")
        assert rec == SyscallRecord(1000, "c1", 0)

    def test_id_out_of_range(self):
        with pytest.raises(UnknownSyscallId):
            parse_trace_line("1000\tc1\t400")

    def test_garbage(self):
        with pytest.raises(MalformedLine):
            parse_trace_line("garbage")

    def test_non_numeric(self):
        with pytest.raises(MalformedLine):
            parse_trace_line("abc\tc1\t3")

    def test_negative_timestamp(self):
        with pytest.raises(MalformedLine):
            parse_trace_line("-5\tc1\t3")

    def test_perf_line(self):
        line = "   12.345 ( 0.004 ms): nginx/4242 read(fd: 3, buf: 0x7f, count: 832) = 832"
        rec = parse_trace_line(line, format="perf_text")
        assert rec.syscall_id == 0
        assert rec.container_id == "nginx/4242"
        assert rec.timestamp_ns == 12_345_000

    def test_perf_unknown_name(self):
        line = "   12.345 ( 0.004 ms): x/1 not_a_syscall(a) = 0"
        with pytest.raises(UnknownSyscallId):
            parse_trace_line(line, format="perf_text")

    def test_name_table_bounds(self):
        table = syscall_name_table()
        assert len(table) == 323
        assert table["read"] == 0
        assert table["execveat"] == 322


class TestLoadTrace:
    def write(self, tmp_path, lines):
        p = tmp_path / "trace.tsv"
        p.write_text("\n".join(lines) + "\n")
        return p

    def test_filter_keeps_matching(self, tmp_path):
        p = self.write(tmp_path, ["10\tc1\t1", "20\tc2\t2", "30\tc1\t3"])
        trace = load_trace(p, container_filter="c1")
        assert [r.syscall_id for r in trace.records] == [1, 3]

    def test_filter_no_match(self, tmp_path):
        p = self.write(tmp_path, ["10\tc1\t1"])
        with pytest.raises(EmptyTrace):
            load_trace(p, container_filter="c2")

    def test_sorts_by_timestamp(self, tmp_path):
        p = self.write(tmp_path, ["30\tc1\t3", "10\tc1\t1", "20\tc1\t2"])
        trace = load_trace(p)
        assert [r.timestamp_ns for r in trace.records] == [10, 20, 30]

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_trace(tmp_path / "nope.tsv")

    def test_mixed_containers_need_filter(self, tmp_path):
        p = self.write(tmp_path, ["10\tc1\t1", "20\tc2\t2"])
        with pytest.raises(ValueError):
            load_trace(p)

    def test_perf_skips_bad_lines(self, tmp_path):
        lines = [
            "   1.000 ( 0.004 ms): app/7 read(fd: 3) = 1",
            "this line is noise",
            "   2.000 ( 0.004 ms): app/7 write(fd: 3) = 1",
        ]
        p = self.write(tmp_path, lines)
        stats = LoadStats()
        trace = load_trace(p, format="perf_text", stats=stats)
        assert len(trace.records) == 2
        assert stats.skipped == 1

    def test_canonical_bad_line_raises(self, tmp_path):
        p = self.write(tmp_path, ["10\tc1\t1", "noise"])
        with pytest.raises(MalformedLine):
            load_trace(p)


class TestWindowing:
    def test_tiling_three_windows(self):
        # 30 s span, events every 0.5 s
        stamps = list(range(0, 30_000_000_001, 500_000_000))
        trace = make_trace(stamps, [1] * len(stamps))
        windows = window_trace(trace, 10_000_000_000)
        assert len(windows) == 3
        assert [w.window_start_ns for w in windows] == [0, 10_000_000_000, 20_000_000_000]

    def test_too_short(self):
        trace = make_trace([0, 5_000_000_000], [1, 2])
        with pytest.raises(NoWindows):
            window_trace(trace, 10_000_000_000)

    def test_random_selection_disjoint(self):
        rng = np.random.default_rng(0)
        stamps = sorted(int(v) for v in rng.integers(0, 100_000_000_000, size=5000))
        trace = make_trace(stamps, [0] * len(stamps), duration=100_000_000_000)
        windows = window_trace(trace, 10_000_000_000, max_windows=10, rng_seed=7)
        assert len(windows) == 10
        spans = sorted((w.window_start_ns, w.window_start_ns + w.window_len_ns) for w in windows)
        for (a0, a1), (b0, b1) in zip(spans, spans[1:]):
            assert a1 <= b0

    def test_determinism(self):
        rng = np.random.default_rng(3)
        stamps = sorted(int(v) for v in rng.integers(0, 60_000_000_000, size=900))
        trace = make_trace(stamps, list(rng.integers(0, 50, size=900)), duration=60_000_000_000)
        w1 = window_trace(trace, 5_000_000_000, max_windows=6, rng_seed=11)
        w2 = window_trace(trace, 5_000_000_000, max_windows=6, rng_seed=11)
        assert w1 == w2

    def test_short_windows_dropped(self):
        # one event in the second slot: that window cannot form a bigram
        stamps = [0, 1_000_000, 2_000_000, 10_500_000]
        trace = make_trace(stamps, [1, 2, 3, 4], duration=20_000_000)
        windows = window_trace(trace, 10_000_000)
        assert len(windows) == 1
        assert windows[0].ids == (1, 2, 3)

    def test_no_duplication_across_windows(self):
        rng = np.random.default_rng(5)
        stamps = sorted(int(v) for v in rng.integers(0, 40_000_000_000, size=2000))
        trace = make_trace(stamps, list(rng.integers(0, 10, size=2000)), duration=40_000_000_000)
        windows = window_trace(trace, 10_000_000_000)
        total = sum(len(w.ids) for w in windows)
        assert total <= len(trace.records)
        # windows partition their own time ranges: recount by interval
        by_interval = 0
        for w in windows:
            lo, hi = w.window_start_ns, w.window_start_ns + w.window_len_ns
            by_interval += sum(1 for r in trace.records if lo <= r.timestamp_ns < hi)
        assert by_interval == total
