import json
from datetime import datetime, timezone

import numpy as np
import pytest

from waggledance.attention import WaggleRun
from waggledance.records import (
    RecordFormatError, copy_snippets, read_runs, read_snippets, record_to_run, run_to_record,
    write_runs, write_snippets,
)


def sample_run(i=3, with_snippets=True, **extra):
    rng = np.random.default_rng(i)
    trace = np.column_stack([np.arange(10) + 100, rng.uniform(0, 320, 10), rng.uniform(0, 240, 10)])
    snippets = rng.integers(0, 256, (10, 50, 50), dtype=np.uint8) if with_snippets else None
    return WaggleRun(i, 100, 100.0 / 3.0, trace, snippets,
                     datetime(2016, 8, 1, 10, 0, 1, 250000, tzinfo=timezone.utc), **extra)


def test_snippet_header_layout(tmp_path):
    stack = np.arange(2 * 3 * 4, dtype=np.uint8).reshape(2, 3, 4)
    write_snippets(tmp_path / "s.wds", stack)
    data = (tmp_path / "s.wds").read_bytes()
    assert data[:4] == b"WDSN"
    assert np.frombuffer(data[4:16], "<u4").tolist() == [2, 4, 3]
    assert data[16:] == stack.tobytes()
    np.testing.assert_array_equal(read_snippets(tmp_path / "s.wds"), stack)


def test_snippet_errors(tmp_path):
    with pytest.raises(ValueError):
        write_snippets(tmp_path / "x.wds", np.zeros((3, 3)))
    (tmp_path / "bad.wds").write_bytes(b"XXXX" + bytes(12))
    with pytest.raises(RecordFormatError):
        read_snippets(tmp_path / "bad.wds")
    (tmp_path / "short.wds").write_bytes(b"WDSN")
    with pytest.raises(RecordFormatError):
        read_snippets(tmp_path / "short.wds")
    write_snippets(tmp_path / "t.wds", np.zeros((2, 4, 4), np.uint8))
    (tmp_path / "t.wds").write_bytes((tmp_path / "t.wds").read_bytes()[:-1])
    with pytest.raises(RecordFormatError):
        read_snippets(tmp_path / "t.wds")


def test_record_round_trip_exact(tmp_path):
    runs = [sample_run(1), sample_run(2, filter_prob=0.93, axis_deg=12.5,
                                      direction_deg=192.5, confidence=7.25)]
    write_runs(tmp_path / "runs.jsonl", runs)
    back = read_runs(tmp_path / "runs.jsonl")
    for a, b in zip(runs, back):
        assert (a.id, a.start_frame, a.duration_ms, a.start_utc) == \
            (b.id, b.start_frame, b.duration_ms, b.start_utc)
        np.testing.assert_array_equal(a.trace, b.trace)
        np.testing.assert_array_equal(a.snippets, b.snippets)
        for key in ("filter_prob", "axis_deg", "direction_deg", "confidence"):
            assert getattr(a, key) == getattr(b, key)
    rec = json.loads((tmp_path / "runs.jsonl").read_text().splitlines()[0])
    assert rec["snippets"] == "snippets/run_000001.wds" and "filter_prob" not in rec


def test_runs_without_snippets(tmp_path):
    write_runs(tmp_path / "r.jsonl", [sample_run(with_snippets=False)])
    (run,) = read_runs(tmp_path / "r.jsonl")
    assert run.snippets is None
    assert not (tmp_path / "snippets").exists()


def test_empty_run_file(tmp_path):
    write_runs(tmp_path / "r.jsonl", [])
    assert (tmp_path / "r.jsonl").read_text() == ""
    assert read_runs(tmp_path / "r.jsonl") == []


def test_bad_records(tmp_path):
    (tmp_path / "r.jsonl").write_text("{not json\n")
    with pytest.raises(RecordFormatError):
        read_runs(tmp_path / "r.jsonl")
    with pytest.raises(RecordFormatError):
        record_to_run({"id": 1})


def test_copy_snippets(tmp_path):
    run = sample_run()
    copy_snippets([run], tmp_path / "a", tmp_path / "b")
    np.testing.assert_array_equal(read_snippets(tmp_path / "b/snippets/run_000003.wds"),
                                  run.snippets)
    assert run_to_record(run, None)["snippets"] is None
