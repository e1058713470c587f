"""Run records between pipeline stages.

Runs are stored one JSON object per line::

    {"id": 3, "start_frame": 120, "start_utc": "...Z", "duration_ms": 420.0,
     "trace": [[frame, x, y], ...], "snippets": "snippets/run_000003.wds",
     "filter_prob": 0.98, "axis_deg": 12.5, "direction_deg": 192.5, "confidence": 7.1}

The optional keys appear once the corresponding stage has run.  Floats are
written with full round-trip precision so re-reading a file reproduces the
in-memory runs exactly.

Snippet stack files hold a 16-byte little-endian header -- magic ``b"WDSN"``,
frame count ``T``, width, height (``u32`` each) -- followed by ``T * height *
width`` bytes of 8-bit pixels in frame, row, column order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Iterable

import numpy as np

from .attention import WaggleRun
from .frames import format_utc, parse_utc

SNIPPET_MAGIC = b"WDSN"
_HEADER = struct.Struct("<4sIII")
_OPTIONAL = ("filter_prob", "axis_deg", "direction_deg", "confidence")


class RecordFormatError(ValueError):
    """A run record or snippet file is malformed."""


def write_snippets(path: str | Path, stack: np.ndarray) -> None:
    stack = np.asarray(stack)
    if stack.ndim != 3 or stack.dtype != np.uint8:
        raise ValueError("snippet stack must be a (T, H, W) uint8 array")
    t, h, w = stack.shape
    Path(path).write_bytes(_HEADER.pack(SNIPPET_MAGIC, t, w, h) + np.ascontiguousarray(stack).tobytes())


def read_snippets(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise RecordFormatError(f"{path}: truncated snippet file")
    magic, t, w, h = _HEADER.unpack_from(data)
    if magic != SNIPPET_MAGIC:
        raise RecordFormatError(f"{path}: not a snippet file")
    if len(data) != _HEADER.size + t * w * h:
        raise RecordFormatError(f"{path}: expected {t}x{h}x{w} pixels")
    return np.frombuffer(data, np.uint8, offset=_HEADER.size).reshape(t, h, w).copy()


def run_to_record(run: WaggleRun, snippet_path: str | None = None) -> dict:
    rec = {
        "id": int(run.id),
        "start_frame": int(run.start_frame),
        "start_utc": format_utc(run.start_utc),
        "duration_ms": float(run.duration_ms),
        "trace": [[int(f), float(x), float(y)] for f, x, y in np.asarray(run.trace)],
        "snippets": snippet_path,
    }
    for key in _OPTIONAL:
        value = getattr(run, key)
        if value is not None:
            rec[key] = float(value)
    return rec


def record_to_run(rec: dict, base_dir: str | Path | None = None,
                  load_snippets: bool = True) -> WaggleRun:
    try:
        trace = np.array(rec["trace"], dtype=np.float64).reshape(-1, 3)
        run = WaggleRun(int(rec["id"]), int(rec["start_frame"]), float(rec["duration_ms"]),
                        trace, None, parse_utc(rec.get("start_utc")))
    except (KeyError, TypeError, ValueError) as exc:
        raise RecordFormatError(f"bad run record: {exc}") from exc
    for key in _OPTIONAL:
        if rec.get(key) is not None:
            setattr(run, key, float(rec[key]))
    if load_snippets and rec.get("snippets"):
        path = Path(rec["snippets"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        run.snippets = read_snippets(path)
    return run


def write_runs(path: str | Path, runs: Iterable[WaggleRun], snippet_dir: str = "snippets") -> None:
    """Write a JSONL run file; snippet stacks go to ``snippet_dir`` next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for run in runs:
        rel = None
        if run.snippets is not None:
            rel = f"{snippet_dir}/run_{int(run.id):06d}.wds"
            (path.parent / snippet_dir).mkdir(parents=True, exist_ok=True)
            write_snippets(path.parent / rel, run.snippets)
        lines.append(json.dumps(run_to_record(run, rel)))
    path.write_text("".join(line + "\n" for line in lines))


def read_runs(path: str | Path, load_snippets: bool = True) -> list[WaggleRun]:
    path = Path(path)
    runs = []
    for n, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RecordFormatError(f"{path}:{n}: {exc}") from exc
        runs.append(record_to_run(rec, path.parent, load_snippets))
    return runs


def copy_snippets(runs: Iterable[WaggleRun], src_dir: str | Path, dst_dir: str | Path) -> None:
    """Ensure ``dst_dir/snippets`` holds every run's stack (for stages writing elsewhere)."""
    for run in runs:
        if run.snippets is not None:
            target = Path(dst_dir) / "snippets" / f"run_{int(run.id):06d}.wds"
            target.parent.mkdir(parents=True, exist_ok=True)
            write_snippets(target, run.snippets)
