"""Waggle-like activity detection over a frame stream.

Every pixel keeps the last ``window`` intensities.  Once the window is full
the samples are rescaled to [-1, 1] and projected onto a cosine/sine pair at
each waggle-band frequency; a pixel whose power at any band frequency
exceeds ``threshold`` is active.  Active pixels are grouped by single-linkage
clustering, and cluster centroids from successive frames are chained into
waggle-run candidates.  Closed candidates that are long enough become
:class:`WaggleRun` records with a stack of image snippets.

A detection made at frame ``n`` describes the window ``n - window + 1 .. n``
and is attributed to frame ``n - window // 2``, the middle of that window.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Iterable, Sequence

import numba
import numpy as np
from sklearn.base import BaseEstimator

from .clustering import cluster_members
from .config import AttentionConfig
from .frames import FrameFormatError, FrameStream

_D = AttentionConfig()


class FrameOrderError(ValueError):
    """Centroids were supplied for a frame not after the previous one."""


class FrameUnavailableError(LookupError):
    """A frame needed for snippet export is no longer buffered."""


def normalize_window(raw) -> np.ndarray:
    """Affine rescale so the minimum maps to -1 and the maximum to +1.

    A constant window maps to all zeros.
    """
    w = np.asarray(raw, dtype=np.float64)
    lo, hi = w.min(), w.max()
    if hi == lo:
        return np.zeros_like(w)
    return 2.0 * (w - lo) / (hi - lo) - 1.0


def dd_score(window, r: float, sample_rate: float) -> float:
    """Power of a normalized window at frequency ``r``.

    Squared projection onto cos and sin at ``r`` Hz, with sample ``m``
    (1-based) taken at time ``m / sample_rate``.
    """
    w = np.asarray(window, dtype=np.float64)
    m = np.arange(1, len(w) + 1)
    phase = 2.0 * np.pi * r * m / sample_rate
    c = float(np.dot(w, np.cos(phase)))
    s = float(np.dot(w, np.sin(phase)))
    return c * c + s * s


def band_basis(window: int, band: Sequence[float], sample_rate: float) -> np.ndarray:
    """``(window, 2 * len(band))`` matrix of cosines then sines for samples 1..window."""
    m = np.arange(1, window + 1)[:, None]
    phase = 2.0 * np.pi * m * np.asarray(band, dtype=np.float64)[None, :] / sample_rate
    return np.concatenate([np.cos(phase), np.sin(phase)], axis=1)


@numba.njit(cache=True, nogil=True)
def _activation_kernel(proj, ones, lo, hi, threshold, out):
    # proj: (2F, N) projections of the raw window; ones: (2F,) projections of a constant 1.
    # The normalized window equals a * (v - mid) with a = 2 / (hi - lo), so its power
    # exceeds threshold iff |proj - mid * ones|^2 > threshold * (hi - lo)^2 / 4.
    n_freq = proj.shape[0] // 2
    n = proj.shape[1]
    mid = np.empty(n, dtype=np.float32)
    limit = np.empty(n, dtype=np.float32)
    for p in range(n):
        span = np.float32(hi[p]) - np.float32(lo[p])
        mid[p] = np.float32(0.5) * (np.float32(hi[p]) + np.float32(lo[p]))
        # a flat window is never active
        limit[p] = threshold * span * span * np.float32(0.25) if span > 0 else np.inf
        out[p] = False
    for f in range(n_freq):
        oc = ones[f]
        os_ = ones[f + n_freq]
        for p in range(n):
            c = proj[f, p] - mid[p] * oc
            s = proj[f + n_freq, p] - mid[p] * os_
            out[p] = out[p] | (c * c + s * s > limit[p])


class PixelWindowGrid:
    """Per-pixel ring buffers of the last ``window`` intensities plus activation flags."""

    def __init__(self, height: int, width: int, window: int = 32, sample_rate: float = 100.0,
                 band: Sequence[float] = _D.waggle_band):
        if window < 2:
            raise ValueError("window must be >= 2")
        self.height, self.width = height, width
        self.window = window
        self.sample_rate = float(sample_rate)
        self.band = tuple(float(b) for b in band)
        n = height * width
        self._raw = np.zeros((window, n), dtype=np.uint8)
        self._flt = np.zeros((window, n), dtype=np.float32)
        self._basis = band_basis(window, self.band, self.sample_rate)
        self.head = 0  # ring row that receives the next frame (= oldest sample once full)
        self.frames_seen = 0
        self.active = np.zeros((height, width), dtype=bool)
        self._proj = np.empty((2 * len(self.band), n), dtype=np.float32)

    @property
    def full(self) -> bool:
        return self.frames_seen >= self.window

    def push(self, frame: np.ndarray) -> None:
        frame = np.asarray(frame)
        if frame.shape != (self.height, self.width):
            raise FrameFormatError(
                f"frame shape {frame.shape} does not match grid {(self.height, self.width)}")
        row = frame.reshape(-1)
        self._raw[self.head] = row
        self._flt[self.head] = row
        self.head = (self.head + 1) % self.window
        self.frames_seen += 1

    def _rolled_basis(self) -> np.ndarray:
        # ring row p holds time-ordered sample (p - head) mod window
        return np.roll(self._basis, self.head, axis=0)

    def window_at(self, y: int, x: int) -> np.ndarray:
        """Buffered samples of pixel ``(y, x)`` in arrival order."""
        p = y * self.width + x
        if not self.full:
            return self._raw[:self.frames_seen, p].copy()
        return np.roll(self._raw[:, p], -self.head)

    def scores(self) -> np.ndarray:
        """Reference per-pixel band scores, shape ``(len(band), H, W)``, float64."""
        if not self.full:
            return np.zeros((len(self.band), self.height, self.width))
        ordered = np.roll(self._raw, -self.head, axis=0).astype(np.float64)
        lo, hi = ordered.min(axis=0), ordered.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        norm = np.where(hi > lo, 2.0 * (ordered - lo) / span - 1.0, 0.0)
        proj = self._basis.T @ norm
        f = len(self.band)
        power = proj[:f] ** 2 + proj[f:] ** 2
        return power.reshape(f, self.height, self.width)

    def update_activation(self, threshold: float) -> np.ndarray:
        """Recompute activation flags; all zero while the buffers are underfull."""
        if not self.full:
            self.active[:] = False
            return self.active
        basis = self._rolled_basis().astype(np.float32)
        np.matmul(basis.T, self._flt, out=self._proj)
        ones = basis.sum(axis=0)
        lo = self._raw.min(axis=0)
        hi = self._raw.max(axis=0)
        _activation_kernel(self._proj, ones, lo, hi, np.float32(threshold), self.active.reshape(-1))
        return self.active


def step_frame(grid: PixelWindowGrid, frame: np.ndarray, cfg: AttentionConfig) -> np.ndarray:
    """Push one frame and return active detector coordinates as ``(n, 2)`` ``(x, y)``."""
    grid.push(frame)
    active = grid.update_activation(cfg.threshold)
    ys, xs = np.nonzero(active)
    return np.column_stack([xs, ys])


def cluster_active(points, d_max1: float, c_min1: int) -> np.ndarray:
    """Centroids of single-linkage clusters of active detectors.

    Clusters with fewer than ``c_min1`` members are dropped.  Centroids are
    sorted by ``(y, x)``.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) < c_min1 or len(pts) == 0:
        return np.zeros((0, 2))
    groups = cluster_members(pts, d_max1, c_min1)
    if not groups:
        return np.zeros((0, 2))
    cents = np.array([pts[g].mean(axis=0) for g in groups])
    order = np.lexsort((cents[:, 0], cents[:, 1]))
    return cents[order]


@dataclass
class WaggleRun:
    id: int
    start_frame: int
    duration_ms: float
    trace: np.ndarray  # (n, 3): frame, x, y
    snippets: np.ndarray | None = None  # (n, S, S) uint8
    start_utc: datetime | None = None
    filter_prob: float | None = None
    axis_deg: float | None = None
    direction_deg: float | None = None
    confidence: float | None = None

    @property
    def end_frame(self) -> int:
        return int(self.trace[-1, 0])

    @property
    def position(self) -> tuple[float, float]:
        """Mean comb position of the trace, ``(x, y)`` in pixels."""
        return float(self.trace[:, 1].mean()), float(self.trace[:, 2].mean())


@dataclass
class WaggleRunCandidate:
    id: int
    start_frame: int
    last_update_frame: int
    trace: list = field(default_factory=list)
    crops: list = field(default_factory=list)
    open: bool = True


def crop_snippet(frame: np.ndarray, x: float, y: float, size: int = 50) -> np.ndarray:
    """``size`` x ``size`` crop centred on ``(x, y)``; pixels outside the frame are 0."""
    h, w = frame.shape
    cx = int(math.floor(x + 0.5))
    cy = int(math.floor(y + 0.5))
    x0 = cx - size // 2
    y0 = cy - size // 2
    out = np.zeros((size, size), dtype=np.uint8)
    sx0, sy0 = max(x0, 0), max(y0, 0)
    sx1, sy1 = min(x0 + size, w), min(y0 + size, h)
    if sx1 > sx0 and sy1 > sy0:
        out[sy0 - y0:sy1 - y0, sx0 - x0:sx1 - x0] = frame[sy0:sy1, sx0:sx1]
    return out


def export_snippets(run: WaggleRun, source, size: int = 50) -> np.ndarray:
    """Crop every trace frame of ``run`` from ``source``.

    ``source`` is any frame-indexable object (a :class:`FrameStream`, a
    sequence of frames or a :class:`FrameRing`).
    """
    crops = []
    for frame_idx, x, y in run.trace:
        try:
            frame = source[int(frame_idx)]
        except (IndexError, KeyError) as exc:
            raise FrameUnavailableError(f"frame {int(frame_idx)} is not available") from exc
        crops.append(crop_snippet(np.asarray(frame), x, y, size))
    return np.stack(crops) if crops else np.zeros((0, size, size), np.uint8)


class FrameRing:
    """Bounded buffer of the most recent raw frames, indexed by absolute frame number."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._frames: deque = deque(maxlen=capacity)
        self._first = 0

    def append(self, index: int, frame: np.ndarray) -> None:
        if self._frames and index != self._first + len(self._frames):
            raise FrameOrderError(f"frame {index} does not follow {self._first + len(self._frames) - 1}")
        if not self._frames:
            self._first = index
        elif len(self._frames) == self.capacity:
            self._first += 1
        self._frames.append(frame)

    def __getitem__(self, index: int) -> np.ndarray:
        off = index - self._first
        if not 0 <= off < len(self._frames):
            raise FrameUnavailableError(f"frame {index} is no longer buffered")
        return self._frames[off]


class RunAssembler:
    """Chain per-frame dancer positions into waggle-run candidates.

    Each new centroid joins the nearest open candidate whose last point lies
    within ``link_distance`` (pairs are matched greedily in order of
    increasing distance, ties going to the lower candidate id) or seeds a new
    candidate.  A candidate that has not been extended for more than
    ``max_gap`` frames is closed; closed candidates with enough detections and
    duration are emitted.
    """

    def __init__(self, cfg: AttentionConfig):
        self.cfg = cfg
        self.candidates: list[WaggleRunCandidate] = []
        self._next_candidate = 0
        self._next_run = 0
        self._last_frame: int | None = None

    def update(self, frame_idx: int, centroids, frame: np.ndarray | None = None) -> list[WaggleRun]:
        if self._last_frame is not None and frame_idx <= self._last_frame:
            raise FrameOrderError(f"frame {frame_idx} is not after frame {self._last_frame}")
        self._last_frame = frame_idx
        emitted = self._close(lambda c: frame_idx - c.last_update_frame > self.cfg.max_gap)

        cents = np.asarray(centroids, dtype=np.float64).reshape(-1, 2)
        if len(cents) == 0:
            return emitted
        pairs = []
        for j, cand in enumerate(self.candidates):
            _, lx, ly = cand.trace[-1]
            d = np.hypot(cents[:, 0] - lx, cents[:, 1] - ly)
            for i in np.flatnonzero(d <= self.cfg.link_distance):
                pairs.append((d[i], cand.id, int(i), j))
        pairs.sort()
        taken_c: set[int] = set()
        taken_k: set[int] = set()
        for _, _, i, j in pairs:
            if i in taken_c or j in taken_k:
                continue
            taken_c.add(i)
            taken_k.add(j)
            self._append(self.candidates[j], frame_idx, cents[i], frame)
        for i in range(len(cents)):
            if i not in taken_c:
                cand = WaggleRunCandidate(self._next_candidate, frame_idx, frame_idx)
                self._next_candidate += 1
                self._append(cand, frame_idx, cents[i], frame)
                self.candidates.append(cand)
        return emitted

    def _append(self, cand, frame_idx, xy, frame):
        cand.trace.append((frame_idx, float(xy[0]), float(xy[1])))
        cand.last_update_frame = frame_idx
        if frame is not None:
            cand.crops.append(crop_snippet(frame, xy[0], xy[1], self.cfg.snippet_size))

    def finish(self) -> list[WaggleRun]:
        """Close every open candidate (end of stream)."""
        return self._close(lambda c: True)

    def _close(self, predicate) -> list[WaggleRun]:
        keep, emitted = [], []
        for cand in self.candidates:
            if not predicate(cand):
                keep.append(cand)
                continue
            cand.open = False
            run = self._to_run(cand)
            if run is not None:
                emitted.append(run)
        self.candidates = keep
        return emitted

    def _to_run(self, cand: WaggleRunCandidate) -> WaggleRun | None:
        trace = np.array(cand.trace, dtype=np.float64)
        span = trace[-1, 0] - trace[0, 0] + 1
        duration = span / self.cfg.sample_rate * 1000.0
        if len(trace) < self.cfg.min_detections or duration < self.cfg.min_duration_ms:
            return None
        run = WaggleRun(self._next_run, int(trace[0, 0]), duration, trace,
                        np.stack(cand.crops) if cand.crops else None)
        self._next_run += 1
        return run


def assemble_runs(centroid_stream: Iterable, cfg: AttentionConfig) -> list[WaggleRun]:
    """Run the assembler over ``(frame_idx, centroids)`` pairs and flush at the end."""
    asm = RunAssembler(cfg)
    runs = []
    for frame_idx, cents in centroid_stream:
        runs.extend(asm.update(frame_idx, cents))
    runs.extend(asm.finish())
    return runs


class AttentionProcessor:
    """Online detector: push frames one at a time, collect finished runs."""

    def __init__(self, height: int, width: int, cfg: AttentionConfig,
                 start_utc: datetime | None = None):
        cfg.validate()
        self.cfg = cfg
        self.grid = PixelWindowGrid(height, width, cfg.window, cfg.sample_rate, cfg.waggle_band)
        self.assembler = RunAssembler(cfg)
        self.ring = FrameRing(cfg.lag + 1)
        self.start_utc = start_utc
        self.frame_index = 0

    def push(self, frame: np.ndarray) -> list[WaggleRun]:
        n = self.frame_index
        self.ring.append(n, frame)
        points = step_frame(self.grid, frame, self.cfg)
        self.frame_index += 1
        t = n - self.cfg.lag
        if t < 0:
            return []
        cents = cluster_active(points, self.cfg.cluster_distance, self.cfg.cluster_min_size)
        return self._stamp(self.assembler.update(t, cents, self.ring[t]))

    def finish(self) -> list[WaggleRun]:
        return self._stamp(self.assembler.finish())

    def _stamp(self, runs: list[WaggleRun]) -> list[WaggleRun]:
        if self.start_utc is not None:
            for run in runs:
                run.start_utc = self.start_utc + timedelta(
                    seconds=run.start_frame / self.cfg.sample_rate)
        return runs


class WaggleDetector(BaseEstimator):
    """Detect waggle runs in a frame stream.

    Parameters mirror :class:`~waggledance.config.AttentionConfig`.  The
    detector has nothing to learn; :meth:`fit` only validates parameters.

    Examples
    --------
    >>> det = WaggleDetector(threshold=120.0)          # doctest: +SKIP
    >>> runs = det.fit().detect(open_source("video.raw"))  # doctest: +SKIP
    """

    def __init__(self, window=_D.window, sample_rate=_D.sample_rate,
                 waggle_band=_D.waggle_band, threshold=_D.threshold,
                 cluster_distance=_D.cluster_distance, cluster_min_size=_D.cluster_min_size,
                 link_distance=_D.link_distance, max_gap=_D.max_gap,
                 min_detections=_D.min_detections, min_duration_ms=_D.min_duration_ms,
                 snippet_size=_D.snippet_size):
        self.window = window
        self.sample_rate = sample_rate
        self.waggle_band = waggle_band
        self.threshold = threshold
        self.cluster_distance = cluster_distance
        self.cluster_min_size = cluster_min_size
        self.link_distance = link_distance
        self.max_gap = max_gap
        self.min_detections = min_detections
        self.min_duration_ms = min_duration_ms
        self.snippet_size = snippet_size

    @classmethod
    def from_config(cls, cfg: AttentionConfig) -> "WaggleDetector":
        return cls(**{k: getattr(cfg, k) for k in cls._get_param_names()})

    def config(self) -> AttentionConfig:
        params = self.get_params()
        params["waggle_band"] = tuple(float(r) for r in params["waggle_band"])
        cfg = AttentionConfig(**params)
        cfg.validate()
        return cfg

    def fit(self, X=None, y=None):
        self.config_ = self.config()
        return self

    def detect(self, stream: FrameStream) -> list[WaggleRun]:
        cfg = self.config()
        proc = AttentionProcessor(stream.height, stream.width, cfg, stream.start_utc)
        runs = []
        for frame in stream:
            runs.extend(proc.push(frame))
        runs.extend(proc.finish())
        runs.sort(key=lambda r: r.id)
        return runs

    def transform(self, X: FrameStream) -> list[WaggleRun]:
        return self.detect(X)
