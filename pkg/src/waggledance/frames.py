"""Frame sources and perspective rectification.

Supported sources
-----------------
* a directory of numbered binary PGM (P5) images, 8-bit grayscale;
* a raw planar container: a 16-byte header of four little-endian ``u32``
  values (width, height, fps, frame count) followed by ``count`` frames of
  ``height * width`` bytes each;
* ``synth:<scene.json>`` or ``synth:<registered name>``, rendered on demand.

A source may carry a JSON sidecar (``<file>.json`` for raw containers,
``stream.json`` inside PGM directories) with ``sample_rate`` and
``start_utc`` keys.
"""

from __future__ import annotations

import json
import re
import struct
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

RAW_HEADER = struct.Struct("<4I")


class UnreadableSourceError(OSError):
    """The source is missing, truncated or not in a supported format."""


class FrameFormatError(ValueError):
    """Frames within one source disagree in size or depth."""


class DegenerateConfigurationError(ValueError):
    """Corner points do not define a projective transform (three are collinear)."""


def parse_utc(value: str | datetime | None) -> datetime | None:
    if value is None or isinstance(value, datetime):
        return value
    text = value.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_utc(dt: datetime | None) -> str | None:
    if dt is None:
        return None
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


class FrameStream:
    """Sequential, replayable source of 8-bit grayscale frames.

    Subclasses implement :meth:`read`; iteration yields frames in index order.
    """

    width: int
    height: int
    sample_rate: float
    start_utc: datetime | None = None

    def __len__(self) -> int:
        raise NotImplementedError

    def read(self, index: int) -> np.ndarray:
        raise NotImplementedError

    def __getitem__(self, index: int) -> np.ndarray:
        if not 0 <= index < len(self):
            raise IndexError(f"frame {index} outside stream of {len(self)} frames")
        return self.read(index)

    def __iter__(self) -> Iterator[np.ndarray]:
        for i in range(len(self)):
            yield self.read(i)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def _check(self, frame: np.ndarray, index: int) -> np.ndarray:
        if frame.shape != (self.height, self.width):
            raise FrameFormatError(
                f"frame {index} has shape {frame.shape}, stream is {(self.height, self.width)}")
        return frame


class ArrayStream(FrameStream):
    """Stream over an in-memory ``(T, H, W)`` uint8 array."""

    def __init__(self, frames, sample_rate: float = 100.0, start_utc=None):
        frames = np.asarray(frames)
        if frames.ndim != 3:
            raise FrameFormatError("expected a (T, H, W) array of frames")
        if frames.dtype != np.uint8:
            raise FrameFormatError("frames must be 8-bit grayscale")
        self.frames = frames
        self.height, self.width = frames.shape[1:]
        self.sample_rate = float(sample_rate)
        self.start_utc = parse_utc(start_utc)

    def __len__(self) -> int:
        return len(self.frames)

    def read(self, index: int) -> np.ndarray:
        return self.frames[index]


def read_pgm(path: str | Path) -> np.ndarray:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise UnreadableSourceError(f"cannot read {path}") from exc
    # header: magic, width, height, maxval separated by whitespace, comments allowed
    tokens = []
    pos = 0
    while len(tokens) < 4:
        m = re.compile(rb"\s*(#[^\n]*\n\s*)*(\S+)").match(data, pos)
        if m is None:
            raise UnreadableSourceError(f"{path}: truncated PGM header")
        tokens.append(m.group(2))
        pos = m.end()
    if tokens[0] != b"P5":
        raise UnreadableSourceError(f"{path}: not a binary PGM (P5) file")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise UnreadableSourceError(f"{path}: malformed PGM header") from exc
    if maxval > 255:
        raise FrameFormatError(f"{path}: only 8-bit PGM is supported")
    pos += 1  # single whitespace byte after maxval
    pixels = data[pos:pos + width * height]
    if len(pixels) != width * height:
        raise UnreadableSourceError(f"{path}: truncated pixel data")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width)


def write_pgm(path: str | Path, frame: np.ndarray) -> None:
    frame = np.ascontiguousarray(frame, dtype=np.uint8)
    h, w = frame.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(frame.tobytes())


def _natural_key(path: Path):
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", path.name)]


class PGMSequence(FrameStream):
    """Numbered PGM files in one directory, ordered by their embedded number."""

    def __init__(self, directory: str | Path, sample_rate: float | None = None):
        directory = Path(directory)
        self.paths = sorted(directory.glob("*.pgm"), key=_natural_key)
        if not self.paths:
            raise UnreadableSourceError(f"no .pgm frames in {directory}")
        meta = _read_sidecar(directory / "stream.json")
        first = read_pgm(self.paths[0])
        self.height, self.width = first.shape
        self.sample_rate = float(sample_rate or meta.get("sample_rate", 100.0))
        self.start_utc = parse_utc(meta.get("start_utc"))
        # dimensions are checked up front so a bad frame fails at open time
        for p in self.paths[1:]:
            self._check(read_pgm(p), self.paths.index(p))

    def __len__(self) -> int:
        return len(self.paths)

    def read(self, index: int) -> np.ndarray:
        return self._check(read_pgm(self.paths[index]), index)


def write_raw(path: str | Path, frames, fps: int, start_utc=None) -> None:
    """Write frames to the raw container (and a sidecar when ``start_utc`` is set)."""
    path = Path(path)
    frames = iter(frames)
    first = np.asarray(next(frames), dtype=np.uint8)
    h, w = first.shape
    count = 1
    with open(path, "wb") as fh:
        fh.write(RAW_HEADER.pack(w, h, int(fps), 0))
        fh.write(first.tobytes())
        for frame in frames:
            frame = np.asarray(frame, dtype=np.uint8)
            if frame.shape != (h, w):
                raise FrameFormatError(f"frame {count} has shape {frame.shape}, expected {(h, w)}")
            fh.write(frame.tobytes())
            count += 1
        fh.seek(0)
        fh.write(RAW_HEADER.pack(w, h, int(fps), count))
    meta = {"sample_rate": float(fps)}
    if start_utc is not None:
        meta["start_utc"] = format_utc(parse_utc(start_utc))
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2) + "\n")


class RawVideo(FrameStream):
    """Memory-mapped raw planar container."""

    def __init__(self, path: str | Path):
        path = Path(path)
        try:
            with open(path, "rb") as fh:
                header = fh.read(RAW_HEADER.size)
        except OSError as exc:
            raise UnreadableSourceError(f"cannot read {path}") from exc
        if len(header) != RAW_HEADER.size:
            raise UnreadableSourceError(f"{path}: truncated header")
        self.width, self.height, fps, count = RAW_HEADER.unpack(header)
        if self.width == 0 or self.height == 0:
            raise UnreadableSourceError(f"{path}: zero frame size")
        expected = RAW_HEADER.size + count * self.width * self.height
        if path.stat().st_size != expected:
            raise UnreadableSourceError(
                f"{path}: size {path.stat().st_size} does not match header ({expected} bytes)")
        meta = _read_sidecar(Path(str(path) + ".json"))
        self.sample_rate = float(fps)
        self.start_utc = parse_utc(meta.get("start_utc"))
        self._data = np.memmap(path, dtype=np.uint8, mode="r", offset=RAW_HEADER.size,
                               shape=(count, self.height, self.width)) if count else \
            np.zeros((0, self.height, self.width), np.uint8)

    def __len__(self) -> int:
        return len(self._data)

    def read(self, index: int) -> np.ndarray:
        return np.array(self._data[index])


def _read_sidecar(path: Path) -> dict:
    if not path.exists():
        return {}
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UnreadableSourceError(f"bad metadata sidecar {path}") from exc


SYNTHETIC_SOURCES: dict[str, Callable[[], FrameStream]] = {}


def register_synthetic(name: str, factory: Callable[[], FrameStream]) -> None:
    SYNTHETIC_SOURCES[name] = factory


def open_source(uri: str | Path, sample_rate: float | None = None) -> FrameStream:
    """Open a frame source by path or ``synth:`` handle."""
    text = str(uri)
    if text.startswith("synth:"):
        handle = text[len("synth:"):]
        from . import synth  # noqa: F401  (registers the built-in scenes)
        if handle in SYNTHETIC_SOURCES:
            return SYNTHETIC_SOURCES[handle]()
        from .synth import SyntheticStream, load_scene
        if not Path(handle).exists():
            raise UnreadableSourceError(f"unknown synthetic source {handle!r}")
        return SyntheticStream(load_scene(handle))
    path = Path(text)
    if path.is_dir():
        return PGMSequence(path, sample_rate)
    if path.is_file():
        if path.suffix.lower() == ".pgm":
            raise UnreadableSourceError(f"{path}: pass the directory holding the frames")
        stream = RawVideo(path)
        if sample_rate is not None:
            stream.sample_rate = float(sample_rate)
        return stream
    raise UnreadableSourceError(f"no such source: {path}")


# --- perspective rectification ----------------------------------------------

def _check_corners(pts: np.ndarray, name: str) -> None:
    if pts.shape != (4, 2):
        raise DegenerateConfigurationError(f"{name}: expected 4 points, got shape {pts.shape}")
    scale = max(1.0, float(np.abs(pts).max()))
    for i in range(4):
        a, b, c = (pts[j] for j in range(4) if j != i)
        area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(area) <= 1e-9 * scale * scale:
            raise DegenerateConfigurationError(f"{name}: three corner points are collinear")


def estimate_homography(src: Sequence, dst: Sequence) -> np.ndarray:
    """Exact 4-point projective transform mapping ``src`` onto ``dst``.

    Points are ``(x, y)``.  The returned 3x3 matrix is scaled so that its
    bottom-right entry is 1.
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    _check_corners(src, "src")
    _check_corners(dst, "dst")
    A = np.zeros((8, 8))
    rhs = np.zeros(8)
    for i, ((x, y), (u, v)) in enumerate(zip(src, dst)):
        A[2 * i] = [x, y, 1, 0, 0, 0, -u * x, -u * y]
        A[2 * i + 1] = [0, 0, 0, x, y, 1, -v * x, -v * y]
        rhs[2 * i] = u
        rhs[2 * i + 1] = v
    h = np.linalg.solve(A, rhs)
    return np.append(h, 1.0).reshape(3, 3)


def apply_homography(h: np.ndarray, points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    hom = np.column_stack([pts, np.ones(len(pts))]) @ np.asarray(h).T
    return hom[:, :2] / hom[:, 2:3]


class Rectifier:
    """Precomputed inverse map for warping many frames with one homography.

    Each output pixel ``(x, y)`` samples the input at ``H^-1 (x, y)`` with
    bilinear interpolation; samples outside the input are 0.
    """

    def __init__(self, h: np.ndarray, in_shape: tuple[int, int],
                 out_shape: tuple[int, int] | None = None):
        h = np.asarray(h, dtype=np.float64)
        if h.shape != (3, 3) or abs(np.linalg.det(h)) < 1e-12:
            raise DegenerateConfigurationError("homography is not invertible")
        self.in_shape = tuple(in_shape)
        self.out_shape = tuple(out_shape or in_shape)
        H, W = self.out_shape
        inv = np.linalg.inv(h)
        ys, xs = np.mgrid[0:H, 0:W]
        src = apply_homography(inv, np.column_stack([xs.ravel(), ys.ravel()]))
        # snap values within rounding noise of an integer so identity maps stay exact
        snapped = np.round(src)
        src = np.where(np.abs(src - snapped) < 1e-9, snapped, src)
        sx, sy = src[:, 0], src[:, 1]
        x0 = np.floor(sx).astype(np.int64)
        y0 = np.floor(sy).astype(np.int64)
        fx = sx - x0
        fy = sy - y0
        h_in, w_in = self.in_shape
        idx = []
        wts = []
        for dy, dx, w in ((0, 0, (1 - fx) * (1 - fy)), (0, 1, fx * (1 - fy)),
                          (1, 0, (1 - fx) * fy), (1, 1, fx * fy)):
            xx, yy = x0 + dx, y0 + dy
            inside = (xx >= 0) & (xx < w_in) & (yy >= 0) & (yy < h_in)
            idx.append(np.where(inside, yy * w_in + xx, 0))
            wts.append(np.where(inside, w, 0.0))
        self._idx = np.stack(idx)
        self._wts = np.stack(wts)

    def __call__(self, frame: np.ndarray) -> np.ndarray:
        frame = np.asarray(frame)
        if frame.shape != self.in_shape:
            raise FrameFormatError(f"frame shape {frame.shape} != {self.in_shape}")
        flat = frame.reshape(-1).astype(np.float64)
        out = (flat[self._idx] * self._wts).sum(axis=0)
        return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8).reshape(self.out_shape)


def rectify(frame: np.ndarray, h: np.ndarray, out_shape: tuple[int, int] | None = None) -> np.ndarray:
    """Warp ``frame`` by homography ``h`` (bilinear, zero outside)."""
    return Rectifier(h, np.asarray(frame).shape, out_shape)(frame)


def corners_to_homography(corners: Sequence[float], shape: tuple[int, int]) -> np.ndarray:
    """Homography sending comb corners (TL, TR, BR, BL as x1,y1,...,x4,y4) to the frame corners."""
    pts = np.asarray(corners, dtype=np.float64).reshape(4, 2)
    h, w = shape
    dst = [(0, 0), (w - 1, 0), (w - 1, h - 1), (0, h - 1)]
    return estimate_homography(pts, dst)


class RectifiedStream(FrameStream):
    def __init__(self, base: FrameStream, h: np.ndarray):
        self.base = base
        self.width, self.height = base.width, base.height
        self.sample_rate = base.sample_rate
        self.start_utc = base.start_utc
        self._warp = Rectifier(h, base.shape)

    def __len__(self) -> int:
        return len(self.base)

    def read(self, index: int) -> np.ndarray:
        return self._warp(self.base.read(index))

    def __iter__(self):
        for frame in self.base:
            yield self._warp(frame)
