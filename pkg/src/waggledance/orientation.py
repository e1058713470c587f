"""Waggle-run orientation from snippet stacks.

The dancer's sideways body throws dominate the differences between
consecutive snippets.  Summing the power spectra of those difference images
gives a pattern elongated along the lateral (throw) direction; a ring-shaped
difference-of-Gaussians bandpass keeps the spatial frequencies that belong to
the expected displacement, and the principal axis of what remains is the
lateral direction.  The body axis is perpendicular to it.  The remaining
180 deg ambiguity is resolved from the forward drift of the detection trace.

Angles are comb angles: 0 deg points up the image, clockwise positive.
Frequency-domain arrays are DC-centred (``numpy.fft.fftshift`` layout) and
indexed ``[row, column]``, i.e. ``[ky, kx]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .config import BandpassConfig

_D = BandpassConfig()

CONFIDENCE_CAP = 1e6
LOW_CONFIDENCE = 1.2


class NoSignalError(ValueError):
    """The (filtered) spectrum carries no energy."""


class UnresolvedDirectionError(ValueError):
    """The 180 deg ambiguity could not be resolved; the body axis is still known."""

    def __init__(self, message: str, axis_deg: float | None = None,
                 confidence: float | None = None):
        super().__init__(message)
        self.axis_deg = axis_deg
        self.confidence = confidence


@dataclass(frozen=True)
class OrientationResult:
    axis_deg: float       # undirected body axis, [0, 180)
    direction_deg: float  # disambiguated waggle direction, [0, 360)
    confidence: float     # first / second principal variance, >= 1

    @property
    def low_confidence(self) -> bool:
        return self.confidence < LOW_CONFIDENCE


def diff_image(current, previous) -> np.ndarray:
    """Signed difference ``current - previous`` as float64."""
    a = np.asarray(current, dtype=np.float64)
    b = np.asarray(previous, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"frame shapes differ: {a.shape} vs {b.shape}")
    return a - b


def accumulate_spectrum(stack) -> np.ndarray:
    """Sum of DC-centred power spectra of consecutive-frame differences."""
    s = np.asarray(stack, dtype=np.float64)
    if s.ndim != 3:
        raise ValueError("expected a (T, H, W) snippet stack")
    if len(s) < 2:
        raise ValueError("need at least two snippets for a difference image")
    spec = np.fft.fft2(np.diff(s, axis=0), axes=(1, 2))
    power = (spec.real ** 2 + spec.imag ** 2).sum(axis=0)
    return np.fft.fftshift(power)


def frequency_grid(shape) -> tuple[np.ndarray, np.ndarray]:
    """``(ky, kx)`` DFT-bin coordinates of a DC-centred array."""
    h, w = shape
    ky = np.arange(h) - h // 2
    kx = np.arange(w) - w // 2
    return np.meshgrid(ky, kx, indexing="ij")


def dog_profile(radius, cfg: BandpassConfig = _D) -> np.ndarray:
    """Ring difference-of-Gaussians gain at ``radius`` bins, peak 1 at ``radius == k``."""
    d = np.asarray(radius, dtype=np.float64) - cfg.k
    si, so = cfg.inner, cfg.outer

    def raw(x):
        return np.exp(-x ** 2 / (2 * si ** 2)) / si - np.exp(-x ** 2 / (2 * so ** 2)) / so

    return raw(d) / raw(0.0)


def dog_bandpass(spectrum, cfg: BandpassConfig = _D) -> np.ndarray:
    """Multiply a DC-centred spectrum by the ring DoG and clamp negatives to zero."""
    spec = np.asarray(spectrum, dtype=np.float64)
    ky, kx = frequency_grid(spec.shape)
    return np.maximum(spec * dog_profile(np.hypot(kx, ky), cfg), 0.0)


def _principal(weights):
    w = np.asarray(weights, dtype=np.float64)
    total = w.sum()
    if not total > 0:
        raise NoSignalError("spectrum is identically zero")
    ky, kx = frequency_grid(w.shape)
    cxx = (w * kx * kx).sum() / total
    cyy = (w * ky * ky).sum() / total
    cxy = (w * kx * ky).sum() / total
    vals, vecs = np.linalg.eigh(np.array([[cxx, cxy], [cxy, cyy]]))
    ex, ey = vecs[:, 1]
    lam1, lam2 = vals[1], max(vals[0], 0.0)
    conf = CONFIDENCE_CAP if lam2 <= lam1 / CONFIDENCE_CAP else lam1 / lam2
    return ex, ey, float(conf)


def principal_axis(spectrum) -> tuple[float, float]:
    """Body-axis angle in [0, 180) and eigenvalue-ratio confidence.

    The first principal direction of the spectrum (weights = spectrum
    values, coordinates relative to DC) is the lateral direction; the body
    axis is that angle plus 90 deg.
    """
    ex, ey, conf = _principal(spectrum)
    lateral = math.degrees(math.atan2(ex, -ey)) % 180.0
    axis = (lateral + 90.0) % 180.0
    return (0.0 if axis >= 180.0 else axis), conf


def disambiguate(trace, axis_deg: float, head_fraction: float = 0.1,
                 bin_width: float = 10.0) -> float:
    """Pick the waggle direction (``axis`` or ``axis + 180``) that follows the trace.

    The anchor is the mean of the first ``head_fraction`` of the trace.  The
    vectors from the anchor to every later point are binned by comb angle;
    the mean vector of the fullest bin is the forward direction.
    """
    pts = np.asarray(trace, dtype=np.float64)
    if pts.ndim == 2 and pts.shape[1] == 3:
        pts = pts[:, 1:]
    if len(pts) < 10:
        raise UnresolvedDirectionError(f"trace of {len(pts)} points is too short",
                                       axis_deg=axis_deg)
    n_head = max(1, math.ceil(head_fraction * len(pts)))
    anchor = pts[:n_head].mean(axis=0)
    vec = pts[n_head:] - anchor
    vec = vec[np.hypot(vec[:, 0], vec[:, 1]) > 0]
    if len(vec) == 0:
        raise UnresolvedDirectionError("trace does not move", axis_deg=axis_deg)
    ang = np.degrees(np.arctan2(vec[:, 0], -vec[:, 1])) % 360.0
    n_bins = int(round(360.0 / bin_width))
    bins = np.minimum((ang // bin_width).astype(int), n_bins - 1)
    mode = int(np.argmax(np.bincount(bins, minlength=n_bins)))
    fwd = vec[bins == mode].mean(axis=0)
    forward = math.degrees(math.atan2(fwd[0], -fwd[1])) % 360.0
    diff = abs((forward - axis_deg + 180.0) % 360.0 - 180.0)
    return float(axis_deg % 360.0) if diff <= 90.0 else float((axis_deg + 180.0) % 360.0)


def decode_orientation(snippets, trace, cfg: BandpassConfig = _D) -> OrientationResult:
    """Axis, direction and confidence for one waggle run."""
    filtered = dog_bandpass(accumulate_spectrum(snippets), cfg)
    axis, conf = principal_axis(filtered)
    try:
        direction = disambiguate(trace, axis)
    except UnresolvedDirectionError as exc:
        exc.axis_deg, exc.confidence = axis, conf
        raise
    return OrientationResult(axis, direction, conf)


def decode_run(run, cfg: BandpassConfig = _D) -> OrientationResult | None:
    """Decode a :class:`~waggledance.attention.WaggleRun` and annotate it in place.

    Returns None (leaving ``direction_deg`` unset) when only the axis is known.
    """
    if run.snippets is None:
        raise ValueError(f"run {run.id} has no snippets")
    try:
        res = decode_orientation(run.snippets, run.trace, cfg)
    except UnresolvedDirectionError as exc:
        run.axis_deg, run.confidence, run.direction_deg = exc.axis_deg, exc.confidence, None
        return None
    run.axis_deg, run.direction_deg, run.confidence = res.axis_deg, res.direction_deg, res.confidence
    return res


class OrientationDecoder(TransformerMixin, BaseEstimator):
    """Estimator wrapper: ``transform(runs)`` -> ``(n, 3)`` array of axis, direction, confidence.

    Unresolved directions are NaN.  Runs are annotated in place.
    """

    def __init__(self, snippet_size=_D.snippet_size, displacement=_D.displacement,
                 sigma_inner=_D.sigma_inner, sigma_outer=_D.sigma_outer):
        self.snippet_size = snippet_size
        self.displacement = displacement
        self.sigma_inner = sigma_inner
        self.sigma_outer = sigma_outer

    def config(self) -> BandpassConfig:
        cfg = BandpassConfig(**self.get_params())
        cfg.validate()
        return cfg

    def fit(self, X=None, y=None):
        self.config_ = self.config()
        return self

    def transform(self, X) -> np.ndarray:
        cfg = self.config()
        out = np.full((len(X), 3), np.nan)
        for i, run in enumerate(X):
            decode_run(run, cfg)
            if run.axis_deg is not None:
                out[i, 0] = run.axis_deg
                out[i, 2] = run.confidence
            if run.direction_deg is not None:
                out[i, 1] = run.direction_deg
        return out
