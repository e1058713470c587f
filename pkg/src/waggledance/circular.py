"""Circular statistics on angles in degrees."""

from __future__ import annotations

import numpy as np


class UndefinedMeanError(ValueError):
    """The angles cancel out; their mean direction is undefined."""


def wrap360(deg):
    """Wrap to [0, 360).  Scalars in, float out."""
    out = np.mod(np.asarray(deg, dtype=np.float64), 360.0)
    out = np.where(out >= 360.0, out - 360.0, out)  # np.mod(-1e-17, 360) == 360.0
    return float(out) if out.ndim == 0 else out


def wrap180(deg):
    """Wrap to [-180, 180)."""
    return wrap360(np.asarray(deg, dtype=np.float64) + 180.0) - 180.0


def resultant(angles) -> tuple[float, float]:
    """Summed sine and cosine components."""
    rad = np.radians(np.asarray(angles, dtype=np.float64))
    return float(np.sin(rad).sum()), float(np.cos(rad).sum())


def resultant_length(angles) -> float:
    """Mean resultant length in [0, 1]."""
    a = np.asarray(angles, dtype=np.float64)
    if a.size == 0:
        raise ValueError("no angles")
    s, c = resultant(a)
    return float(np.hypot(s, c) / a.size)


def circular_mean(angles) -> float:
    """Mean direction ``atan2(sum sin, sum cos)`` in [0, 360)."""
    a = np.asarray(angles, dtype=np.float64)
    if a.size == 0:
        raise ValueError("circular_mean of an empty set")
    s, c = resultant(a)
    if np.hypot(s, c) < 1e-12:
        raise UndefinedMeanError("resultant vector vanishes")
    return float(wrap360(np.degrees(np.arctan2(s, c))))


def circular_std(angles) -> float:
    """Circular standard deviation in degrees, ``sqrt(-2 ln R)``."""
    r = resultant_length(angles)
    return float(np.degrees(np.sqrt(-2.0 * np.log(max(r, 1e-300)))))


def angular_distance(a, b):
    """Unsigned smallest difference between angles, in [0, 180]."""
    return np.abs(wrap180(np.asarray(a, dtype=np.float64) - b))
