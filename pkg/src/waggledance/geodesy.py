"""Spherical-Earth geodesics (sub-kilometre ranges make the ellipsoid irrelevant)."""

from __future__ import annotations

import math

EARTH_RADIUS_M = 6371000.0


def destination(lat: float, lon: float, bearing_deg: float, distance_m: float,
                radius: float = EARTH_RADIUS_M) -> tuple[float, float]:
    """Point reached from ``(lat, lon)`` along a great circle with initial bearing."""
    phi1, lam1 = math.radians(lat), math.radians(lon)
    theta = math.radians(bearing_deg)
    delta = distance_m / radius
    sin_phi2 = math.sin(phi1) * math.cos(delta) + math.cos(phi1) * math.sin(delta) * math.cos(theta)
    phi2 = math.asin(max(-1.0, min(1.0, sin_phi2)))
    lam2 = lam1 + math.atan2(math.sin(theta) * math.sin(delta) * math.cos(phi1),
                             math.cos(delta) - math.sin(phi1) * sin_phi2)
    lon2 = (math.degrees(lam2) + 540.0) % 360.0 - 180.0
    return math.degrees(phi2), lon2


def inverse(lat1: float, lon1: float, lat2: float, lon2: float,
            radius: float = EARTH_RADIUS_M) -> tuple[float, float]:
    """Initial bearing (deg, [0, 360)) and haversine distance (m) between two points."""
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dlam = math.radians(lon2 - lon1)
    dphi = phi2 - phi1
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    dist = 2.0 * radius * math.asin(min(1.0, math.sqrt(a)))
    y = math.sin(dlam) * math.cos(phi2)
    x = math.cos(phi1) * math.sin(phi2) - math.sin(phi1) * math.cos(phi2) * math.cos(dlam)
    bearing = math.degrees(math.atan2(y, x)) % 360.0
    return bearing, dist


def local_offset(lat0: float, lon0: float, lat: float, lon: float) -> tuple[float, float]:
    """``(east, north)`` metres of a point relative to an origin (azimuthal equidistant)."""
    bearing, dist = inverse(lat0, lon0, lat, lon)
    b = math.radians(bearing)
    return dist * math.sin(b), dist * math.cos(b)
