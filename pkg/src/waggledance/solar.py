"""Solar position (NOAA solar-calculator formulation).

Accurate to a few hundredths of a degree in azimuth between 1950 and 2050
for sun positions above the horizon, well within what dance decoding needs.
"""

from __future__ import annotations

import math
from datetime import datetime, timezone

_J2000 = 2451545.0
_UNIX_EPOCH_JD = 2440587.5


def julian_day(utc: datetime) -> float:
    """Julian day of a timestamp; naive datetimes are taken as UTC."""
    if utc.tzinfo is None:
        utc = utc.replace(tzinfo=timezone.utc)
    return _UNIX_EPOCH_JD + utc.timestamp() / 86400.0


def _sun(jd: float):
    """Declination (rad) and equation of time (minutes) for a Julian day."""
    jc = (jd - _J2000) / 36525.0
    l0 = math.radians((280.46646 + jc * (36000.76983 + jc * 0.0003032)) % 360.0)
    m = math.radians(357.52911 + jc * (35999.05029 - 0.0001537 * jc))
    e = 0.016708634 - jc * (0.000042037 + 0.0000001267 * jc)
    c = (math.sin(m) * (1.914602 - jc * (0.004817 + 0.000014 * jc))
         + math.sin(2 * m) * (0.019993 - 0.000101 * jc)
         + math.sin(3 * m) * 0.000289)
    omega = math.radians(125.04 - 1934.136 * jc)
    app_long = math.radians(math.degrees(l0) + c - 0.00569 - 0.00478 * math.sin(omega))
    seconds = 21.448 - jc * (46.815 + jc * (0.00059 - jc * 0.001813))
    obliq = math.radians(23.0 + (26.0 + seconds / 60.0) / 60.0 + 0.00256 * math.cos(omega))
    decl = math.asin(math.sin(obliq) * math.sin(app_long))
    y = math.tan(obliq / 2.0) ** 2
    eq_time = 4.0 * math.degrees(
        y * math.sin(2 * l0) - 2 * e * math.sin(m) + 4 * e * y * math.sin(m) * math.cos(2 * l0)
        - 0.5 * y * y * math.sin(4 * l0) - 1.25 * e * e * math.sin(2 * m))
    return decl, eq_time


def _hour_angle(jd: float, lon: float, eq_time: float) -> float:
    minutes = ((jd + 0.5) % 1.0) * 1440.0  # minutes since UTC midnight
    true_solar = (minutes + eq_time + 4.0 * lon) % 1440.0
    return math.radians(true_solar / 4.0 - 180.0)


def solar_position(lat: float, lon: float, utc: datetime) -> tuple[float, float]:
    """``(azimuth, elevation)`` in degrees; azimuth clockwise from true north.

    Elevation is geometric (no refraction correction).
    """
    if not -90.0 <= lat <= 90.0:
        raise ValueError(f"latitude {lat} outside [-90, 90]")
    jd = julian_day(utc)
    decl, eq_time = _sun(jd)
    ha = _hour_angle(jd, lon, eq_time)
    phi = math.radians(lat)
    sin_el = math.sin(phi) * math.sin(decl) + math.cos(phi) * math.cos(decl) * math.cos(ha)
    elevation = math.degrees(math.asin(max(-1.0, min(1.0, sin_el))))
    az = math.degrees(math.atan2(math.sin(ha),
                                 math.cos(ha) * math.sin(phi) - math.tan(decl) * math.cos(phi)))
    return (az + 180.0) % 360.0, elevation


def solar_azimuth(lat: float, lon: float, utc: datetime) -> float:
    """Solar azimuth in degrees clockwise from true north, in [0, 360)."""
    return solar_position(lat, lon, utc)[0]


def solar_noon(lat: float, lon: float, day: datetime) -> datetime:
    """UTC time of local solar noon on the UTC date of ``day``."""
    base = datetime(day.year, day.month, day.day, tzinfo=timezone.utc)
    # equation of time varies slowly; two fixed-point passes are plenty
    t = 720.0 - 4.0 * lon
    for _ in range(2):
        jd = julian_day(base) + t / 1440.0
        _, eq = _sun(jd)
        t = 720.0 - 4.0 * lon - eq
    return datetime.fromtimestamp(base.timestamp() + t * 60.0, tz=timezone.utc)
