"""From decoded waggle runs to field vectors.

Runs are grouped into dances by single-linkage clustering in XYT space
(comb pixels and quarter-seconds since local midnight), angular outliers
such as 180 deg flips are removed by RANSAC, and each surviving dance is
turned into a bearing, distance and profitability estimate.

The bearing is the solar azimuth at the dance's mid-time plus the mean
waggle angle measured clockwise from gravity-up on the comb.  Distance is a
linear function of mean waggle duration; profitability is mean waggle
duration over mean return duration, where return durations are the gaps
between consecutive inlier runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .circular import angular_distance, circular_mean, wrap360
from .clustering import cluster_members
from .config import HiveConfig, MappingConfig, RansacConfig
from .geodesy import destination
from .solar import solar_azimuth

_D = MappingConfig()


class NoStrongModeError(ValueError):
    """No angular consensus of the required size exists."""


class CalibrationError(ValueError):
    """Too few runs to calibrate the duration-to-distance factor."""


@dataclass
class DanceCluster:
    runs: list                 # member WaggleRuns in time order
    xyt: np.ndarray            # (n, 3): x px, y px, t quarter-seconds
    inliers: np.ndarray | None = None
    index: int = 0

    @property
    def n_inliers(self) -> int:
        return 0 if self.inliers is None else int(self.inliers.sum())

    def inlier_runs(self) -> list:
        mask = np.ones(len(self.runs), bool) if self.inliers is None else self.inliers
        return [r for r, keep in zip(self.runs, mask) if keep]

    @property
    def mean_duration_ms(self) -> float:
        return float(np.mean([r.duration_ms for r in self.inlier_runs()]))


@dataclass
class FieldVector:
    dance: int
    bearing_deg: float
    distance_m: float
    profitability: float | None
    latitude: float
    longitude: float
    n_runs: int
    n_inliers: int
    angle_deg: float           # mean waggle angle from gravity-up
    solar_azimuth_deg: float
    mid_utc: datetime
    waggle_ms: float           # d_w
    return_ms: float | None    # d_r
    position: tuple[float, float] = (0.0, 0.0)
    run_ids: list = field(default_factory=list)

    def to_json(self) -> dict:
        from .frames import format_utc
        return {
            "dance": self.dance, "bearing_deg": self.bearing_deg, "distance_m": self.distance_m,
            "profitability": self.profitability, "latitude": self.latitude,
            "longitude": self.longitude, "n_runs": self.n_runs, "n_inliers": self.n_inliers,
            "angle_deg": self.angle_deg, "solar_azimuth_deg": self.solar_azimuth_deg,
            "mid_utc": format_utc(self.mid_utc), "waggle_ms": self.waggle_ms,
            "return_ms": self.return_ms, "position": list(self.position),
            "run_ids": list(self.run_ids),
        }


def _utc(ts: datetime) -> datetime:
    return ts.replace(tzinfo=timezone.utc) if ts.tzinfo is None else ts


def xyt_coordinates(runs: Sequence, utc_offset_hours: float = 0.0,
                    origin: datetime | None = None) -> np.ndarray:
    """``(n, 3)`` array of mean comb position and start time in quarter-seconds.

    Time counts from local midnight of the earliest run's local day (or of
    ``origin``'s local day), so bouts after midnight keep increasing.
    """
    if not runs:
        return np.zeros((0, 3))
    offset = timedelta(hours=utc_offset_hours)
    starts = [_utc(r.start_utc) for r in runs]
    first = _utc(origin) if origin is not None else min(starts)
    local = first + offset
    midnight = datetime(local.year, local.month, local.day, tzinfo=timezone.utc) - offset
    out = np.empty((len(runs), 3))
    for i, (r, s) in enumerate(zip(runs, starts)):
        out[i, :2] = r.position
        out[i, 2] = (s - midnight).total_seconds() * 4.0
    return out


def _run_key(run, xyt_row):
    return (xyt_row[2], xyt_row[0], xyt_row[1], run.duration_ms,
            -1.0 if run.direction_deg is None else run.direction_deg)


def cluster_dances(runs: Sequence, cfg: MappingConfig = _D) -> list[DanceCluster]:
    """Group runs with a known direction into dances of at least ``min_runs_per_dance``.

    Members are ordered by start time; dances are ordered by their first run.
    The result does not depend on the input order.
    """
    usable = [r for r in runs if r.direction_deg is not None and r.start_utc is not None]
    if not usable:
        return []
    xyt = xyt_coordinates(usable, cfg.utc_offset_hours)
    dances = []
    for members in cluster_members(xyt, cfg.d_max3, cfg.min_runs_per_dance):
        members = sorted(members, key=lambda i: _run_key(usable[i], xyt[i]))
        dances.append(DanceCluster([usable[i] for i in members], xyt[members]))
    dances.sort(key=lambda d: tuple(d.xyt[0]))
    for i, d in enumerate(dances):
        d.index = i
    return dances


def ransac_angles(directions, cfg: RansacConfig = RansacConfig(), min_consensus: int = 4,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Inlier mask of the largest set of angles within ``threshold_deg`` of one sample.

    Each hypothesis is a single sampled angle.  With at most ``iterations``
    angles every angle is tried once (in a seeded random order); otherwise
    ``iterations`` random draws are made.  The first hypothesis reaching the
    largest consensus wins.
    """
    a = np.asarray(directions, dtype=np.float64)
    n = len(a)
    if n == 0:
        raise NoStrongModeError("no angles")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(n) if n <= cfg.iterations else rng.integers(0, n, cfg.iterations)
    best, best_count = None, -1
    for k in order:
        mask = angular_distance(a, a[k]) <= cfg.threshold_deg
        count = int(mask.sum())
        if count > best_count:
            best, best_count = mask, count
    if best_count < min_consensus:
        raise NoStrongModeError(f"best consensus {best_count} < {min_consensus}")
    return best


def return_durations(runs: Sequence, inliers=None, max_gap_s: float = 5.0) -> np.ndarray:
    """Gaps in ms between adjacent runs that are both inliers, interruptions excluded."""
    mask = np.ones(len(runs), bool) if inliers is None else np.asarray(inliers, bool)
    gaps = []
    for i in range(len(runs) - 1):
        if not (mask[i] and mask[i + 1]):
            continue
        end = _utc(runs[i].start_utc) + timedelta(milliseconds=runs[i].duration_ms)
        gap = (_utc(runs[i + 1].start_utc) - end).total_seconds() * 1000.0
        if 0.0 <= gap <= max_gap_s * 1000.0:
            gaps.append(gap)
    return np.array(gaps)


def decode_dance(cluster: DanceCluster, cfg: MappingConfig = _D,
                 hive: HiveConfig = HiveConfig(0.0, 0.0)) -> FieldVector:
    """Field vector of a dance whose inliers have been determined."""
    runs = cluster.inlier_runs()
    if len(runs) < 1:
        raise NoStrongModeError("dance has no inlier runs")
    dirs = np.array([r.direction_deg for r in runs])
    alpha = wrap360(circular_mean(dirs) - cfg.gravity_up_deg)
    t0 = min(_utc(r.start_utc) for r in runs)
    t1 = max(_utc(r.start_utc) + timedelta(milliseconds=r.duration_ms) for r in runs)
    mid = t0 + (t1 - t0) / 2
    azimuth = solar_azimuth(hive.latitude, hive.longitude, mid)
    bearing = wrap360(azimuth + alpha)
    d_w = float(np.mean([r.duration_ms for r in runs]))
    distance = cfg.c_d * d_w
    gaps = return_durations(cluster.runs, cluster.inliers, cfg.max_return_gap_s)
    d_r = float(gaps.mean()) if len(gaps) else None
    p_r = d_w / d_r if d_r else None
    lat, lon = destination(hive.latitude, hive.longitude, bearing, distance)
    pos = np.mean([r.position for r in runs], axis=0)
    return FieldVector(cluster.index, bearing, distance, p_r, lat, lon, len(cluster.runs),
                       len(runs), alpha, azimuth, mid, d_w, d_r,
                       (float(pos[0]), float(pos[1])), [r.id for r in cluster.runs])


def map_dances(runs: Sequence, cfg: MappingConfig = _D, hive: HiveConfig = HiveConfig(0.0, 0.0)):
    """Cluster, clean and decode: returns ``(vectors, dances, rejected)``.

    ``rejected`` holds the dances without a strong angular mode.  Each
    dance's RANSAC stream is seeded from the configured seed and the dance
    index, so results do not depend on processing order.
    """
    cfg.validate()
    vectors, kept, rejected = [], [], []
    for dance in cluster_dances(runs, cfg):
        rng = np.random.default_rng([cfg.ransac.seed, dance.index])
        try:
            dance.inliers = ransac_angles([r.direction_deg for r in dance.runs], cfg.ransac,
                                          cfg.min_runs_per_dance, rng)
        except NoStrongModeError:
            rejected.append(dance)
            continue
        kept.append(dance)
        vectors.append(decode_dance(dance, cfg, hive))
    return vectors, kept, rejected


def calibrate_distance(durations_ms, feeder_distance_m: float, bearings_deg=None,
                       feeder_bearing_deg: float | None = None, tolerance_deg: float = 10.0,
                       min_runs: int = 10) -> tuple[float, float]:
    """Metres per millisecond of waggle duration for a feeder at known distance.

    When bearings are given, only runs within ``tolerance_deg`` of the
    feeder bearing are used.  Returns ``(c_d, coefficient of variation)``.
    """
    d = np.asarray(durations_ms, dtype=np.float64)
    if bearings_deg is not None:
        if feeder_bearing_deg is None:
            raise ValueError("bearings given without a feeder bearing")
        d = d[angular_distance(np.asarray(bearings_deg, float), feeder_bearing_deg) <= tolerance_deg]
    if len(d) < min_runs:
        raise CalibrationError(f"{len(d)} usable runs, need at least {min_runs}")
    mean = d.mean()
    return float(feeder_distance_m / mean), float(d.std() / mean)


class DanceMapper(BaseEstimator):
    """Estimator wrapper around :func:`map_dances`.

    ``fit(runs)`` stores ``vectors_``, ``dances_`` and ``rejected_``;
    ``transform(runs)`` returns the field vectors.
    """

    def __init__(self, latitude=0.0, longitude=0.0, d_max3=_D.d_max3,
                 min_runs_per_dance=_D.min_runs_per_dance,
                 ransac_iterations=_D.ransac.iterations,
                 ransac_threshold_deg=_D.ransac.threshold_deg, seed=0, c_d=_D.c_d,
                 gravity_up_deg=_D.gravity_up_deg, max_return_gap_s=_D.max_return_gap_s,
                 utc_offset_hours=_D.utc_offset_hours):
        self.latitude = latitude
        self.longitude = longitude
        self.d_max3 = d_max3
        self.min_runs_per_dance = min_runs_per_dance
        self.ransac_iterations = ransac_iterations
        self.ransac_threshold_deg = ransac_threshold_deg
        self.seed = seed
        self.c_d = c_d
        self.gravity_up_deg = gravity_up_deg
        self.max_return_gap_s = max_return_gap_s
        self.utc_offset_hours = utc_offset_hours

    @classmethod
    def from_config(cls, cfg: MappingConfig, hive: HiveConfig) -> "DanceMapper":
        return cls(hive.latitude, hive.longitude, cfg.d_max3, cfg.min_runs_per_dance,
                   cfg.ransac.iterations, cfg.ransac.threshold_deg, cfg.ransac.seed, cfg.c_d,
                   cfg.gravity_up_deg, cfg.max_return_gap_s, cfg.utc_offset_hours)

    def config(self) -> tuple[MappingConfig, HiveConfig]:
        ransac = RansacConfig(self.ransac_iterations, self.ransac_threshold_deg, self.seed)
        cfg = MappingConfig(self.d_max3, self.min_runs_per_dance, ransac, self.c_d,
                            self.gravity_up_deg, self.max_return_gap_s, self.utc_offset_hours)
        hive = HiveConfig(self.latitude, self.longitude)
        cfg.validate()
        hive.validate()
        return cfg, hive

    def fit(self, X, y=None):
        cfg, hive = self.config()
        self.vectors_, self.dances_, self.rejected_ = map_dances(X, cfg, hive)
        return self

    def transform(self, X) -> list[FieldVector]:
        return self.fit(X).vectors_
