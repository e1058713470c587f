"""Map artifacts for decoded dances: GeoJSON and a plain SVG scatter plot."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .circular import UndefinedMeanError, circular_mean
from .config import HiveConfig
from .geodesy import destination, local_offset


def _point(lon: float, lat: float, props: dict) -> dict:
    return {"type": "Feature", "geometry": {"type": "Point", "coordinates": [lon, lat]},
            "properties": props}


def to_geojson(vectors: Sequence, hive: HiveConfig,
               feeder: tuple[float, float] | None = None) -> dict:
    """FeatureCollection of dance endpoints plus hive, feeder and mean-direction markers.

    Each dance point carries its run count and a ``saturation`` in (0, 1]
    proportional to it.  Without dances the collection is empty.
    """
    if not vectors:
        return {"type": "FeatureCollection", "features": []}
    most = max(v.n_runs for v in vectors)
    features = [_point(hive.longitude, hive.latitude, {"kind": "hive"})]
    for v in vectors:
        features.append(_point(v.longitude, v.latitude, {
            "kind": "dance", "dance": v.dance, "runs": v.n_runs,
            "bearing": v.bearing_deg, "distance_m": v.distance_m,
            "p_R": v.profitability, "saturation": v.n_runs / most,
        }))
    if feeder is not None:
        features.append(_point(feeder[1], feeder[0], {"kind": "feeder"}))
    try:
        mean_bearing = circular_mean([v.bearing_deg for v in vectors])
    except UndefinedMeanError:
        mean_bearing = None
    if mean_bearing is not None:
        dist = float(np.mean([v.distance_m for v in vectors]))
        lat, lon = destination(hive.latitude, hive.longitude, mean_bearing, dist)
        features.append({
            "type": "Feature",
            "geometry": {"type": "LineString",
                         "coordinates": [[hive.longitude, hive.latitude], [lon, lat]]},
            "properties": {"kind": "mean_direction", "bearing": mean_bearing, "distance_m": dist},
        })
    return {"type": "FeatureCollection", "features": features}


def to_svg(vectors: Sequence, hive: HiveConfig, feeder: tuple[float, float] | None = None,
           size: int = 600) -> str:
    """Scatter of dance endpoints in local metres around the hive (north up)."""
    pts = [local_offset(hive.latitude, hive.longitude, v.latitude, v.longitude) for v in vectors]
    feeder_xy = (local_offset(hive.latitude, hive.longitude, *feeder) if feeder is not None
                 else None)
    extent = max([10.0] + [math.hypot(*p) for p in pts]
                 + ([math.hypot(*feeder_xy)] if feeder_xy else []))
    half = size / 2.0
    scale = (half - 20.0) / extent

    def xy(east, north):
        return half + east * scale, half - north * scale

    most = max([v.n_runs for v in vectors], default=1)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">',
             f'<rect width="{size}" height="{size}" fill="white"/>',
             f'<text x="10" y="20" font-size="12">N &#8593;  scale: {extent:.0f} m to edge</text>']
    for v, (e, n) in zip(vectors, pts):
        x, y = xy(e, n)
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="4" fill="rgb(200,40,40)" '
                     f'fill-opacity="{v.n_runs / most:.3f}">'
                     f'<title>{escape(f"dance {v.dance}: {v.bearing_deg:.1f} deg, {v.distance_m:.0f} m")}'
                     f'</title></circle>')
    if feeder_xy is not None:
        x, y = xy(*feeder_xy)
        parts.append(f'<rect x="{x - 5:.2f}" y="{y - 5:.2f}" width="10" height="10" fill="blue"/>')
    hx, hy = xy(0.0, 0.0)
    parts.append(f'<polygon points="{hx:.2f},{hy - 7:.2f} {hx - 6:.2f},{hy + 5:.2f} '
                 f'{hx + 6:.2f},{hy + 5:.2f}" fill="black"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def export_map(vectors: Sequence, hive: HiveConfig, out_dir: str | Path,
               feeder: tuple[float, float] | None = None) -> tuple[Path, Path]:
    """Write ``map.geojson`` and ``map.svg`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gj = out / "map.geojson"
    gj.write_text(json.dumps(to_geojson(vectors, hive, feeder), indent=1) + "\n")
    svg = out / "map.svg"
    svg.write_text(to_svg(vectors, hive, feeder))
    return gj, svg
