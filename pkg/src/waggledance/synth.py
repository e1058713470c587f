"""Synthetic hive videos with scripted dancers and known ground truth.

Dancers are smooth bright ellipses on a dark, lightly textured comb.  During
a waggle phase the body advances along the run direction while oscillating
sideways at the waggle frequency; return phases are half circles on
alternating sides that bring the dancer back near the dance centre.
Distractor bees walk without oscillating.  Gaussian pixel noise is drawn
from a generator seeded per frame, so any frame can be rendered on its own
and replays are bit-identical.

Angles follow the comb convention used throughout the package: 0 deg points
up the image (against gravity), clockwise positive.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .circular import wrap180
from .frames import FrameStream, format_utc, parse_utc


class ScriptOutsideFrameError(ValueError):
    """A scripted dancer leaves the frame."""


def unit(deg: float) -> np.ndarray:
    """Image-space unit vector ``(dx, dy)`` for a comb angle."""
    t = math.radians(deg)
    return np.array([math.sin(t), -math.cos(t)])


def comb_angle(dx, dy):
    """Comb angle in [0, 360) of image-space vectors."""
    return np.degrees(np.arctan2(dx, -np.asarray(dy))) % 360.0


@dataclass
class DanceScript:
    dancer_id: int
    position: tuple[float, float]
    direction_deg: float
    waggle_duration_ms: float
    n_runs: int
    start_frame: int = 0
    body_length: float = 21.0
    body_width: float = 8.0
    duration_sd_ms: float = 0.0
    waggle_frequency: float = 13.0
    lateral_amplitude: float = 7.5
    forward_speed: float = 0.4
    return_duration_ms: float = 1500.0
    divergence_sd: float = 14.0
    alternating_bias_deg: float = 0.0
    drift_px: float = 1.5
    seed: int = 0

    def validate(self, sample_rate: float) -> None:
        if not 0 < self.waggle_frequency < sample_rate / 2:
            raise ValueError(f"dancer {self.dancer_id}: waggle frequency outside (0, Nyquist)")
        if self.n_runs < 1:
            raise ValueError(f"dancer {self.dancer_id}: needs at least one run")


@dataclass
class VibrationScript:
    """A non-dancing bee vibrating along its body axis (a waggle-band confuser)."""
    position: tuple[float, float]
    heading_deg: float
    start_frame: int
    duration_ms: float
    frequency: float = 14.0
    amplitude: float = 3.0
    body_length: float = 21.0
    body_width: float = 8.0


@dataclass
class GroundTruthRun:
    dancer_id: int
    run_index: int
    start_frame: int
    end_frame: int  # inclusive
    direction_deg: float
    duration_ms: float
    trace: np.ndarray  # (n, 3): frame, x, y of the body centre

    @property
    def position(self) -> tuple[float, float]:
        return float(self.trace[:, 1].mean()), float(self.trace[:, 2].mean())


@dataclass
class GroundTruth:
    runs: list[GroundTruthRun]
    dances: list[dict] = field(default_factory=list)
    body_length: float = 21.0
    sample_rate: float = 100.0

    def to_json(self) -> dict:
        return {
            "sample_rate": self.sample_rate,
            "body_length": self.body_length,
            "runs": [{
                "dancer_id": r.dancer_id, "run_index": r.run_index,
                "start_frame": r.start_frame, "end_frame": r.end_frame,
                "direction_deg": r.direction_deg, "duration_ms": r.duration_ms,
                "trace": np.round(r.trace, 3).tolist(),
            } for r in self.runs],
            "dances": self.dances,
        }

    @classmethod
    def from_json(cls, data: dict) -> "GroundTruth":
        runs = [GroundTruthRun(r["dancer_id"], r["run_index"], r["start_frame"], r["end_frame"],
                               r["direction_deg"], r["duration_ms"], np.array(r["trace"], float))
                for r in data["runs"]]
        return cls(runs, data.get("dances", []), data.get("body_length", 21.0),
                   data.get("sample_rate", 100.0))


@dataclass
class Scene:
    width: int = 320
    height: int = 240
    sample_rate: float = 100.0
    n_frames: int = 1000
    seed: int = 0
    noise_sigma: float = 6.0
    background: float = 50.0
    texture: float = 8.0
    bee_brightness: float = 190.0
    start_utc: str | None = None
    distractors: int = 0
    distractor_speed: float = 1.2
    dancers: list[DanceScript] = field(default_factory=list)
    vibrators: list[VibrationScript] = field(default_factory=list)
    name: str = ""

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "Scene":
        data = dict(data)
        dancers = [DanceScript(**{**s, "position": tuple(s["position"])})
                   for s in data.pop("dancers", [])]
        vibrators = [VibrationScript(**{**s, "position": tuple(s["position"])})
                     for s in data.pop("vibrators", [])]
        return cls(dancers=dancers, vibrators=vibrators, **data)


def load_scene(path: str | Path) -> Scene:
    return Scene.from_json(json.loads(Path(path).read_text()))


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene.to_json(), indent=1) + "\n")


# --- kinematics --------------------------------------------------------------

@dataclass
class Track:
    """Per-frame pose of one bee: centre, heading (comb deg), visibility window."""
    first_frame: int
    xy: np.ndarray       # (n, 2)
    heading: np.ndarray  # (n,)
    body_length: float
    body_width: float

    @property
    def last_frame(self) -> int:
        return self.first_frame + len(self.xy) - 1


def dancer_track(script: DanceScript, sample_rate: float, idle_frames: int = 40):
    """Pose track and ground-truth runs for one scripted dancer."""
    script.validate(sample_rate)
    rng = np.random.default_rng(script.seed)
    center = np.asarray(script.position, dtype=np.float64)
    n_ret = max(1, int(round(script.return_duration_ms * sample_rate / 1000.0)))
    omega = 2.0 * math.pi * script.waggle_frequency / sample_rate

    plans = []
    for j in range(script.n_runs):
        sign = 1.0 if j % 2 == 0 else -1.0
        theta = (script.direction_deg + sign * script.alternating_bias_deg
                 + rng.normal(0.0, script.divergence_sd)) % 360.0
        dur = script.waggle_duration_ms + rng.normal(0.0, script.duration_sd_ms)
        n_w = max(2, int(round(max(dur, 100.0) * sample_rate / 1000.0)))
        d = unit(theta)
        length = script.forward_speed * n_w
        start = center - 0.5 * length * d + rng.normal(0.0, script.drift_px, 2)
        plans.append((theta, n_w, start, rng.uniform(0, 2 * math.pi)))

    xy, heading, runs = [], [], []
    frame = script.start_frame
    theta0, _, start0, _ = plans[0]
    for _ in range(idle_frames):
        xy.append(start0)
        heading.append(theta0)
    first_frame = frame - idle_frames
    for j, (theta, n_w, start, phase) in enumerate(plans):
        d = unit(theta)
        lat = np.array([-d[1], d[0]])  # d rotated by +90 deg in image space
        tau = np.arange(n_w)
        pts = (start[None, :] + np.outer(tau * script.forward_speed, d)
               + np.outer(script.lateral_amplitude * np.sin(omega * tau + phase), lat))
        trace = np.column_stack([frame + tau, pts])
        runs.append(GroundTruthRun(script.dancer_id, j, frame, frame + n_w - 1, theta,
                                   n_w / sample_rate * 1000.0, trace))
        xy.extend(pts)
        heading.extend([theta] * n_w)
        frame += n_w
        end = start + script.forward_speed * n_w * d
        if j + 1 < len(plans):
            nxt = plans[j + 1][2]
            ret_xy, ret_head = _return_arc(end, nxt, n_ret, side=1.0 if j % 2 == 0 else -1.0)
            xy.extend(ret_xy)
            heading.extend(ret_head)
            frame += n_ret
        else:
            for _ in range(idle_frames):
                xy.append(end)
                heading.append(theta)
    track = Track(first_frame, np.asarray(xy), np.asarray(heading),
                  script.body_length, script.body_width)
    return track, runs


def _return_arc(a: np.ndarray, b: np.ndarray, n: int, side: float):
    """Half circle from ``a`` to ``b`` bulging to ``side``; heading follows the tangent."""
    mid = 0.5 * (a + b)
    radius_vec = a - mid
    if np.hypot(*radius_vec) < 1e-6:
        pts = np.repeat(a[None, :], n, axis=0)
        return pts, np.zeros(n)
    s = (np.arange(1, n + 1)) / n
    ang = side * math.pi * s
    c, si = np.cos(ang), np.sin(ang)
    rx, ry = radius_vec
    pts = mid[None, :] + np.column_stack([c * rx - si * ry, si * rx + c * ry])
    tang = np.gradient(pts, axis=0)
    return pts, comb_angle(tang[:, 0], tang[:, 1])


def vibration_track(script: VibrationScript, sample_rate: float, idle_frames: int = 40) -> Track:
    n = max(2, int(round(script.duration_ms * sample_rate / 1000.0)))
    omega = 2.0 * math.pi * script.frequency / sample_rate
    p = np.asarray(script.position, dtype=np.float64)
    d = unit(script.heading_deg)
    offs = np.concatenate([np.zeros(idle_frames),
                           script.amplitude * np.sin(omega * np.arange(n)),
                           np.zeros(idle_frames)])
    xy = p[None, :] + offs[:, None] * d[None, :]
    return Track(script.start_frame - idle_frames, xy, np.full(len(xy), script.heading_deg),
                 script.body_length, script.body_width)


def walker_track(rng: np.random.Generator, n_frames: int, width: int, height: int,
                 speed: float, body_length: float = 21.0, body_width: float = 8.0) -> Track:
    """A bee wandering without oscillation, reflected at the frame margins."""
    margin = body_length
    pos = np.array([rng.uniform(margin, width - margin), rng.uniform(margin, height - margin)])
    head = rng.uniform(0, 360)
    xy = np.empty((n_frames, 2))
    hd = np.empty(n_frames)
    turn = rng.normal(0.0, 4.0, n_frames)
    pause = rng.random(n_frames) < 0.002
    moving = True
    for i in range(n_frames):
        if pause[i]:
            moving = not moving
        head = (head + turn[i]) % 360.0
        if moving:
            step = speed * unit(head)
            nxt = pos + step
            if not margin <= nxt[0] <= width - margin:
                head = (-head) % 360.0
            if not margin <= nxt[1] <= height - margin:
                head = (180.0 - head) % 360.0
            pos = pos + speed * unit(head)
        xy[i] = pos
        hd[i] = head
    return Track(0, xy, hd, body_length, body_width)


# --- rendering ---------------------------------------------------------------

def render_ellipse(canvas: np.ndarray, cx: float, cy: float, heading_deg: float,
                   length: float, width: float, brightness: float, edge: float = 1.2) -> None:
    """Alpha-composite a soft-edged ellipse onto a float canvas in place."""
    h, w = canvas.shape
    a, b = length / 2.0, width / 2.0
    r = int(math.ceil(a + 2 * edge))
    x0, x1 = max(int(cx) - r, 0), min(int(cx) + r + 2, w)
    y0, y1 = max(int(cy) - r, 0), min(int(cy) + r + 2, h)
    if x1 <= x0 or y1 <= y0:
        return
    ys, xs = np.mgrid[y0:y1, x0:x1]
    dx, dy = xs - cx, ys - cy
    d = unit(heading_deg)
    u = dx * d[0] + dy * d[1]
    v = -dx * d[1] + dy * d[0]
    rho = np.sqrt((u / a) ** 2 + (v / b) ** 2)
    alpha = np.clip(0.5 - (rho - 1.0) * b / edge, 0.0, 1.0)
    patch = canvas[y0:y1, x0:x1]
    patch += alpha * (brightness - patch)


class SyntheticStream(FrameStream):
    """Frame stream rendering a :class:`Scene` on demand."""

    def __init__(self, scene: Scene):
        self.scene = scene
        self.width, self.height = scene.width, scene.height
        self.sample_rate = float(scene.sample_rate)
        self.start_utc = parse_utc(scene.start_utc)
        rng = np.random.default_rng([scene.seed, 0])
        tex = gaussian_filter(rng.standard_normal((scene.height, scene.width)), 2.0)
        tex *= scene.texture / max(tex.std(), 1e-9)
        self.background = (scene.background + tex).astype(np.float32)
        self.tracks: list[Track] = []
        gt_runs: list[GroundTruthRun] = []
        for script in scene.dancers:
            track, runs = dancer_track(script, scene.sample_rate)
            self._check_inside(track, f"dancer {script.dancer_id}")
            self.tracks.append(track)
            gt_runs.extend(runs)
        for i, vib in enumerate(scene.vibrators):
            track = vibration_track(vib, scene.sample_rate)
            self._check_inside(track, f"vibrator {i}")
            self.tracks.append(track)
        walk_rng = np.random.default_rng([scene.seed, 1])
        for _ in range(scene.distractors):
            self.tracks.append(walker_track(walk_rng, scene.n_frames, scene.width, scene.height,
                                            scene.distractor_speed))
        gt_runs.sort(key=lambda r: (r.start_frame, r.dancer_id))
        body = scene.dancers[0].body_length if scene.dancers else 21.0
        self.ground_truth = GroundTruth(gt_runs, _dance_summaries(scene), body, scene.sample_rate)

    def _check_inside(self, track: Track, label) -> None:
        half = track.body_length / 2.0
        lo = track.xy.min(axis=0) - half
        hi = track.xy.max(axis=0) + half
        if lo[0] < 0 or lo[1] < 0 or hi[0] > self.width - 1 or hi[1] > self.height - 1:
            raise ScriptOutsideFrameError(f"{label} leaves the frame")
        if track.first_frame < 0 or track.last_frame >= self.scene.n_frames:
            raise ScriptOutsideFrameError(
                f"{label} runs outside frames 0..{self.scene.n_frames - 1}")

    def __len__(self) -> int:
        return self.scene.n_frames

    def render(self, index: int) -> np.ndarray:
        scene = self.scene
        canvas = self.background.copy()
        for tr in self.tracks:
            k = index - tr.first_frame
            if 0 <= k < len(tr.xy):
                render_ellipse(canvas, tr.xy[k, 0], tr.xy[k, 1], tr.heading[k],
                               tr.body_length, tr.body_width, scene.bee_brightness)
        if scene.noise_sigma > 0:
            rng = np.random.default_rng([scene.seed, 2, index])
            canvas += scene.noise_sigma * rng.standard_normal(canvas.shape, dtype=np.float32)
        return np.clip(np.floor(canvas + 0.5), 0, 255).astype(np.uint8)

    def read(self, index: int) -> np.ndarray:
        return self.render(index)


def _dance_summaries(scene: Scene) -> list[dict]:
    return [{"dancer_id": s.dancer_id, "direction_deg": s.direction_deg,
             "waggle_duration_ms": s.waggle_duration_ms, "n_runs": s.n_runs,
             "position": list(s.position), "start_frame": s.start_frame}
            for s in scene.dancers]


def render_video(scene: Scene) -> tuple[SyntheticStream, GroundTruth]:
    stream = SyntheticStream(scene)
    return stream, stream.ground_truth


# --- scoring -----------------------------------------------------------------

def _interval_overlap(a0, a1, b0, b1) -> int:
    return max(0, min(a1, b1) - max(a0, b0) + 1)


def score_detections(gt: GroundTruth, detections, body_length: float | None = None,
                     min_overlap: float = 0.5) -> dict:
    """Match detections to ground-truth runs and summarise errors.

    A detection matches a run when it covers at least ``min_overlap`` of the
    run's frames and their mean positions are within one body length.
    Matching is one-to-one, best overlap first.  Duration errors are
    detected minus true; angular errors are signed, wrapped to [-180, 180).
    """
    body = gt.body_length if body_length is None else body_length
    dets = sorted(detections, key=lambda d: (int(d.trace[0, 0]), int(d.trace[-1, 0]),
                                             d.position))
    pairs = []
    for i, det in enumerate(dets):
        d0, d1 = int(det.trace[0, 0]), int(det.trace[-1, 0])
        dx, dy = det.position
        for j, run in enumerate(gt.runs):
            length = run.end_frame - run.start_frame + 1
            ov = _interval_overlap(d0, d1, run.start_frame, run.end_frame) / length
            if ov < min_overlap:
                continue
            gx, gy = run.position
            dist = math.hypot(dx - gx, dy - gy)
            if dist <= body:
                pairs.append((-ov, dist, i, j))
    pairs.sort()
    used_d, used_g, matches = set(), set(), []
    for _, _, i, j in pairs:
        if i in used_d or j in used_g:
            continue
        used_d.add(i)
        used_g.add(j)
        matches.append((dets[i], gt.runs[j]))
    tp = len(matches)
    fp = len(dets) - tp
    fn = len(gt.runs) - tp
    dur_err = np.array([d.duration_ms - g.duration_ms for d, g in matches])
    ang_err = np.array([wrap180(d.direction_deg - g.direction_deg) for d, g in matches
                        if getattr(d, "direction_deg", None) is not None])
    return {
        "tp": tp, "fp": fp, "fn": fn,
        "precision": tp / len(dets) if dets else 1.0,
        "recall": tp / len(gt.runs) if gt.runs else 1.0,
        "duration_bias_ms": float(dur_err.mean()) if tp else 0.0,
        "duration_sd_ms": float(dur_err.std(ddof=1)) if tp > 1 else 0.0,
        "angle_mean_deg": float(ang_err.mean()) if len(ang_err) else 0.0,
        "angle_sd_deg": float(ang_err.std(ddof=1)) if len(ang_err) > 1 else 0.0,
        "n_angles": int(len(ang_err)),
        "matches": [(d, g) for d, g in matches],
    }


# --- scene layouts -------------------------------------------------------------

DANCE_SPOTS = ((60.0, 65.0), (160.0, 65.0), (260.0, 65.0),
               (60.0, 175.0), (160.0, 175.0), (260.0, 175.0))
VIBRATION_SPOTS = ((110.0, 120.0), (210.0, 120.0), (25.0, 120.0), (295.0, 120.0))


def generate_scene(seed: int, n_dances: int = 20, n_vibrators: int = 24, distractors: int = 5,
                   noise_sigma: float = 6.0, mean_runs: float = 5.8,
                   duration_range_ms: tuple[float, float] = (300.0, 1000.0),
                   start_utc: str | None = "2016-08-01T10:00:00Z", name: str = "") -> Scene:
    """A 320 x 240 hive scene with dances spread over six comb spots.

    Dances at the same spot follow each other with a short pause, so runs of
    different dancers never overlap.  Vibrating bees (waggle-band motion
    along the body axis) appear at separate spots and serve as hard
    negatives for the filter network.
    """
    rng = np.random.default_rng(seed)
    spot_free = [int(rng.integers(0, 150)) for _ in DANCE_SPOTS]
    dancers = []
    for i in range(n_dances):
        spot = i % len(DANCE_SPOTS)
        n_runs = int(np.clip(rng.poisson(mean_runs - 4) + 4, 4, 10))
        dur = float(rng.uniform(*duration_range_ms))
        ret = float(rng.uniform(1200.0, 1800.0))
        x, y = DANCE_SPOTS[spot]
        start = spot_free[spot] + 40
        dancers.append(DanceScript(
            dancer_id=i, position=(x + float(rng.uniform(-5, 5)), y + float(rng.uniform(-5, 5))),
            direction_deg=float(rng.uniform(0.0, 360.0)), waggle_duration_ms=dur,
            n_runs=n_runs, start_frame=start, duration_sd_ms=0.1 * dur,
            return_duration_ms=ret, seed=int(rng.integers(2**31))))
        span = n_runs * (1.2 * dur + ret) / 10.0
        spot_free[spot] = start + int(span) + 40 + int(rng.integers(50, 200))
    vib_free = [int(rng.integers(0, 300)) for _ in VIBRATION_SPOTS]
    vibrators = []
    for i in range(n_vibrators):
        spot = i % len(VIBRATION_SPOTS)
        dur = float(rng.uniform(300.0, 1500.0))
        start = vib_free[spot] + 40
        x, y = VIBRATION_SPOTS[spot]
        vibrators.append(VibrationScript(
            position=(x + float(rng.uniform(-6, 6)), y + float(rng.uniform(-20, 20))),
            heading_deg=float(rng.uniform(0.0, 360.0)), start_frame=start, duration_ms=dur,
            frequency=float(rng.uniform(10.0, 16.0)), amplitude=float(rng.uniform(2.0, 4.0))))
        vib_free[spot] = start + int(dur / 10.0) + 40 + int(rng.integers(100, 600))
    n_frames = max(spot_free + vib_free) + 60
    return Scene(n_frames=n_frames, seed=seed, noise_sigma=noise_sigma, start_utc=start_utc,
                 distractors=distractors, dancers=dancers, vibrators=vibrators, name=name)


def label_detections(gt: GroundTruth, detections, body_length: float | None = None) -> np.ndarray:
    """1 for detections matched to a ground-truth run, 0 otherwise (filter training labels)."""
    report = score_detections(gt, detections, body_length)
    hit = {id(d) for d, _ in report["matches"]}
    return np.array([1 if id(d) in hit else 0 for d in detections], dtype=np.int64)


@dataclass
class ColonyTruth:
    feeder_bearing_deg: float
    feeder_distance_m: float
    latitude: float
    longitude: float
    dance_ids: list          # dance index of each generated run
    flipped: np.ndarray      # bool per run


def simulate_colony(seed: int, n_dances: int = 571, feeder_bearing_deg: float = 225.0,
                    feeder_distance_m: float = 342.0, latitude: float = 52.457,
                    longitude: float = 13.296, date: str = "2016-08-01",
                    day_window_utc: tuple[float, float] = (7.0, 15.0),
                    run_sd_deg: float = 14.37, mean_duration_ms: float = 582.79,
                    duration_cv: float = 0.34, mean_runs: float = 5.8,
                    return_ms: float = 1800.0, flip_fraction: float = 0.0,
                    c_d: float = 342.0 / 582.79, comb_size: tuple[int, int] = (640, 480),
                    gravity_up_deg: float = 0.0):
    """Run table of a colony advertising one feeder, without rendering video.

    Each run's comb direction is the feeder bearing minus the solar azimuth
    at the run's time (plus ``gravity_up_deg``), perturbed by Gaussian
    scatter of ``run_sd_deg``.  Durations scatter around the value that the
    calibration factor maps to the feeder distance.  A ``flip_fraction`` of
    runs (chosen independently of the scatter draws) is turned by 180 deg.
    Returns ``(runs, truth)``.
    """
    from .attention import WaggleRun
    from .solar import solar_azimuth

    rng = np.random.default_rng(seed)
    day = parse_utc(f"{date}T00:00:00Z")
    w, h = comb_size
    target_ms = feeder_distance_m / c_d
    runs, dance_ids = [], []
    for k in range(n_dances):
        n_runs = int(max(4, rng.poisson(mean_runs - 4) + 4))
        t = day + timedelta(hours=float(rng.uniform(*day_window_utc)))
        x, y = float(rng.uniform(40, w - 40)), float(rng.uniform(40, h - 40))
        dance_ms = target_ms * float(np.exp(rng.normal(0.0, 0.1)))
        for j in range(n_runs):
            az = solar_azimuth(latitude, longitude, t)
            direction = (feeder_bearing_deg - az + gravity_up_deg
                         + rng.normal(0.0, run_sd_deg)) % 360.0
            dur = max(100.0, dance_ms * (1.0 + rng.normal(0.0, duration_cv)))
            n = max(2, int(round(dur / 10.0)))
            step = 0.4 * unit(direction)
            pts = (np.array([x, y]) + rng.normal(0.0, 1.5, 2))[None, :] + np.outer(
                np.arange(n) - n / 2, step)
            trace = np.column_stack([np.arange(n, dtype=float), pts])
            runs.append(WaggleRun(len(runs), 0, n * 10.0, trace, None, t,
                                  direction_deg=float(direction)))
            dance_ids.append(k)
            t = t + timedelta(milliseconds=n * 10.0 + return_ms * float(rng.uniform(0.8, 1.2)))
    flip_rng = np.random.default_rng([seed, 7])
    flipped = flip_rng.random(len(runs)) < flip_fraction
    for r, f in zip(runs, flipped):
        if f:
            r.direction_deg = (r.direction_deg + 180.0) % 360.0
    truth = ColonyTruth(feeder_bearing_deg, feeder_distance_m, latitude, longitude,
                        dance_ids, flipped)
    return runs, truth


SCENE_DIR = Path(__file__).parent / "scenes"
BENCHMARK_SEED = 2016


def benchmark_scene() -> Scene:
    """The committed 20-dance benchmark scene (320 x 240, about 70 s)."""
    return load_scene(SCENE_DIR / "benchmark20.json")


def _register_builtin_scenes() -> None:
    from .frames import register_synthetic
    for path in sorted(SCENE_DIR.glob("*.json")):
        register_synthetic(path.stem, lambda p=path: SyntheticStream(load_scene(p)))


_register_builtin_scenes()
