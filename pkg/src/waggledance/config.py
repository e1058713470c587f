"""Configuration objects for every pipeline stage and the JSON config loader.

A config file is a JSON object with one section per stage::

    {
      "seed": 0,
      "hive": {"latitude": 52.457, "longitude": 13.296},
      "attention": {...}, "filter": {...}, "train": {...},
      "bandpass": {...}, "mapping": {...}
    }

``seed``, ``hive.latitude`` and ``hive.longitude`` are required; every other
field falls back to the defaults below.  Unknown fields are rejected so that
typos do not silently fall back to defaults.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    """Invalid or incomplete configuration.  ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class AttentionConfig:
    window: int = 32
    sample_rate: float = 100.0
    waggle_band: tuple[float, ...] = (10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 16.0)
    threshold: float = 110.0
    cluster_distance: float = 11.0
    cluster_min_size: int = 10
    link_distance: float = 7.0
    max_gap: int = 20
    min_detections: int = 20
    min_duration_ms: float = 200.0
    snippet_size: int = 50

    def validate(self, prefix: str = "attention") -> None:
        if self.window < 2:
            raise ConfigError(f"{prefix}.window", "must be >= 2")
        if self.sample_rate <= 0:
            raise ConfigError(f"{prefix}.sample_rate", "must be positive")
        if not self.waggle_band:
            raise ConfigError(f"{prefix}.waggle_band", "must not be empty")
        for r in self.waggle_band:
            if not 0 < r < self.sample_rate / 2:
                raise ConfigError(f"{prefix}.waggle_band", f"{r} Hz is not below Nyquist")
        if self.threshold <= 0:
            raise ConfigError(f"{prefix}.threshold", "must be positive")
        for name in ("cluster_distance", "cluster_min_size", "link_distance",
                     "max_gap", "min_detections", "snippet_size"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{prefix}.{name}", "must be positive")
        if self.min_duration_ms < 0:
            raise ConfigError(f"{prefix}.min_duration_ms", "must be non-negative")

    @property
    def lag(self) -> int:
        """Frames between a window's newest sample and the sample it is attributed to."""
        return self.window // 2


@dataclass(frozen=True)
class TrainConfig:
    sequence_length: int = 128
    batch_size: int = 8
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 20
    validation_fraction: float = 0.2
    augment: bool = True
    seed: int = 0

    def validate(self, prefix: str = "train") -> None:
        if not 0 < self.validation_fraction < 1:
            raise ConfigError(f"{prefix}.validation_fraction", "must lie in (0, 1)")
        if self.sequence_length < 1:
            raise ConfigError(f"{prefix}.sequence_length", "must be >= 1")
        if self.batch_size < 1:
            raise ConfigError(f"{prefix}.batch_size", "must be >= 1")
        if self.epochs < 0:
            raise ConfigError(f"{prefix}.epochs", "must be >= 0")
        if self.learning_rate < 0:
            raise ConfigError(f"{prefix}.learning_rate", "must be >= 0")


@dataclass(frozen=True)
class FilterConfig:
    model: str | None = None
    threshold: float | None = None

    def validate(self, prefix: str = "filter") -> None:
        if self.threshold is not None and not 0 <= self.threshold <= 1:
            raise ConfigError(f"{prefix}.threshold", "must lie in [0, 1]")


@dataclass(frozen=True)
class BandpassConfig:
    snippet_size: int = 50
    displacement: float = 6.0
    sigma_inner: float | None = None
    sigma_outer: float | None = None

    @property
    def k(self) -> float:
        """Expected spatial frequency of the lateral-motion pattern, in DFT bins."""
        return self.snippet_size / (2.0 * self.displacement)

    @property
    def inner(self) -> float:
        return self.k / 2 if self.sigma_inner is None else self.sigma_inner

    @property
    def outer(self) -> float:
        return self.k if self.sigma_outer is None else self.sigma_outer

    def validate(self, prefix: str = "bandpass") -> None:
        if self.snippet_size < 2:
            raise ConfigError(f"{prefix}.snippet_size", "must be >= 2")
        if self.displacement <= 0:
            raise ConfigError(f"{prefix}.displacement", "must be positive")
        if not 0 < self.inner < self.outer:
            raise ConfigError(f"{prefix}.sigma_inner", "need 0 < sigma_inner < sigma_outer")
        if not self.k < self.snippet_size / 2:
            raise ConfigError(f"{prefix}.displacement", "expected frequency beyond Nyquist")


@dataclass(frozen=True)
class RansacConfig:
    iterations: int = 100
    threshold_deg: float = 25.0
    seed: int = 0

    def validate(self, prefix: str = "mapping.ransac") -> None:
        if self.iterations < 1:
            raise ConfigError(f"{prefix}.iterations", "must be >= 1")
        if not 0 < self.threshold_deg < 90:
            raise ConfigError(f"{prefix}.threshold_deg", "must lie in (0, 90)")


@dataclass(frozen=True)
class HiveConfig:
    latitude: float
    longitude: float

    def validate(self, prefix: str = "hive") -> None:
        if not -90 <= self.latitude <= 90:
            raise ConfigError(f"{prefix}.latitude", "must lie in [-90, 90]")
        if not -180 <= self.longitude <= 360:
            raise ConfigError(f"{prefix}.longitude", "out of range")


@dataclass(frozen=True)
class MappingConfig:
    d_max3: float = 60.0
    min_runs_per_dance: int = 4
    ransac: RansacConfig = field(default_factory=RansacConfig)
    c_d: float = 342.0 / 582.79
    gravity_up_deg: float = 0.0
    max_return_gap_s: float = 5.0
    utc_offset_hours: float = 0.0

    def validate(self, prefix: str = "mapping") -> None:
        if self.min_runs_per_dance < 4:
            raise ConfigError(f"{prefix}.min_runs_per_dance", "must be >= 4")
        if self.c_d <= 0:
            raise ConfigError(f"{prefix}.c_d", "must be positive")
        if self.d_max3 <= 0:
            raise ConfigError(f"{prefix}.d_max3", "must be positive")
        self.ransac.validate(f"{prefix}.ransac")


@dataclass(frozen=True)
class PipelineConfig:
    seed: int
    hive: HiveConfig | None
    attention: AttentionConfig = field(default_factory=AttentionConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    bandpass: BandpassConfig = field(default_factory=BandpassConfig)
    mapping: MappingConfig = field(default_factory=MappingConfig)

    def validate(self) -> None:
        if self.hive is not None:
            self.hive.validate()
        for name in ("attention", "filter", "train", "bandpass", "mapping"):
            getattr(self, name).validate(name)

    def with_seed(self, seed: int) -> "PipelineConfig":
        """Copy with the global seed and every derived seed replaced."""
        mapping = dataclasses.replace(
            self.mapping, ransac=dataclasses.replace(self.mapping.ransac, seed=seed))
        train = dataclasses.replace(self.train, seed=seed)
        return dataclasses.replace(self, seed=seed, mapping=mapping, train=train)


def default_config(seed: int = 0) -> PipelineConfig:
    return PipelineConfig(seed=seed, hive=None).with_seed(seed)


def _coerce(cls, data: Any, path: str, defaults: dict | None = None,
            nested: dict | None = None):
    """Build dataclass ``cls`` from a JSON object, naming bad fields by path.

    ``defaults`` supplies values for absent fields that have no dataclass
    default; ``nested`` maps a field name to ``(cls, defaults)`` for
    sub-objects.
    """
    if not isinstance(data, dict):
        raise ConfigError(path, "expected an object")
    defaults = dict(defaults or {})
    nested = nested or {}
    known = {f.name: f for f in dataclasses.fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{path}.{key}", "unknown field")
    kwargs = {}
    for name, f in known.items():
        fpath = f"{path}.{name}"
        if name not in data:
            if name in nested:
                sub_cls, sub_defaults = nested[name]
                kwargs[name] = _coerce(sub_cls, {}, fpath, sub_defaults)
            elif name in defaults:
                kwargs[name] = defaults[name]
            elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
                raise ConfigError(fpath, "missing required field")
            continue
        value = data[name]
        if name in nested:
            sub_cls, sub_defaults = nested[name]
            value = _coerce(sub_cls, value, fpath, sub_defaults)
        elif name == "waggle_band":
            if not isinstance(value, list) or not all(
                    isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
                raise ConfigError(fpath, "expected a list of numbers")
            value = tuple(float(v) for v in value)
        else:
            value = _check_scalar(value, f.type, fpath)
        kwargs[name] = value
    return cls(**kwargs)


def _check_scalar(value: Any, annotation: Any, path: str):
    kind = str(annotation)
    nullable = "None" in kind
    if value is None:
        if nullable:
            return None
        raise ConfigError(path, "must not be null")
    if kind.startswith("bool"):
        if not isinstance(value, bool):
            raise ConfigError(path, "expected a boolean")
        return value
    if kind.startswith("int"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, "expected an integer")
        return value
    if kind.startswith("float"):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(path, "expected a finite number")
        return float(value)
    if kind.startswith("str"):
        if not isinstance(value, str):
            raise ConfigError(path, "expected a string")
        return value
    return value


def parse_config(data: Any) -> PipelineConfig:
    """Validate a decoded JSON object and return the pipeline configuration."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected an object")
    allowed = {"seed", "hive", "attention", "filter", "train", "bandpass", "mapping"}
    for key in data:
        if key not in allowed:
            raise ConfigError(key, "unknown field")
    if "seed" not in data:
        raise ConfigError("seed", "missing required field")
    seed = _check_scalar(data["seed"], "int", "seed")
    if "hive" not in data:
        raise ConfigError("hive", "missing required field")
    hive = _coerce(HiveConfig, data["hive"], "hive")
    sections = {
        "attention": AttentionConfig,
        "filter": FilterConfig,
        "bandpass": BandpassConfig,
    }
    kwargs: dict[str, Any] = {"seed": seed, "hive": hive}
    for name, cls in sections.items():
        if name in data:
            kwargs[name] = _coerce(cls, data[name], name)
    kwargs["train"] = _coerce(TrainConfig, data.get("train", {}), "train", {"seed": seed})
    kwargs["mapping"] = _coerce(MappingConfig, data.get("mapping", {}), "mapping",
                                nested={"ransac": (RansacConfig, {"seed": seed})})
    cfg = PipelineConfig(**kwargs)
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> PipelineConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config file ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from exc
    return parse_config(data)


def config_to_dict(cfg: PipelineConfig) -> dict:
    out = dataclasses.asdict(cfg)
    out["attention"]["waggle_band"] = list(cfg.attention.waggle_band)
    return out
