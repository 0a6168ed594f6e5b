# config/app_config.py
# Application Configuration Module
# Centralized configuration for the RoBus pipeline and its dashboard

import copy
import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from dotenv import load_dotenv

from utils.errors import ConfigurationError, MissingInputError

# Load environment variables from .env file (for local development)
load_dotenv()

CONFIG_DIR = Path(__file__).resolve().parent
DEFAULT_PIPELINE_CONFIG = CONFIG_DIR / "pipeline.json"
DEFAULT_TAG_TABLES = CONFIG_DIR / "tag_tables.json"


class AppConfig:
    """
    Application Configuration Class
    Dashboard look-and-feel plus environment-driven runtime settings
    """

    # Application Settings
    APP_TITLE = "🏙️ RoBus Layout Explorer"
    APP_ICON = "🏙️"
    APP_DESCRIPTION = "Multimodal urban layouts: tiles, road graphs, blocks and buildings"

    # Runtime settings (environment first, then defaults)
    OUTPUT_DIR = os.getenv("ROBUS_OUTPUT_DIR", "output")
    LOG_LEVEL = os.getenv("ROBUS_LOG_LEVEL", "INFO")
    WORKERS = os.getenv("ROBUS_WORKERS")

    # UI Configuration
    CHART_HEIGHT = 420

    # Colors and Styling
    PRIMARY_COLOR = "#2E86AB"
    SECONDARY_COLOR = "#F18F01"
    ACCENT_COLOR = "#C73E1D"
    BACKGROUND_GRADIENT = "linear-gradient(90deg, #2E86AB, #1B998B)"

    # One color per raster channel (RoadP, RoadS, Water, Green, Density, BuildingHeight)
    CHANNEL_COLORSCALES = ["Reds", "Oranges", "Blues", "Greens", "Purples", "Viridis"]

    @classmethod
    def default_workers(cls):
        """Worker pool size: ROBUS_WORKERS if set, else available parallelism"""
        if cls.WORKERS:
            try:
                return max(1, int(cls.WORKERS))
            except ValueError:
                raise ConfigurationError(f"ROBUS_WORKERS must be an integer, got {cls.WORKERS!r}")
        return os.cpu_count() or 1


@dataclass
class Thresholds:
    """Label cutoffs for road density, orientation, building density and building height"""

    road_len_km: float = 8.64
    entropy_nats: float = 2.0
    bdensity: tuple = (0.1, 0.3)
    bheight_m: tuple = (12.0, 30.0)

    def validate(self):
        t1, t2 = self.bdensity
        h1, h2 = self.bheight_m
        if not t1 < t2:
            raise ConfigurationError(f"thresholds.bdensity must be increasing, got {self.bdensity}")
        if not h1 < h2:
            raise ConfigurationError(f"thresholds.bheight_m must be increasing, got {self.bheight_m}")


TASKS = ("all", "road_gen", "building_gen")
NEIGHBOR_AGGREGATES = ("mean", "median")
UNREACHABLE_POLICIES = ("zero", "skip")


@dataclass
class PipelineConfig:
    """
    Pipeline Configuration Class
    One canonical parameter record per run; loaded from JSON plus --set overrides
    """

    # Inputs / outputs
    features_path: str = ""
    height_raster_path: str = ""
    tag_tables_path: str = ""
    output_dir: str = "output"

    # Rasterization (5 m/px, 256 px tiles, 20% overlap)
    resolution_m: float = 5.0
    tile_px: int = 256
    stride_px: int = 204
    road_width_primary_m: float = 15.0
    road_width_secondary_m: float = 10.0
    line_width_water_m: float = 10.0
    line_width_green_m: float = 10.0
    density_window_px: int = 65

    # Road graph
    c_tr: float = 0.966
    merge_eps_m: float = 10.0

    # Blocks
    cycle_cutoff: int = 12
    strict_faces: bool = False

    # Building heights
    height_radius_m: float = 300.0
    default_height_m: float = 24.0
    neighbor_aggregate: str = "mean"

    # Metrics
    entropy_bins: int = 36
    convenience_min_dist_m: float = 300.0
    convenience_unreachable: str = "zero"
    chamfer_spacing_m: float = 10.0

    # Labels and task filter
    thresholds: Thresholds = field(default_factory=Thresholds)
    task: str = "all"

    # Execution
    workers: int = 0

    # Fields that never influence artifact bytes
    _UNHASHED = ("output_dir", "workers")

    @classmethod
    def from_dict(cls, data):
        """Build a config from a plain dict, rejecting unknown keys"""
        data = copy.deepcopy(data or {})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {', '.join(unknown)}")

        if data.get("workers") is None:
            data.pop("workers", None)

        thresholds = data.pop("thresholds", None) or {}
        if isinstance(thresholds, Thresholds):
            thresholds = dataclasses.asdict(thresholds)
        if not isinstance(thresholds, dict):
            raise ConfigurationError(f"thresholds must be an object, got {thresholds!r}")
        t_known = {f.name for f in dataclasses.fields(Thresholds)}
        t_unknown = sorted(set(thresholds) - t_known)
        if t_unknown:
            raise ConfigurationError(f"unknown threshold keys: {', '.join(t_unknown)}")

        data = _coerce_fields(cls, data)
        config = cls(**data, thresholds=Thresholds(**_coerce_fields(Thresholds, thresholds, "thresholds.")))
        config.validate()
        return config

    @classmethod
    def from_file(cls, path=None, overrides=()):
        """
        Load a JSON config file and apply 'key=value' overrides.
        Dotted keys reach nested fields (thresholds.road_len_km=9).
        """
        path = Path(path) if path else DEFAULT_PIPELINE_CONFIG
        if not path.exists():
            raise MissingInputError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"config file {path} is not valid JSON: {e}")

        for item in overrides or ():
            key, value = parse_override(item)
            target = data
            parts = key.split(".")
            for part in parts[:-1]:
                target = target.setdefault(part, {})
                if not isinstance(target, dict):
                    raise ConfigurationError(f"override {key!r} reaches into a non-object value")
            target[parts[-1]] = value

        return cls.from_dict(data)

    def validate(self):
        """Check parameter invariants; raise ConfigurationError on the first violation"""
        if not self.resolution_m > 0:
            raise ConfigurationError(f"resolution_m must be > 0, got {self.resolution_m}")
        if not 0 < self.stride_px <= self.tile_px:
            raise ConfigurationError(f"stride_px must be in (0, tile_px], got {self.stride_px}")
        if self.cycle_cutoff < 3:
            raise ConfigurationError(f"cycle_cutoff must be >= 3, got {self.cycle_cutoff}")
        if not 0 < self.c_tr < 1:
            raise ConfigurationError(f"c_tr must be in (0, 1), got {self.c_tr}")
        if self.merge_eps_m < 0:
            raise ConfigurationError(f"merge_eps_m must be >= 0, got {self.merge_eps_m}")
        if self.density_window_px < 1 or self.density_window_px % 2 == 0:
            raise ConfigurationError(f"density_window_px must be odd, got {self.density_window_px}")
        for name in ("road_width_primary_m", "road_width_secondary_m", "line_width_water_m",
                     "line_width_green_m"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be > 0")
        if self.height_radius_m < 0 or not self.default_height_m > 0:
            raise ConfigurationError("height_radius_m must be >= 0 and default_height_m > 0")
        if self.task not in TASKS:
            raise ConfigurationError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.neighbor_aggregate not in NEIGHBOR_AGGREGATES:
            raise ConfigurationError(f"neighbor_aggregate must be one of {NEIGHBOR_AGGREGATES}")
        if self.convenience_unreachable not in UNREACHABLE_POLICIES:
            raise ConfigurationError(f"convenience_unreachable must be one of {UNREACHABLE_POLICIES}")
        if self.entropy_bins < 1 or not self.chamfer_spacing_m > 0:
            raise ConfigurationError("entropy_bins must be >= 1 and chamfer_spacing_m > 0")
        if self.workers < 0:
            raise ConfigurationError(f"workers must be >= 0, got {self.workers}")
        self.thresholds.validate()

    def effective_workers(self):
        return self.workers or AppConfig.default_workers()

    def to_dict(self):
        data = dataclasses.asdict(self)
        data["thresholds"]["bdensity"] = list(self.thresholds.bdensity)
        data["thresholds"]["bheight_m"] = list(self.thresholds.bheight_m)
        return data

    def config_hash(self):
        """SHA-256 over artifact-relevant parameters; paths reduced to base names"""
        data = self.to_dict()
        for key in self._UNHASHED:
            data.pop(key, None)
        for key in ("features_path", "height_raster_path", "tag_tables_path"):
            data[key] = Path(data[key]).name if data[key] else ""
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def parse_override(item):
    """Split 'key=value'; the value is a JSON literal when it parses as one"""
    if "=" not in item:
        raise ConfigurationError(f"override must look like key=value, got {item!r}")
    key, raw = item.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigurationError(f"override has an empty key: {item!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _coerce(name, value, kind):
    """Convert one config value to its declared type"""
    if kind is bool:
        if isinstance(value, bool):
            return value
        raise ConfigurationError(f"{name} must be true or false, got {value!r}")
    if kind is tuple:
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise ConfigurationError(f"{name} must be a pair of numbers, got {value!r}")
        return tuple(_coerce(name, v, float) for v in value)
    if kind is str:
        if isinstance(value, (dict, list, bool)):
            raise ConfigurationError(f"{name} must be a string, got {value!r}")
        return str(value)
    if isinstance(value, (bool, dict, list)):
        raise ConfigurationError(f"{name} must be a number, got {value!r}")
    try:
        number = float(value)
        if kind is int:
            if not number.is_integer():
                raise ValueError(value)
            return int(number)
        return number
    except (TypeError, ValueError, OverflowError):
        raise ConfigurationError(f"{name} must be {'an integer' if kind is int else 'a number'}, got {value!r}")


def _coerce_fields(cls, data, prefix=""):
    types = {f.name: f.type for f in dataclasses.fields(cls)}
    return {key: _coerce(prefix + key, value, types[key]) for key, value in data.items()}
