# utils/buildings.py
# Building Heights Module
# Samples footprint heights from a height raster and fills the gaps from
# nearby buildings or a default

import logging
import math
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy.spatial import cKDTree

from utils.errors import DomainError
from utils.geo_core import AffineTransform, CrsCode, Polygon, polygon_area, polygon_centroid
from utils.osm_ingest import FeatureClass, classify_feature
from utils.raster import polygon_pixel_mask

logger = logging.getLogger(__name__)

DEFAULT_RADIUS_M = 300.0
DEFAULT_HEIGHT_M = 24.0


class HeightSource(Enum):
    RASTER = "Raster"
    NEIGHBOR = "Neighbor"
    DEFAULT = "Default"


@dataclass(frozen=True)
class Building:
    id: str
    footprint: Polygon
    height: float = None
    height_source: HeightSource = None

    def __post_init__(self):
        if not polygon_area(self.footprint) > 0:
            raise DomainError(f"building {self.id} has an empty footprint")
        if self.height is not None and not self.height > 0:
            raise DomainError(f"building {self.id} height must be > 0, got {self.height}")

    @property
    def centroid(self):
        return polygon_centroid(self.footprint)


@dataclass(eq=False)
class HeightRaster:
    """Single height plane in meters; values <= 0 or NaN are invalid"""

    plane: np.ndarray
    transform: AffineTransform
    crs: CrsCode = CrsCode.WEB_MERCATOR

    def __post_init__(self):
        self.plane = np.asarray(self.plane, dtype=np.float32)
        if self.plane.ndim != 2:
            raise ValueError(f"height raster must be 2-D, got shape {self.plane.shape}")

    @classmethod
    def from_raster(cls, raster, channel=0):
        """Take one plane of a RegionRaster (as read from a .rbt container)"""
        return cls(raster.data[channel], raster.transform, raster.crs)


def buildings_from_features(features, tables=None):
    """
    Building polygons from ingested features.
    Parts of one multi-polygon source get '#k' suffixes so ids stay unique.
    """
    picked = [f for f in features
              if isinstance(f.geometry, Polygon) and classify_feature(f.tags, tables) is FeatureClass.BUILDING]
    totals = Counter(f.source_id for f in picked)
    seen = Counter()
    buildings = []
    for f in picked:
        building_id = f.source_id
        if totals[f.source_id] > 1:
            building_id = f"{f.source_id}#{seen[f.source_id]}"
            seen[f.source_id] += 1
        try:
            buildings.append(Building(building_id, f.geometry))
        except DomainError as e:
            logger.debug("dropping degenerate footprint", extra={"context": {"id": building_id, "error": str(e)}})
    return buildings


def sample_height(building, raster):
    """Mean of valid raster values at pixel centers inside the footprint, or None"""
    rows, cols = polygon_pixel_mask(building.footprint, raster.transform, raster.plane.shape)
    if rows.size == 0:
        return None
    values = raster.plane[rows, cols].astype(np.float64)
    values = values[np.isfinite(values) & (values > 0)]
    if values.size == 0:
        return None
    return math.fsum(values) / values.size


def _aggregate(values, how):
    if how == "median":
        return float(np.median(values))
    return math.fsum(values) / len(values)


def fill_missing_heights(buildings, radius=DEFAULT_RADIUS_M, default_h=DEFAULT_HEIGHT_M, aggregate="mean"):
    """
    Give every building without a raster height the mean (or median) of the
    raster-sourced heights whose centroids lie within `radius`, else `default_h`.
    Only raster-sourced heights feed the estimate, never other estimates.
    """
    sourced = [b for b in buildings if b.height_source is HeightSource.RASTER]
    tree = None
    if sourced:
        xy = np.array([(b.centroid.x, b.centroid.y) for b in sourced], dtype=np.float64)
        tree = cKDTree(xy)
        heights = np.array([b.height for b in sourced], dtype=np.float64)

    out = []
    for b in buildings:
        if b.height_source is HeightSource.RASTER:
            out.append(b)
            continue
        near = []
        if tree is not None:
            c = b.centroid
            near = sorted(tree.query_ball_point((c.x, c.y), r=radius))
        if near:
            out.append(replace(b, height=_aggregate(heights[near], aggregate), height_source=HeightSource.NEIGHBOR))
        else:
            out.append(replace(b, height=float(default_h), height_source=HeightSource.DEFAULT))
    return out


def enrich_buildings(buildings, raster=None, radius=DEFAULT_RADIUS_M, default_h=DEFAULT_HEIGHT_M, aggregate="mean"):
    """Sample raster heights, then fill the rest; every returned building has a height"""
    sampled = []
    for b in buildings:
        h = sample_height(b, raster) if raster is not None else None
        if h is None:
            sampled.append(replace(b, height=None, height_source=None))
        else:
            sampled.append(replace(b, height=h, height_source=HeightSource.RASTER))
    enriched = fill_missing_heights(sampled, radius, default_h, aggregate)
    counts = Counter(b.height_source.value for b in enriched)
    logger.info("buildings enriched", extra={"context": {"total": len(enriched), **dict(sorted(counts.items()))}})
    return enriched
