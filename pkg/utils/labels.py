# utils/labels.py
# Tile Labels Module
# Categorical road/building labels per tile and the "OSM," descriptive text

import logging
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from config.app_config import Thresholds
from utils.errors import UndefinedInputError
from utils.metrics import orientation_entropy, traffic_convenience
from utils.raster import BUILDING_HEIGHT, road_mask, thin
from utils.roadgraph import graph_stats, merge_close_nodes, simplify, skeleton_to_graph

logger = logging.getLogger(__name__)


class RoadDensity(Enum):
    DENSE = "Dense"
    SPARSE = "Sparse"


class Orientation(Enum):
    ORDERED = "Ordered"
    DISORDERED = "Disordered"


class BuildingDensity(Enum):
    SPARSE = "Sparse"
    MEDIUM = "Medium"
    DENSE = "Dense"


class BuildingHeight(Enum):
    LOW_RISE = "LowRise"
    MID_RISE = "MidRise"
    HIGH_RISE = "HighRise"


@dataclass(frozen=True)
class TileLabels:
    road_density: RoadDensity
    orientation: Orientation
    building_density: BuildingDensity
    building_height: BuildingHeight

    def to_dict(self):
        return {
            "road_density": self.road_density.value,
            "orientation": self.orientation.value,
            "building_density": self.building_density.value,
            "building_height": self.building_height.value,
        }


@dataclass(frozen=True)
class TileStats:
    road_len_km: float
    entropy_nats: float
    built_fraction: float
    mean_height_m: float
    traffic_convenience: float = None

    def to_dict(self):
        return asdict(self)


def _three_way(value, bounds, low, mid, high):
    lower, upper = bounds
    if value < lower:
        return low
    if value < upper:
        return mid
    return high


def classify_tile(stats, thresholds=None):
    """
    Map tile statistics to labels. Road density is Dense above the length
    threshold; orientation is Ordered below the entropy threshold; building
    density and height fall into three bins split at (t1, t2) and (h1, h2).
    """
    th = thresholds or Thresholds()
    return TileLabels(
        road_density=RoadDensity.DENSE if stats.road_len_km > th.road_len_km else RoadDensity.SPARSE,
        orientation=Orientation.ORDERED if stats.entropy_nats < th.entropy_nats else Orientation.DISORDERED,
        building_density=_three_way(stats.built_fraction, th.bdensity,
                                    BuildingDensity.SPARSE, BuildingDensity.MEDIUM, BuildingDensity.DENSE),
        building_height=_three_way(stats.mean_height_m, th.bheight_m,
                                   BuildingHeight.LOW_RISE, BuildingHeight.MID_RISE, BuildingHeight.HIGH_RISE),
    )


_ROAD_WORDS = {RoadDensity.DENSE: "dense", RoadDensity.SPARSE: "sparse"}
_PATTERN_WORDS = {Orientation.ORDERED: "a grid-like", Orientation.DISORDERED: "an irregular"}
_DENSITY_WORDS = {BuildingDensity.SPARSE: "sparse", BuildingDensity.MEDIUM: "medium", BuildingDensity.DENSE: "dense"}
_HEIGHT_WORDS = {BuildingHeight.LOW_RISE: "low-rise", BuildingHeight.MID_RISE: "mid-rise",
                 BuildingHeight.HIGH_RISE: "high-rise"}


def render_text(labels):
    return (
        f"OSM, a city tile with {_ROAD_WORDS[labels.road_density]} roads in "
        f"{_PATTERN_WORDS[labels.orientation]} pattern, "
        f"{_DENSITY_WORDS[labels.building_density]} {_HEIGHT_WORDS[labels.building_height]} buildings."
    )


def tile_road_graph(tile, config):
    """Thinned, merged and simplified road graph of one tile"""
    skeleton = thin(road_mask(tile))
    graph = skeleton_to_graph(skeleton, tile.transform)
    graph = merge_close_nodes(graph, config.merge_eps_m)
    return simplify(graph, config.c_tr)


def tile_stats(tile, config):
    """Statistics behind the labels; a tile without road edges has entropy 0"""
    graph = tile_road_graph(tile, config)
    road_len_km = graph_stats(graph).total_length_m / 1000.0
    entropy = orientation_entropy(graph, config.entropy_bins) if graph.edge_count else 0.0
    try:
        convenience = traffic_convenience(graph, config.convenience_min_dist_m, config.convenience_unreachable)
    except UndefinedInputError:
        convenience = None

    heights = tile.data[BUILDING_HEIGHT]
    built = heights > 0
    built_fraction = float(built.mean())
    mean_height = float(heights[built].astype(np.float64).mean()) if built.any() else 0.0
    return TileStats(road_len_km, entropy, built_fraction, mean_height, convenience)


def label_tile(tile, config):
    """Sidecar record {tile_id, labels, text, stats} for one tile"""
    stats = tile_stats(tile, config)
    labels = classify_tile(stats, config.thresholds)
    logger.debug("tile labelled", extra={"context": {"tile_id": list(tile.tile_id), **labels.to_dict()}})
    return {
        "tile_id": list(tile.tile_id),
        "labels": labels.to_dict(),
        "text": render_text(labels),
        "stats": stats.to_dict(),
    }
