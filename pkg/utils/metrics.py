# utils/metrics.py
# Layout Metrics Module
# Diversity, validity, urban-property and topology measures over road graphs,
# masks and building sets

import dataclasses
import json
import logging
import math
from dataclasses import dataclass

import networkx as nx
import numpy as np
import pandas as pd
from scipy import linalg
from scipy.spatial import cKDTree
from scipy.stats import entropy as shannon_entropy

from utils.errors import DimensionMismatchError, UndefinedInputError
from utils.geo_core import points_in_polygon, polygon_area
from utils.raster import polygon_pixel_mask, thin

logger = logging.getLogger(__name__)


@dataclass
class MetricsReport:
    """Every field is optional; uncomputed metrics serialize as null"""

    orientation_entropy: float = None
    traffic_convenience: float = None
    chamfer: float = None
    miou: float = None
    cl_dice: float = None
    wd_height: float = None
    wd_count: float = None
    wd_density: float = None
    validity_pct: float = None

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


# Road graph metrics ----------------------------------------------------------

def compass_bearing(p, q):
    """Bearing of the chord p -> q in degrees clockwise from north, in [0, 360)"""
    return math.degrees(math.atan2(q.x - p.x, q.y - p.y)) % 360.0


def bearing_histogram(g, bins=36):
    """Length-weighted bearing histogram, each edge counted in both directions; bins centered on 0"""
    width = 360.0 / bins
    hist = np.zeros(bins, dtype=np.float64)
    for u, v, _, geometry in g.edges():
        weight = g.edge_length(u, v)
        theta = compass_bearing(g.point(u), g.point(v))
        for angle in (theta, (theta + 180.0) % 360.0):
            index = int(math.floor(((angle + width / 2.0) % 360.0) / width)) % bins
            hist[index] += weight
    return hist


def orientation_entropy(g, bins=36):
    """Shannon entropy (nats) of the street-bearing histogram; low means grid-like"""
    if g.edge_count == 0:
        raise UndefinedInputError("orientation entropy needs at least one edge")
    hist = bearing_histogram(g, bins)
    if not hist.sum() > 0:
        raise UndefinedInputError("orientation entropy needs a positive total edge length")
    return float(shannon_entropy(hist))


def traffic_convenience(g, min_dist=300.0, unreachable="zero"):
    """
    Mean of Euclidean / shortest-path distance over unordered node pairs
    farther apart than min_dist. Unreachable pairs count as 0, or are left out
    with unreachable="skip".
    """
    ids = g.node_ids()
    points = {n: g.point(n) for n in ids}
    graph = g.to_networkx()
    ratios = []
    for i, source in enumerate(ids):
        reach = nx.single_source_dijkstra_path_length(graph, source, weight="weight")
        for target in ids[i + 1:]:
            d_e = points[source].distance_to(points[target])
            if not d_e > min_dist:
                continue
            d_s = reach.get(target)
            if d_s is None:
                if unreachable == "zero":
                    ratios.append(0.0)
                continue
            ratios.append(d_e / d_s)
    if not ratios:
        raise UndefinedInputError(f"no node pairs farther apart than {min_dist} m")
    return math.fsum(ratios) / len(ratios)


def sample_graph_points(g, spacing_m=10.0):
    """Points every spacing_m of arc length along each edge, edge ends included"""
    chunks = []
    for _, _, _, geometry in g.edges():
        xy = geometry.coords()
        seg = np.hypot(np.diff(xy[:, 0]), np.diff(xy[:, 1]))
        arc = np.concatenate(([0.0], np.cumsum(seg)))
        positions = np.arange(0.0, arc[-1], spacing_m)
        positions = np.append(positions, arc[-1])
        chunks.append(np.column_stack((np.interp(positions, arc, xy[:, 0]), np.interp(positions, arc, xy[:, 1]))))
    if not chunks:
        return np.empty((0, 2), dtype=np.float64)
    return np.vstack(chunks)


def chamfer_distance(a, b):
    """Half the sum of both mean nearest-neighbour distances"""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 2)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 2)
    if len(a) == 0 or len(b) == 0:
        raise UndefinedInputError("chamfer distance needs two non-empty point sets")
    d_ab, _ = cKDTree(b).query(a)
    d_ba, _ = cKDTree(a).query(b)
    return 0.5 * (float(d_ab.mean()) + float(d_ba.mean()))


# Mask metrics ---------------------------------------------------------------

def _check_shapes(a, b):
    if a.shape != b.shape:
        raise DimensionMismatchError(f"mask shapes differ: {a.shape} vs {b.shape}")


def mean_iou(a, b):
    a = np.asarray(a) > 0
    b = np.asarray(b) > 0
    _check_shapes(a, b)
    union = int((a | b).sum())
    if union == 0:
        return 1.0
    return int((a & b).sum()) / union


def cl_dice(pred, truth):
    """Center-line Dice: harmonic mean of skeleton precision and sensitivity"""
    pred = np.asarray(pred) > 0
    truth = np.asarray(truth) > 0
    _check_shapes(pred, truth)
    skel_pred = thin(pred) > 0
    skel_truth = thin(truth) > 0
    if not skel_pred.any() or not skel_truth.any():
        return 0.0
    t_prec = (skel_pred & truth).sum() / skel_pred.sum()
    t_sens = (skel_truth & pred).sum() / skel_truth.sum()
    if t_prec + t_sens == 0:
        return 0.0
    return float(2.0 * t_prec * t_sens / (t_prec + t_sens))


# Distribution metrics -------------------------------------------------------------

def _quantiles(sorted_values, n):
    m = len(sorted_values)
    positions = (np.arange(n) + 0.5) / n * m - 0.5
    return np.interp(positions, np.arange(m), sorted_values)


def wasserstein_1d(a, b):
    """W1 between two samples via their quantile functions on a common grid of max(|a|, |b|) points"""
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise UndefinedInputError("wasserstein distance needs two non-empty samples")
    n = max(a.size, b.size)
    return float(np.abs(_quantiles(a, n) - _quantiles(b, n)).mean())


def frechet_distance(mu1, sigma1, mu2, sigma2):
    """Fréchet distance between two Gaussians given as (mean, covariance)"""
    mu1, mu2 = np.atleast_1d(mu1), np.atleast_1d(mu2)
    sigma1, sigma2 = np.atleast_2d(sigma1), np.atleast_2d(sigma2)
    if mu1.shape != mu2.shape or sigma1.shape != sigma2.shape:
        raise DimensionMismatchError("embedding statistics have different dimensions")
    diff = mu1 - mu2
    covmean = linalg.sqrtm(sigma1.dot(sigma2))
    if not np.isfinite(covmean).all():
        offset = np.eye(sigma1.shape[0]) * 1e-6
        covmean = linalg.sqrtm((sigma1 + offset).dot(sigma2 + offset))
    covmean = np.real(covmean)
    return float(diff.dot(diff) + np.trace(sigma1) + np.trace(sigma2) - 2.0 * np.trace(covmean))


# Building metrics -------------------------------------------------------------------

def validity(buildings, boundary, road_mask, transform):
    """Percentage of buildings leaving the boundary or touching a road pixel"""
    buildings = list(buildings)
    if not buildings:
        return 0.0
    mask = np.asarray(road_mask) > 0
    invalid = 0
    for b in buildings:
        xy = b.footprint.exterior_coords()
        if not points_in_polygon(xy[:, 0], xy[:, 1], boundary).all():
            invalid += 1
            continue
        rows, cols = polygon_pixel_mask(b.footprint, transform, mask.shape)
        if mask[rows, cols].any():
            invalid += 1
    return 100.0 * invalid / len(buildings)


def block_building_stats(blocks, buildings):
    """Per block: building count, mean height and footprint density (covered area / block area)"""
    by_id = {b.id: b for b in buildings}
    rows = []
    for block in blocks:
        members = [by_id[i] for i in block.buildings if i in by_id]
        heights = [b.height for b in members if b.height is not None]
        covered = math.fsum(polygon_area(b.footprint) for b in members)
        area = polygon_area(block.boundary)
        rows.append({
            "block_id": block.block_id,
            "building_count": len(members),
            "mean_height_m": math.fsum(heights) / len(heights) if heights else None,
            "footprint_density": covered / area if area > 0 else 0.0,
        })
    return pd.DataFrame(rows, columns=["block_id", "building_count", "mean_height_m", "footprint_density"])


def _safe(name, fn, *args):
    try:
        return fn(*args)
    except UndefinedInputError as e:
        logger.warning("metric undefined", extra={"context": {"metric": name, "reason": str(e)}})
        return None


def compute_report(graph=None, reference_graph=None, mask=None, reference_mask=None,
                   buildings=None, reference_buildings=None, block_stats=None, reference_block_stats=None,
                   config=None):
    """Fill a MetricsReport with every metric the supplied inputs allow"""
    bins = config.entropy_bins if config else 36
    min_dist = config.convenience_min_dist_m if config else 300.0
    unreachable = config.convenience_unreachable if config else "zero"
    spacing = config.chamfer_spacing_m if config else 10.0

    report = MetricsReport()
    if graph is not None:
        report.orientation_entropy = _safe("orientation_entropy", orientation_entropy, graph, bins)
        report.traffic_convenience = _safe("traffic_convenience", traffic_convenience, graph, min_dist, unreachable)
        if reference_graph is not None:
            report.chamfer = _safe("chamfer", chamfer_distance,
                                   sample_graph_points(graph, spacing), sample_graph_points(reference_graph, spacing))
    if mask is not None and reference_mask is not None:
        report.miou = mean_iou(mask, reference_mask)
        report.cl_dice = cl_dice(mask, reference_mask)
    if buildings and reference_buildings:
        report.wd_height = _safe("wd_height", wasserstein_1d,
                                 [b.height for b in buildings], [b.height for b in reference_buildings])
    if block_stats is not None and reference_block_stats is not None and len(block_stats) and len(reference_block_stats):
        report.wd_count = wasserstein_1d(block_stats["building_count"], reference_block_stats["building_count"])
        report.wd_density = wasserstein_1d(block_stats["footprint_density"], reference_block_stats["footprint_density"])
    return report
