# utils/raster.py
# Raster Module
# Burns classified features into the 6-channel canvas, derives density, crops tiles
# and thins road masks to one-pixel skeletons

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from skimage.draw import line as bresenham_line

from utils.geo_core import (
    AffineTransform,
    CrsCode,
    pixel_centers_to_world,
    points_in_polygon,
    polygon_centroid,
)
from utils.osm_ingest import FeatureClass

logger = logging.getLogger(__name__)

CHANNEL_NAMES = ("RoadP", "RoadS", "Water", "Green", "Density", "BuildingHeight")
ROAD_P, ROAD_S, WATER, GREEN, DENSITY, BUILDING_HEIGHT = range(6)

CHANNEL_OF_CLASS = {
    FeatureClass.ROAD_P: ROAD_P,
    FeatureClass.ROAD_S: ROAD_S,
    FeatureClass.WATER: WATER,
    FeatureClass.GREEN: GREEN,
    FeatureClass.BUILDING: BUILDING_HEIGHT,
}

TILE_PX = 256
STRIDE_PX = 204


class TaskFilter(Enum):
    ALL = "all"
    ROAD_GEN = "road_gen"
    BUILDING_GEN = "building_gen"


@dataclass(eq=False)
class RegionRaster:
    """Channel-planar float32 canvas (channels, height, width) with georeference"""

    data: np.ndarray
    transform: AffineTransform
    crs: CrsCode = CrsCode.WEB_MERCATOR
    channel_names: tuple = CHANNEL_NAMES

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 3 or self.data.shape[0] != len(self.channel_names):
            raise ValueError(f"raster data shape {self.data.shape} does not match channels {self.channel_names}")

    @property
    def width(self):
        return self.data.shape[2]

    @property
    def height(self):
        return self.data.shape[1]

    @property
    def resolution(self):
        return math.sqrt(abs(self.transform.determinant))

    def plane(self, name):
        return self.data[self.channel_names.index(name)]

    def copy(self):
        return replace(self, data=self.data.copy())

    def __eq__(self, other):
        if not isinstance(other, RegionRaster):
            return NotImplemented
        return (type(self) is type(other)
                and self.transform == other.transform
                and self.crs == other.crs
                and tuple(self.channel_names) == tuple(other.channel_names)
                and self.data.shape == other.data.shape
                and self.data.tobytes() == other.data.tobytes()
                and getattr(self, "tile_id", None) == getattr(other, "tile_id", None))


@dataclass(eq=False)
class TileRaster(RegionRaster):
    tile_id: tuple = (0, 0)
    padded: bool = False


def new_canvas(bounds, resolution_m=5.0, channel_names=CHANNEL_NAMES):
    """Empty north-up canvas covering bounds, snapped to the resolution grid"""
    res = float(resolution_m)
    west = math.floor(bounds.minx / res) * res
    east = math.ceil(bounds.maxx / res) * res
    south = math.floor(bounds.miny / res) * res
    north = math.ceil(bounds.maxy / res) * res
    width = max(1, int(round((east - west) / res)))
    height = max(1, int(round((north - south) / res)))
    data = np.zeros((len(channel_names), height, width), dtype=np.float32)
    return RegionRaster(data, AffineTransform.from_origin(west, north, res), CrsCode.WEB_MERCATOR, channel_names)


def _to_pixels(transform, xy):
    cols, rows = transform.world_to_pixel(xy[:, 0], xy[:, 1])
    return np.asarray(cols), np.asarray(rows)


def _stroke_segment(plane, c1, r1, c2, r2, half_px):
    """Burn pixels whose centers lie within half_px of the segment (round caps)"""
    h, w = plane.shape
    col_lo = max(int(math.floor(min(c1, c2) - half_px)), 0)
    col_hi = min(int(math.ceil(max(c1, c2) + half_px)), w - 1)
    row_lo = max(int(math.floor(min(r1, r2) - half_px)), 0)
    row_hi = min(int(math.ceil(max(r1, r2) + half_px)), h - 1)
    if col_lo > col_hi or row_lo > row_hi:
        return
    cc, rr = np.meshgrid(np.arange(col_lo, col_hi + 1) + 0.5, np.arange(row_lo, row_hi + 1) + 0.5)
    dx, dy = c2 - c1, r2 - r1
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        t = np.zeros_like(cc)
    else:
        t = np.clip(((cc - c1) * dx + (rr - r1) * dy) / seg2, 0.0, 1.0)
    dist2 = (cc - (c1 + t * dx)) ** 2 + (rr - (r1 + t * dy)) ** 2
    window = plane[row_lo:row_hi + 1, col_lo:col_hi + 1]
    window[dist2 <= half_px * half_px + 1e-9] = 1.0


def _trace_segment(plane, c1, r1, c2, r2):
    """Bresenham center line so strokes thinner than a pixel stay connected"""
    h, w = plane.shape
    rr, cc = bresenham_line(int(math.floor(r1)), int(math.floor(c1)), int(math.floor(r2)), int(math.floor(c2)))
    keep = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
    plane[rr[keep], cc[keep]] = 1.0


def rasterize_lines(features, width_m, canvas):
    """
    Stroke (LineString, FeatureClass) pairs into the class channels as 1.0.
    Returns a new raster; features outside the canvas are clipped.
    """
    out = canvas.copy()
    half_px = (float(width_m) / 2.0) / out.resolution
    for geometry, cls in features:
        plane = out.data[CHANNEL_OF_CLASS[cls]]
        cols, rows = _to_pixels(out.transform, geometry.coords())
        for i in range(len(cols) - 1):
            _stroke_segment(plane, cols[i], rows[i], cols[i + 1], rows[i + 1], half_px)
            _trace_segment(plane, cols[i], rows[i], cols[i + 1], rows[i + 1])
    return out


def polygon_pixel_mask(poly, transform, shape):
    """Row/col indices of pixels whose centers fall inside poly (even-odd, holes excluded)"""
    h, w = shape
    xy = np.vstack(poly.rings())
    cols, rows = _to_pixels(transform, xy)
    col_lo = max(int(math.floor(cols.min())), 0)
    col_hi = min(int(math.ceil(cols.max())), w - 1)
    row_lo = max(int(math.floor(rows.min())), 0)
    row_hi = min(int(math.ceil(rows.max())), h - 1)
    if col_lo > col_hi or row_lo > row_hi:
        return np.empty(0, dtype=np.intp), np.empty(0, dtype=np.intp)
    cc, rr = np.meshgrid(np.arange(col_lo, col_hi + 1), np.arange(row_lo, row_hi + 1))
    xs, ys = pixel_centers_to_world(transform, cc, rr)
    inside = points_in_polygon(xs, ys, poly)
    return rr[inside], cc[inside]


def rasterize_polygons(features, canvas):
    """
    Fill (Polygon, FeatureClass, value) triples.
    Buildings keep the maximum height where they overlap; a polygon smaller than
    one pixel burns the pixel containing its centroid.
    """
    out = canvas.copy()
    h, w = out.height, out.width
    for poly, cls, value in features:
        plane = out.data[CHANNEL_OF_CLASS[cls]]
        rows, cols = polygon_pixel_mask(poly, out.transform, (h, w))
        if rows.size == 0:
            centroid = polygon_centroid(poly)
            col, row = out.transform.world_to_pixel(centroid.x, centroid.y)
            col, row = int(math.floor(col)), int(math.floor(row))
            if not (0 <= row < h and 0 <= col < w):
                continue
            rows, cols = np.array([row]), np.array([col])
        if cls is FeatureClass.BUILDING:
            plane[rows, cols] = np.maximum(plane[rows, cols], np.float32(value))
        else:
            plane[rows, cols] = np.float32(value)
    return out


def compute_density(canvas, window_px=65):
    """Density = built-pixel fraction in a centered window clipped to the canvas"""
    if window_px < 1 or window_px % 2 == 0:
        raise ValueError(f"window_px must be a positive odd integer, got {window_px}")
    out = canvas.copy()
    built = (out.data[BUILDING_HEIGHT] > 0).astype(np.int64)
    h, w = built.shape
    integral = np.zeros((h + 1, w + 1), dtype=np.int64)
    integral[1:, 1:] = built.cumsum(axis=0).cumsum(axis=1)

    half = window_px // 2
    r0 = np.clip(np.arange(h) - half, 0, h)
    r1 = np.clip(np.arange(h) + half + 1, 0, h)
    c0 = np.clip(np.arange(w) - half, 0, w)
    c1 = np.clip(np.arange(w) + half + 1, 0, w)
    sums = (integral[np.ix_(r1, c1)] - integral[np.ix_(r0, c1)]
            - integral[np.ix_(r1, c0)] + integral[np.ix_(r0, c0)])
    counts = np.outer(r1 - r0, c1 - c0)
    out.data[DENSITY] = (sums / counts).astype(np.float32)
    return out


def tile_offsets(size, tile_px=TILE_PX, stride_px=STRIDE_PX):
    """Window offsets along one axis; the last window sits flush with the edge"""
    if size <= tile_px:
        return [0]
    offsets = list(range(0, size - tile_px + 1, stride_px))
    if offsets[-1] != size - tile_px:
        offsets.append(size - tile_px)
    return offsets


def crop_tiles(region, tile_px=TILE_PX, stride_px=STRIDE_PX):
    """
    Cut overlapping tile_px windows at stride_px; right/bottom tiles are flush.
    An axis shorter than tile_px yields one zero-padded window along it.
    """
    col_offsets = tile_offsets(region.width, tile_px, stride_px)
    row_offsets = tile_offsets(region.height, tile_px, stride_px)
    padded = region.width < tile_px or region.height < tile_px
    if padded:
        logger.warning("region smaller than one tile, padding with zeros",
                       extra={"context": {"width": region.width, "height": region.height, "tile_px": tile_px}})

    tiles = []
    for row_index, row0 in enumerate(row_offsets):
        for col_index, col0 in enumerate(col_offsets):
            window = region.data[:, row0:row0 + tile_px, col0:col0 + tile_px]
            data = np.zeros((region.data.shape[0], tile_px, tile_px), dtype=np.float32)
            data[:, :window.shape[1], :window.shape[2]] = window
            tiles.append(TileRaster(
                data=data,
                transform=region.transform.shifted(col0, row0),
                crs=region.crs,
                channel_names=region.channel_names,
                tile_id=(col_index, row_index),
                padded=padded,
            ))
    return tiles


def road_mask(raster):
    """Road-P or Road-S (the combined first two channels)"""
    return ((raster.data[ROAD_P] > 0) | (raster.data[ROAD_S] > 0)).astype(np.uint8)


def filter_tiles(tiles, task):
    """Keep tiles usable for a generation task"""
    task = TaskFilter(task)
    if task is TaskFilter.ALL:
        return list(tiles)
    kept = []
    for tile in tiles:
        has_roads = bool(road_mask(tile).any())
        has_buildings = bool((tile.data[BUILDING_HEIGHT] > 0).any())
        if task is TaskFilter.ROAD_GEN and has_roads:
            kept.append(tile)
        elif task is TaskFilter.BUILDING_GEN and has_roads and has_buildings:
            kept.append(tile)
    return kept


# Thinning ---------------------------------------------------------------------

def _ring(img, r, c):
    """P2..P9 clockwise from north around (r, c) of a padded image"""
    return (img[r - 1, c], img[r - 1, c + 1], img[r, c + 1], img[r + 1, c + 1],
            img[r + 1, c], img[r + 1, c - 1], img[r, c - 1], img[r - 1, c - 1])


def _transitions(ring):
    return sum(1 for a, b in zip(ring, ring[1:] + ring[:1]) if a == 0 and b == 1)


def _removable(ring, step):
    p2, _, p4, _, p6, _, p8, _ = ring
    if not 2 <= sum(ring) <= 6 or _transitions(ring) != 1:
        return False
    if step == 0:
        return p2 * p4 * p6 == 0 and p4 * p6 * p8 == 0
    return p2 * p4 * p8 == 0 and p2 * p6 * p8 == 0


def _candidates(img, step):
    """Vectorised Zhang-Suen test on the current image (interior coordinates)"""
    p2, p3, p4, p5 = img[:-2, 1:-1], img[:-2, 2:], img[1:-1, 2:], img[2:, 2:]
    p6, p7, p8, p9 = img[2:, 1:-1], img[2:, :-2], img[1:-1, :-2], img[:-2, :-2]
    ring = [p2, p3, p4, p5, p6, p7, p8, p9]
    b = sum(p.astype(np.int16) for p in ring)
    a = sum(((ring[i] == 0) & (ring[(i + 1) % 8] == 1)).astype(np.int16) for i in range(8))
    if step == 0:
        directional = (p2 * p4 * p6 == 0) & (p4 * p6 * p8 == 0)
    else:
        directional = (p2 * p4 * p8 == 0) & (p2 * p6 * p8 == 0)
    return (img[1:-1, 1:-1] == 1) & (b >= 2) & (b <= 6) & (a == 1) & directional


_STAIR_PAIRS = ((0, 2), (2, 4), (4, 6), (6, 0))


def thin(binary):
    """
    Zhang-Suen thinning to a one-pixel, 8-connected skeleton.
    Candidates of each sub-iteration are deleted one at a time after re-checking
    against the current image, which keeps every deletion a simple point, so
    components and holes survive. A final pass drops staircase corners.
    """
    mask = np.asarray(binary)
    img = np.pad((mask > 0).astype(np.uint8), 1)

    changed = True
    while changed:
        changed = False
        for step in (0, 1):
            rows, cols = np.nonzero(_candidates(img, step))
            for r, c in zip(rows + 1, cols + 1):
                if _removable(_ring(img, r, c), step):
                    img[r, c] = 0
                    changed = True

    changed = True
    while changed:
        changed = False
        rows, cols = np.nonzero(img[1:-1, 1:-1])
        for r, c in zip(rows + 1, cols + 1):
            ring = _ring(img, r, c)
            if sum(ring) != 2:
                continue
            if any(ring[i] and ring[j] for i, j in _STAIR_PAIRS):
                img[r, c] = 0
                changed = True

    return img[1:-1, 1:-1].astype(np.uint8)
