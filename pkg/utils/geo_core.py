# utils/geo_core.py
# Geometry Core Module
# Points, rings, affine georeference and the WGS84 <-> Web-Mercator projection

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from utils.errors import ConfigurationError, DomainError

EARTH_RADIUS_M = 6378137.0
MERCATOR_LAT_LIMIT = 85.06
ORIGIN_SHIFT_M = math.pi * EARTH_RADIUS_M


class CrsCode(IntEnum):
    WGS84 = 4326
    WEB_MERCATOR = 3857


@dataclass(frozen=True, slots=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError(f"non-finite coordinate ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y

    def distance_to(self, other):
        return math.hypot(other.x - self.x, other.y - self.y)


def _as_points(coords):
    return tuple(p if isinstance(p, Point2) else Point2(float(p[0]), float(p[1])) for p in coords)


@dataclass(frozen=True, slots=True)
class LineString:
    points: tuple

    def __post_init__(self):
        pts = _as_points(self.points)
        if len(pts) < 2:
            raise DomainError("a LineString needs at least 2 points")
        for a, b in zip(pts, pts[1:]):
            if a == b:
                raise DomainError(f"consecutive duplicate point {a}")
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_coords(cls, coords, dedupe=True):
        """Build from (x, y) pairs, dropping consecutive duplicates when asked"""
        pts = list(_as_points(coords))
        if dedupe:
            pts = [p for i, p in enumerate(pts) if i == 0 or p != pts[i - 1]]
        return cls(tuple(pts))

    def coords(self):
        return np.array([(p.x, p.y) for p in self.points], dtype=np.float64)

    def reversed(self):
        return LineString(self.points[::-1])

    @property
    def start(self):
        return self.points[0]

    @property
    def end(self):
        return self.points[-1]


def _signed_area(ring):
    xy = np.asarray(ring, dtype=np.float64)
    if len(xy) < 3:
        return 0.0
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x[:-1], y[1:]) - np.dot(x[1:], y[:-1]))


def _close_ring(coords):
    pts = list(_as_points(coords))
    pts = [p for i, p in enumerate(pts) if i == 0 or p != pts[i - 1]]
    if pts and pts[0] != pts[-1]:
        pts.append(pts[0])
    return pts


def _orient(ring, ccw):
    area = _signed_area([(p.x, p.y) for p in ring])
    if (area < 0 and ccw) or (area > 0 and not ccw):
        ring = ring[::-1]
    return tuple(ring)


@dataclass(frozen=True, slots=True)
class Polygon:
    """
    Exterior ring plus holes, always closed.
    Construction normalizes the exterior to counter-clockwise and holes to clockwise.
    """

    exterior: tuple
    holes: tuple = ()

    def __post_init__(self):
        exterior = _close_ring(self.exterior)
        if len(set(exterior)) < 3:
            raise DomainError("polygon exterior needs at least 3 distinct vertices")
        holes = []
        for hole in self.holes:
            ring = _close_ring(hole)
            if len(set(ring)) >= 3:
                holes.append(_orient(ring, ccw=False))
        object.__setattr__(self, "exterior", _orient(exterior, ccw=True))
        object.__setattr__(self, "holes", tuple(holes))

    @classmethod
    def from_coords(cls, exterior, holes=()):
        return cls(tuple(exterior), tuple(tuple(h) for h in holes))

    def exterior_coords(self):
        return np.array([(p.x, p.y) for p in self.exterior], dtype=np.float64)

    def hole_coords(self):
        return [np.array([(p.x, p.y) for p in h], dtype=np.float64) for h in self.holes]

    def rings(self):
        return [self.exterior_coords(), *self.hole_coords()]

    def bounds(self):
        xy = self.exterior_coords()
        return Bounds(float(xy[:, 0].min()), float(xy[:, 1].min()),
                      float(xy[:, 0].max()), float(xy[:, 1].max()))


@dataclass(frozen=True, slots=True)
class Bounds:
    minx: float
    miny: float
    maxx: float
    maxy: float

    @property
    def width(self):
        return self.maxx - self.minx

    @property
    def height(self):
        return self.maxy - self.miny

    def union(self, other):
        return Bounds(min(self.minx, other.minx), min(self.miny, other.miny),
                      max(self.maxx, other.maxx), max(self.maxy, other.maxy))


def geometry_bounds(geometry):
    """Bounds of a Point2, LineString or Polygon"""
    if isinstance(geometry, Point2):
        return Bounds(geometry.x, geometry.y, geometry.x, geometry.y)
    if isinstance(geometry, Polygon):
        return geometry.bounds()
    xy = geometry.coords()
    return Bounds(float(xy[:, 0].min()), float(xy[:, 1].min()),
                  float(xy[:, 0].max()), float(xy[:, 1].max()))


@dataclass(frozen=True, slots=True)
class AffineTransform:
    """Pixel (col, row) -> world (x, y): x = a*col + b*row + c, y = d*col + e*row + f"""

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float

    @classmethod
    def identity(cls):
        return cls(1.0, 0.0, 0.0, 0.0, 1.0, 0.0)

    @classmethod
    def from_origin(cls, west, north, resolution):
        """North-up transform with square pixels anchored at the top-left corner"""
        return cls(float(resolution), 0.0, float(west), 0.0, -float(resolution), float(north))

    @classmethod
    def from_list(cls, values):
        if len(values) != 6:
            raise ConfigurationError(f"affine transform needs 6 values, got {len(values)}")
        return cls(*(float(v) for v in values))

    def to_list(self):
        return [self.a, self.b, self.c, self.d, self.e, self.f]

    @property
    def determinant(self):
        return self.a * self.e - self.b * self.d

    def is_invertible(self):
        return self.determinant != 0.0

    def shifted(self, col_off, row_off):
        """Transform of a window whose top-left pixel is (col_off, row_off)"""
        return AffineTransform(self.a, self.b, self.a * col_off + self.b * row_off + self.c,
                               self.d, self.e, self.d * col_off + self.e * row_off + self.f)

    def pixel_to_world(self, col, row):
        return (self.a * col + self.b * row + self.c, self.d * col + self.e * row + self.f)

    def world_to_pixel(self, x, y):
        det = self.determinant
        if det == 0.0:
            raise ConfigurationError(f"affine transform {self.to_list()} is not invertible")
        dx, dy = x - self.c, y - self.f
        col = (self.e * dx - self.b * dy) / det
        row = (-self.d * dx + self.a * dy) / det
        return col, row


def pixel_to_world(t, col, row):
    return Point2(*t.pixel_to_world(col, row))


def world_to_pixel(t, p):
    """Exact inverse of pixel_to_world; works on scalars or numpy arrays"""
    return t.world_to_pixel(p.x, p.y) if isinstance(p, Point2) else t.world_to_pixel(p[0], p[1])


def pixel_centers_to_world(t, cols, rows):
    """World coordinates of pixel centers for integer index arrays"""
    cols = np.asarray(cols, dtype=np.float64) + 0.5
    rows = np.asarray(rows, dtype=np.float64) + 0.5
    return t.a * cols + t.b * rows + t.c, t.d * cols + t.e * rows + t.f


def project_wgs84_to_mercator(lon, lat):
    """Spherical Web-Mercator (EPSG:3857), R = 6378137 m"""
    if not (math.isfinite(lon) and math.isfinite(lat)):
        raise DomainError(f"non-finite coordinate ({lon}, {lat})")
    if not -180.0 <= lon <= 180.0:
        raise DomainError(f"longitude {lon} outside [-180, 180]")
    if abs(lat) >= MERCATOR_LAT_LIMIT:
        raise DomainError(f"latitude {lat} outside the Web-Mercator band |lat| < {MERCATOR_LAT_LIMIT}")
    x = EARTH_RADIUS_M * math.radians(lon)
    y = EARTH_RADIUS_M * math.log(math.tan(math.pi / 4.0 + math.radians(lat) / 2.0))
    return Point2(x, y)


def unproject_mercator_to_wgs84(x, y):
    lon = math.degrees(x / EARTH_RADIUS_M)
    lat = math.degrees(2.0 * math.atan(math.exp(y / EARTH_RADIUS_M)) - math.pi / 2.0)
    return Point2(lon, lat)


def project_geometry(geometry):
    """Project a WGS84 Point2/LineString/Polygon to EPSG:3857"""
    if isinstance(geometry, Point2):
        return project_wgs84_to_mercator(geometry.x, geometry.y)
    if isinstance(geometry, LineString):
        return LineString.from_coords([project_wgs84_to_mercator(p.x, p.y) for p in geometry.points])
    if isinstance(geometry, Polygon):
        return Polygon.from_coords(
            [project_wgs84_to_mercator(p.x, p.y) for p in geometry.exterior],
            [[project_wgs84_to_mercator(p.x, p.y) for p in hole] for hole in geometry.holes],
        )
    raise TypeError(f"unsupported geometry {type(geometry).__name__}")


def polygon_area(p):
    """Shoelace area of the exterior minus holes, never negative"""
    area = abs(_signed_area(p.exterior_coords()))
    for hole in p.hole_coords():
        area -= abs(_signed_area(hole))
    return max(area, 0.0)


def polygon_centroid(p):
    """Area centroid of the exterior ring; vertex mean when the ring is degenerate"""
    xy = p.exterior_coords()
    x, y = xy[:, 0], xy[:, 1]
    cross = x[:-1] * y[1:] - x[1:] * y[:-1]
    area = cross.sum() / 2.0
    if abs(area) < 1e-12:
        ring = xy[:-1]
        return Point2(float(ring[:, 0].mean()), float(ring[:, 1].mean()))
    cx = float(((x[:-1] + x[1:]) * cross).sum() / (6.0 * area))
    cy = float(((y[:-1] + y[1:]) * cross).sum() / (6.0 * area))
    return Point2(cx, cy)


def _on_ring_boundary(xs, ys, ring, tol):
    on = np.zeros(xs.shape, dtype=bool)
    for (x1, y1), (x2, y2) in zip(ring[:-1], ring[1:]):
        dx, dy = x2 - x1, y2 - y1
        seg2 = dx * dx + dy * dy
        if seg2 == 0.0:
            continue
        t = np.clip(((xs - x1) * dx + (ys - y1) * dy) / seg2, 0.0, 1.0)
        px, py = x1 + t * dx, y1 + t * dy
        on |= (xs - px) ** 2 + (ys - py) ** 2 <= tol * tol
    return on


def _ray_cast(xs, ys, ring):
    inside = np.zeros(xs.shape, dtype=bool)
    for (x1, y1), (x2, y2) in zip(ring[:-1], ring[1:]):
        crosses = (y1 > ys) != (y2 > ys)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = x1 + (ys - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (xs < x_at)
    return inside


def points_in_polygon(xs, ys, poly, tol=1e-9):
    """Vectorised ray casting; points on any ring boundary count as inside"""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    rings = poly.rings()
    scale = max(1.0, float(np.abs(rings[0]).max()))
    tol = tol * scale

    inside = np.zeros(xs.shape, dtype=bool)
    for ring in rings:
        inside ^= _ray_cast(xs, ys, ring)
    boundary = np.zeros(xs.shape, dtype=bool)
    for ring in rings:
        boundary |= _on_ring_boundary(xs, ys, ring, tol)
    return inside | boundary


def point_in_polygon(pt, poly):
    return bool(points_in_polygon(np.array([pt.x]), np.array([pt.y]), poly)[0])


def polyline_length(line):
    """Sum of Euclidean segment lengths (planar, metric CRS)"""
    xy = line.coords() if isinstance(line, LineString) else np.asarray(line, dtype=np.float64)
    if len(xy) < 2:
        return 0.0
    return float(np.hypot(np.diff(xy[:, 0]), np.diff(xy[:, 1])).sum())
