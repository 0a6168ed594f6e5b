# utils/synthetic_city.py
# Synthetic City Module
# The bundled ~2.75 km square test city: a road grid, a pond, a garden,
# 40 buildings and a partial height raster

import json
import math
from pathlib import Path

import numpy as np

from utils.export import write_raster
from utils.geo_core import AffineTransform, CrsCode, project_wgs84_to_mercator, unproject_mercator_to_wgs84
from utils.raster import RegionRaster

CENTER_LON = 10.0
CENTER_LAT = 45.0
GRID_SPACING_M = 250.0
GRID_LINES = 12
EXTENT_M = GRID_SPACING_M * (GRID_LINES - 1)
BUILDING_SIZE_M = 30.0
HEIGHT_RASTER_RES_M = 10.0
HEIGHT_RASTER_WIDTH_M = 1000.0
POND_CELL = (9, 9)
GARDEN_CELL = (1, 9)
ISOLATED_CELL = (10, 10)


def city_origin():
    """South-west corner in EPSG:3857, snapped to 5 m"""
    p = project_wgs84_to_mercator(CENTER_LON, CENTER_LAT)
    return math.floor(p.x / 5.0) * 5.0, math.floor(p.y / 5.0) * 5.0


def _lonlat(x0, y0, dx, dy):
    p = unproject_mercator_to_wgs84(x0 + dx, y0 + dy)
    return [p.x, p.y]


def _square(x0, y0, cx, cy, half):
    ring = [(cx - half, cy - half), (cx + half, cy - half), (cx + half, cy + half), (cx - half, cy + half),
            (cx - half, cy - half)]
    return [[_lonlat(x0, y0, dx, dy) for dx, dy in ring]]


def _cell_center(i, j):
    return GRID_SPACING_M * (i + 0.5), GRID_SPACING_M * (j + 0.5)


def building_cells():
    """39 grid cells with (i + j) divisible by 3, minus the pond cell"""
    cells = [(i, j) for j in range(GRID_LINES - 1) for i in range(GRID_LINES - 1) if (i + j) % 3 == 0]
    return [c for c in cells if c != POND_CELL]


def synthetic_features():
    """WGS84 FeatureCollection dict of the synthetic city"""
    x0, y0 = city_origin()
    features = []

    for k in range(GRID_LINES):
        highway = "primary" if k % 4 == 0 else "residential"
        offset = GRID_SPACING_M * k
        features.append({
            "type": "Feature", "id": f"road/v{k}", "properties": {"highway": highway, "name": f"Avenue {k}"},
            "geometry": {"type": "LineString",
                         "coordinates": [_lonlat(x0, y0, offset, 0.0), _lonlat(x0, y0, offset, EXTENT_M)]},
        })
        features.append({
            "type": "Feature", "id": f"road/h{k}", "properties": {"highway": highway, "name": f"Street {k}"},
            "geometry": {"type": "LineString",
                         "coordinates": [_lonlat(x0, y0, 0.0, offset), _lonlat(x0, y0, EXTENT_M, offset)]},
        })

    pond_x, pond_y = _cell_center(*POND_CELL)
    features.append({
        "type": "Feature", "id": "water/pond", "properties": {"natural": "water"},
        "geometry": {"type": "Polygon", "coordinates": _square(x0, y0, pond_x, pond_y, 90.0)},
    })
    features.append({
        "type": "Feature", "id": "water/stream", "properties": {"waterway": "stream"},
        "geometry": {"type": "LineString",
                     "coordinates": [_lonlat(x0, y0, pond_x - 80.0, pond_y), _lonlat(x0, y0, pond_x + 80.0, pond_y)]},
    })
    garden_x, garden_y = _cell_center(*GARDEN_CELL)
    features.append({
        "type": "Feature", "id": "green/garden", "properties": {"leisure": "garden"},
        "geometry": {"type": "Polygon", "coordinates": _square(x0, y0, garden_x, garden_y, 80.0)},
    })

    half = BUILDING_SIZE_M / 2.0
    for i, j in building_cells():
        cx, cy = _cell_center(i, j)
        features.append({
            "type": "Feature", "id": f"building/{i}_{j}", "properties": {"building": "yes"},
            "geometry": {"type": "Polygon", "coordinates": _square(x0, y0, cx, cy, half)},
        })
    cx, cy = _cell_center(*ISOLATED_CELL)
    features.append({
        "type": "Feature", "id": "building/isolated", "properties": {"building": "house"},
        "geometry": {"type": "Polygon", "coordinates": _square(x0, y0, cx, cy, half)},
    })

    # one feature the ingest has to skip
    features.append({"type": "Feature", "id": "poi/kiosk", "properties": {"amenity": "kiosk"},
                     "geometry": {"type": "GeometryCollection", "geometries": []}})
    return {"type": "FeatureCollection", "features": features}


def synthetic_height_raster():
    """Height plane over the western strip: 12 m in the south half, 36 m in the north half"""
    x0, y0 = city_origin()
    res = HEIGHT_RASTER_RES_M
    width = int(HEIGHT_RASTER_WIDTH_M / res)
    height = int(math.ceil(EXTENT_M / res))
    plane = np.full((height, width), 12.0, dtype=np.float32)
    plane[: height // 2, :] = 36.0
    transform = AffineTransform.from_origin(x0, y0 + height * res, res)
    return RegionRaster(plane[np.newaxis], transform, CrsCode.WEB_MERCATOR, ("height",))


def write_synthetic_city(directory, workers=1):
    """
    Write features.geojson, heights.rbt and pipeline.json into directory.
    Returns the config path; outputs go to directory/output.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    features_path = directory / "features.geojson"
    raster_path = directory / "heights.rbt"
    config_path = directory / "pipeline.json"

    features_path.write_text(json.dumps(synthetic_features(), sort_keys=True), encoding="utf-8")
    raster_path.write_bytes(write_raster(synthetic_height_raster()))
    config = {
        "features_path": str(features_path),
        "height_raster_path": str(raster_path),
        "output_dir": str(directory / "output"),
        "workers": workers,
    }
    config_path.write_text(json.dumps(config, indent=2, sort_keys=True), encoding="utf-8")
    return config_path
