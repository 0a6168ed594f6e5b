# utils/export.py
# Artifact Formats Module
# Byte-deterministic writers and readers for raster containers, road graph
# JSON, building/block GeoJSON and OpenDRIVE

import json
import math
import struct

import numpy as np
from lxml import etree

from utils.blocks import Block, Cycle
from utils.buildings import Building, HeightSource
from utils.errors import DomainError, FormatError, ParseError
from utils.geo_core import AffineTransform, CrsCode, LineString, Point2, Polygon
from utils.osm_ingest import FeatureClass, parse_feature_collection
from utils.raster import RegionRaster, TileRaster
from utils.roadgraph import RoadGraph

RBT_MAGIC = b"RBUS"
RBT_VERSION = 1
_PREAMBLE = struct.Struct("<4sHI")

WEB_MERCATOR_PROJ = ("+proj=merc +a=6378137 +b=6378137 +lat_ts=0 +lon_0=0 +x_0=0 +y_0=0 "
                     "+k=1 +units=m +nadgrids=@null +wktext +no_defs")


# Canonical JSON ---------------------------------------------------------------

def _encode(obj, out):
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            raise FormatError("value", f"non-finite number {value}")
        out.append(format(value, ".17g"))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if i:
                out.append(",")
            out.append(json.dumps(str(key), ensure_ascii=False))
            out.append(":")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _encode(item, out)
        out.append("]")
    else:
        raise FormatError("value", f"cannot encode {type(obj).__name__}")


def dumps_canonical(obj):
    """Sorted keys, no whitespace, floats with 17 significant digits; UTF-8 bytes"""
    out = []
    _encode(obj, out)
    return "".join(out).encode("utf-8")


# .rbt raster container -------------------------------------------------------------

def write_raster(raster):
    """
    Container layout: magic 'RBUS', u16 version, u32 header length (little-endian),
    UTF-8 JSON header, then channels x height x width little-endian float32.
    """
    header = {
        "width": raster.width,
        "height": raster.height,
        "channels": raster.data.shape[0],
        "channel_names": list(raster.channel_names),
        "transform": raster.transform.to_list(),
        "epsg": int(raster.crs),
    }
    if isinstance(raster, TileRaster):
        header["tile_id"] = list(raster.tile_id)
        header["padded"] = bool(raster.padded)
    header_bytes = dumps_canonical(header)
    payload = np.ascontiguousarray(raster.data, dtype="<f4").tobytes(order="C")
    return _PREAMBLE.pack(RBT_MAGIC, RBT_VERSION, len(header_bytes)) + header_bytes + payload


def read_raster(data):
    """Parse a container; returns a TileRaster when the header carries a tile_id"""
    data = bytes(data)
    if len(data) < _PREAMBLE.size:
        raise FormatError("magic", f"container shorter than its {_PREAMBLE.size}-byte preamble")
    magic, version, header_len = _PREAMBLE.unpack_from(data)
    if magic != RBT_MAGIC:
        raise FormatError("magic", f"expected {RBT_MAGIC!r}, got {magic!r}")
    if version != RBT_VERSION:
        raise FormatError("version", f"unsupported version {version}")
    start = _PREAMBLE.size
    if start + header_len > len(data):
        raise FormatError("header_len", f"header length {header_len} exceeds container size {len(data)}")

    try:
        header = json.loads(data[start:start + header_len].decode("utf-8"))
        width, height, channels = int(header["width"]), int(header["height"]), int(header["channels"])
        names = tuple(header["channel_names"])
        transform = AffineTransform.from_list(header["transform"])
        epsg = int(header["epsg"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise FormatError("header", f"unreadable header: {e}")
    if epsg != CrsCode.WEB_MERCATOR:
        raise FormatError("epsg", f"only EPSG:3857 is supported, got {epsg}")
    if len(names) != channels:
        raise FormatError("header", f"{len(names)} channel names for {channels} channels")

    payload = data[start + header_len:]
    expected = 4 * channels * width * height
    if len(payload) != expected:
        raise FormatError("payload", f"expected {expected} payload bytes, got {len(payload)}")
    array = np.frombuffer(payload, dtype="<f4").reshape(channels, height, width).astype(np.float32)

    if "tile_id" in header:
        return TileRaster(array, transform, CrsCode.WEB_MERCATOR, names,
                          tile_id=tuple(int(v) for v in header["tile_id"]), padded=bool(header.get("padded", False)))
    return RegionRaster(array, transform, CrsCode.WEB_MERCATOR, names)


def write_tile(tile):
    return write_raster(tile)


def read_tile(data):
    raster = read_raster(data)
    if not isinstance(raster, TileRaster):
        raster = TileRaster(raster.data, raster.transform, raster.crs, raster.channel_names)
    return raster


# Road graph JSON ------------------------------------------------------------------

def write_graph_json(g):
    doc = {
        "nodes": [{"id": n, "x": p.x, "y": p.y} for n, p in g.nodes().items()],
        "edges": [
            {"u": u, "v": v, "class": road_class.value, "geometry": [[p.x, p.y] for p in geometry.points]}
            for u, v, road_class, geometry in g.edges()
        ],
    }
    return dumps_canonical(doc)


def read_graph_json(data):
    try:
        doc = json.loads(bytes(data).decode("utf-8"))
        nodes, edges = doc["nodes"], doc["edges"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as e:
        raise FormatError("graph", f"unreadable graph document: {e}")

    g = RoadGraph()
    for node in nodes:
        g.add_node(int(node["id"]), Point2(float(node["x"]), float(node["y"])))
    for edge in edges:
        u, v = int(edge["u"]), int(edge["v"])
        if not (g.has_node(u) and g.has_node(v)):
            raise FormatError("edges", f"edge ({u}, {v}) references a missing node")
        try:
            geometry = LineString(tuple(Point2(float(x), float(y)) for x, y in edge["geometry"]))
            g.add_edge(u, v, FeatureClass(edge["class"]), geometry)
        except (DomainError, ValueError) as e:
            raise FormatError("geometry", f"edge ({u}, {v}): {e}")
    return g


# GeoJSON ---------------------------------------------------------------------------

def _polygon_coords(poly):
    return [[[p.x, p.y] for p in ring] for ring in (poly.exterior, *poly.holes)]


def _building_feature(b):
    return {
        "type": "Feature",
        "id": b.id,
        "properties": {
            "id": b.id,
            "height": b.height,
            "height_source": b.height_source.value if b.height_source else None,
        },
        "geometry": {"type": "Polygon", "coordinates": _polygon_coords(b.footprint)},
    }


def _block_feature(block):
    return {
        "type": "Feature",
        "id": block.block_id,
        "properties": {
            "block_id": block.block_id,
            "building_ids": sorted(block.buildings),
            "node_ids": list(block.cycle.node_ids) if block.cycle else None,
            "valid": bool(block.valid),
        },
        "geometry": {"type": "Polygon", "coordinates": _polygon_coords(block.boundary)},
    }


def write_geojson_buildings(items):
    """FeatureCollection of buildings or blocks, ordered by id"""
    items = list(items)
    if items and isinstance(items[0], Block):
        features = [_block_feature(b) for b in sorted(items, key=lambda b: b.block_id)]
    else:
        features = [_building_feature(b) for b in sorted(items, key=lambda b: b.id)]
    return dumps_canonical({"type": "FeatureCollection", "features": features})


def read_geojson_buildings(data):
    """Buildings back from write_geojson_buildings output"""
    try:
        features = parse_feature_collection(data)
    except ParseError as e:
        raise FormatError("geojson", str(e))
    out = []
    for f in features:
        source = f.tags.get("height_source")
        height = f.tags.get("height")
        out.append(Building(
            f.tags.get("id", f.source_id),
            f.geometry,
            float(height) if height is not None else None,
            HeightSource(source) if source else None,
        ))
    return out


def read_geojson_blocks(data):
    try:
        doc = json.loads(bytes(data).decode("utf-8"))
        features = doc["features"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as e:
        raise FormatError("geojson", f"unreadable block collection: {e}")
    if not isinstance(features, list):
        raise FormatError("geojson", "block collection features must be a list")
    blocks = []
    for index, feature in enumerate(features):
        try:
            blocks.append(_read_block(feature))
        except KeyError as e:
            raise FormatError("geojson", f"block feature {index} is missing {e}")
        except (TypeError, ValueError, IndexError) as e:
            raise FormatError("geojson", f"block feature {index} is malformed: {e}")
    return blocks


def _read_block(feature):
    props = feature["properties"]
    rings = feature["geometry"]["coordinates"]
    boundary = Polygon.from_coords([Point2(x, y) for x, y in rings[0]],
                                   [[Point2(x, y) for x, y in ring] for ring in rings[1:]])
    node_ids = props.get("node_ids")
    return Block(
        block_id=int(props["block_id"]),
        boundary=boundary,
        buildings=tuple(props.get("building_ids", ())),
        valid=bool(props.get("valid", True)),
        cycle=Cycle(tuple(node_ids)) if node_ids else None,
    )


# OpenDRIVE ---------------------------------------------------------------------------

def _num(value):
    return format(float(value), ".17g")


def _graph_extent(g):
    xs, ys = [], []
    for _, _, _, geometry in g.edges():
        for p in geometry.points:
            xs.append(p.x)
            ys.append(p.y)
    for p in g.nodes().values():
        xs.append(p.x)
        ys.append(p.y)
    if not xs:
        return 0.0, 0.0, 0.0, 0.0
    return max(ys), min(ys), max(xs), min(xs)


def export_opendrive(g, name="robus", geo_reference=True):
    """
    OpenDRIVE 1.4 skeleton: one road per graph edge, one straight-line geometry
    record per polyline segment, no lanes and no junctions.
    """
    root = etree.Element("OpenDRIVE")
    header = etree.SubElement(root, "header")
    north, south, east, west = _graph_extent(g)
    header.set("revMajor", "1")
    header.set("revMinor", "4")
    header.set("name", name)
    header.set("version", "1.00")
    header.set("north", _num(north))
    header.set("south", _num(south))
    header.set("east", _num(east))
    header.set("west", _num(west))
    header.set("vendor", "RoBus")
    if geo_reference:
        georef = etree.SubElement(header, "geoReference")
        georef.text = etree.CDATA(WEB_MERCATOR_PROJ)

    for road_id, (u, v, road_class, geometry) in enumerate(g.edges(), start=1):
        xy = geometry.coords()
        lengths = [math.hypot(x2 - x1, y2 - y1) for (x1, y1), (x2, y2) in zip(xy[:-1], xy[1:])]
        road = etree.SubElement(root, "road")
        road.set("name", f"{road_class.value} {u}-{v}")
        road.set("length", _num(math.fsum(lengths)))
        road.set("id", str(road_id))
        road.set("junction", "-1")
        plan_view = etree.SubElement(road, "planView")
        s = 0.0
        for (x1, y1), (x2, y2), length in zip(xy[:-1], xy[1:], lengths):
            record = etree.SubElement(plan_view, "geometry")
            record.set("s", _num(s))
            record.set("x", _num(x1))
            record.set("y", _num(y1))
            record.set("hdg", _num(math.atan2(y2 - y1, x2 - x1)))
            record.set("length", _num(length))
            etree.SubElement(record, "line")
            s += length

    return etree.tostring(root, xml_declaration=True, encoding="UTF-8", pretty_print=True)
