# utils/osm_ingest.py
# Feature Ingest Module
# Parses GeoJSON-shaped FeatureCollections and sorts features into raster channels

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from utils.errors import ConfigurationError, DomainError, ParseError
from utils.geo_core import LineString, Point2, Polygon, project_geometry

logger = logging.getLogger(__name__)


class FeatureClass(Enum):
    ROAD_P = "RoadP"
    ROAD_S = "RoadS"
    WATER = "Water"
    GREEN = "Green"
    BUILDING = "Building"


# First match wins
CLASS_PRIORITY = (
    FeatureClass.ROAD_P,
    FeatureClass.ROAD_S,
    FeatureClass.WATER,
    FeatureClass.GREEN,
    FeatureClass.BUILDING,
)

# key -> allowed values; None means "key present with any value"
DEFAULT_TAG_TABLES = {
    FeatureClass.ROAD_P: (("highway", frozenset({"motorway", "trunk", "primary"})),),
    FeatureClass.ROAD_S: (("highway", frozenset({"secondary", "tertiary", "residential", "unclassified"})),),
    FeatureClass.WATER: (
        ("water", frozenset({"reservoir", "river"})),
        ("natural", frozenset({"water", "wetland", "glacier"})),
        ("leisure", frozenset({"nature reserve"})),
        ("waterway", frozenset({"riverbank", "dock", "canal", "drain", "ditch",
                                "stream", "brook", "wadi", "drystream"})),
    ),
    FeatureClass.GREEN: (
        ("landuse", frozenset({"forest", "farmland", "allotments", "meadow", "scrub", "grass"})),
        ("natural", frozenset({"wood"})),
        ("leisure", frozenset({"garden"})),
    ),
    FeatureClass.BUILDING: (("building", None),),
}


@dataclass(frozen=True)
class Feature:
    geometry: object
    tags: dict
    source_id: str

    def __post_init__(self):
        if any(not k for k in self.tags):
            raise ParseError("tag keys must be non-empty")


@dataclass
class SkipReport:
    skipped: int = 0
    reasons: Counter = field(default_factory=Counter)

    def add(self, reason):
        self.skipped += 1
        self.reasons[reason] += 1

    def to_dict(self):
        return {"skipped": self.skipped, "reasons": dict(sorted(self.reasons.items()))}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def load_tag_tables(path=None):
    """
    Read tag tables from JSON: {"RoadP": [{"key": ..., "values": [...] | null}], ...}
    Returns the built-in tables when path is empty.
    """
    if not path:
        return DEFAULT_TAG_TABLES
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"cannot read tag tables {path}: {e}")

    tables = {}
    for cls in CLASS_PRIORITY:
        rules = []
        for rule in raw.get(cls.value, []):
            values = rule.get("values")
            rules.append((rule["key"], None if values is None else frozenset(values)))
        tables[cls] = tuple(rules)
    return tables


def classify_feature(tags, tables=None):
    """Map a tag dict to exactly one FeatureClass (or None), RoadP > RoadS > Water > Green > Building"""
    tables = tables or DEFAULT_TAG_TABLES
    for cls in CLASS_PRIORITY:
        for key, values in tables.get(cls, ()):
            if key not in tags:
                continue
            if values is None or tags[key] in values:
                return cls
    return None


def _byte_offset(text, char_pos):
    return len(text[:char_pos].encode("utf-8"))


def _ring(coords):
    return [Point2(float(c[0]), float(c[1])) for c in coords]


def _polygon(rings):
    if not rings:
        raise DomainError("polygon without rings")
    return Polygon.from_coords(_ring(rings[0]), [_ring(r) for r in rings[1:]])


GEOMETRY_TYPES = ("Point", "LineString", "Polygon", "MultiLineString", "MultiPolygon")


def _geometries(geometry):
    """Yield geo-core geometries for one GeoJSON geometry, flattening Multi* parts"""
    gtype = geometry.get("type")
    coords = geometry.get("coordinates")
    if gtype == "Point":
        yield Point2(float(coords[0]), float(coords[1]))
    elif gtype == "LineString":
        yield LineString.from_coords(_ring(coords))
    elif gtype == "Polygon":
        yield _polygon(coords)
    elif gtype == "MultiLineString":
        for part in coords:
            yield LineString.from_coords(_ring(part))
    elif gtype == "MultiPolygon":
        for part in coords:
            yield _polygon(part)
    else:
        raise DomainError(f"unsupported geometry type {gtype!r}")


def _tags(properties):
    tags = {}
    for key, value in (properties or {}).items():
        if not key or value is None:
            continue
        tags[str(key)] = value if isinstance(value, str) else json.dumps(value) if isinstance(value, (dict, list)) else str(value)
    return tags


def parse_feature_collection(data, report=None):
    """
    Parse a UTF-8 GeoJSON FeatureCollection into Features.
    Multi-part geometries become several Features sharing a source_id.
    Unsupported or degenerate geometries are skipped and counted in report.
    """
    report = report if report is not None else SkipReport()
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(f"invalid UTF-8: {e.reason}", offset=e.start)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed JSON: {e.msg}", offset=_byte_offset(text, e.pos))

    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise ParseError("document is not a FeatureCollection", offset=0)
    items = doc.get("features")
    if not isinstance(items, list):
        raise ParseError("FeatureCollection.features must be a list", offset=0)

    features = []
    for index, item in enumerate(items):
        if not isinstance(item, dict):
            report.add("not-a-feature")
            continue
        source_id = item.get("id")
        source_id = str(source_id) if source_id is not None else f"feature-{index}"
        geometry = item.get("geometry")
        if not isinstance(geometry, dict):
            report.add("missing-geometry")
            continue
        tags = _tags(item.get("properties"))
        if geometry.get("type") not in GEOMETRY_TYPES:
            report.add(f"unsupported:{geometry.get('type')}")
            continue
        try:
            parts = list(_geometries(geometry))
        except (DomainError, IndexError, TypeError, ValueError):
            report.add(f"degenerate:{geometry.get('type')}")
            continue
        for part in parts:
            features.append(Feature(part, tags, source_id))

    if report.skipped:
        logger.warning("skipped features during ingest", extra={"context": report.to_dict()})
    return features


def _geometry_json(geometry):
    if isinstance(geometry, Point2):
        return {"type": "Point", "coordinates": [geometry.x, geometry.y]}
    if isinstance(geometry, LineString):
        return {"type": "LineString", "coordinates": [[p.x, p.y] for p in geometry.points]}
    rings = [geometry.exterior, *geometry.holes]
    return {"type": "Polygon", "coordinates": [[[p.x, p.y] for p in ring] for ring in rings]}


def features_to_geojson(features):
    """Deterministic FeatureCollection bytes (source_id becomes the feature id)"""
    doc = {
        "type": "FeatureCollection",
        "features": [
            {"type": "Feature", "id": f.source_id, "properties": dict(sorted(f.tags.items())),
             "geometry": _geometry_json(f.geometry)}
            for f in features
        ],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def project_feature(feature):
    """WGS84 Feature -> EPSG:3857 Feature"""
    return Feature(project_geometry(feature.geometry), feature.tags, feature.source_id)


def classified_features(features, tables=None):
    """Pair each feature with its class, dropping unclassified ones"""
    out = []
    for f in features:
        cls = classify_feature(f.tags, tables)
        if cls is not None:
            out.append((f, cls))
    return out
