# utils/pipeline_runner.py
# Pipeline Runner Module
# Runs the ingest -> rasterize -> graph -> blocks -> heights -> label -> export
# stages, each writing its artifacts plus a manifest

import hashlib
import json
import logging
import shutil
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from config.app_config import PipelineConfig
from utils.blocks import assign_buildings_to_blocks, build_blocks
from utils.buildings import HeightRaster, buildings_from_features, enrich_buildings
from utils.errors import DomainError, MissingInputError, RobusError, StageError
from utils.export import (
    dumps_canonical,
    export_opendrive,
    read_geojson_blocks,
    read_graph_json,
    read_raster,
    read_tile,
    write_geojson_buildings,
    write_graph_json,
    write_raster,
    write_tile,
)
from utils.geo_core import LineString, Polygon, geometry_bounds
from utils.labels import label_tile
from utils.metrics import orientation_entropy, traffic_convenience
from utils.osm_ingest import (
    FeatureClass,
    SkipReport,
    classified_features,
    features_to_geojson,
    load_tag_tables,
    parse_feature_collection,
    project_feature,
)
from utils.raster import (
    ROAD_P,
    compute_density,
    crop_tiles,
    filter_tiles,
    new_canvas,
    rasterize_lines,
    rasterize_polygons,
    road_mask,
    thin,
)
from utils.roadgraph import graph_stats, merge_close_nodes, reclassify_edges, simplify, skeleton_to_graph

logger = logging.getLogger(__name__)

STAGES = ("ingest", "rasterize", "graph", "blocks", "heights", "label", "export")

FEATURES = "ingest/features.geojson"
SKIP_REPORT = "ingest/skip_report.json"
REGION = "rasterize/region.rbt"
TILES_DIR = "rasterize/tiles"
GRAPH = "graph/road.graph.json"
GRAPH_STATS = "graph/stats.json"
BLOCKS = "blocks/blocks.geojson"
BUILDINGS = "heights/buildings.geojson"
HEIGHT_BLOCKS = "heights/blocks.geojson"
ASSIGNMENT = "heights/assignment.json"
LABELS_DIR = "labels"
XODR = "export/road.xodr"


def manifest_path(stage):
    return f"manifests/{stage}.json"


def sha256_bytes(data):
    return hashlib.sha256(data).hexdigest()


def tile_name(tile_id, suffix):
    col, row = tile_id
    return f"tile_{col}_{row}{suffix}"


def _label_worker(payload):
    """Process-pool entry point: (tile bytes, config dict) -> (tile_id, sidecar)"""
    tile_bytes, config_dict = payload
    tile = read_tile(tile_bytes)
    config = PipelineConfig.from_dict(config_dict)
    return tuple(tile.tile_id), label_tile(tile, config)


class PipelineRunner:
    """
    Pipeline Runner Class
    Each stage reads only its predecessors' artifacts under output_dir and
    records a manifest {stage, status, inputs, config_hash, outputs, counts}.
    """

    def __init__(self, config):
        self.config = config
        self.out = Path(config.output_dir)
        self.tables = load_tag_tables(config.tag_tables_path)
        self._outputs = {}
        self._inputs = {}

    # Bookkeeping ---------------------------------------------------------

    def path(self, relpath):
        return self.out / relpath

    def _require(self, path, label):
        path = Path(path)
        if not path.is_file():
            raise MissingInputError(f"{label} not found: {path}")
        return path

    def read_input(self, path, label=None, external=False):
        """Read a stage input and record its hash (external inputs keyed by base name)"""
        path = self._require(path, label or str(path))
        data = path.read_bytes()
        key = path.name if external else path.relative_to(self.out).as_posix()
        self._inputs[key] = sha256_bytes(data)
        return data

    def read_artifact(self, relpath):
        return self.read_input(self.path(relpath), label=f"artifact {relpath}")

    def clear(self, relpath):
        """Drop a previous run's output directory before a stage rewrites it"""
        target = self.path(relpath)
        if target.is_dir():
            logger.debug("clearing stale outputs", extra={"context": {"dir": relpath}})
            shutil.rmtree(target)

    def emit(self, relpath, data):
        target = self.path(relpath)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(data)
        self._outputs[relpath] = sha256_bytes(data)

    def _write_manifest(self, stage, status, counts, error=None):
        manifest = {
            "stage": stage,
            "status": status,
            "inputs": dict(sorted(self._inputs.items())),
            "config_hash": self.config.config_hash(),
            "outputs": dict(sorted(self._outputs.items())),
            "counts": counts,
        }
        if error is not None:
            manifest["error"] = error
        target = self.path(manifest_path(stage))
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(dumps_canonical(manifest) + b"\n")
        return manifest

    # Running -----------------------------------------------------------------

    def run_stage(self, stage):
        if stage not in STAGES:
            raise StageError(stage, f"unknown stage, expected one of {STAGES}")
        self._outputs, self._inputs = {}, {}
        logger.info("stage started", extra={"context": {"stage": stage}})
        try:
            counts = getattr(self, f"stage_{stage}")()
        except MissingInputError:
            raise
        except Exception as e:
            logger.exception("stage failed", extra={"context": {"stage": stage}})
            self._write_manifest(stage, "failed", {}, error=str(e))
            raise StageError(stage, str(e)) from e
        manifest = self._write_manifest(stage, "ok", counts)
        logger.info("stage finished", extra={"context": {"stage": stage, **counts}})
        return manifest

    def run_all(self):
        return [self.run_stage(stage) for stage in STAGES]

    # Stages ----------------------------------------------------------------------

    def _load_features(self):
        return parse_feature_collection(self.read_artifact(FEATURES))

    def _height_raster(self):
        if not self.config.height_raster_path:
            return None
        data = self.read_input(self.config.height_raster_path, "height raster", external=True)
        return HeightRaster.from_raster(read_raster(data))

    def stage_ingest(self):
        if not self.config.features_path:
            raise MissingInputError("no features_path configured")
        raw = self.read_input(self.config.features_path, "features file", external=True)
        if self.config.tag_tables_path:
            self.read_input(self.config.tag_tables_path, "tag tables", external=True)
        report = SkipReport()
        features = parse_feature_collection(raw, report)

        projected = []
        for f in features:
            try:
                projected.append(project_feature(f))
            except DomainError:
                report.add("out-of-projection-band")
        kept = classified_features(projected, self.tables)
        self.emit(FEATURES, features_to_geojson([f for f, _ in kept]))
        self.emit(SKIP_REPORT, report.to_json().encode("utf-8"))
        by_class = Counter(cls.value for _, cls in kept)
        return {"features": len(kept), "skipped": report.skipped, **dict(sorted(by_class.items()))}

    def _burn_region(self, features, buildings):
        cfg = self.config
        bounds = None
        for f, _ in features:
            b = geometry_bounds(f.geometry)
            bounds = b if bounds is None else bounds.union(b)
        if bounds is None:
            raise DomainError("no classified features to rasterize")
        canvas = new_canvas(bounds, cfg.resolution_m)

        widths = {
            FeatureClass.ROAD_P: cfg.road_width_primary_m,
            FeatureClass.ROAD_S: cfg.road_width_secondary_m,
            FeatureClass.WATER: cfg.line_width_water_m,
            FeatureClass.GREEN: cfg.line_width_green_m,
        }
        for cls, width in widths.items():
            lines = [(f.geometry, c) for f, c in features if c is cls and isinstance(f.geometry, LineString)]
            if lines:
                canvas = rasterize_lines(lines, width, canvas)

        areas = [(f.geometry, c, 1.0) for f, c in features
                 if isinstance(f.geometry, Polygon) and c is not FeatureClass.BUILDING]
        areas += [(b.footprint, FeatureClass.BUILDING, b.height) for b in buildings]
        canvas = rasterize_polygons(areas, canvas)
        return compute_density(canvas, cfg.density_window_px)

    def stage_rasterize(self):
        cfg = self.config
        features = classified_features(self._load_features(), self.tables)
        buildings = enrich_buildings(
            buildings_from_features([f for f, _ in features], self.tables),
            self._height_raster(), cfg.height_radius_m, cfg.default_height_m, cfg.neighbor_aggregate,
        )
        region = self._burn_region(features, buildings)
        self.emit(REGION, write_raster(region))

        tiles = crop_tiles(region, cfg.tile_px, cfg.stride_px)
        kept = filter_tiles(tiles, cfg.task)
        self.clear(TILES_DIR)
        for tile in kept:
            self.emit(f"{TILES_DIR}/{tile_name(tile.tile_id, '.rbt')}", write_tile(tile))
        return {
            "width_px": region.width,
            "height_px": region.height,
            "tiles": len(tiles),
            "tiles_kept": len(kept),
            "tiles_padded": sum(1 for t in tiles if t.padded),
        }

    def stage_graph(self):
        cfg = self.config
        region = read_raster(self.read_artifact(REGION))
        skeleton = thin(road_mask(region))
        graph = skeleton_to_graph(skeleton, region.transform)
        graph = reclassify_edges(graph, region.data[ROAD_P], region.transform)
        graph = simplify(merge_close_nodes(graph, cfg.merge_eps_m), cfg.c_tr)
        self.emit(GRAPH, write_graph_json(graph))

        stats = graph_stats(graph).to_dict()
        stats["orientation_entropy"] = orientation_entropy(graph, cfg.entropy_bins) if graph.edge_count else None
        try:
            stats["traffic_convenience"] = traffic_convenience(
                graph, cfg.convenience_min_dist_m, cfg.convenience_unreachable)
        except RobusError:
            stats["traffic_convenience"] = None
        self.emit(GRAPH_STATS, dumps_canonical(stats))
        return {"nodes": graph.node_count, "edges": graph.edge_count, "skeleton_px": int(skeleton.sum())}

    def stage_blocks(self):
        graph = read_graph_json(self.read_artifact(GRAPH))
        blocks = build_blocks(graph, self.config.cycle_cutoff, self.config.strict_faces)
        self.emit(BLOCKS, write_geojson_buildings(blocks))
        return {"blocks": len(blocks), "invalid_blocks": sum(1 for b in blocks if not b.valid)}

    def stage_heights(self):
        cfg = self.config
        features = self._load_features()
        blocks_bytes = self.read_artifact(BLOCKS)
        buildings = enrich_buildings(
            buildings_from_features(features, self.tables),
            self._height_raster(), cfg.height_radius_m, cfg.default_height_m, cfg.neighbor_aggregate,
        )
        assignment = assign_buildings_to_blocks(buildings, read_geojson_blocks(blocks_bytes))

        self.emit(BUILDINGS, write_geojson_buildings(buildings))
        self.emit(HEIGHT_BLOCKS, write_geojson_buildings(assignment.blocks))
        by_building = {b.id: None for b in buildings}
        by_building.update(assignment.building_to_block())
        self.emit(ASSIGNMENT, dumps_canonical({"by_building": by_building, "unbounded": assignment.unbounded}))

        sources = Counter(b.height_source.value for b in buildings)
        return {"buildings": len(buildings), "unbounded": len(assignment.unbounded), **dict(sorted(sources.items()))}

    def _rasterized_tiles(self):
        """Tile artifacts listed by the last rasterize manifest"""
        manifest = json.loads(self.read_artifact(manifest_path("rasterize")))
        if manifest.get("status") != "ok":
            raise MissingInputError("rasterize stage did not finish; rerun it before labelling")
        return sorted(relpath for relpath in manifest["outputs"] if relpath.startswith(f"{TILES_DIR}/"))

    def stage_label(self):
        config_dict = self.config.to_dict()
        payloads = [(self.read_artifact(relpath), config_dict) for relpath in self._rasterized_tiles()]
        self.clear(LABELS_DIR)

        workers = min(self.config.effective_workers(), max(len(payloads), 1))
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_label_worker, payloads))
        else:
            results = [_label_worker(p) for p in payloads]

        tally = Counter()
        for tile_id, sidecar in sorted(results, key=lambda r: r[0]):
            self.emit(f"{LABELS_DIR}/{tile_name(tile_id, '.json')}", dumps_canonical(sidecar))
            tally.update(f"{k}:{v}" for k, v in sidecar["labels"].items())
        return {"labelled": len(results), **dict(sorted(tally.items()))}

    def stage_export(self):
        graph = read_graph_json(self.read_artifact(GRAPH))
        self.emit(XODR, export_opendrive(graph))
        return {"roads": graph.edge_count}


def run_pipeline(config, stages=STAGES):
    """Run the named stages in order with one runner"""
    runner = PipelineRunner(config)
    return [runner.run_stage(stage) for stage in stages]
