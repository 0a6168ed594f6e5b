# tests/test_pipeline.py
# End-to-end runs over the synthetic city

import json
import shutil
from pathlib import Path

import pytest
from lxml import etree

from config.app_config import PipelineConfig
from utils.buildings import DEFAULT_HEIGHT_M, HeightSource
from utils.errors import MissingInputError, StageError
from utils.export import read_geojson_blocks, read_geojson_buildings, read_graph_json, read_tile
from utils.geo_core import CrsCode, LineString, Polygon
from utils.osm_ingest import Feature, FeatureClass
from utils.pipeline_runner import (
    BUILDINGS,
    GRAPH,
    HEIGHT_BLOCKS,
    LABELS_DIR,
    SKIP_REPORT,
    STAGES,
    TILES_DIR,
    XODR,
    PipelineRunner,
    manifest_path,
    run_pipeline,
)
from utils.raster import GREEN, WATER
from utils.synthetic_city import building_cells


def artifact_bytes(out_dir):
    out = Path(out_dir)
    return {p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}


def rbt_header(data):
    header_len = int.from_bytes(data[6:10], "little")
    return json.loads(data[10:10 + header_len])


class TestSyntheticCity:
    def test_every_stage_ok(self, city_run):
        _, out = city_run
        for stage in STAGES:
            manifest = json.loads((Path(out) / "manifests" / f"{stage}.json").read_text(encoding="utf-8"))
            assert manifest["stage"] == stage and manifest["status"] == "ok"
            assert len(manifest["config_hash"]) == 64

    def test_skip_report(self, city_run):
        _, out = city_run
        report = json.loads((Path(out) / SKIP_REPORT).read_text(encoding="utf-8"))
        assert report["skipped"] == 1

    def test_nine_georeferenced_tiles(self, city_run):
        _, out = city_run
        paths = sorted((Path(out) / TILES_DIR).glob("tile_*.rbt"))
        assert len(paths) == 9
        for path in paths:
            data = path.read_bytes()
            header = rbt_header(data)
            assert header["epsg"] == 3857
            assert header["channel_names"] == ["RoadP", "RoadS", "Water", "Green", "Density", "BuildingHeight"]
            tile = read_tile(data)
            assert abs(tile.transform.a) == abs(tile.transform.e) == 5.0
            assert tile.crs is CrsCode.WEB_MERCATOR
            assert tile.data.shape == (6, 256, 256)

    def test_grid_labels(self, city_run):
        _, out = city_run
        paths = sorted((Path(out) / LABELS_DIR).glob("*.json"))
        sidecars = [json.loads(p.read_text(encoding="utf-8")) for p in paths]
        assert len(sidecars) == 9
        for sidecar in sidecars:
            assert sidecar["text"].startswith("OSM,")
            assert sidecar["labels"]["road_density"] == "Dense"
            assert sidecar["labels"]["orientation"] == "Ordered"

    def test_road_graph(self, city_run):
        _, out = city_run
        graph = read_graph_json((Path(out) / GRAPH).read_bytes())
        assert graph.node_count > 100
        xodr = etree.fromstring((Path(out) / XODR).read_bytes())
        assert xodr.tag == "OpenDRIVE"
        assert len(xodr.findall("road")) == graph.edge_count

    def test_blocks(self, city_run):
        _, out = city_run
        blocks = read_geojson_blocks((Path(out) / HEIGHT_BLOCKS).read_bytes())
        assert len(blocks) >= 4
        assert sum(len(b.buildings) for b in blocks) > 0

    def test_every_building_has_a_height(self, city_run):
        _, out = city_run
        buildings = read_geojson_buildings((Path(out) / BUILDINGS).read_bytes())
        assert len(buildings) == len(building_cells()) + 1
        assert all(b.height > 0 and b.height_source is not None for b in buildings)
        by_id = {b.id: b for b in buildings}
        isolated = by_id["building/isolated"]
        assert isolated.height == DEFAULT_HEIGHT_M and isolated.height_source is HeightSource.DEFAULT
        raster = [b for b in buildings if b.height_source is HeightSource.RASTER]
        assert raster and all(12.0 <= b.height <= 36.0 for b in raster)

    def test_rerun_is_byte_identical(self, city_run, synthetic_city, tmp_path):
        _, out = city_run
        config = PipelineConfig.from_file(synthetic_city, [f"output_dir={tmp_path / 'again'}", "workers=2"])
        run_pipeline(config)
        assert artifact_bytes(tmp_path / "again") == artifact_bytes(out)

    def test_retiling_replaces_stale_tiles_and_labels(self, city_run, synthetic_city, tmp_path):
        _, out = city_run
        target = tmp_path / "run"
        shutil.copytree(out, target)
        config = PipelineConfig.from_file(
            synthetic_city, [f"output_dir={target}", "tile_px=512", "stride_px=400", "workers=1"])
        run_pipeline(config, stages=("rasterize", "label"))

        manifest = json.loads((target / manifest_path("rasterize")).read_text(encoding="utf-8"))
        listed = sorted(p for p in manifest["outputs"] if p.startswith(f"{TILES_DIR}/"))
        on_disk = sorted(p.relative_to(target).as_posix() for p in (target / TILES_DIR).glob("*.rbt"))
        labels = sorted(p.name for p in (target / LABELS_DIR).glob("*.json"))
        assert manifest["counts"]["tiles_kept"] == 4
        assert on_disk == listed and len(on_disk) == 4
        assert labels == sorted(Path(p).with_suffix(".json").name for p in listed)
        assert all(read_tile((target / p).read_bytes()).data.shape == (6, 512, 512) for p in listed)


class TestBurnWidths:
    def _burn(self, tmp_path, **overrides):
        line = LineString.from_coords([(0.0, 100.0), (500.0, 100.0)])
        frame = Polygon.from_coords([(-100.0, 0.0), (600.0, 0.0), (600.0, 200.0), (-100.0, 200.0)])
        features = [
            (Feature(line, {"natural": "tree_row"}, "green"), FeatureClass.GREEN),
            (Feature(line, {"waterway": "stream"}, "water"), FeatureClass.WATER),
            (Feature(frame, {"building": "yes"}, "frame"), FeatureClass.BUILDING),
        ]
        runner = PipelineRunner(PipelineConfig(output_dir=str(tmp_path), **overrides))
        region = runner._burn_region(features, [])
        return int(region.data[GREEN].sum()), int(region.data[WATER].sum())

    def test_green_lines_share_water_width_by_default(self, tmp_path):
        green, water = self._burn(tmp_path)
        assert green == water > 0

    def test_green_lines_use_their_own_width(self, tmp_path):
        green, water = self._burn(tmp_path, line_width_green_m=30.0, line_width_water_m=10.0)
        assert green > 2 * water


class TestFailures:
    def test_missing_features(self, tmp_path):
        config = PipelineConfig(features_path=str(tmp_path / "absent.geojson"), output_dir=str(tmp_path / "out"))
        with pytest.raises(MissingInputError):
            PipelineRunner(config).run_stage("ingest")

    def test_missing_predecessor(self, tmp_path):
        config = PipelineConfig(output_dir=str(tmp_path / "out"))
        for stage in ("rasterize", "graph", "blocks", "heights", "label", "export"):
            with pytest.raises(MissingInputError):
                PipelineRunner(config).run_stage(stage)

    def test_failed_stage_writes_manifest(self, tmp_path):
        bad = tmp_path / "bad.geojson"
        bad.write_text('{"type": "FeatureCollection", "features": [', encoding="utf-8")
        config = PipelineConfig(features_path=str(bad), output_dir=str(tmp_path / "out"))
        with pytest.raises(StageError) as info:
            PipelineRunner(config).run_stage("ingest")
        assert info.value.stage == "ingest"
        manifest = json.loads((tmp_path / "out" / "manifests" / "ingest.json").read_text(encoding="utf-8"))
        assert manifest["status"] == "failed" and "byte offset" in manifest["error"]

    def test_unknown_stage(self, tmp_path):
        with pytest.raises(StageError):
            PipelineRunner(PipelineConfig(output_dir=str(tmp_path))).run_stage("paint")
