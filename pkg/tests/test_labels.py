# tests/test_labels.py

import itertools

import numpy as np
import pytest

from config.app_config import PipelineConfig, Thresholds
from utils.geo_core import AffineTransform
from utils.labels import (
    BuildingDensity,
    BuildingHeight,
    Orientation,
    RoadDensity,
    TileLabels,
    TileStats,
    classify_tile,
    label_tile,
    render_text,
    tile_stats,
)
from utils.raster import BUILDING_HEIGHT, CHANNEL_NAMES, ROAD_S, RegionRaster, crop_tiles


def stats(road_len_km=0.0, entropy_nats=0.0, built_fraction=0.0, mean_height_m=0.0):
    return TileStats(road_len_km, entropy_nats, built_fraction, mean_height_m)


def blank_tile():
    data = np.zeros((len(CHANNEL_NAMES), 256, 256), dtype=np.float32)
    (tile,) = crop_tiles(RegionRaster(data, AffineTransform.from_origin(0.0, 1280.0, 5.0)))
    return tile


def grid_tile():
    tile = blank_tile()
    for k in range(16, 256, 40):
        tile.data[ROAD_S, k - 1:k + 2, :] = 1.0
        tile.data[ROAD_S, :, k - 1:k + 2] = 1.0
    tile.data[BUILDING_HEIGHT, :52, :] = 20.0
    return tile


class TestClassify:
    @pytest.mark.parametrize("length, expected", [(8.64, RoadDensity.SPARSE), (8.65, RoadDensity.DENSE),
                                                  (0.0, RoadDensity.SPARSE)])
    def test_road_density(self, length, expected):
        assert classify_tile(stats(road_len_km=length)).road_density is expected

    @pytest.mark.parametrize("entropy, expected", [(1.99, Orientation.ORDERED), (2.0, Orientation.DISORDERED)])
    def test_orientation(self, entropy, expected):
        assert classify_tile(stats(entropy_nats=entropy)).orientation is expected

    @pytest.mark.parametrize("fraction, expected", [
        (0.0, BuildingDensity.SPARSE), (0.0999, BuildingDensity.SPARSE), (0.1, BuildingDensity.MEDIUM),
        (0.2999, BuildingDensity.MEDIUM), (0.3, BuildingDensity.DENSE), (1.0, BuildingDensity.DENSE),
    ])
    def test_building_density(self, fraction, expected):
        assert classify_tile(stats(built_fraction=fraction)).building_density is expected

    @pytest.mark.parametrize("height, expected", [
        (11.9, BuildingHeight.LOW_RISE), (12.0, BuildingHeight.MID_RISE), (29.9, BuildingHeight.MID_RISE),
        (30.0, BuildingHeight.HIGH_RISE),
    ])
    def test_building_height(self, height, expected):
        assert classify_tile(stats(mean_height_m=height)).building_height is expected

    def test_custom_thresholds(self):
        labels = classify_tile(stats(road_len_km=5.0), Thresholds(road_len_km=4.0))
        assert labels.road_density is RoadDensity.DENSE

    def test_denser_tiles_never_rank_lower(self, rng):
        order = [BuildingDensity.SPARSE, BuildingDensity.MEDIUM, BuildingDensity.DENSE]
        fractions = np.sort(np.concatenate((rng.uniform(0, 1, 200), [0.1, 0.3])))
        ranks = [order.index(classify_tile(stats(built_fraction=float(f))).building_density) for f in fractions]
        assert ranks == sorted(ranks)
        assert ranks[0] == 0 and ranks[-1] == 2
        lengths = np.sort(rng.uniform(0, 20, 200))
        dense = [classify_tile(stats(road_len_km=float(x))).road_density is RoadDensity.DENSE for x in lengths]
        assert dense == sorted(dense)


class TestText:
    def test_full_sentence(self):
        labels = TileLabels(RoadDensity.DENSE, Orientation.ORDERED, BuildingDensity.MEDIUM, BuildingHeight.HIGH_RISE)
        assert render_text(labels) == ("OSM, a city tile with dense roads in a grid-like pattern, "
                                       "medium high-rise buildings.")

    def test_irregular(self):
        labels = TileLabels(RoadDensity.SPARSE, Orientation.DISORDERED, BuildingDensity.SPARSE,
                            BuildingHeight.LOW_RISE)
        text = render_text(labels)
        assert text.startswith("OSM,")
        assert "an irregular pattern" in text


    def test_every_label_combination_reads_differently(self):
        combos = list(itertools.product(RoadDensity, Orientation, BuildingDensity, BuildingHeight))
        texts = {render_text(TileLabels(*combo)) for combo in combos}
        assert len(combos) == 36
        assert len(texts) == 36

class TestTileStats:
    def test_empty_tile(self):
        s = tile_stats(blank_tile(), PipelineConfig())
        assert s.road_len_km == 0.0 and s.entropy_nats == 0.0
        assert s.built_fraction == 0.0 and s.mean_height_m == 0.0
        assert s.traffic_convenience is None

    def test_grid_tile_record(self):
        record = label_tile(grid_tile(), PipelineConfig())
        assert record["tile_id"] == [0, 0]
        assert record["labels"] == {"road_density": "Dense", "orientation": "Ordered",
                                    "building_density": "Medium", "building_height": "MidRise"}
        assert record["text"] == ("OSM, a city tile with dense roads in a grid-like pattern, "
                                  "medium mid-rise buildings.")
        assert record["stats"]["road_len_km"] > 8.64
        assert record["stats"]["built_fraction"] == pytest.approx(52 / 256)
        assert record["stats"]["mean_height_m"] == 20.0
