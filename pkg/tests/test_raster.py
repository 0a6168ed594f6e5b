# tests/test_raster.py

import numpy as np
import pytest
from scipy import ndimage

from utils.geo_core import AffineTransform, Bounds, LineString, Polygon
from utils.osm_ingest import FeatureClass
from utils.raster import (
    BUILDING_HEIGHT,
    CHANNEL_NAMES,
    DENSITY,
    ROAD_P,
    ROAD_S,
    WATER,
    RegionRaster,
    compute_density,
    crop_tiles,
    filter_tiles,
    new_canvas,
    rasterize_lines,
    rasterize_polygons,
    road_mask,
    thin,
    tile_offsets,
)

EIGHT = np.ones((3, 3), dtype=int)


def blank_region(width, height, res=5.0):
    data = np.zeros((len(CHANNEL_NAMES), height, width), dtype=np.float32)
    return RegionRaster(data, AffineTransform.from_origin(0.0, height * res, res))


def square(x0, y0, size):
    return Polygon.from_coords([(x0, y0), (x0 + size, y0), (x0 + size, y0 + size), (x0, y0 + size)])


def components(mask):
    return ndimage.label(mask, structure=EIGHT)[1]


def holes(mask):
    background = np.pad(mask == 0, 1, constant_values=True)
    return ndimage.label(background)[1] - 1


class TestCanvas:
    def test_snapped_to_resolution(self):
        canvas = new_canvas(Bounds(1, 2, 11, 12), 5.0)
        assert (canvas.width, canvas.height) == (3, 3)
        assert canvas.transform == AffineTransform(5.0, 0.0, 0.0, 0.0, -5.0, 15.0)
        assert canvas.resolution == 5.0
        assert not canvas.data.any()


class TestLines:
    def test_empty_list_leaves_canvas(self):
        canvas = new_canvas(Bounds(0, 0, 200, 100))
        assert rasterize_lines([], 10.0, canvas) == canvas

    def test_horizontal_segment_band(self):
        canvas = new_canvas(Bounds(0, 0, 200, 100))
        line = LineString.from_coords([(50, 50), (150, 50)])
        out = rasterize_lines([(line, FeatureClass.ROAD_S)], 10.0, canvas)
        rows, cols = np.nonzero(out.data[ROAD_S])
        assert set(rows.tolist()) == {9, 10}
        assert cols.min() == 9 and cols.max() == 30
        assert out.data[ROAD_S, 10, 10:30].all()
        assert out.data[ROAD_S].sum() == 44
        assert not out.data[ROAD_P].any()

    def test_burning_twice_is_idempotent(self):
        canvas = new_canvas(Bounds(0, 0, 300, 300))
        lines = [(LineString.from_coords([(10, 20), (280, 250), (30, 290)]), FeatureClass.ROAD_P)]
        once = rasterize_lines(lines, 15.0, canvas)
        assert rasterize_lines(lines, 15.0, once) == once

    def test_outside_features_are_clipped(self):
        canvas = new_canvas(Bounds(0, 0, 100, 100))
        line = LineString.from_coords([(-500, 50), (-400, 50)])
        out = rasterize_lines([(line, FeatureClass.WATER)], 10.0, canvas)
        assert not out.data[WATER].any()

    def test_thin_stroke_stays_connected(self):
        canvas = new_canvas(Bounds(0, 0, 200, 200))
        line = LineString.from_coords([(2.5, 2.5), (197.5, 152.5)])
        out = rasterize_lines([(line, FeatureClass.ROAD_S)], 1.0, canvas)
        assert components(out.data[ROAD_S] > 0) == 1


class TestPolygons:
    def test_building_block(self):
        canvas = new_canvas(Bounds(0, 0, 200, 100))
        out = rasterize_polygons([(square(50, 20, 50), FeatureClass.BUILDING, 24.0)], canvas)
        plane = out.data[BUILDING_HEIGHT]
        rows, cols = np.nonzero(plane)
        assert len(rows) == 100
        assert rows.max() - rows.min() == 9 and cols.max() - cols.min() == 9
        assert np.all(plane[rows, cols] == 24.0)

    def test_overlap_keeps_max(self):
        canvas = new_canvas(Bounds(0, 0, 100, 100))
        out = rasterize_polygons([
            (square(0, 0, 50), FeatureClass.BUILDING, 10.0),
            (square(25, 25, 50), FeatureClass.BUILDING, 30.0),
            (square(10, 10, 20), FeatureClass.BUILDING, 5.0),
        ], canvas)
        plane = out.data[BUILDING_HEIGHT]
        assert plane.max() == 30.0
        # pixel centered at (37.5, 37.5) lies in both large squares
        assert plane[12, 7] == 30.0
        assert plane[17, 2] == 10.0

    def test_small_polygon_burns_centroid_pixel(self):
        canvas = new_canvas(Bounds(0, 0, 50, 50))
        out = rasterize_polygons([(square(21, 31, 1), FeatureClass.BUILDING, 7.0)], canvas)
        plane = out.data[BUILDING_HEIGHT]
        assert np.count_nonzero(plane) == 1
        assert plane[3, 4] == 7.0


class TestDensity:
    def test_empty_plane(self):
        out = compute_density(new_canvas(Bounds(0, 0, 505, 505)))
        assert not out.data[DENSITY].any()

    def test_full_plane(self):
        canvas = new_canvas(Bounds(0, 0, 505, 505))
        canvas.data[BUILDING_HEIGHT] = 12.0
        assert np.all(compute_density(canvas).data[DENSITY] == 1.0)

    def test_single_pixel(self):
        canvas = new_canvas(Bounds(0, 0, 505, 505))
        canvas.data[BUILDING_HEIGHT, 50, 50] = 20.0
        out = compute_density(canvas, 65)
        assert out.data[DENSITY, 50, 50] == pytest.approx(1 / 4225)

    def test_matches_brute_force(self, rng):
        canvas = new_canvas(Bounds(0, 0, 150, 120))
        canvas.data[BUILDING_HEIGHT] = (rng.random((canvas.height, canvas.width)) > 0.7) * 15.0
        window = 7
        out = compute_density(canvas, window).data[DENSITY]
        built = canvas.data[BUILDING_HEIGHT] > 0
        h, w = built.shape
        for r in range(0, h, 5):
            for c in range(0, w, 4):
                box = built[max(r - 3, 0):r + 4, max(c - 3, 0):c + 4]
                assert out[r, c] == pytest.approx(box.mean(), abs=1e-6)
        assert 0.0 <= out.min() and out.max() <= 1.0

    def test_even_window_rejected(self):
        with pytest.raises(ValueError):
            compute_density(new_canvas(Bounds(0, 0, 50, 50)), 64)


class TestTiling:
    @pytest.mark.parametrize("size, offsets", [(256, [0]), (460, [0, 204]), (500, [0, 204, 244]), (100, [0])])
    def test_offsets(self, size, offsets):
        assert tile_offsets(size) == offsets

    def test_single_tile(self):
        tiles = crop_tiles(blank_region(256, 256))
        assert len(tiles) == 1 and not tiles[0].padded

    def test_two_tiles(self):
        tiles = crop_tiles(blank_region(460, 256))
        assert [t.tile_id for t in tiles] == [(0, 0), (1, 0)]
        assert tiles[1].transform.c == 204 * 5.0

    def test_flush_edge_nine_tiles(self, rng):
        region = blank_region(500, 500)
        region.data[:] = rng.random(region.data.shape)
        tiles = crop_tiles(region)
        assert len(tiles) == 9
        covered = np.zeros((500, 500), dtype=int)
        offsets = [0, 204, 244]
        for tile in tiles:
            col0, row0 = offsets[tile.tile_id[0]], offsets[tile.tile_id[1]]
            assert tile.data.shape == (6, 256, 256)
            assert np.array_equal(tile.data, region.data[:, row0:row0 + 256, col0:col0 + 256])
            assert tile.transform.pixel_to_world(0, 0) == region.transform.pixel_to_world(col0, row0)
            assert abs(tile.transform.a) == abs(tile.transform.e) == 5.0
            covered[row0:row0 + 256, col0:col0 + 256] += 1
        assert covered.min() >= 1
        assert covered[210:250, 210:250].min() >= 2

    def test_small_region_is_padded(self):
        region = blank_region(100, 300)
        region.data[ROAD_S] = 1.0
        tiles = crop_tiles(region)
        assert len(tiles) == 2
        assert all(t.padded for t in tiles)
        assert tiles[0].data[ROAD_S, :, :100].all()
        assert not tiles[0].data[ROAD_S, :, 100:].any()


class TestFilter:
    def _tiles(self):
        tiles = crop_tiles(blank_region(460, 256))
        empty, roads_only = tiles
        roads_only.data[ROAD_P, 5, 5] = 1.0
        both = roads_only.copy()
        both.data[BUILDING_HEIGHT, 9, 9] = 18.0
        return empty, roads_only, both

    def test_road_gen(self):
        empty, roads_only, both = self._tiles()
        assert filter_tiles([empty, roads_only, both], "road_gen") == [roads_only, both]

    def test_building_gen(self):
        empty, roads_only, both = self._tiles()
        assert filter_tiles([empty, roads_only, both], "building_gen") == [both]

    def test_all(self):
        tiles = list(self._tiles())
        assert filter_tiles(tiles, "all") == tiles

    def test_road_mask_combines_both_classes(self):
        region = blank_region(4, 4)
        region.data[ROAD_P, 0, 0] = 1.0
        region.data[ROAD_S, 3, 3] = 1.0
        assert road_mask(region).sum() == 2


class TestThin:
    def test_empty(self):
        assert not thin(np.zeros((10, 10), dtype=np.uint8)).any()

    def test_bar_becomes_path(self):
        mask = np.zeros((9, 50), dtype=np.uint8)
        mask[3:6, 5:45] = 1
        skeleton = thin(mask)
        assert np.all(skeleton <= mask)
        assert components(skeleton) == 1
        assert (skeleton.sum(axis=0) <= 1).all()
        counts = ndimage.convolve(skeleton.astype(int), EIGHT, mode="constant") - skeleton
        degrees = counts[skeleton > 0]
        assert (degrees == 1).sum() == 2
        assert (degrees <= 2).all()

    def test_solid_block(self):
        mask = np.zeros((15, 15), dtype=np.uint8)
        mask[3:12, 3:12] = 1
        skeleton = thin(mask)
        assert 1 <= skeleton.sum() <= 9
        assert components(skeleton) == 1

    def test_ring_keeps_hole(self):
        mask = np.zeros((20, 20), dtype=np.uint8)
        mask[3:17, 3:17] = 1
        mask[7:13, 7:13] = 0
        skeleton = thin(mask)
        assert holes(skeleton) == 1
        assert components(skeleton) == 1

    def test_topology_on_random_blobs(self, rng):
        for _ in range(50):
            noise = ndimage.uniform_filter(rng.random((40, 40)), size=5)
            mask = (noise > np.quantile(noise, 0.55)).astype(np.uint8)
            skeleton = thin(mask)
            assert np.all(skeleton <= mask)
            assert components(skeleton) == components(mask)
            assert holes(skeleton) == holes(mask)
