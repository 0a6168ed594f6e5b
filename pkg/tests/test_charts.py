# tests/test_charts.py

import numpy as np
import pandas as pd

from components.charts import bearing_rose, channel_heatmap, height_histogram, label_bar_chart, road_graph_figure
from utils.buildings import Building, HeightSource
from utils.geo_core import AffineTransform, Polygon
from utils.osm_ingest import FeatureClass
from utils.raster import CHANNEL_NAMES, RegionRaster
from utils.roadgraph import RoadGraph


def test_channel_heatmap_by_name():
    raster = RegionRaster(np.zeros((len(CHANNEL_NAMES), 8, 12), dtype=np.float32),
                          AffineTransform.from_origin(0.0, 40.0, 5.0))
    fig = channel_heatmap(raster, "Water")
    assert fig.data[0].z.shape == (8, 12)
    assert "Water" in fig.layout.title.text


def test_road_graph_traces_per_class(grid_graph):
    g = RoadGraph.from_points({0: (0, 0), 1: (10, 0), 2: (10, 10)},
                              [(0, 1, FeatureClass.ROAD_P), (1, 2, FeatureClass.ROAD_S)])
    names = [trace.name for trace in road_graph_figure(g).data]
    assert names == ["RoadP", "RoadS", "Nodes"]
    assert [t.name for t in road_graph_figure(grid_graph).data] == ["RoadS", "Nodes"]


def test_bearing_rose_shares(grid_graph):
    fig = bearing_rose(grid_graph)
    r = np.asarray(fig.data[0].r)
    assert len(r) == 36
    assert r.sum() == 1.0
    assert r[0] == r[9] == r[18] == r[27] == 0.25


def test_label_bar_chart():
    df = pd.DataFrame({"Label": ["Dense", "Sparse"], "Tiles": [7, 2]})
    assert len(label_bar_chart(df).data) == 2


def test_height_histogram_sources():
    square = Polygon.from_coords([(0, 0), (10, 0), (10, 10), (0, 10)])
    buildings = [Building("a", square, 12.0, HeightSource.RASTER), Building("b", square, 24.0, HeightSource.DEFAULT),
                 Building("c", square)]
    fig = height_histogram(buildings)
    assert {trace.name for trace in fig.data} == {"Raster", "Default"}
