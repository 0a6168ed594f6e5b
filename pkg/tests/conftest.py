# tests/conftest.py
# Shared fixtures: seeded RNG, small road graphs and the synthetic city on disk

import numpy as np
import pytest

from config.app_config import PipelineConfig
from utils.osm_ingest import FeatureClass
from utils.roadgraph import RoadGraph
from utils.synthetic_city import write_synthetic_city


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def make_grid_graph(n=3, spacing=400.0, road_class=FeatureClass.ROAD_S):
    """n x n lattice, node id = row * n + col, straight edges between lattice neighbours"""
    points = {r * n + c: (c * spacing, r * spacing) for r in range(n) for c in range(n)}
    edges = []
    for r in range(n):
        for c in range(n):
            if c + 1 < n:
                edges.append((r * n + c, r * n + c + 1))
            if r + 1 < n:
                edges.append((r * n + c, (r + 1) * n + c))
    return RoadGraph.from_points(points, edges, road_class)


@pytest.fixture
def grid_graph():
    return make_grid_graph()


@pytest.fixture(scope="session")
def synthetic_city(tmp_path_factory):
    """Config path of the synthetic city written once per session"""
    return write_synthetic_city(tmp_path_factory.mktemp("city"), workers=1)


@pytest.fixture(scope="session")
def city_run(synthetic_city):
    """Synthetic city after a full pipeline run; returns (config, output dir)"""
    from utils.pipeline_runner import run_pipeline

    config = PipelineConfig.from_file(synthetic_city)
    run_pipeline(config)
    return config, config.output_dir
