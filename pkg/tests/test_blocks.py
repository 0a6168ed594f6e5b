# tests/test_blocks.py

import numpy as np
import pytest
from shapely.geometry import LineString as ShapelyLine
from shapely.geometry import Polygon as ShapelyPolygon
from shapely.ops import polygonize

from tests.conftest import make_grid_graph
from utils.blocks import (
    Block,
    Cycle,
    assign_buildings_to_blocks,
    build_blocks,
    cycle_to_polygon,
    find_geometric_minimal_cycles,
    trace_faces,
)
from utils.buildings import Building
from utils.errors import DomainError
from utils.geo_core import Polygon, polygon_area
from utils.roadgraph import RoadGraph


def square(x0, y0, size):
    return Polygon.from_coords([(x0, y0), (x0 + size, y0), (x0 + size, y0 + size), (x0, y0 + size)])


def ring_graph(n, radius=500.0):
    angles = np.linspace(0, 2 * np.pi, n, endpoint=False)
    points = {i: (radius * np.cos(a), radius * np.sin(a)) for i, a in enumerate(angles)}
    return RoadGraph.from_points(points, [(i, (i + 1) % n) for i in range(n)])


def jittered_grid(rng, n=4, spacing=400.0, jitter=50.0):
    base = make_grid_graph(n, spacing)
    points = {k: (p.x + rng.uniform(-jitter, jitter), p.y + rng.uniform(-jitter, jitter))
              for k, p in base.nodes().items()}
    return RoadGraph.from_points(points, [(u, v) for u, v, _, _ in base.edges()])


def jittered_rect_grid(rng, rows, cols, spacing=400.0, jitter=50.0):
    points = {r * cols + c: (c * spacing + rng.uniform(-jitter, jitter), r * spacing + rng.uniform(-jitter, jitter))
              for r in range(rows) for c in range(cols)}
    edges = [(r * cols + c, r * cols + c + 1) for r in range(rows) for c in range(cols - 1)]
    edges += [(r * cols + c, (r + 1) * cols + c) for r in range(rows - 1) for c in range(cols)]
    return RoadGraph.from_points(points, edges)


def polygonize_faces(g):
    """Bounded faces as canonical node tuples, from shapely's polygonizer"""
    by_coord = {(p.x, p.y): n for n, p in g.nodes().items()}
    lines = [ShapelyLine(geometry.coords()) for _, _, _, geometry in g.edges()]
    return {Cycle(tuple(by_coord[xy] for xy in poly.exterior.coords[:-1])).node_ids for poly in polygonize(lines)}


def random_triangulation(rng, n):
    from scipy.spatial import Delaunay

    pts = rng.uniform(0, 1000, (n, 2))
    edges = set()
    for a, b, c in Delaunay(pts).simplices.tolist():
        edges |= {tuple(sorted(pair)) for pair in ((a, b), (b, c), (a, c))}
    return RoadGraph.from_points(dict(enumerate(map(tuple, pts.tolist()))), sorted(edges))


def sparse_planar_graph(rng, n, keep=0.6):
    """Spanning tree of a triangulation plus a random share of its other edges"""
    import networkx as nx

    full = random_triangulation(rng, n)
    nxg = full.to_networkx()
    tree = {tuple(sorted(e)) for e in nx.minimum_spanning_tree(nxg).edges()}
    extra = [(u, v) for u, v, _, _ in full.edges() if (u, v) not in tree and rng.random() < keep]
    points = {k: (p.x, p.y) for k, p in full.nodes().items()}
    return RoadGraph.from_points(points, sorted(tree | set(extra)))


def assert_no_nesting(g, cycles):
    shapes = [ShapelyPolygon([(g.point(n).x, g.point(n).y) for n in c.node_ids]) for c in cycles]
    for i, a in enumerate(shapes):
        for b in shapes[i + 1:]:
            assert a.intersection(b).area <= 1e-6 * min(a.area, b.area)


class TestCycle:
    def test_canonical_rotation_and_direction(self):
        assert Cycle((3, 0, 1)).node_ids == (0, 1, 3)
        assert Cycle((1, 0, 3)) == Cycle((0, 1, 3))
        assert Cycle((4, 7, 2, 9)).node_ids == (2, 7, 4, 9)

    def test_pairs_close_the_walk(self):
        assert Cycle((0, 1, 2)).node_pairs() == [(0, 1), (1, 2), (2, 0)]

    @pytest.mark.parametrize("ids", [(0, 1), (0, 1, 1), (2, 3, 2, 4)])
    def test_invalid(self, ids):
        with pytest.raises(DomainError):
            Cycle(ids)


class TestMinimalCycles:
    def test_two_by_two_grid(self, grid_graph):
        cycles = find_geometric_minimal_cycles(grid_graph)
        assert [c.node_ids for c in cycles] == [(0, 1, 4, 3), (1, 2, 5, 4), (3, 4, 7, 6), (4, 5, 8, 7)]

    def test_tree_has_no_cycles(self):
        g = RoadGraph.from_points({0: (0, 0), 1: (1, 0), 2: (2, 1), 3: (1, 5)}, [(0, 1), (1, 2), (1, 3)])
        assert find_geometric_minimal_cycles(g) == []

    def test_triangle_with_tail(self):
        g = RoadGraph.from_points({0: (0, 0), 1: (10, 0), 2: (5, 8), 3: (5, 30)}, [(0, 1), (1, 2), (2, 0), (2, 3)])
        assert [c.node_ids for c in find_geometric_minimal_cycles(g)] == [(0, 1, 2)]

    def test_bowtie_gives_two_triangles(self):
        g = RoadGraph.from_points({0: (0, 0), 1: (-10, 5), 2: (-10, -5), 3: (10, 5), 4: (10, -5)},
                                  [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)])
        assert {c.node_ids for c in find_geometric_minimal_cycles(g)} == {(0, 1, 2), (0, 3, 4)}

    def test_cutoff_limits_cycle_length(self):
        g = ring_graph(20)
        assert find_geometric_minimal_cycles(g, cutoff=12) == []
        (cycle,) = find_geometric_minimal_cycles(g, cutoff=20)
        assert cycle.length_edges == 20

    def test_matches_faces_on_jittered_grid(self, rng):
        for _ in range(5):
            g = jittered_grid(rng)
            gmc = {c.node_ids for c in find_geometric_minimal_cycles(g)}
            faces = {c.node_ids for c in trace_faces(g)}
            assert len(gmc) == 9
            assert gmc == faces

    def test_area_matches_polygonize(self, rng):
        g = jittered_grid(rng)
        lines = [ShapelyLine(geometry.coords()) for _, _, _, geometry in g.edges()]
        oracle = sorted(p.area for p in polygonize(lines))
        blocks = build_blocks(g)
        assert sorted(b.area for b in blocks) == pytest.approx(oracle, rel=1e-9)

    def test_random_grids_match_polygonize_faces(self, rng):
        for _ in range(100):
            rows, cols = rng.integers(2, 6, 2).tolist()
            g = jittered_rect_grid(rng, rows, cols)
            gmc = {c.node_ids for c in find_geometric_minimal_cycles(g)}
            assert gmc == polygonize_faces(g)
            assert len(gmc) == (rows - 1) * (cols - 1)

    def test_random_triangulations_match_face_oracle(self, rng):
        mismatched = 0
        for _ in range(100):
            g = random_triangulation(rng, int(rng.integers(4, 13)))
            cycles = find_geometric_minimal_cycles(g)
            if {c.node_ids for c in cycles} != polygonize_faces(g):
                mismatched += 1
            assert_no_nesting(g, cycles)
        assert mismatched / 100 < 0.05

    def test_sparse_planar_graphs_match_face_oracle(self, rng):
        mismatched = 0
        for _ in range(150):
            g = sparse_planar_graph(rng, int(rng.integers(4, 13)))
            cycles = find_geometric_minimal_cycles(g)
            if {c.node_ids for c in cycles} != {c.node_ids for c in trace_faces(g)}:
                mismatched += 1
            assert len({c.node_ids for c in cycles}) == len(cycles)
            for cycle in cycles:
                assert all(g.has_edge(u, v) for u, v in cycle.node_pairs())
            assert_no_nesting(g, cycles)
        assert mismatched / 150 < 0.05

    def test_interior_degree_two_vertex_keeps_both_faces(self):
        # node 0 splits the shared wall of two squares; it is swept first and must wait
        g = RoadGraph.from_points(
            {0: (100, 50), 1: (0, 0), 2: (100, 0), 3: (200, 0), 4: (0, 100), 5: (100, 100), 6: (200, 100)},
            [(1, 2), (2, 3), (1, 4), (4, 5), (5, 6), (3, 6), (0, 2), (0, 5)],
        )
        cycles = find_geometric_minimal_cycles(g)
        assert {c.node_ids for c in cycles} == {(0, 2, 1, 4, 5), (0, 2, 3, 6, 5)}
        assert len(cycles) == 2


class TestFaces:
    def test_outer_face_dropped(self, grid_graph):
        assert len(trace_faces(grid_graph)) == 4

    def test_strict_flag_uses_faces(self, grid_graph):
        assert [b.cycle for b in build_blocks(grid_graph, strict=True)] == trace_faces(grid_graph)


class TestPolygons:
    def test_grid_cell(self, grid_graph):
        polygon, valid = cycle_to_polygon(Cycle((0, 1, 4, 3)), grid_graph)
        assert valid
        assert polygon_area(polygon) == pytest.approx(160000.0)

    def test_crossed_boundary_is_invalid(self):
        g = RoadGraph.from_points({0: (0, 0), 1: (10, 10), 2: (10, 0), 3: (0, 10)}, [(0, 1), (1, 2), (2, 3), (3, 0)])
        _, valid = cycle_to_polygon(Cycle((0, 1, 2, 3)), g)
        assert not valid

    def test_blocks_are_numbered_in_order(self, grid_graph):
        blocks = build_blocks(grid_graph)
        assert [b.block_id for b in blocks] == [0, 1, 2, 3]
        assert all(b.valid for b in blocks)


class TestAssignment:
    def _blocks(self):
        return [Block(0, square(0, 0, 100)), Block(1, square(10, 10, 20)), Block(2, square(10, 10, 20))]

    def test_smallest_area_then_lowest_id(self):
        buildings = [Building("a", square(15, 15, 5)), Building("b", square(60, 60, 10)), Building("c", square(900, 900, 10))]
        result = assign_buildings_to_blocks(buildings, self._blocks())
        assert result.building_to_block() == {"a": 1, "b": 0}
        assert result.unbounded == ["c"]
        assert result.blocks[2].buildings == ()

    def test_no_buildings(self):
        result = assign_buildings_to_blocks([], self._blocks())
        assert all(b.buildings == () for b in result.blocks)
        assert result.unbounded == []

    def test_every_building_placed_once(self, rng):
        blocks = build_blocks(make_grid_graph(4, 300.0))
        buildings = [Building(f"b{i}", square(x, y, 8)) for i, (x, y) in enumerate(rng.uniform(-200, 1100, (60, 2)))]
        result = assign_buildings_to_blocks(buildings, blocks)
        placed = [b for block in result.blocks for b in block.buildings]
        assert sorted(placed + result.unbounded) == sorted(b.id for b in buildings)
        assert len(set(placed)) == len(placed)
