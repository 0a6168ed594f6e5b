# utils/roadgraph.py
# Road Graph Module
# Lifts thinned road masks into planar graphs, merges near-duplicate nodes
# and simplifies near-straight degree-2 nodes away
#
# Closed skeleton chains get three anchor nodes, not two: a ring cut at two
# points would become a pair of parallel edges between the same two nodes,
# which the simple graph rejects.

import logging
import math
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from utils.errors import DomainError
from utils.geo_core import LineString, Point2, pixel_centers_to_world, polyline_length
from utils.osm_ingest import FeatureClass

logger = logging.getLogger(__name__)

NEIGHBOR_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))
_NEIGHBOR_KERNEL = np.array([[1, 1, 1], [1, 0, 1], [1, 1, 1]], dtype=np.uint8)


class RoadGraph:
    """
    Undirected planar road graph on top of networkx.
    Node attribute 'point' (Point2, EPSG:3857); edge attributes 'road_class',
    'geometry' (stored oriented from node 'source') and 'length'.
    """

    def __init__(self):
        self._g = nx.Graph()

    @classmethod
    def from_points(cls, points, edges, road_class=FeatureClass.ROAD_S):
        """Straight-edge graph from {id: (x, y)} and (u, v) or (u, v, class) tuples"""
        g = cls()
        for node_id in sorted(points):
            xy = points[node_id]
            g.add_node(node_id, xy if isinstance(xy, Point2) else Point2(float(xy[0]), float(xy[1])))
        for edge in edges:
            u, v = edge[0], edge[1]
            edge_class = edge[2] if len(edge) > 2 else road_class
            g.add_edge(u, v, edge_class, LineString((g.point(u), g.point(v))))
        return g

    # Nodes ---------------------------------------------------------------

    def add_node(self, node_id, point):
        if node_id in self._g:
            raise ValueError(f"node {node_id} already exists")
        self._g.add_node(node_id, point=point)

    def remove_node(self, node_id):
        self._g.remove_node(node_id)

    def has_node(self, node_id):
        return node_id in self._g

    def point(self, node_id):
        return self._g.nodes[node_id]["point"]

    def node_ids(self):
        return sorted(self._g.nodes)

    def nodes(self):
        """{id: Point2} in ascending id order"""
        return {n: self._g.nodes[n]["point"] for n in sorted(self._g.nodes)}

    def degree(self, node_id):
        return self._g.degree(node_id)

    def neighbors(self, node_id):
        return sorted(self._g.neighbors(node_id))

    @property
    def node_count(self):
        return self._g.number_of_nodes()

    # Edges ---------------------------------------------------------------

    def add_edge(self, u, v, road_class, geometry):
        """Insert an edge whose geometry runs from u to v"""
        if u == v:
            raise DomainError(f"self-loop on node {u}")
        if u not in self._g or v not in self._g:
            raise DomainError(f"edge ({u}, {v}) references a missing node")
        if self._g.has_edge(u, v):
            raise DomainError(f"duplicate edge ({u}, {v})")
        if geometry.start != self.point(u) or geometry.end != self.point(v):
            raise DomainError(f"edge ({u}, {v}) geometry does not end at its nodes")
        self._g.add_edge(u, v, road_class=FeatureClass(road_class), geometry=geometry,
                         source=u, length=polyline_length(geometry))

    def remove_edge(self, u, v):
        self._g.remove_edge(u, v)

    def has_edge(self, u, v):
        return self._g.has_edge(u, v)

    def edge_class(self, u, v):
        return self._g.edges[u, v]["road_class"]

    def edge_length(self, u, v):
        return self._g.edges[u, v]["length"]

    def edge_geometry(self, u, v):
        """Edge geometry oriented from u to v"""
        data = self._g.edges[u, v]
        return data["geometry"] if data["source"] == u else data["geometry"].reversed()

    def edges(self):
        """(u, v, road_class, geometry) with u < v, geometry oriented u -> v, sorted"""
        out = []
        for u, v in self._g.edges:
            a, b = (u, v) if u < v else (v, u)
            out.append((a, b, self.edge_class(a, b), self.edge_geometry(a, b)))
        return sorted(out, key=lambda e: (e[0], e[1]))

    @property
    def edge_count(self):
        return self._g.number_of_edges()

    # Whole-graph ---------------------------------------------------------

    def copy(self):
        out = RoadGraph()
        out._g = self._g.copy()
        return out

    def to_networkx(self):
        """Length-weighted networkx.Graph with x/y node attributes"""
        g = nx.Graph()
        for node_id, p in self.nodes().items():
            g.add_node(node_id, x=p.x, y=p.y)
        for u, v, road_class, geometry in self.edges():
            g.add_edge(u, v, weight=polyline_length(geometry), road_class=road_class.value)
        return g

    def __eq__(self, other):
        if not isinstance(other, RoadGraph):
            return NotImplemented
        return self.nodes() == other.nodes() and self.edges() == other.edges()

    def __repr__(self):
        return f"RoadGraph(nodes={self.node_count}, edges={self.edge_count})"


@dataclass(frozen=True)
class EdgeVector:
    """Vector from node `source` towards neighbor `target`"""

    source: int
    target: int
    dx: float
    dy: float

    def __post_init__(self):
        if self.dx == 0.0 and self.dy == 0.0:
            raise DomainError(f"zero edge vector {self.source} -> {self.target}")

    @property
    def norm(self):
        return math.hypot(self.dx, self.dy)

    def cos_with(self, other):
        return (self.dx * other.dx + self.dy * other.dy) / (self.norm * other.norm)


def edge_vector(g, source, target):
    p, q = g.point(source), g.point(target)
    return EdgeVector(source, target, q.x - p.x, q.y - p.y)


@dataclass(frozen=True)
class GraphStats:
    total_length_m: float
    node_count: int
    edge_count: int

    def to_dict(self):
        return {"total_length_m": self.total_length_m, "node_count": self.node_count,
                "edge_count": self.edge_count}


def graph_stats(g):
    total = math.fsum(polyline_length(geometry) for _, _, _, geometry in g.edges())
    return GraphStats(total, g.node_count, g.edge_count)


# Skeleton -> graph -------------------------------------------------------------

def _fg_neighbors(sk, r, c):
    h, w = sk.shape
    out = []
    for dr, dc in NEIGHBOR_OFFSETS:
        rr, cc = r + dr, c + dc
        if 0 <= rr < h and 0 <= cc < w and sk[rr, cc]:
            out.append((rr, cc))
    return out


class _SkeletonTracer:
    """Chain walker over a 1-px skeleton with node clusters already labelled"""

    def __init__(self, sk, labels, transform, road_class):
        self.sk = sk
        self.labels = labels
        self.transform = transform
        self.road_class = road_class
        self.visited = np.zeros(sk.shape, dtype=bool)
        self.graph = RoadGraph()
        self.next_id = 0

    def world(self, pixels):
        rows = np.array([p[0] for p in pixels], dtype=np.float64)
        cols = np.array([p[1] for p in pixels], dtype=np.float64)
        xs, ys = pixel_centers_to_world(self.transform, cols, rows)
        return [Point2(float(x), float(y)) for x, y in zip(xs, ys)]

    def new_node(self, point):
        node_id = self.next_id
        self.next_id += 1
        self.graph.add_node(node_id, point)
        return node_id

    def walk(self, start, first):
        """Follow degree-2 pixels from `first` (leaving `start`) until a node pixel"""
        chain = [first]
        self.visited[first] = True
        prev, cur = start, first
        while True:
            onward = [p for p in _fg_neighbors(self.sk, *cur) if p != prev]
            nxt = onward[0]
            if self.labels[nxt]:
                return chain, self.labels[nxt]
            if self.visited[nxt]:
                return chain, None
            chain.append(nxt)
            self.visited[nxt] = True
            prev, cur = cur, nxt

    def link(self, u, v, chain_points):
        geometry = LineString.from_coords([self.graph.point(u), *chain_points, self.graph.point(v)])
        self.graph.add_edge(u, v, self.road_class, geometry)

    def add_chain(self, u, v, chain):
        points = self.world(chain)
        if u == v:
            self.add_loop(u, points)
        elif self.graph.has_edge(u, v):
            if not points:
                return
            mid = len(points) // 2
            anchor = self.new_node(points[mid])
            self.link(u, anchor, points[:mid])
            self.link(anchor, v, points[mid + 1:])
        else:
            self.link(u, v, points)

    def add_loop(self, u, points):
        """Split a closed chain through u with anchors at one and two thirds"""
        n = len(points)
        if n < 2:
            logger.debug("dropping skeleton loop too short to anchor", extra={"context": {"node": u, "pixels": n}})
            return
        i1, i2 = n // 3, (2 * n) // 3
        if i2 == i1:
            i2 = i1 + 1
        a1 = self.new_node(points[i1])
        a2 = self.new_node(points[i2])
        self.link(u, a1, points[:i1])
        self.link(a1, a2, points[i1 + 1:i2])
        self.link(a2, u, points[i2 + 1:])

    def add_ring(self, seed):
        """Pixel ring without any node pixel: anchor at its first pixel, then split like a loop"""
        ring = [seed]
        self.visited[seed] = True
        prev, cur = None, seed
        while True:
            onward = [p for p in _fg_neighbors(self.sk, *cur) if p != prev and not self.visited[p]]
            if not onward:
                break
            prev, cur = cur, onward[0]
            ring.append(cur)
            self.visited[cur] = True
        if len(ring) < 3:
            return
        anchor = self.new_node(self.world([ring[0]])[0])
        self.add_loop(anchor, self.world(ring[1:]))


def skeleton_to_graph(skeleton, transform, road_class=FeatureClass.ROAD_S):
    """
    Convert a 1-px, 8-connected skeleton into a RoadGraph.
    Pixels with a neighbor count other than 2 are node pixels; touching node
    pixels form one node at their mean position. Chains of degree-2 pixels
    become edges. Closed loops are split by synthetic anchor nodes.
    """
    sk = (np.asarray(skeleton) > 0).astype(np.uint8)
    counts = ndimage.convolve(sk, _NEIGHBOR_KERNEL, mode="constant", cval=0) * sk
    node_mask = (sk == 1) & (counts != 2) & (counts > 0)

    labels, n_clusters = ndimage.label(node_mask, structure=np.ones((3, 3), dtype=int))

    # chain pixels whose two neighbors sit in the same cluster belong to it
    for r, c in zip(*np.nonzero((counts == 2) & (labels == 0))):
        around = {labels[p] for p in _fg_neighbors(sk, r, c)}
        if len(around) == 1 and 0 not in around:
            labels[r, c] = around.pop()

    tracer = _SkeletonTracer(sk, labels, transform, FeatureClass(road_class))
    cluster_pixels = {}
    for r, c in zip(*np.nonzero(labels)):
        cluster_pixels.setdefault(int(labels[r, c]), []).append((int(r), int(c)))

    cluster_node = {}
    for label in range(1, n_clusters + 1):
        points = tracer.world(cluster_pixels[label])
        centroid = Point2(math.fsum(p.x for p in points) / len(points), math.fsum(p.y for p in points) / len(points))
        cluster_node[label] = tracer.new_node(centroid)

    for label in range(1, n_clusters + 1):
        for pixel in cluster_pixels[label]:
            tracer.visited[pixel] = True
            for q in _fg_neighbors(sk, *pixel):
                if labels[q] or tracer.visited[q]:
                    continue
                chain, end_label = tracer.walk(pixel, q)
                if end_label is None:
                    continue
                tracer.add_chain(cluster_node[label], cluster_node[int(end_label)], chain)

    for r, c in zip(*np.nonzero((sk == 1) & (counts == 2) & ~tracer.visited)):
        if not tracer.visited[r, c]:
            tracer.add_ring((int(r), int(c)))

    return tracer.graph


def reclassify_edges(g, road_p_plane, transform):
    """Edges with more than half their geometry points on Road-P pixels become Road-P"""
    plane = np.asarray(road_p_plane)
    h, w = plane.shape
    out = RoadGraph()
    for node_id, p in g.nodes().items():
        out.add_node(node_id, p)
    for u, v, _, geometry in g.edges():
        xy = geometry.coords()
        cols, rows = transform.world_to_pixel(xy[:, 0], xy[:, 1])
        cols, rows = np.floor(cols).astype(int), np.floor(rows).astype(int)
        inside = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
        hits = int((plane[rows[inside], cols[inside]] > 0).sum())
        road_class = FeatureClass.ROAD_P if hits * 2 > len(xy) else FeatureClass.ROAD_S
        out.add_edge(u, v, road_class, geometry)
    return out


# Merge and simplify --------------------------------------------------------------

def _union_find(n, pairs):
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in sorted(pairs):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    return [find(i) for i in range(n)]


def merge_close_nodes(g, eps=10.0):
    """
    Merge every cluster of nodes chained by distances <= eps into one node at
    the cluster centroid (keeping the smallest id). Edges are re-targeted;
    self-loops disappear and of duplicate edges the shortest survives.
    """
    if eps <= 0 or g.node_count < 2:
        return g.copy()

    ids = g.node_ids()
    points = [g.point(n) for n in ids]
    xy = np.array([(p.x, p.y) for p in points], dtype=np.float64)
    roots = _union_find(len(ids), cKDTree(xy).query_pairs(eps))

    members = {}
    for index, root in enumerate(roots):
        members.setdefault(root, []).append(index)

    merged_point = {}
    for root, group in members.items():
        if len(group) == 1:
            merged_point[ids[root]] = points[root]
        else:
            merged_point[ids[root]] = Point2(
                math.fsum(points[i].x for i in group) / len(group),
                math.fsum(points[i].y for i in group) / len(group),
            )
    target = {ids[i]: ids[roots[i]] for i in range(len(ids))}

    out = RoadGraph()
    for node_id in sorted(merged_point):
        out.add_node(node_id, merged_point[node_id])

    kept = {}
    for u, v, road_class, geometry in g.edges():
        nu, nv = target[u], target[v]
        if nu == nv:
            continue
        coords = [out.point(nu), *geometry.points[1:-1], out.point(nv)]
        new_geometry = LineString.from_coords(coords)
        key = (min(nu, nv), max(nu, nv))
        if key in kept and polyline_length(kept[key][3]) <= polyline_length(new_geometry):
            continue
        kept[key] = (nu, nv, road_class, new_geometry)

    for key in sorted(kept):
        nu, nv, road_class, geometry = kept[key]
        out.add_edge(nu, nv, road_class, geometry)

    logger.debug("merged close nodes", extra={"context": {"eps_m": eps, "before": g.node_count,
                                                          "after": out.node_count}})
    return out


def _splice_candidate(g, v, c_tr):
    if g.degree(v) != 2:
        return None
    a, b = g.neighbors(v)
    if g.has_edge(a, b) or g.edge_class(v, a) != g.edge_class(v, b):
        return None
    try:
        ea, eb = edge_vector(g, v, a), edge_vector(g, v, b)
    except DomainError:
        return None
    if abs(ea.cos_with(eb)) > c_tr:
        return a, b
    return None


def simplify(g, c_tr=0.966):
    """
    Remove degree-2 nodes whose two edge vectors are near-collinear
    (|cos| > c_tr) by splicing their edges, repeated until nothing changes.
    Edges of different road class are never spliced together.
    """
    out = g.copy()
    changed = True
    while changed:
        changed = False
        for v in out.node_ids():
            if not out.has_node(v):
                continue
            pair = _splice_candidate(out, v, c_tr)
            if pair is None:
                continue
            a, b = pair
            road_class = out.edge_class(v, a)
            first = out.edge_geometry(a, v).points
            second = out.edge_geometry(v, b).points
            out.remove_node(v)
            out.add_edge(a, b, road_class, LineString(first + second[1:]))
            changed = True
    return out
