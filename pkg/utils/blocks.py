# utils/blocks.py
# City Block Module
# Finds geometric minimal cycles of the road graph and turns them into
# block polygons holding their buildings

import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np
from shapely.geometry import Polygon as ShapelyPolygon

from utils.errors import DomainError
from utils.geo_core import Polygon, points_in_polygon, polygon_area, polygon_centroid

logger = logging.getLogger(__name__)

DEFAULT_CUTOFF = 12


@dataclass(frozen=True)
class Cycle:
    """Closed walk through distinct nodes; closure back to node_ids[0] is implicit"""

    node_ids: tuple

    def __post_init__(self):
        ids = tuple(self.node_ids)
        if len(ids) < 3 or len(set(ids)) != len(ids):
            raise DomainError(f"cycle needs at least 3 distinct nodes, got {ids}")
        object.__setattr__(self, "node_ids", _canonical(ids))

    @property
    def length_edges(self):
        return len(self.node_ids)

    def node_pairs(self):
        ids = self.node_ids
        return [(ids[i], ids[(i + 1) % len(ids)]) for i in range(len(ids))]


def _canonical(ids):
    """Rotate to the smallest id, then pick the direction with the smaller second id"""
    i = ids.index(min(ids))
    forward = ids[i:] + ids[:i]
    backward = (forward[0],) + tuple(reversed(forward[1:]))
    return min(forward, backward)


@dataclass
class Block:
    block_id: int
    boundary: Polygon
    buildings: tuple = ()
    valid: bool = True
    cycle: Cycle = None

    @property
    def area(self):
        return polygon_area(self.boundary)


@dataclass
class BlockAssignment:
    blocks: list
    unbounded: list = field(default_factory=list)

    def building_to_block(self):
        return {b: block.block_id for block in self.blocks for b in block.buildings}


# Minimal cycle search ----------------------------------------------------------
#
# Faces are labelled once by half-edge traversal of the peeled graph: every
# half-edge (a, b) belongs to the face on its left. The search then dismantles
# the graph from the outside in. A face is recorded when the first of its
# edges is removed, so every recorded cycle is a face of the input graph and
# no face is lost.

def _peel(adj):
    """Iteratively drop vertices of degree <= 1"""
    queue = deque(sorted(v for v, nbrs in adj.items() if len(nbrs) <= 1))
    while queue:
        v = queue.popleft()
        if v not in adj or len(adj[v]) > 1:
            continue
        for u in adj.pop(v):
            adj[u].discard(v)
            if len(adj[u]) <= 1:
                queue.append(u)


def _remove_vertex(adj, v):
    for u in adj.pop(v):
        adj[u].discard(v)


def _remove_edge(adj, a, b):
    adj[a].discard(b)
    adj[b].discard(a)


def _angle_from(g, v, w):
    """Direction of edge v -> w at v (first geometry segment)"""
    geometry = g.edge_geometry(v, w)
    p, q = geometry.points[0], geometry.points[1]
    return math.atan2(q.y - p.y, q.x - p.x)


def _label_faces(g, adj):
    """
    Half-edge face traversal. Returns (face_of, walks): face_of maps each
    half-edge to a face index and walks[i] lists the nodes around face i,
    counter-clockwise for bounded faces.
    """
    rotation = {v: sorted(adj[v], key=lambda w: (_angle_from(g, v, w), w)) for v in adj}
    face_of = {}
    walks = []
    for u in sorted(adj):
        for v in rotation[u]:
            if (u, v) in face_of:
                continue
            index = len(walks)
            walk = []
            a, b = u, v
            while (a, b) not in face_of:
                face_of[(a, b)] = index
                walk.append(a)
                ring = rotation[b]
                a, b = b, ring[(ring.index(a) - 1) % len(ring)]
            walks.append(walk)
    return face_of, walks


def _face_cycle(g, walk, cutoff):
    """The walk as a Cycle when it is a simple bounded face of at most cutoff edges"""
    if len(walk) < 3 or len(walk) > cutoff or len(set(walk)) != len(walk):
        return None
    if _signed_walk_area(g, walk) <= 0:
        return None
    return Cycle(tuple(walk))


def find_geometric_minimal_cycles(g, cutoff=DEFAULT_CUTOFF):
    """
    Geometric minimal cycles of a road graph.
    Repeatedly peel degree-1 vertices, then sweep the degree-2 vertices in
    ascending id: a vertex with the outer region on one side closes the
    minimal cycle on its other side (the face traced by tightest turns) and is
    removed; a vertex between two unopened faces waits. A sweep that removes
    nothing drops every edge that borders a face opened before it, recording
    the face on the other side. Cycles longer than `cutoff` edges are never
    emitted.
    """
    adj = {n: set(g.neighbors(n)) for n in g.node_ids()}
    _peel(adj)
    face_of, walks = _label_faces(g, adj)
    opened = [_signed_walk_area(g, walk) <= 0 for walk in walks]
    cycles = []

    def open_face(index):
        if opened[index]:
            return
        opened[index] = True
        cycle = _face_cycle(g, walks[index], cutoff)
        if cycle is not None:
            cycles.append(cycle)

    while adj:
        _peel(adj)
        if not adj:
            break
        removed = False
        for v in sorted(adj):
            if v not in adj or len(adj[v]) != 2:
                continue
            sides = sorted({face_of[(v, w)] for w in adj[v]})
            if all(not opened[f] for f in sides) and len(sides) == 2:
                continue
            for f in sides:
                open_face(f)
            _remove_vertex(adj, v)
            removed = True
        if removed:
            continue

        was_open = list(opened)
        for a, b in sorted((a, b) for a in adj for b in adj[a] if a < b):
            left, right = face_of[(a, b)], face_of[(b, a)]
            if was_open[left] or was_open[right]:
                open_face(left)
                open_face(right)
                _remove_edge(adj, a, b)
                removed = True

        if not removed:
            victim = min(adj, key=lambda n: (len(adj[n]), n))
            logger.debug("cycle sweep stalled, removing vertex",
                         extra={"context": {"node": victim, "degree": len(adj[victim])}})
            for w in adj[victim]:
                open_face(face_of[(victim, w)])
            _remove_vertex(adj, victim)

    return cycles


# Strict face traversal ------------------------------------------------------------

def trace_faces(g, cutoff=DEFAULT_CUTOFF):
    """
    Bounded faces of the planar embedding by half-edge traversal.
    Leaves are peeled first; faces that revisit a node, have non-positive area
    or more than `cutoff` edges are dropped.
    """
    adj = {n: set(g.neighbors(n)) for n in g.node_ids()}
    _peel(adj)
    _, walks = _label_faces(g, adj)
    cycles = [cycle for cycle in (_face_cycle(g, walk, cutoff) for walk in walks) if cycle is not None]
    return sorted(cycles, key=lambda c: c.node_ids)


def _walk_coords(g, node_ids):
    coords = []
    for i, a in enumerate(node_ids):
        b = node_ids[(i + 1) % len(node_ids)]
        coords.extend((p.x, p.y) for p in g.edge_geometry(a, b).points[:-1])
    return coords


def _signed_walk_area(g, node_ids):
    xy = np.array(_walk_coords(g, node_ids), dtype=np.float64)
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


# Polygons and assignment -----------------------------------------------------------

def cycle_to_polygon(cycle, g):
    """
    Concatenate the edge geometries around the cycle into a CCW polygon.
    Returns (polygon, valid); valid is False for self-intersecting boundaries.
    """
    coords = _walk_coords(g, cycle.node_ids)
    polygon = Polygon.from_coords(coords)
    valid = bool(ShapelyPolygon(polygon.exterior_coords()).is_valid)
    if not valid:
        logger.warning("block boundary is self-intersecting", extra={"context": {"cycle": list(cycle.node_ids)}})
    return polygon, valid


def build_blocks(g, cutoff=DEFAULT_CUTOFF, strict=False):
    """Blocks from the road graph, numbered in discovery order"""
    cycles = trace_faces(g, cutoff) if strict else find_geometric_minimal_cycles(g, cutoff)
    blocks = []
    for cycle in cycles:
        try:
            polygon, valid = cycle_to_polygon(cycle, g)
        except DomainError as e:
            logger.warning("skipping degenerate block", extra={"context": {"cycle": list(cycle.node_ids), "error": str(e)}})
            continue
        blocks.append(Block(block_id=len(blocks), boundary=polygon, valid=valid, cycle=cycle))
    logger.info("blocks built", extra={"context": {"cycles": len(cycles), "blocks": len(blocks), "strict": strict}})
    return blocks


def assign_buildings_to_blocks(buildings, blocks):
    """
    Put every building in the block containing its footprint centroid.
    Overlapping candidates resolve to the smallest area, then the lowest block_id;
    buildings inside no block land in `unbounded`.
    """
    buildings = sorted(buildings, key=lambda b: b.id)
    if not buildings:
        return BlockAssignment([replace(block, buildings=()) for block in blocks], [])

    centroids = [polygon_centroid(b.footprint) for b in buildings]
    xs = np.array([c.x for c in centroids])
    ys = np.array([c.y for c in centroids])

    best = [None] * len(buildings)
    for block in sorted(blocks, key=lambda b: (b.area, b.block_id)):
        inside = points_in_polygon(xs, ys, block.boundary)
        for index in np.nonzero(inside)[0]:
            if best[index] is None:
                best[index] = block.block_id

    members = {block.block_id: [] for block in blocks}
    unbounded = []
    for building, block_id in zip(buildings, best):
        if block_id is None:
            unbounded.append(building.id)
        else:
            members[block_id].append(building.id)

    assigned = [replace(block, buildings=tuple(members[block.block_id])) for block in blocks]
    return BlockAssignment(assigned, unbounded)
