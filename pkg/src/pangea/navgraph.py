"""Panoramic navigation graphs: loading, validation, and geodesic queries.

An environment is a set of panoramic viewpoints (nodes with 3D positions and
a panorama blob key) joined by undirected traversability edges. Edge weights
are Euclidean distances between node positions; geodesics use Dijkstra with
a deterministic lexicographic tie-break so downstream metrics and tests are
reproducible.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

NodeId = str


class GraphError(ValueError):
    """Malformed graph document or graph-invariant violation."""


class UnknownNodeError(KeyError):
    """A node id was queried that does not exist in the graph."""

    def __str__(self) -> str:  # KeyError quotes its payload by default
        return self.args[0] if self.args else "unknown node"


class UnreachableError(ValueError):
    """Two nodes lie in different connected components."""


@dataclass(frozen=True)
class Node:
    id: NodeId
    position: tuple[float, float, float]
    panorama: str

    def __post_init__(self) -> None:
        if not self.id:
            raise GraphError("node id must be non-empty")
        if len(self.position) != 3 or not all(math.isfinite(c) for c in self.position):
            raise GraphError(f"node {self.id!r}: position must be a finite 3-vector")


@dataclass(frozen=True)
class Path:
    """Ordered node-id sequence; validity against a graph is checked separately."""

    nodes: tuple[NodeId, ...]

    def __post_init__(self) -> None:
        if len(self.nodes) < 1:
            raise GraphError("path must contain at least one node")
        object.__setattr__(self, "nodes", tuple(self.nodes))

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self) -> Iterator[NodeId]:
        return iter(self.nodes)

    def __getitem__(self, i):
        return self.nodes[i]

    @property
    def start(self) -> NodeId:
        return self.nodes[0]

    @property
    def goal(self) -> NodeId:
        return self.nodes[-1]


@dataclass(frozen=True)
class Violation:
    kind: str  # "not-an-edge" | "unknown-node" | "consecutive-duplicate"
    index: int
    detail: str


class NavigationGraph:
    """Immutable undirected graph of panoramic viewpoints.

    Safe to share across any number of concurrent readers once constructed.
    """

    def __init__(self, environment_id: str, nodes: Iterable[Node],
                 edges: Iterable[tuple[NodeId, NodeId]]):
        self.environment_id = environment_id
        self.nodes: dict[NodeId, Node] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise GraphError(f"duplicate node id {node.id!r}")
            self.nodes[node.id] = node
        self._adj: dict[NodeId, set[NodeId]] = {nid: set() for nid in self.nodes}
        self.edges: set[frozenset[NodeId]] = set()
        for a, b in edges:
            if a == b:
                raise GraphError(f"self-loop edge on {a!r}")
            for endpoint in (a, b):
                if endpoint not in self.nodes:
                    raise GraphError(f"edge ({a!r}, {b!r}) references unknown node {endpoint!r}")
            self.edges.add(frozenset((a, b)))
            self._adj[a].add(b)
            self._adj[b].add(a)

    def __contains__(self, node_id: NodeId) -> bool:
        return node_id in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def node_ids(self) -> list[NodeId]:
        return sorted(self.nodes)

    def edge_count(self) -> int:
        return len(self.edges)

    def node(self, node_id: NodeId) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNodeError(f"unknown node {node_id!r}") from None

    def neighbors(self, node_id: NodeId) -> set[NodeId]:
        if node_id not in self.nodes:
            raise UnknownNodeError(f"unknown node {node_id!r}")
        return set(self._adj[node_id])

    def has_edge(self, a: NodeId, b: NodeId) -> bool:
        return frozenset((a, b)) in self.edges

    def edge_weight(self, a: NodeId, b: NodeId) -> float:
        return euclidean(self.node(a).position, self.node(b).position)

    def geodesic(self, a: NodeId, b: NodeId) -> tuple[float, Path]:
        """Shortest-path distance and realizing path from a to b.

        Edge weights are Euclidean lengths. Among equal-cost paths the
        lexicographically smallest node-id sequence is returned; this falls
        out of keying the Dijkstra heap by (distance, path-so-far), since a
        lexicographically minimal shortest path has lexicographically
        minimal shortest prefixes.
        """
        for nid in (a, b):
            if nid not in self.nodes:
                raise UnknownNodeError(f"unknown node {nid!r}")
        if a == b:
            return 0.0, Path((a,))
        heap: list[tuple[float, tuple[NodeId, ...]]] = [(0.0, (a,))]
        done: set[NodeId] = set()
        while heap:
            dist, path = heapq.heappop(heap)
            node = path[-1]
            if node in done:
                continue
            done.add(node)
            if node == b:
                return dist, Path(path)
            for nxt in self._adj[node]:
                if nxt not in done:
                    heapq.heappush(heap, (dist + self.edge_weight(node, nxt), path + (nxt,)))
        raise UnreachableError(f"no path between {a!r} and {b!r}")

    def geodesic_distance(self, a: NodeId, b: NodeId) -> float:
        return self.geodesic(a, b)[0]

    def validate_path(self, path: Path) -> list[Violation]:
        """Return every violation; an empty list means the path is valid."""
        violations: list[Violation] = []
        for i, nid in enumerate(path.nodes):
            if nid not in self.nodes:
                violations.append(Violation("unknown-node", i, f"node {nid!r} not in graph"))
        for i in range(len(path.nodes) - 1):
            u, v = path.nodes[i], path.nodes[i + 1]
            if u == v:
                violations.append(Violation("consecutive-duplicate", i,
                                            f"node {u!r} repeated at index {i}"))
            elif u in self.nodes and v in self.nodes and not self.has_edge(u, v):
                violations.append(Violation("not-an-edge", i, f"({u!r}, {v!r}) is not an edge"))
        return violations

    def to_document(self) -> dict:
        return {
            "environment_id": self.environment_id,
            "nodes": [
                {"id": n.id, "position": list(n.position), "panorama": n.panorama}
                for n in sorted(self.nodes.values(), key=lambda n: n.id)
            ],
            "edges": sorted(sorted(e) for e in self.edges),
        }


def euclidean(p: tuple[float, float, float], q: tuple[float, float, float]) -> float:
    return math.dist(p, q)


def load_graph(document: bytes | str) -> NavigationGraph:
    """Parse and validate a UTF-8 JSON graph document.

    Expected shape::

        {"environment_id": str,
         "nodes": [{"id": str, "position": [x, y, z], "panorama": str}, ...],
         "edges": [[idA, idB], ...]}
    """
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as e:
        raise GraphError(f"graph document is not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise GraphError("graph document must be a JSON object")
    try:
        env_id = raw["environment_id"]
        raw_nodes = raw["nodes"]
        raw_edges = raw["edges"]
    except KeyError as e:
        raise GraphError(f"graph document missing key {e.args[0]!r}") from None
    if not isinstance(env_id, str) or not env_id:
        raise GraphError("environment_id must be a non-empty string")
    nodes = []
    for entry in raw_nodes:
        try:
            nodes.append(Node(id=entry["id"],
                              position=tuple(float(c) for c in entry["position"]),
                              panorama=entry["panorama"]))
        except GraphError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise GraphError(f"malformed node entry {entry!r}: {e}") from e
    edges = []
    for entry in raw_edges:
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise GraphError(f"malformed edge entry {entry!r}: expected [idA, idB]")
        edges.append((entry[0], entry[1]))
    return NavigationGraph(env_id, nodes, edges)
