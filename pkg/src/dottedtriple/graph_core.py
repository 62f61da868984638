"""Base graphs, dotted graphs and dotted triple-graphs.

All graph values are immutable.  Vertices of constructed graphs use a dense
integer labelling that both parties can recompute from the base graph alone:

* ``dot(G)``: primaries ``0..|V|-1`` in base-vertex order, then one added
  vertex per base edge in base-edge order.
* ``dotted_triple(G)``: primaries first (base vertex, then copy 1..3), then
  added vertices (base edge, then index 1..9).  Added vertex ``k`` of edge
  ``(u, w)`` bridges copy ``(k-1)//3 + 1`` of ``P_u`` with copy
  ``(k-1)%3 + 1`` of ``P_w``.
* ``three_dotted_copies(G)``: same location-major ordering, three vertices
  per location (one per copy).
"""

from __future__ import annotations

import json
from collections import deque
from collections.abc import Hashable, Iterable, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any

from .errors import InputError

__all__ = [
    "Graph",
    "BaseGraph",
    "Location",
    "LocatedGraph",
    "DottedGraph",
    "DottedTripleGraph",
    "ThreeDottedCopies",
    "dot",
    "dotted_triple",
    "three_dotted_copies",
    "break_vertices",
    "load_base_graph",
    "parse_base_graph",
]


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph with ordered vertices.

    Edges are stored as pairs ``(u, v)`` with ``u`` before ``v`` in vertex
    order, sorted by that order, so equal graphs compare equal.
    """

    vertices: tuple
    edges: tuple = ()

    def __post_init__(self) -> None:
        verts = tuple(self.vertices)
        if len(set(verts)) != len(verts):
            raise InputError("duplicate vertex identifiers")
        pos = {v: i for i, v in enumerate(verts)}
        seen = set()
        norm = []
        for edge in self.edges:
            try:
                u, v = edge
            except (TypeError, ValueError):
                raise InputError(f"edge {edge!r} is not a vertex pair") from None
            if u not in pos or v not in pos:
                raise InputError(f"edge {edge!r} references an unknown vertex")
            if u == v:
                raise InputError(f"self-loop on vertex {u!r}")
            if pos[u] > pos[v]:
                u, v = v, u
            if (u, v) in seen:
                raise InputError(f"duplicate edge {(u, v)!r}")
            seen.add((u, v))
            norm.append((u, v))
        norm.sort(key=lambda e: (pos[e[0]], pos[e[1]]))
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", tuple(norm))

    @cached_property
    def _pos(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def _adj(self) -> dict:
        adj: dict = {v: [] for v in self.vertices}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return {v: tuple(sorted(ns, key=self._pos.__getitem__)) for v, ns in adj.items()}

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, v: object) -> bool:
        return v in self._pos

    def index(self, v: Hashable) -> int:
        return self._pos[v]

    def neighbours(self, v: Hashable) -> tuple:
        return self._adj[v]

    def degree(self, v: Hashable) -> int:
        return len(self._adj[v])

    def max_degree(self) -> int:
        return max((len(ns) for ns in self._adj.values()), default=0)

    def has_edge(self, u: Hashable, v: Hashable) -> bool:
        return v in self._adj.get(u, ())

    def edge_key(self, u: Hashable, v: Hashable) -> tuple:
        """Return the stored orientation of edge ``{u, v}``."""
        if not self.has_edge(u, v):
            raise InputError(f"no edge between {u!r} and {v!r}")
        return (u, v) if self._pos[u] < self._pos[v] else (v, u)

    def subgraph(self, keep: Iterable[Hashable]) -> Graph:
        keep = set(keep)
        return Graph(
            tuple(v for v in self.vertices if v in keep),
            tuple(e for e in self.edges if e[0] in keep and e[1] in keep),
        )

    def connected_components(self) -> list[frozenset]:
        """Components in order of their first vertex."""
        seen: set = set()
        out = []
        for start in self.vertices:
            if start in seen:
                continue
            comp = {start}
            queue = deque([start])
            while queue:
                x = queue.popleft()
                for y in self._adj[x]:
                    if y not in comp:
                        comp.add(y)
                        queue.append(y)
            seen |= comp
            out.append(frozenset(comp))
        return out

    def two_colouring(self) -> dict | None:
        """Return a proper 2-colouring ``{v: 0|1}`` or ``None`` if not bipartite."""
        side: dict = {}
        for start in self.vertices:
            if start in side:
                continue
            side[start] = 0
            queue = deque([start])
            while queue:
                x = queue.popleft()
                for y in self._adj[x]:
                    if y not in side:
                        side[y] = 1 - side[x]
                        queue.append(y)
                    elif side[y] == side[x]:
                        return None
        return side

    def to_json(self) -> dict:
        return {"vertices": list(self.vertices), "edges": [list(e) for e in self.edges]}

    def to_dot(
        self,
        name: str = "G",
        colours: Mapping[Hashable, str] | None = None,
        labels: Mapping[Hashable, str] | None = None,
        shapes: Mapping[Hashable, str] | None = None,
        comment: str | None = None,
    ) -> str:
        lines = []
        if comment:
            lines.append(f"// {comment}")
        lines.append(f"graph {name} {{")
        for v in self.vertices:
            attrs = []
            if labels and v in labels:
                attrs.append(f'label="{labels[v]}"')
            if shapes and v in shapes:
                attrs.append(f"shape={shapes[v]}")
            if colours and v in colours:
                attrs.append(f'style=filled fillcolor="{colours[v]}"')
            suffix = f" [{' '.join(attrs)}]" if attrs else ""
            lines.append(f'  "{v}"{suffix};')
        for u, v in self.edges:
            lines.append(f'  "{u}" -- "{v}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


BaseGraph = Graph


def parse_base_graph(data: Any) -> Graph:
    """Build a base graph from the ``{"vertices": [...], "edges": [[u, v], ...]}`` form."""
    if not isinstance(data, Mapping) or "vertices" not in data:
        raise InputError('base graph must be an object with a "vertices" list')
    verts = data["vertices"]
    edges = data.get("edges", [])
    if not isinstance(verts, list) or not isinstance(edges, list):
        raise InputError('"vertices" and "edges" must be lists')
    for v in verts:
        if not isinstance(v, (int, str)) or isinstance(v, bool):
            raise InputError(f"vertex id {v!r} must be an int or string")
    return Graph(tuple(verts), tuple(tuple(e) if isinstance(e, list) else e for e in edges))


def load_base_graph(path: str | Path) -> Graph:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
    return parse_base_graph(data)


@dataclass(frozen=True)
class Location:
    """Base-location: the slot of a primary set ``P_v`` or an added set ``A_e``.

    ``key`` is the base vertex for primary locations and the frozenset of the
    two endpoints for added ones.
    """

    kind: str
    key: Any

    @classmethod
    def primary(cls, v: Hashable) -> Location:
        return cls("primary", v)

    @classmethod
    def added(cls, u: Hashable, v: Hashable) -> Location:
        return cls("added", frozenset((u, v)))

    @property
    def is_primary(self) -> bool:
        return self.kind == "primary"

    def endpoints(self, base: Graph) -> tuple:
        """Endpoints of an added location in the base graph's edge orientation."""
        u, v = tuple(self.key)
        return base.edge_key(u, v)

    def label(self, base: Graph | None = None) -> str:
        if self.is_primary:
            return f"v:{self.key}"
        u, v = self.endpoints(base) if base is not None else sorted(self.key, key=str)
        return f"e:{u}-{v}"

    def __repr__(self) -> str:
        return f"Location({self.label()})"


def base_locations(base: Graph) -> tuple[Location, ...]:
    """All base-locations in canonical order: primaries, then added."""
    return tuple(Location.primary(v) for v in base.vertices) + tuple(
        Location.added(u, v) for u, v in base.edges
    )


@dataclass(frozen=True, eq=False)
class LocatedGraph:
    """A graph whose integer vertices are each tagged with a base-location."""

    base: Graph
    graph: Graph
    location_of: tuple[Location, ...]
    copy_index: tuple[int, ...] = field(default=())

    @cached_property
    def locations(self) -> tuple[Location, ...]:
        return base_locations(self.base)

    @cached_property
    def sets(self) -> dict[Location, tuple[int, ...]]:
        """Vertices grouped by base-location (``P_v`` / ``A_e``)."""
        out: dict[Location, list[int]] = {loc: [] for loc in self.locations}
        for v in self.graph.vertices:
            out[self.location_of[v]].append(v)
        return {loc: tuple(vs) for loc, vs in out.items()}

    @cached_property
    def location_rank(self) -> dict[Location, int]:
        return {loc: i for i, loc in enumerate(self.locations)}

    @property
    def vertices(self) -> tuple[int, ...]:
        return self.graph.vertices

    @property
    def edges(self) -> tuple:
        return self.graph.edges

    def neighbours(self, v: int) -> tuple:
        return self.graph.neighbours(v)

    def is_primary(self, v: int) -> bool:
        return self.location_of[v].is_primary

    @cached_property
    def primary_vertices(self) -> tuple[int, ...]:
        return tuple(v for v in self.vertices if self.location_of[v].is_primary)

    @cached_property
    def added_vertices(self) -> tuple[int, ...]:
        return tuple(v for v in self.vertices if not self.location_of[v].is_primary)

    def vertex_labels(self) -> dict[int, str]:
        labels = {}
        for v in self.vertices:
            loc = self.location_of[v]
            tag = loc.label(self.base)
            labels[v] = f"{v} {tag}" + (f"#{self.copy_index[v]}" if self.copy_index else "")
        return labels

    def to_json(self) -> dict:
        return {
            "base": self.base.to_json(),
            "vertices": list(self.vertices),
            "edges": [list(e) for e in self.edges],
            "locations": [self.location_of[v].label(self.base) for v in self.vertices],
        }

    def to_dot(self, name: str = "G", colours: Mapping[int, str] | None = None, comment: str | None = None) -> str:
        shapes = {v: ("circle" if self.is_primary(v) else "box") for v in self.vertices}
        return self.graph.to_dot(name, colours=colours, labels=self.vertex_labels(), shapes=shapes, comment=comment)


class DottedGraph(LocatedGraph):
    """``D(G)``: every base edge replaced by an added vertex joined to its endpoints."""

    @cached_property
    def vertex_at(self) -> dict[Location, int]:
        return {loc: vs[0] for loc, vs in self.sets.items()}


class DottedTripleGraph(LocatedGraph):
    """``DT(G)``: the dotting of the triple graph of ``G``."""

    def bridged(self, a: int) -> tuple[int, int]:
        """The two primary neighbours of added vertex ``a`` (``P_u`` side first)."""
        loc = self.location_of[a]
        if loc.is_primary:
            raise InputError(f"vertex {a} is primary")
        u, w = loc.endpoints(self.base)
        k = self.copy_index[a] - 1
        return self.sets[Location.primary(u)][k // 3], self.sets[Location.primary(w)][k % 3]


class ThreeDottedCopies(LocatedGraph):
    """Three disjoint copies of ``D(G)``; ``copy_index`` gives the copy (1..3)."""

    @cached_property
    def copies(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(v for v in self.vertices if self.copy_index[v] == c) for c in (1, 2, 3))


def dot(g: Graph) -> DottedGraph:
    n = len(g)
    locs = [Location.primary(v) for v in g.vertices]
    edges = []
    for k, (u, v) in enumerate(g.edges):
        a = n + k
        locs.append(Location.added(u, v))
        edges.append((g.index(u), a))
        edges.append((g.index(v), a))
    return DottedGraph(g, Graph(tuple(range(len(locs))), tuple(edges)), tuple(locs))


def dotted_triple(g: Graph) -> DottedTripleGraph:
    locs: list[Location] = []
    copy: list[int] = []
    first: dict = {}
    for v in g.vertices:
        first[v] = len(locs)
        for c in (1, 2, 3):
            locs.append(Location.primary(v))
            copy.append(c)
    edges = []
    for u, w in g.edges:
        for i in range(3):
            for j in range(3):
                a = len(locs)
                locs.append(Location.added(u, w))
                copy.append(3 * i + j + 1)
                edges.append((first[u] + i, a))
                edges.append((first[w] + j, a))
    return DottedTripleGraph(g, Graph(tuple(range(len(locs))), tuple(edges)), tuple(locs), tuple(copy))


def three_dotted_copies(g: Graph) -> ThreeDottedCopies:
    locs: list[Location] = []
    copy: list[int] = []
    first: dict = {}
    for v in g.vertices:
        first[v] = len(locs)
        for c in (1, 2, 3):
            locs.append(Location.primary(v))
            copy.append(c)
    edges = []
    for u, w in g.edges:
        for c in range(3):
            a = len(locs)
            locs.append(Location.added(u, w))
            copy.append(c + 1)
            edges.append((first[u] + c, a))
            edges.append((first[w] + c, a))
    return ThreeDottedCopies(g, Graph(tuple(range(len(locs))), tuple(edges)), tuple(locs), tuple(copy))


def break_vertices(graph: Graph | LocatedGraph, victims: Iterable[Hashable]) -> Graph:
    """Remove ``victims`` and every edge touching them."""
    g = graph.graph if isinstance(graph, LocatedGraph) else graph
    victims = set(victims)
    unknown = [v for v in victims if v not in g]
    if unknown:
        raise InputError(f"cannot break unknown vertices {sorted(unknown, key=str)!r}")
    return g.subgraph(v for v in g.vertices if v not in victims)
