"""Trap-colourings, the computation/trap/dummy partition, and ICL selection."""

from __future__ import annotations

import enum
import itertools
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InputError
from .graph_core import (
    DottedTripleGraph,
    Graph,
    LocatedGraph,
    Location,
    ThreeDottedCopies,
    break_vertices,
    dot,
)

__all__ = [
    "Colour",
    "TrapColouring",
    "CopyRoles",
    "RolePartition",
    "Violation",
    "PERMUTATIONS",
    "sample_trap_colouring",
    "enumerate_trap_colourings",
    "sample_copy_roles",
    "enumerate_copy_roles",
    "validate_trap_colouring",
    "break_red",
    "location_graph",
    "role_partition",
    "epsilon_set",
    "is_icl",
    "greedy_icl_subset",
    "icl_by_enumeration",
]


class Colour(str, enum.Enum):
    WHITE = "W"
    BLACK = "B"
    GREEN = "G"
    RED = "R"


# fill colours used in DOT exports
DOT_FILL = {Colour.WHITE: "white", Colour.BLACK: "gray30", Colour.GREEN: "green", Colour.RED: "red"}

PRIMARY_COLOURS = (Colour.WHITE, Colour.BLACK, Colour.GREEN)
PERMUTATIONS: tuple[tuple[Colour, Colour, Colour], ...] = tuple(itertools.permutations(PRIMARY_COLOURS))


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class TrapColouring:
    """Trap-colouring of ``DT(G)`` stored as one colour permutation per ``P_v``.

    ``perms[v][c]`` is the colour of copy ``c+1`` in ``P_v``.  Added colours
    are induced: an added vertex bridging two same-coloured primaries takes
    that colour, otherwise it is red.
    """

    dtg: DottedTripleGraph
    perms: Mapping

    def __post_init__(self) -> None:
        missing = [v for v in self.dtg.base.vertices if v not in self.perms]
        if missing:
            raise InputError(f"no colour permutation for base vertices {missing!r}")
        for v, perm in self.perms.items():
            if sorted(perm) != sorted(PRIMARY_COLOURS):
                raise InputError(f"P_{v} colours {perm!r} are not a permutation of W, B, G")

    @cached_property
    def colours(self) -> tuple[Colour, ...]:
        dtg = self.dtg
        out: list[Colour] = []
        for v in dtg.vertices:
            loc = dtg.location_of[v]
            if loc.is_primary:
                out.append(Colour(self.perms[loc.key][dtg.copy_index[v] - 1]))
            else:
                p, q = dtg.bridged(v)
                cp, cq = out[p], out[q]
                out.append(cp if cp == cq else Colour.RED)
        return tuple(out)

    def colour(self, v: int) -> Colour:
        return self.colours[v]

    @property
    def resource(self) -> LocatedGraph:
        return self.dtg

    def as_dict(self) -> dict[int, Colour]:
        return dict(enumerate(self.colours))

    def to_json(self) -> dict[str, str]:
        return {str(v): c.value for v, c in enumerate(self.colours)}


@dataclass(frozen=True, eq=False)
class CopyRoles:
    """Role assignment for three dotted copies: ``perm[c]`` colours copy ``c+1``."""

    tdc: ThreeDottedCopies
    perm: tuple

    def __post_init__(self) -> None:
        if sorted(self.perm) != sorted(PRIMARY_COLOURS):
            raise InputError(f"copy roles {self.perm!r} are not a permutation of W, B, G")

    @cached_property
    def colours(self) -> tuple[Colour, ...]:
        return tuple(Colour(self.perm[c - 1]) for c in self.tdc.copy_index)

    def colour(self, v: int) -> Colour:
        return self.colours[v]

    @property
    def resource(self) -> LocatedGraph:
        return self.tdc

    def as_dict(self) -> dict[int, Colour]:
        return dict(enumerate(self.colours))

    def to_json(self) -> dict[str, str]:
        return {str(v): c.value for v, c in enumerate(self.colours)}


def sample_trap_colouring(dtg: DottedTripleGraph, seed=None) -> TrapColouring:
    """Uniform, independent permutation of {W, B, G} on every primary set."""
    rng = _rng(seed)
    picks = rng.integers(0, len(PERMUTATIONS), size=len(dtg.base.vertices))
    return TrapColouring(dtg, {v: PERMUTATIONS[k] for v, k in zip(dtg.base.vertices, picks)})


def enumerate_trap_colourings(
    dtg: DottedTripleGraph, vertices: Sequence | None = None, fixed: Mapping | None = None
) -> Iterator[TrapColouring]:
    """All ``6**n`` trap-colourings, each equally likely under the sampler.

    With ``vertices`` given, only those primary sets vary; the others take the
    permutation in ``fixed`` (default: the identity order W, B, G).
    """
    base_vs = dtg.base.vertices
    vary = list(base_vs if vertices is None else vertices)
    rest = {v: (fixed or {}).get(v, PERMUTATIONS[0]) for v in base_vs if v not in set(vary)}
    for combo in itertools.product(PERMUTATIONS, repeat=len(vary)):
        perms = dict(rest)
        perms.update(zip(vary, combo))
        yield TrapColouring(dtg, perms)


def sample_copy_roles(tdc: ThreeDottedCopies, seed=None) -> CopyRoles:
    rng = _rng(seed)
    return CopyRoles(tdc, PERMUTATIONS[int(rng.integers(0, len(PERMUTATIONS)))])


def enumerate_copy_roles(tdc: ThreeDottedCopies) -> Iterator[CopyRoles]:
    for perm in PERMUTATIONS:
        yield CopyRoles(tdc, perm)


@dataclass(frozen=True)
class Violation:
    rule: str
    vertex: int
    message: str

    def __str__(self) -> str:
        return f"rule ({self.rule}) violated at vertex {self.vertex}: {self.message}"


def validate_trap_colouring(dtg: DottedTripleGraph, col) -> Violation | None:
    """Check rules (i)-(iv) of a trap-colouring; ``None`` means valid.

    ``col`` may be a :class:`TrapColouring` or any mapping vertex -> colour
    (colour letters accepted).  Rules are checked in order and the first
    offending vertex is reported.
    """
    if isinstance(col, TrapColouring):
        col = col.as_dict()
    missing = [v for v in dtg.vertices if v not in col]
    if missing:
        raise InputError(f"colouring does not cover vertices {missing[:5]!r}")
    try:
        colours = {v: Colour(col[v]) for v in dtg.vertices}
    except ValueError as exc:
        raise InputError(str(exc)) from exc

    for v in dtg.primary_vertices:
        if colours[v] not in PRIMARY_COLOURS:
            return Violation("i", v, f"primary vertex coloured {colours[v].value}")
    # rule (ii) admits every colour on added vertices; nothing to check beyond Colour()
    for loc, vs in dtg.sets.items():
        if not loc.is_primary:
            continue
        for v in vs:
            if sum(colours[w] == colours[v] for w in vs) != 1:
                return Violation("iii", v, f"colour {colours[v].value} repeated in {loc.label(dtg.base)}")
    for a in dtg.added_vertices:
        p, q = dtg.bridged(a)
        want = colours[p] if colours[p] == colours[q] else Colour.RED
        if colours[a] != want:
            return Violation("iv", a, f"expected {want.value} from bridged primaries, got {colours[a].value}")
    return None


def location_graph(sub: Graph, resource: LocatedGraph) -> Graph:
    """Relabel a subgraph of ``resource`` by base-location (for comparison with ``dot(G)``)."""
    locs = [resource.location_of[v] for v in sub.vertices]
    if len(set(locs)) != len(locs):
        raise InputError("subgraph has two vertices at the same base-location")
    return Graph(tuple(locs), tuple((resource.location_of[u], resource.location_of[v]) for u, v in sub.edges))


def _dotted_location_graph(base: Graph) -> Graph:
    d = dot(base)
    return location_graph(d.graph, d)


def break_red(dtg: DottedTripleGraph, col) -> dict[Colour, Graph]:
    """Break all red vertices and split the remainder by colour.

    Each returned subgraph, relabelled by base-location, is identical to
    ``dot(G)``; a :class:`InputError` is raised otherwise.
    """
    bad = validate_trap_colouring(dtg, col)
    if bad is not None:
        raise InputError(str(bad))
    colours = col.colours if isinstance(col, TrapColouring) else tuple(Colour(col[v]) for v in dtg.vertices)
    broken = break_vertices(dtg, (v for v in dtg.vertices if colours[v] is Colour.RED))
    for u, v in broken.edges:
        if colours[u] != colours[v]:
            raise AssertionError(f"edge {u}-{v} joins different colours after breaking red")
    reference = _dotted_location_graph(dtg.base)
    out = {}
    for c in PRIMARY_COLOURS:
        sub = broken.subgraph(v for v in broken.vertices if colours[v] is c)
        relabelled = location_graph(sub, dtg)
        if set(relabelled.vertices) != set(reference.vertices) or {frozenset(e) for e in relabelled.edges} != {
            frozenset(e) for e in reference.edges
        }:
            raise AssertionError(f"{c.name} copy is not the dotted base graph")
        out[c] = sub
    return out


@dataclass(frozen=True)
class RolePartition:
    computation: frozenset
    traps: frozenset
    dummies: frozenset
    white_traps: frozenset
    black_traps: frozenset

    def role(self, v: int) -> str:
        if v in self.computation:
            return "computation"
        if v in self.traps:
            return "trap"
        return "dummy"


def _partition(resource: LocatedGraph, colours: Sequence[Colour]) -> RolePartition:
    comp, white, black, dummies = set(), set(), set(), set()
    for v in resource.vertices:
        c = colours[v]
        primary = resource.location_of[v].is_primary
        if c is Colour.GREEN:
            comp.add(v)
        elif c is Colour.WHITE and primary:
            white.add(v)
        elif c is Colour.BLACK and not primary:
            black.add(v)
        else:
            dummies.add(v)
    return RolePartition(
        frozenset(comp), frozenset(white | black), frozenset(dummies), frozenset(white), frozenset(black)
    )


def role_partition(resource: LocatedGraph, col) -> RolePartition:
    """Computation (green), traps (white primaries, black added) and dummies (the rest).

    Works for a trap-coloured ``DT(G)`` and for role-assigned three dotted copies.
    """
    if isinstance(col, TrapColouring):
        bad = validate_trap_colouring(resource, col)
        if bad is not None:
            raise InputError(str(bad))
    return _partition(resource, col.colours)


def epsilon_set(loc: Location, g: Graph) -> frozenset[Location]:
    if loc.is_primary:
        if loc.key not in g:
            raise InputError(f"{loc!r} not in base graph")
        return frozenset((loc,))
    u, v = loc.endpoints(g)
    return frozenset((Location.primary(u), Location.primary(v)))


def is_icl(locs: Iterable[Location], g: Graph) -> bool:
    """Pairwise disjoint epsilon-sets."""
    seen: set = set()
    for loc in set(locs):
        eps = epsilon_set(loc, g)
        if seen & eps:
            return False
        seen |= eps
    return True


def greedy_icl_subset(locs: Iterable[Location], g: Graph, order: Sequence[Location] | None = None) -> list[Location]:
    """Scan ``locs`` and keep each location whose epsilon-set misses all kept ones.

    Default scan order is the canonical base-location order.  The result has
    at least ``ceil(len(locs) / (2c + 1))`` elements for max degree ``c``.
    """
    locs = set(locs)
    if order is None:
        rank = {loc: i for i, loc in enumerate(_canonical(g))}
        scan = sorted(locs, key=rank.__getitem__)
    else:
        scan = [loc for loc in order if loc in locs]
    taken: set = set()
    out = []
    for loc in scan:
        eps = epsilon_set(loc, g)
        if not eps & taken:
            out.append(loc)
            taken |= eps
    return out


def _canonical(g: Graph) -> list[Location]:
    return [Location.primary(v) for v in g.vertices] + [Location.added(u, v) for u, v in g.edges]


def icl_by_enumeration(locs: Sequence[Location], dtg: DottedTripleGraph) -> bool:
    """ICL by definition: every combination of local colourings extends globally.

    Local colourings of a set are its restrictions of the global trap-colourings;
    the locations are ICL iff the joint restrictions realise the full product.
    """
    locs = list(dict.fromkeys(locs))
    if len(locs) <= 1:
        return True
    joint = set()
    marginals: list[set] = [set() for _ in locs]
    for col in enumerate_trap_colourings(dtg):
        cs = col.colours
        key = tuple(tuple(cs[v] for v in dtg.sets[loc]) for loc in locs)
        joint.add(key)
        for m, part in zip(marginals, key):
            m.add(part)
    return len(joint) == int(np.prod([len(m) for m in marginals]))
