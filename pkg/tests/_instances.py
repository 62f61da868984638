"""Shared small instances and generators for the test-suite."""

from __future__ import annotations

import itertools

import numpy as np
from hypothesis import strategies as st

from dottedtriple.graph_core import Graph
from dottedtriple.mbqc import MeasurementPattern, _check_flow, bridge_pattern
from dottedtriple.errors import InputError

SINGLE_EDGE = Graph((0, 1), ((0, 1),))
PATH3 = Graph((0, 1, 2), ((0, 1), (1, 2)))
TRIANGLE = Graph((0, 1, 2), ((0, 1), (1, 2), (0, 2)))
TWO_EDGES = Graph((0, 1, 2, 3), ((0, 1), (2, 3)))


def wire_pattern(phi: int = 1) -> MeasurementPattern:
    """Single-edge base: input 0 measured at ``phi``, quantum output on 1."""
    return bridge_pattern(MeasurementPattern.from_flow(SINGLE_EDGE, {0: phi}, {0: 1}, [0], [1], [0]))


def readout_pattern() -> MeasurementPattern:
    """Single-edge base with every qubit measured; the readout bit is always 0."""
    return bridge_pattern(MeasurementPattern.from_flow(SINGLE_EDGE, {0: 2, 1: 2}, {0: 1}, [0, 1], [], [0], [1]))


def path_wire(n: int, angles: dict | None = None) -> tuple[Graph, MeasurementPattern]:
    g = Graph(tuple(range(n)), tuple((i, i + 1) for i in range(n - 1)))
    base = MeasurementPattern.from_flow(g, angles or {}, {i: i + 1 for i in range(n - 1)}, list(range(n - 1)), [n - 1], [0])
    return g, bridge_pattern(base)


def random_graph(rng: np.random.Generator, n_max: int = 12, n_min: int = 1) -> Graph:
    n = int(rng.integers(n_min, n_max + 1))
    p = float(rng.random())
    edges = [(u, v) for u, v in itertools.combinations(range(n), 2) if rng.random() < p]
    return Graph(tuple(range(n)), tuple(edges))


@st.composite
def base_graphs(draw, max_n: int = 6, min_n: int = 1):
    n = draw(st.integers(min_n, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Graph(tuple(range(n)), tuple(chosen))


def random_flow_pattern(rng: np.random.Generator, max_n: int = 4, tries: int = 200) -> MeasurementPattern:
    """A random base-graph pattern with a valid causal flow (rejection sampling)."""
    for _ in range(tries):
        g = random_graph(rng, max_n, 2)
        verts = list(g.vertices)
        k = int(rng.integers(1, len(verts)))
        outputs = [int(v) for v in rng.choice(verts, size=k, replace=False)]
        measured = [v for v in verts if v not in outputs]
        order = [int(v) for v in rng.permutation(measured)]
        flow = {}
        used = set()
        ok = True
        for i in order:
            options = [f for f in g.neighbours(i) if f not in used]
            if not options:
                ok = False
                break
            flow[i] = int(rng.choice(options))
            used.add(flow[i])
        if not ok:
            continue
        try:
            _check_flow(g, flow, order, outputs)
        except InputError:
            continue
        angles = {v: int(rng.integers(0, 8)) for v in order}
        inputs = [v for v in verts if v not in flow.values()]
        return MeasurementPattern.from_flow(g, angles, flow, order, outputs, inputs)
    raise RuntimeError("no flow pattern found")


def colour_table(dtg) -> np.ndarray:
    """Every trap-colouring as a row of colour letters (independent of the sampler)."""
    rows = []
    for perms in itertools.product(itertools.permutations("WBG"), repeat=len(dtg.base)):
        by_vertex = dict(zip(dtg.base.vertices, perms))
        row = []
        for v in dtg.vertices:
            loc = dtg.location_of[v]
            if loc.is_primary:
                row.append(by_vertex[loc.key][dtg.copy_index[v] - 1])
        for a in dtg.added_vertices:
            u, w = dtg.location_of[a].endpoints(dtg.base)
            k = dtg.copy_index[a] - 1
            cu, cw = by_vertex[u][k // 3], by_vertex[w][k % 3]
            row.append(cu if cu == cw else "R")
        rows.append(row)
    return np.array(rows)
