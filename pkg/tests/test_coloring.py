from __future__ import annotations

import itertools
import math
from collections import Counter

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _instances import PATH3, SINGLE_EDGE, TRIANGLE, base_graphs, colour_table
from dottedtriple.coloring import (
    Colour,
    TrapColouring,
    break_red,
    enumerate_trap_colourings,
    epsilon_set,
    greedy_icl_subset,
    icl_by_enumeration,
    is_icl,
    location_graph,
    role_partition,
    sample_trap_colouring,
    validate_trap_colouring,
)
from dottedtriple.errors import InputError
from dottedtriple.graph_core import Graph, Location, base_locations, break_vertices, dot, dotted_triple

W, B, G, R = Colour.WHITE, Colour.BLACK, Colour.GREEN, Colour.RED


class TestValidate:
    def test_figure_style_colouring(self):
        dtg = dotted_triple(PATH3)
        col = TrapColouring(dtg, {0: (W, B, G), 1: (G, W, B), 2: (B, G, W)})
        assert validate_trap_colouring(dtg, col) is None
        assert validate_trap_colouring(dtg, {v: c.value for v, c in col.as_dict().items()}) is None

    def test_two_whites(self):
        dtg = dotted_triple(SINGLE_EDGE)
        col = TrapColouring(dtg, {0: (W, B, G), 1: (W, B, G)}).as_dict()
        col[1] = W
        bad = validate_trap_colouring(dtg, col)
        assert bad.rule == "iii" and bad.vertex in (0, 1)

    def test_red_primary(self):
        dtg = dotted_triple(SINGLE_EDGE)
        col = TrapColouring(dtg, {0: (W, B, G), 1: (W, B, G)}).as_dict()
        col[4] = R
        bad = validate_trap_colouring(dtg, col)
        assert (bad.rule, bad.vertex) == ("i", 4)

    def test_wrong_added_colour(self):
        dtg = dotted_triple(SINGLE_EDGE)
        col = TrapColouring(dtg, {0: (W, B, G), 1: (W, B, G)}).as_dict()
        col[6] = R  # bridges two whites
        assert validate_trap_colouring(dtg, col).rule == "iv"

    def test_missing_vertex(self):
        dtg = dotted_triple(SINGLE_EDGE)
        with pytest.raises(InputError):
            validate_trap_colouring(dtg, {0: W})

    def test_bad_permutation(self):
        with pytest.raises(InputError):
            TrapColouring(dotted_triple(SINGLE_EDGE), {0: (W, W, G), 1: (W, B, G)})


class TestSampling:
    def test_exactly_36_on_single_edge(self):
        dtg = dotted_triple(SINGLE_EDGE)
        seen = {col.colours for col in enumerate_trap_colourings(dtg)}
        assert len(seen) == 36
        assert all(validate_trap_colouring(dtg, c) is None for c in enumerate_trap_colourings(dtg))

    def test_uniform_over_36(self):
        dtg = dotted_triple(SINGLE_EDGE)
        rng = np.random.default_rng(2024)
        counts = Counter(sample_trap_colouring(dtg, rng).colours for _ in range(100_000))
        assert len(counts) == 36
        assert all(abs(k / 100_000 - 1 / 36) < 0.01 for k in counts.values())

    def test_marginals(self):
        dtg = dotted_triple(SINGLE_EDGE)
        rng = np.random.default_rng(5)
        samples = [sample_trap_colouring(dtg, rng).colours for _ in range(10_000)]
        assert abs(np.mean([s[0] == W for s in samples]) - 1 / 3) < 0.02
        for a in dtg.added_vertices:
            assert abs(np.mean([s[a] == B for s in samples]) - 1 / 9) < 0.02

    def test_added_set_counts(self):
        dtg = dotted_triple(TRIANGLE)
        for col in itertools.islice(enumerate_trap_colourings(dtg), 50):
            for loc in dtg.locations:
                if not loc.is_primary:
                    counts = Counter(col.colours[a] for a in dtg.sets[loc])
                    assert counts == {W: 1, B: 1, G: 1, R: 6}


class TestBreakRed:
    def test_path3_copies(self):
        dtg = dotted_triple(PATH3)
        col = sample_trap_colouring(dtg, 3)
        copies = break_red(dtg, col)
        for sub in copies.values():
            assert (len(sub.vertices), len(sub.edges)) == (5, 4)

    def test_single_edge_paths(self):
        dtg = dotted_triple(SINGLE_EDGE)
        for sub in break_red(dtg, sample_trap_colouring(dtg, 0)).values():
            h = nx.Graph(list(sub.edges))
            assert nx.is_isomorphic(h, nx.path_graph(3))

    def test_edgeless(self):
        dtg = dotted_triple(Graph((0, 1, 2)))
        for sub in break_red(dtg, sample_trap_colouring(dtg, 0)).values():
            assert len(sub.vertices) == 3 and not sub.edges

    def test_invalid(self):
        dtg = dotted_triple(SINGLE_EDGE)
        with pytest.raises(InputError):
            break_red(dtg, {v: "W" for v in dtg.vertices})


class TestRoles:
    def test_path3_partition(self):
        dtg = dotted_triple(PATH3)
        col = sample_trap_colouring(dtg, 11)
        part = role_partition(dtg, col)
        assert (len(part.white_traps), len(part.black_traps)) == (3, 2)
        broken = break_vertices(dtg, part.dummies)
        green = broken.subgraph(part.computation)
        relabelled = location_graph(green, dtg)
        reference = location_graph(dot(PATH3).graph, dot(PATH3))
        assert set(relabelled.vertices) == set(reference.vertices)
        assert {frozenset(e) for e in relabelled.edges} == {frozenset(e) for e in reference.edges}
        assert all(broken.degree(t) == 0 for t in part.traps)

    def test_single_edge_partition(self):
        dtg = dotted_triple(SINGLE_EDGE)
        part = role_partition(dtg, sample_trap_colouring(dtg, 1))
        assert (len(part.computation), len(part.white_traps), len(part.black_traps), len(part.dummies)) == (3, 2, 1, 9)

    def test_one_trap_per_location(self):
        dtg = dotted_triple(TRIANGLE)
        part = role_partition(dtg, sample_trap_colouring(dtg, 9))
        for vs in dtg.sets.values():
            assert len(part.traps & set(vs)) == 1
        assert part.role(next(iter(part.traps))) == "trap"

    @given(base_graphs(max_n=6), st.integers(0, 2**32 - 1))
    @settings(max_examples=100)
    def test_random_pairs(self, g, seed):
        dtg = dotted_triple(g)
        col = sample_trap_colouring(dtg, seed)
        assert validate_trap_colouring(dtg, col) is None
        break_red(dtg, col)
        part = role_partition(dtg, col)
        broken = break_vertices(dtg, part.dummies)
        assert all(broken.degree(t) == 0 for t in part.traps)
        assert part.computation | part.traps | part.dummies == set(dtg.vertices)
        assert not (part.computation & part.traps or part.traps & part.dummies or part.computation & part.dummies)


class TestICL:
    def test_epsilon_sets(self):
        assert epsilon_set(Location.primary(1), PATH3) == {Location.primary(1)}
        assert epsilon_set(Location.added(1, 2), PATH3) == {Location.primary(1), Location.primary(2)}

    def test_examples(self):
        assert is_icl([Location.primary(0), Location.primary(1)], PATH3)
        assert not is_icl([Location.primary(1), Location.added(1, 2)], PATH3)
        assert not is_icl([Location.added(0, 1), Location.added(1, 2)], PATH3)
        assert is_icl([], PATH3)

    def test_greedy_examples(self):
        prim = [Location.primary(v) for v in PATH3.vertices]
        assert greedy_icl_subset(prim, PATH3) == prim
        assert greedy_icl_subset([Location.added(0, 1)], PATH3) == [Location.added(0, 1)]

    def test_greedy_ten_locations_degree_two(self):
        g = Graph(tuple(range(5)), ((0, 1), (1, 2), (2, 3), (3, 4), (0, 4)))
        locs = list(base_locations(g))
        assert len(locs) == 10 and g.max_degree() == 2
        assert len(greedy_icl_subset(locs, g)) >= 2

    @given(base_graphs(max_n=8, min_n=2), st.data())
    @settings(max_examples=200)
    def test_greedy_bound(self, g, data):
        locs = data.draw(st.sets(st.sampled_from(base_locations(g)), min_size=1))
        sub = greedy_icl_subset(locs, g)
        c = g.max_degree()
        assert set(sub) <= locs and is_icl(sub, g)
        assert len(sub) >= math.ceil(len(locs) / (2 * c + 1))

    @pytest.mark.parametrize(
        "g",
        [
            SINGLE_EDGE,
            PATH3,
            TRIANGLE,
            Graph((0, 1, 2, 3), ((0, 1), (1, 2), (2, 3))),
            Graph((0, 1, 2, 3), ((0, 1), (0, 2), (0, 3))),
            Graph((0, 1, 2, 3), ((0, 1), (2, 3))),
        ],
        ids=["edge", "path3", "triangle", "path4", "star", "matching"],
    )
    def test_pairwise_rule_matches_completion(self, g):
        dtg = dotted_triple(g)
        table = colour_table(dtg)
        locs = list(base_locations(g))
        for k in range(2, min(4, len(locs)) + 1):
            for subset in itertools.combinations(locs, k):
                cols = [list(dtg.sets[loc]) for loc in subset]
                joint = len({tuple(row) for row in table[:, sum(cols, [])]})
                product = math.prod(len({tuple(r) for r in table[:, c]}) for c in cols)
                assert (joint == product) == is_icl(subset, g), subset

    def test_definition_oracle_agrees(self):
        dtg = dotted_triple(PATH3)
        locs = list(base_locations(PATH3))
        for a, b in itertools.combinations(locs, 2):
            assert icl_by_enumeration([a, b], dtg) == is_icl([a, b], PATH3)
