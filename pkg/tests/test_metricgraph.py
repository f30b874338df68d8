"""Exact-rational metric graphs checked against a networkx oracle."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ccl.errors import DisconnectedPair, ParameterOutOfRange
from ccl.metricgraph import (
    Ball,
    GeodesicPath,
    GraphPoint,
    MetricGraph,
    ball,
    canonical_geodesic,
    shortest_distance,
)
from oracles import nx_all_distances, nx_distance, random_metric_graph

RATIONAL_WEIGHTS = (1, Fraction(1, 2), Fraction(3, 2), 2, Fraction(5, 3))


def cycle(m):
    return MetricGraph(m, [(i, (i + 1) % m, 1) for i in range(m)])


def test_distances_match_networkx_on_rational_weights():
    """All-pairs distances agree with the oracle on a chorded random tree."""
    rng = random.Random(20714)
    g = MetricGraph(60, random_metric_graph(rng, 60, 40, RATIONAL_WEIGHTS))
    want = nx_all_distances(g)
    for u in range(g.n):
        for v in range(g.n):
            assert g.distance(u, v) == want[u][v]


def test_distances_match_networkx_above_scipy_cutoff():
    """Graphs with >= 320 vertices switch backend; results must not."""
    rng = random.Random(977)
    g = MetricGraph(340, random_metric_graph(rng, 340, 200, RATIONAL_WEIGHTS))
    want = nx_all_distances(g)
    for u in range(0, g.n, 17):
        for v in range(g.n):
            assert g.distance(u, v) == want[u][v]


def test_prefetch_rows_agrees_with_single_rows():
    rng = random.Random(5)
    g = MetricGraph(330, random_metric_graph(rng, 330, 60))
    h = MetricGraph(330, list(g.edges))
    g.prefetch_rows(range(0, 330, 11))
    for src in range(0, 330, 11):
        assert g.int_row(src) == h.int_row(src)


def test_disconnected_pair_raises():
    g = MetricGraph(4, [(0, 1, 1), (2, 3, 1)])
    assert g.same_component(0, 1)
    assert not g.same_component(1, 2)
    with pytest.raises(DisconnectedPair):
        g.distance(0, 3)


def test_construction_rejects_bad_edges():
    with pytest.raises(ValueError):
        MetricGraph(3, [(0, 0, 1)])
    with pytest.raises(ValueError):
        MetricGraph(3, [(0, 1, 0)])
    with pytest.raises(ValueError):
        MetricGraph(3, [(0, 7, 1)])


def test_parallel_edges_take_the_minimum():
    g = MetricGraph(2, [(0, 1, 5), (0, 1, 2), (1, 0, 3)])
    assert g.distance(0, 1) == 2


class TestCanonicalGeodesic:
    def test_square_breaks_ties_by_vertex_order(self):
        p = canonical_geodesic(cycle(4), 0, 2)
        assert p.vertices == [0, 1, 2]

    def test_six_cycle_prefix_property(self):
        """The canonical path to an interior vertex is a literal prefix."""
        g = cycle(6)
        long = canonical_geodesic(g, 0, 3)
        short = canonical_geodesic(g, 0, 2)
        assert long.vertices == [0, 1, 2, 3]
        assert long.vertices[: len(short.vertices)] == short.vertices
        assert long.edge_ids[: len(short.edge_ids)] == short.edge_ids

    def test_total_equals_distance(self):
        rng = random.Random(11)
        g = MetricGraph(25, random_metric_graph(rng, 25, 15, RATIONAL_WEIGHTS))
        for u in range(g.n):
            for v in range(g.n):
                assert canonical_geodesic(g, u, v).total == g.distance(u, v)

    def test_trivial_path(self):
        p = canonical_geodesic(cycle(4), 3, 3)
        assert p.vertices == [3]
        assert p.total == 0
        assert p.breakpoints() == [0, 1]


class TestGeodesicPathEval:
    def setup_method(self):
        # 0 --1-- 1 --1/2-- 2 --3/2-- 3, total length 3
        self.g = MetricGraph(
            4, [(0, 1, 1), (1, 2, Fraction(1, 2)), (2, 3, Fraction(3, 2))]
        )
        self.p = canonical_geodesic(self.g, 0, 3)

    def test_endpoints(self):
        assert self.p.eval(0) == GraphPoint.at_vertex(0)
        assert self.p.eval(1) == GraphPoint.at_vertex(3)

    def test_interior_vertex_hit_exactly(self):
        assert self.p.eval(Fraction(1, 3)) == GraphPoint.at_vertex(1)
        assert self.p.eval(Fraction(1, 2)) == GraphPoint.at_vertex(2)

    def test_midedge_point(self):
        q = self.p.eval(Fraction(3, 4))
        assert not q.is_vertex
        # arclength 9/4 sits 3/4 into the last edge
        assert shortest_distance(self.g, q, GraphPoint.at_vertex(2)) == Fraction(3, 4)
        assert shortest_distance(self.g, q, GraphPoint.at_vertex(3)) == Fraction(3, 4)

    def test_breakpoints_are_normalized_cums(self):
        assert self.p.breakpoints() == [
            Fraction(0),
            Fraction(1, 3),
            Fraction(1, 2),
            Fraction(1),
        ]

    def test_reversed(self):
        r = self.p.reversed()
        assert r.vertices == [3, 2, 1, 0]
        assert r.total == self.p.total

    def test_eval_out_of_range(self):
        with pytest.raises(ParameterOutOfRange):
            self.p.eval(Fraction(5, 4))


def test_shortest_distance_between_edge_points():
    g = cycle(6)
    p = GraphPoint.on_edge(g, 0, Fraction(1, 2))  # middle of edge 0-1
    q = GraphPoint.on_edge(g, 3, Fraction(1, 2))  # middle of edge 3-4
    assert shortest_distance(g, p, q) == 3
    assert shortest_distance(g, p, p) == 0


def test_ball_extraction_on_cycle():
    g = cycle(6)
    b = ball(g, 0, 2)
    assert isinstance(b, Ball)
    assert b.graph.n == 5  # vertex 3 is excluded
    assert sorted(b.old_of) == [0, 1, 2, 4, 5]
    center_new = b.new_of[0]
    assert b.center == center_new
    assert b.center_dist[b.new_of[2]] == 2
    # the opposite arc is cut, so in-ball distance grows
    assert b.graph.distance(b.new_of[2], b.new_of[4]) == 4
    assert b.core(1) == [i for i in range(5) if b.center_dist[i] <= 1]
    assert b.core_radius(Fraction(1, 2)) == Fraction(3, 2)


def test_ball_radius_must_be_nonnegative():
    with pytest.raises(ParameterOutOfRange):
        ball(cycle(4), 0, -1)


def test_serialize_round_trip():
    g = MetricGraph(
        3,
        [(0, 1, Fraction(1, 2)), (1, 2, 2)],
        labels={0: "origin", 2: "far"},
    )
    h = MetricGraph.deserialize(g.serialize())
    assert h.n == g.n
    assert h.edges == g.edges
    assert h.labels == g.labels
    assert h.serialize() == g.serialize()


@st.composite
def seeded_graph(draw):
    seed = draw(st.integers(0, 10**6))
    n = draw(st.integers(2, 24))
    rng = random.Random(seed)
    extra = rng.randrange(0, n)
    return MetricGraph(n, random_metric_graph(rng, n, extra, RATIONAL_WEIGHTS))


class TestMetricInvariants:
    """Metric-space axioms hold exactly, not approximately."""

    @settings(max_examples=40, deadline=None)
    @given(seeded_graph())
    def test_symmetry_and_identity(self, g):
        for u in range(g.n):
            assert g.distance(u, u) == 0
            for v in range(u + 1, g.n):
                assert g.distance(u, v) == g.distance(v, u) > 0

    @settings(max_examples=25, deadline=None)
    @given(seeded_graph(), st.randoms(use_true_random=False))
    def test_triangle_inequality(self, g, rng):
        for _ in range(30):
            u, v, w = (rng.randrange(g.n) for _ in range(3))
            assert g.distance(u, w) <= g.distance(u, v) + g.distance(v, w)

    @settings(max_examples=20, deadline=None)
    @given(seeded_graph(), st.randoms(use_true_random=False))
    def test_distance_matches_oracle(self, g, rng):
        u = rng.randrange(g.n)
        v = rng.randrange(g.n)
        assert g.distance(u, v) == nx_distance(g, u, v)
