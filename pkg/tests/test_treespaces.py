"""Spiked balls, pushouts, coalescences, and combings glued along trees."""

from fractions import Fraction

import pytest

from ccl.certify import SamplePlan, check_gcc, check_quasigeodesic
from ccl.errors import (
    BasepointNotFixed,
    CombingDomainMismatch,
    ConfigError,
    RadiusTooSmall,
    SameOrbitBasepoints,
)
from ccl.groups import FreeAbelian, FreeGroup, cayley_ball
from ccl.metricgraph import MetricGraph, canonical_geodesic
from ccl.treespaces import (
    Amalgam,
    CombinedCombing,
    HNN,
    Prong,
    build_coalescence,
    build_pushout,
    build_spike,
    canonical_family,
    equivariant_family_check,
    glue_spaces,
    parse_tree_of_spaces,
    stabilizer_report,
    structural_report,
    subdivide_ball,
    transported_family,
)

Z_A = FreeAbelian(1, ("a",))
Z_B = FreeAbelian(1, ("b",))
AMALGAM = Amalgam(Z_A, Z_B)
HNN_Z2 = HNN(FreeAbelian(2), ("edge", "x"), ("edge", "y"))


def cycle(m):
    return MetricGraph(m, [(i, (i + 1) % m, 1) for i in range(m)])


class TestSubdivision:
    def test_vertex_count_adds_one_midpoint_per_edge(self):
        ball = cayley_ball(FreeGroup(2), radius=2, action_radius=0)
        sub = subdivide_ball(ball)
        assert ball.graph.n == 17
        assert len(ball.graph.edges) == 16
        assert sub.graph.n == 33

    def test_distances_are_unchanged_on_original_vertices(self):
        ball = cayley_ball(FreeAbelian(1, ("a",)), radius=2, action_radius=0)
        sub = subdivide_ball(ball)
        for u in range(ball.graph.n):
            for v in range(ball.graph.n):
                assert sub.graph.distance(u, v) == ball.graph.distance(u, v)

    def test_midpoints_sit_half_way(self):
        ball = cayley_ball(FreeAbelian(1, ("a",)), radius=1, action_radius=0)
        sub = subdivide_ball(ball)
        mid = sub.mid_of[(ball.spec.identity, "a")]
        assert sub.graph.distance(0, mid) == Fraction(1, 2)


class TestSpikes:
    def test_one_tip_per_orbit_point(self):
        ball = cayley_ball(FreeAbelian(1, ("a",)), radius=2, action_radius=0)
        spike = build_spike(ball, [Prong("x", 0, None)])
        # the basepoint orbit meets every ball vertex
        assert spike.graph.n == ball.graph.n * 2
        for (_, tip, attach) in spike.tip_items():
            assert spike.graph.degree(tip) == 1
            assert spike.graph.distance(tip, attach) == 1

    def test_tip_to_tip_goes_through_the_base(self):
        ball = cayley_ball(FreeAbelian(1, ("a",)), radius=2, action_radius=0)
        spike = build_spike(ball, [Prong("x", 0, None)])
        items = spike.tip_items()
        (_, tip_a, at_a) = items[0]
        (_, tip_b, at_b) = items[1]
        base_d = spike.base.distance(at_a, at_b)
        assert spike.graph.distance(tip_a, tip_b) == base_d + 2

    def test_nontrivial_subgroup_cannot_fix_a_regular_basepoint(self):
        ball = cayley_ball(FreeAbelian(2), radius=2, action_radius=0)
        sub = ball.spec.subgroup("H", ("x",))
        with pytest.raises(BasepointNotFixed):
            build_spike(ball, [Prong("x", 0, sub)])

    def test_duplicate_prong_names_rejected(self):
        ball = cayley_ball(FreeAbelian(1, ("a",)), radius=1, action_radius=0)
        with pytest.raises(ConfigError):
            build_spike(ball, [Prong("x", 0, None), Prong("x", 1, None)])


@pytest.fixture(scope="module")
def pushout_tos():
    return build_pushout(AMALGAM, radius=4, tree_radius=2, action_radius=1)


@pytest.fixture(scope="module")
def coalescence_tos():
    return build_coalescence(HNN_Z2, radius=2, tree_radius=2, action_radius=1)


class TestPushout:
    @pytest.fixture
    def tos(self, pushout_tos):
        return pushout_tos

    def test_census(self, tos):
        assert tos.graph.n == 171
        assert tos.tree.n == 91
        assert len(tos.copies) == 10
        assert len(tos.vertex_spaces) == 10
        assert len(tos.gluing_point) == 81

    def test_structural_suite_is_clean(self, tos):
        rep = structural_report(tos)
        assert rep.ok
        assert rep.failed() == []
        assert sorted(c.name for c in rep.checks) == [
            "gluing-fibers-singleton",
            "spaces-match-tree-stars",
            "tree-acyclic-connected",
            "tree-bipartite",
            "vertex-spaces-convex",
            "xi-total",
        ]

    def test_stabilizers_of_gluing_vertices_are_trivial(self, tos):
        rep = stabilizer_report(tos)
        assert rep["ok"]
        assert rep["construction"] == "pushout"
        assert rep["expected_generators"] == []

    def test_tips_identify_across_copies(self, tos):
        """Interior gluing vertices are shared by exactly two copies;
        truncation-frontier ones stay pendant."""
        for word, expect in [("1", 2), ("a", 2), ("a^-3", 2),
                             ("b", 1), ("a b", 1)]:
            z = tos.tip_vertex(word)
            assert z is not None
            l = tos.xi[z]
            assert tos.t_kind[l] == "L"
            assert tos.gluing_point[l] == z
            neighbors = [y for (y, _, _) in tos.tree.adj[l]]
            assert len(neighbors) == expect, word
            for k in neighbors:
                assert z in tos.vertex_spaces[k]

    def test_interior_and_frontier_gluing_degrees(self, tos):
        from collections import Counter
        degrees = Counter(tos.tree.degree(l) for l in tos.l_vertices())
        assert degrees == {2: 9, 1: 72}

    def test_combined_combing_is_geodesic_within_radius(self, tos):
        family = canonical_family(tos)
        combined = CombinedCombing(tos, family)
        plan = SamplePlan(mode="sampled", n_samples=250, seed="pushout-qg")
        assert check_quasigeodesic(combined, 1, 0, plan).certified

    def test_transported_family_is_equivariant_here(self, tos):
        rep = equivariant_family_check(
            tos, transported_family(tos), sample_pairs=60, seed=3
        )
        assert rep.ok
        assert rep.violations == []
        assert rep.checked == 6225

    def test_radius_bounds(self):
        with pytest.raises(RadiusTooSmall):
            build_pushout(AMALGAM, radius=0, tree_radius=2)
        with pytest.raises(RadiusTooSmall):
            build_pushout(
                Amalgam(Z_A, Z_B, basepoint1="a^9"), radius=2, tree_radius=2
            )


class TestCoalescence:
    @pytest.fixture
    def tos(self, coalescence_tos):
        return coalescence_tos

    def test_structural_suite_is_clean(self, tos):
        rep = structural_report(tos)
        assert rep.ok, [c.name for c in rep.failed()]

    def test_gluing_vertices_join_at_most_two_spaces(self, tos):
        for l in tos.l_vertices():
            assert tos.tree.degree(l) in (1, 2)

    def test_stabilizer_report(self, tos):
        rep = stabilizer_report(tos)
        assert rep["ok"]
        assert rep["construction"] == "coalescence"

    def test_transported_family_fails_equivariance_on_plane_pieces(self, tos):
        rep = equivariant_family_check(
            tos, transported_family(tos), sample_pairs=60, seed=3
        )
        assert not rep.ok
        assert len(rep.violations) > 0

    def test_same_orbit_basepoints_rejected(self):
        with pytest.raises(SameOrbitBasepoints):
            build_coalescence(
                HNN(FreeAbelian(2), ("vertex", "1"), ("vertex", "x")),
                radius=2, tree_radius=2,
            )
        with pytest.raises(SameOrbitBasepoints):
            build_coalescence(
                HNN(FreeAbelian(2), ("edge", "x"), ("edge", "x")),
                radius=2, tree_radius=2,
            )

    def test_unknown_edge_generator_rejected(self):
        with pytest.raises(ConfigError):
            build_coalescence(
                HNN(FreeAbelian(2), ("edge", "x"), ("edge", "q")),
                radius=2, tree_radius=2,
            )


class TestGlueSpaces:
    def wedge(self):
        return glue_spaces([cycle(9), cycle(9)], [(0, 0, 1, 0)])

    def test_wedge_shape(self):
        tos = self.wedge()
        assert tos.graph.n == 17
        assert tos.tree.n == 3
        assert [tos.t_kind[t] for t in range(3)].count("K") == 2

    def test_combined_combing_restricts_to_the_pieces(self):
        tos = self.wedge()
        combined = CombinedCombing(tos, canonical_family(tos))
        spaces = sorted(tos.vertex_spaces.values(), key=len)
        verts = spaces[0]
        u, v = verts[1], verts[3]
        local = combined.path(u, v)
        assert set(local.vertices) <= set(verts)
        assert local.total == tos.graph.distance(u, v)

    def test_combined_combing_is_globally_geodesic(self):
        tos = self.wedge()
        combined = CombinedCombing(tos, canonical_family(tos))
        for u in range(tos.graph.n):
            for v in range(tos.graph.n):
                assert combined.path(u, v).total == tos.graph.distance(u, v)

    def test_gcc_transfer_constant_holds_on_the_wedge(self):
        tos = self.wedge()
        combined = CombinedCombing(tos, canonical_family(tos))
        plan = SamplePlan(mode="sampled", n_samples=400, seed="wedge-gcc")
        assert check_gcc(combined, E=3, C=21, plan=plan).certified

    def test_non_tree_pattern_rejected(self):
        pieces = [cycle(4), cycle(4), cycle(4)]
        joins = [(0, 0, 1, 0), (1, 2, 2, 0), (2, 2, 0, 2)]
        with pytest.raises(ConfigError):
            glue_spaces(pieces, joins)

    def test_bad_joins_rejected(self):
        with pytest.raises(ConfigError):
            glue_spaces([cycle(4)], [(0, 0, 0, 2)])
        with pytest.raises(ConfigError):
            glue_spaces([cycle(4), cycle(4)], [(0, 0, 5, 0)])
        with pytest.raises(ConfigError):
            glue_spaces([], [])


class TestFamilies:
    def test_family_keys_cover_the_vertex_spaces(self):
        tos = build_pushout(AMALGAM, radius=2, tree_radius=2)
        fam = canonical_family(tos)
        assert sorted(fam) == tos.k_vertices()

    def test_missing_family_entry_rejected(self):
        tos = build_pushout(AMALGAM, radius=2, tree_radius=2)
        with pytest.raises(CombingDomainMismatch):
            CombinedCombing(tos, {})

    def test_transported_family_needs_copies(self):
        tos = glue_spaces([cycle(4), cycle(4)], [(0, 0, 1, 0)])
        with pytest.raises(ConfigError):
            transported_family(tos)


def test_serialize_parse_round_trip():
    tos = build_pushout(AMALGAM, radius=2, tree_radius=2)
    back = parse_tree_of_spaces(tos.serialize())
    assert back.graph.n == tos.graph.n
    assert back.graph.edges == tos.graph.edges
    assert back.xi == tos.xi
    assert back.vertex_spaces == tos.vertex_spaces
    assert back.gluing_point == tos.gluing_point
    assert sorted(back.tree.edges) == sorted(tos.tree.edges)
