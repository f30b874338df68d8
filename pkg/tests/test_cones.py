"""Cone attachments: validation, distances, and the extended combing."""

from fractions import Fraction

import pytest

from ccl.combing import CanonicalCombing, TableCombing
from ccl.cones import (
    ConeSpec,
    GraphCone,
    SphericalCone,
    build_coned_space,
    cone_crossings,
    cone_entry_profile,
    develop_spherical_point,
    extend_bicombing,
    parse_cone_spec,
    spherical_cone_distance,
    validate_cone_spec,
)
from ccl.errors import (
    ConfigError,
    InvalidConeSpec,
    NotGeodesicInput,
    ParameterOutOfRange,
)
from ccl.metricgraph import GeodesicPath, MetricGraph, canonical_geodesic
from oracles import cosine_cone_distance


def cycle(m):
    return MetricGraph(m, [(i, (i + 1) % m, 1) for i in range(m)])


class TestSphericalDistance:
    def test_apex_route_beyond_pi_is_exact(self):
        d = spherical_cone_distance(2, Fraction(1, 2), 1, 4)
        assert d == Fraction(3)
        assert isinstance(d, Fraction)

    def test_matches_law_of_cosines_below_pi(self):
        for (D, s, t, dx) in [
            (2, 1, 1, 1.0),
            (2, Fraction(1, 2), Fraction(3, 4), 2.0),
            (5, Fraction(1, 5), 1, 3.0),
            (1, 1, 1, 3.1),
        ]:
            got = spherical_cone_distance(D, s, t, dx)
            want = cosine_cone_distance(D, s, t, dx)
            assert abs(float(got) - want) <= 1e-9

    def test_zero_radius_point_sits_at_the_apex(self):
        assert spherical_cone_distance(3, 0, Fraction(2, 3), 1) == 2

    def test_symmetry_in_the_two_radii(self):
        a = spherical_cone_distance(2, Fraction(1, 3), 1, 2)
        b = spherical_cone_distance(2, 1, Fraction(1, 3), 2)
        assert abs(float(a) - float(b)) < 1e-12

    def test_monotone_in_the_angle(self):
        prev = -1.0
        for k in range(1, 8):
            d = float(spherical_cone_distance(2, 1, 1, k * 0.45))
            assert d >= prev
            prev = d

    def test_develop_returns_polar_coordinates(self):
        r0, a0 = develop_spherical_point(2, 1, 1, 1, 0)
        r1, a1 = develop_spherical_point(2, 1, 1, 1, 1)
        rm, _ = develop_spherical_point(2, 1, 1, 1, Fraction(1, 2))
        assert (r0, a0) == (2.0, 0.0)
        assert r1 == pytest.approx(2.0)
        assert a1 == pytest.approx(1.0)
        assert rm < 2.0  # the chord dips inside the circle


class TestValidation:
    def test_graph_cone_on_cycle_passes(self):
        spec = ConeSpec(cycle(6), {"p": [0, 1], "q": [3, 4]}, GraphCone(2))
        v = validate_cone_spec(spec)
        assert v.ok
        names = {c.name for c in v.checks}
        assert names == {
            "nearest-point:p", "radial-homogeneity:p",
            "decreasing-distance:p", "strict-bound:p",
            "nearest-point:q", "radial-homogeneity:q",
            "decreasing-distance:q", "strict-bound:q",
        }

    def test_strict_bound_needs_d_above_fiber_diameter(self):
        # fiber diameter 2 equals D: the strict-bound check must fail
        spec = ConeSpec(cycle(6), {"p": [0, 1, 2]}, GraphCone(2))
        v = validate_cone_spec(spec)
        assert not v.ok
        assert [c.name for c in v.failed()] == ["strict-bound:p"]
        assert v.failed()[0].witness["sup"] == 2

    def test_spherical_cone_radius_controls_decreasing_distance(self):
        c8 = cycle(8)
        fib = {"eq": list(range(8))}
        assert validate_cone_spec(ConeSpec(c8, fib, SphericalCone(2))).ok
        v = validate_cone_spec(ConeSpec(c8, fib, SphericalCone(Fraction(3, 2))))
        assert [c.name for c in v.failed()] == ["decreasing-distance:eq"]
        w = v.failed()[0].witness
        assert w["d_base"] == 3
        assert float(w["d_cone"]) < 3

    def test_overlapping_fibers_rejected(self):
        with pytest.raises(InvalidConeSpec):
            ConeSpec(cycle(6), {"p": [0, 1], "q": [1, 2]}, GraphCone(2))

    def test_empty_fiber_rejected(self):
        with pytest.raises(InvalidConeSpec):
            ConeSpec(cycle(6), {"p": []}, GraphCone(2))

    def test_nonpositive_radius_rejected(self):
        with pytest.raises(InvalidConeSpec):
            GraphCone(0)
        with pytest.raises(InvalidConeSpec):
            SphericalCone(-1)


@pytest.fixture()
def two_cones():
    base = cycle(6)
    spec = ConeSpec(base, {"p": [0, 1], "q": [3, 4]}, GraphCone(2))
    return build_coned_space(spec)


class TestConedSpace:
    def test_apex_ids_follow_the_base(self, two_cones):
        sp = two_cones
        assert sp.graph.n == 8
        assert not sp.is_base_vertex(sp.apex("p"))
        assert sp.is_base_vertex(5)
        assert sp.graph.distance(sp.apex("p"), 0) == 2
        assert sp.graph.distance(sp.apex("p"), 1) == 2

    def test_cone_distance_interpolates_radially(self, two_cones):
        sp = two_cones
        # same attachment point: radial difference
        assert sp.cone_distance("p", 0, 0, Fraction(1, 2), 1) == 1
        # distinct attachments: inside a graph cone only the apex connects
        assert sp.cone_distance("p", 0, 1, 1, 1) == 4
        assert sp.cone_distance("p", 0, 1, Fraction(1, 2), 1) == 3

    def test_attachment_distances(self, two_cones):
        d = two_cones.attachment_distances("q")
        assert d[(3, "apex")] == 2
        assert d[(4, "apex")] == 2
        assert d[(3, 4)] == 4

    def test_serialize_parse_round_trip(self, two_cones):
        spec = two_cones.spec
        back = parse_cone_spec(two_cones.serialize())
        assert back.base.edges == spec.base.edges
        assert back.fibers == spec.fibers
        for label in spec.labels():
            assert back.metrics[label].kind == spec.metrics[label].kind
            assert back.metrics[label].D == spec.metrics[label].D


class TestExtendedCombing:
    def test_base_pairs_keep_their_base_paths(self, two_cones):
        sp = two_cones
        gamma = extend_bicombing(sp, CanonicalCombing(sp.base))
        for (u, v) in [(0, 3), (2, 5), (1, 4)]:
            assert gamma.path(u, v).vertices == canonical_geodesic(
                sp.base, u, v
            ).vertices

    def test_apex_descends_at_the_nearest_attachment(self, two_cones):
        sp = two_cones
        gamma = extend_bicombing(sp, CanonicalCombing(sp.base))
        p = gamma.path(sp.apex("p"), 2)
        assert p.vertices == [sp.apex("p"), 1, 2]
        assert p.total == 3

    def test_apex_to_apex_crosses_twice(self, two_cones):
        sp = two_cones
        gamma = extend_bicombing(sp, CanonicalCombing(sp.base))
        p = gamma.path(sp.apex("p"), sp.apex("q"))
        assert cone_crossings(sp, p) == 2
        assert p.total == sp.graph.distance(sp.apex("p"), sp.apex("q"))

    def test_base_paths_have_no_crossings(self, two_cones):
        sp = two_cones
        gamma = extend_bicombing(sp, CanonicalCombing(sp.base))
        for u in range(6):
            for v in range(6):
                assert cone_crossings(sp, gamma.path(u, v)) == 0

    def test_non_geodesic_base_combing_is_rejected(self, two_cones):
        sp = two_cones
        table = TableCombing(sp.base)
        for u in range(6):
            for v in range(6):
                table.set_path(canonical_geodesic(sp.base, u, v))
        table.set_path(GeodesicPath(sp.base, [0, 1, 0, 1], [0, 0, 0]))
        gamma = extend_bicombing(sp, table)
        with pytest.raises(NotGeodesicInput):
            gamma.path(0, 1)

    def test_combing_must_live_on_the_base(self, two_cones):
        sp = two_cones
        with pytest.raises(NotGeodesicInput):
            extend_bicombing(sp, CanonicalCombing(sp.graph))


class TestEntryProfile:
    def test_base_endpoints(self, two_cones):
        prof = cone_entry_profile(two_cones, 0, 4)
        assert (prof.t1, prof.t2, prof.t3) == (0, 2, 2)

    def test_cone_point_endpoints(self, two_cones):
        prof = cone_entry_profile(
            two_cones, ("p", 0, 2), ("q", 4, 1)
        )
        assert (prof.t1, prof.t2, prof.t3) == (2, 4, 5)
        assert prof.breakpoints == (Fraction(2, 5), Fraction(4, 5))

    def test_cone_height_must_fit_the_radius(self, two_cones):
        with pytest.raises(ParameterOutOfRange):
            cone_entry_profile(two_cones, ("p", 0, 3), 4)
