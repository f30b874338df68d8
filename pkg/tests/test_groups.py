"""Truncated Cayley graphs, coned-off balls, and the two probes."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ccl.errors import BallTooSmall, ConfigError, ElementOutsideBall
from ccl.groups import (
    ConedCayleySpec,
    DirectProduct,
    FiniteCyclic,
    FreeAbelian,
    FreeGroup,
    FreeProduct,
    cayley_ball,
    coned_cayley_ball,
    relative_diameter,
    relative_properness_probe,
    schwarz_milnor_probe,
    word_morphism,
)

F2 = FreeGroup(2)
Z2 = FreeAbelian(2)
Z3 = FreeAbelian(3, ("x", "y", "z"))
F2xZ = DirectProduct((FreeGroup(2, ("a", "b")), FreeAbelian(1, ("z",))))


class TestBallSizes:
    """Counted against the standard growth formulas."""

    def test_free_group_rank2(self):
        # 1 + 4 * sum 3^i
        assert len(cayley_ball(F2, radius=3).elements) == 53
        assert len(cayley_ball(F2, radius=5, action_radius=0).elements) == 485

    @pytest.mark.parametrize("r", [1, 2, 3, 4])
    def test_z2_diamond_count(self, r):
        b = cayley_ball(Z2, radius=r, action_radius=0)
        assert len(b.elements) == 2 * r * r + 2 * r + 1

    def test_z3(self):
        b = cayley_ball(Z3, radius=5, action_radius=0)
        assert len(b.elements) == 231

    def test_f2_cross_z(self):
        assert len(cayley_ball(F2xZ, radius=5, action_radius=0).elements) == 959
        assert len(cayley_ball(F2xZ, radius=6, action_radius=0).elements) == 2901

    def test_finite_cyclic_saturates(self):
        b = cayley_ball(FiniteCyclic(6), radius=10, action_radius=0)
        assert len(b.elements) == 6
        assert b.graph.distance(0, b.vertex("s^3")) == 3


def test_identity_is_vertex_zero():
    b = cayley_ball(F2, radius=2, action_radius=0)
    assert b.element(0) == F2.identity
    assert b.word_length[0] == 0
    assert b.vertex("1") == 0


def test_word_metric_equals_word_length():
    b = cayley_ball(F2, radius=4, action_radius=0)
    for vid, g in enumerate(b.elements):
        assert b.graph.distance(0, vid) == F2.word_length(g)


def test_vertex_outside_ball_raises():
    b = cayley_ball(F2, radius=2, action_radius=0)
    with pytest.raises(ElementOutsideBall):
        b.vertex("a b a")


def test_action_is_isometric_where_defined():
    """Left translation preserves distances whenever both images exist
    and the pairs are deep enough that truncation cannot distort them."""
    b = cayley_ball(Z2, radius=4, action_radius=2)
    assert b.action is not None
    checked = 0
    for name in ("x", "y", "x^-1"):
        i = b.action.index(name)
        for u in b.core(2):
            for v in b.core(2):
                gu = b.action.tabled(i, u)
                gv = b.action.tabled(i, v)
                if gu < 0 or gv < 0:
                    continue
                if b.word_length[u] + b.graph.distance(u, v) > b.radius:
                    continue
                if b.word_length[gu] + b.graph.distance(gu, gv) > b.radius:
                    continue
                assert b.graph.distance(gu, gv) == b.graph.distance(u, v)
                checked += 1
    assert checked > 100


def test_act_composes():
    b = cayley_ball(F2, radius=3, action_radius=2)
    g = F2.parse("a")
    h = F2.parse("b^-1")
    for vid in b.core(2):
        one = b.action.act(F2.mul(g, h), vid)
        two = b.action.act(g, b.action.act(h, vid))
        if one is not None and two is not None:
            assert one == two


class TestNormalForms:
    @given(st.lists(st.sampled_from(["a", "b", "a^-1", "b^-1"]), max_size=8))
    @settings(max_examples=60, deadline=None)
    def test_free_group_mul_inverse(self, letters):
        g = F2.parse(" ".join(letters)) if letters else F2.identity
        assert F2.mul(g, F2.inv(g)) == F2.identity
        assert F2.word_length(g) <= len(letters)

    @given(st.integers(-6, 6), st.integers(-6, 6))
    @settings(max_examples=30, deadline=None)
    def test_abelian_word_length_is_l1(self, i, j):
        g = Z2.parse("x^%d y^%d" % (i, j))
        assert Z2.word_length(g) == abs(i) + abs(j)

    def test_parse_name_round_trip(self):
        for word in ("1", "a", "a^-2 b^3", "b a b^-1"):
            g = F2.parse(word)
            assert F2.parse(F2.name_of(g)) == g

    def test_free_product_reduces_across_factors(self):
        P = FreeProduct((FreeAbelian(1, ("a",)), FreeAbelian(1, ("b",))))
        g = P.parse("a b b^-1 a")
        assert P.name_of(g) == "a^2"
        assert P.word_length(P.parse("a b a^-1")) == 3


class TestConedBalls:
    def test_z3_apex_count(self):
        plane = Z3.subgroup("H", ("x", "y"))
        cb = coned_cayley_ball(
            ConedCayleySpec(Z3, peripherals=(plane,), radius=3, action_radius=0)
        )
        # one coset of the plane per z-level in the ball
        assert cb.graph.n - len(cb.elements) == 7
        apex = cb.cone_vertex("H", Z3.identity)
        assert cb.graph.distance(0, apex) == Fraction(1, 2)

    def test_no_peripherals_means_no_apexes(self):
        cb = coned_cayley_ball(ConedCayleySpec(F2, radius=3, action_radius=0))
        assert cb.graph.n == len(cb.elements) == 53

    def test_relative_diameters_in_z3(self):
        plane = Z3.subgroup("H", ("x", "y"))
        cb = coned_cayley_ball(
            ConedCayleySpec(Z3, peripherals=(plane,), radius=3, action_radius=0)
        )
        zs = [Z3.parse("z^%d" % k) for k in range(-3, 4)]
        xs = [Z3.parse("x^%d" % k) for k in range(-3, 4)]
        # z-powers sit in distinct cosets: coning does not shorten them
        assert relative_diameter(cb, zs) == 6
        # x-powers share the identity coset and its apex
        assert relative_diameter(cb, xs) == 1

    def test_peripheral_powers_collapse_in_f2xz(self):
        A = F2xZ.subgroup("A", ("a",))
        cb = coned_cayley_ball(
            ConedCayleySpec(F2xZ, peripherals=(A,), radius=5, action_radius=0)
        )
        aks = [F2xZ.parse("a^%d" % k) for k in range(-5, 6)]
        assert relative_diameter(cb, aks) == 1

    def test_relative_diameter_requires_membership(self):
        cb = coned_cayley_ball(ConedCayleySpec(F2, radius=2, action_radius=0))
        with pytest.raises(ElementOutsideBall):
            relative_diameter(cb, [F2.parse("a^3")])

    def test_peripheral_from_wrong_group_rejected(self):
        other = FreeAbelian(2).subgroup("H", ("x",))
        with pytest.raises(ConfigError):
            ConedCayleySpec(Z3, peripherals=(other,))


class TestRelativePropernessProbe:
    def fixture(self):
        plane = Z3.subgroup("H", ("x", "y"))
        cspec = ConedCayleySpec(
            Z3, peripherals=(plane,), radius=5, action_radius=0
        )
        return cspec, coned_cayley_ball(cspec)

    def test_growth_and_counts(self):
        cspec, target = self.fixture()
        rep = relative_properness_probe(cspec, target, 0, 2)
        assert rep.radius == 2
        assert rep.n_orbit == 231
        assert rep.n_in_vr == 145
        assert rep.relative_diameter == 4
        assert rep.stable
        d = rep.to_json_dict()
        assert d["probe"] == "relative-properness"
        assert d["n_in_vr"] == 145

    def test_radius_too_close_to_truncation_raises(self):
        cspec, target = self.fixture()
        with pytest.raises(BallTooSmall):
            relative_properness_probe(cspec, target, 0, 5)

    def test_stability_check_can_be_disabled(self):
        cspec, target = self.fixture()
        rep = relative_properness_probe(
            cspec, target, 0, 4, stability_check=False
        )
        assert rep.relative_diameter == 8


def test_word_morphism_is_a_homomorphism_on_samples():
    phi = word_morphism(F2, Z2, {"a": "x", "b": "y"})
    g = F2.parse("a b a^-1 b")
    assert phi(g) == Z2.parse("y^2")
    h = F2.parse("b^-1 a")
    assert phi(F2.mul(g, h)) == Z2.mul(phi(g), phi(h))


def test_word_morphism_flags_unassigned_generators_on_use():
    phi = word_morphism(F2, Z2, {"a": "x"})
    assert phi(F2.parse("a^2")) == Z2.parse("x^2")
    with pytest.raises(ConfigError):
        phi(F2.parse("b"))


class TestSchwarzMilnorProbe:
    def test_identity_map_is_a_1_0_quasi_isometry(self):
        b = cayley_ball(F2, radius=3, action_radius=0)
        rep = schwarz_milnor_probe(b.graph, b.graph, list(range(b.graph.n)))
        assert (rep.lam, rep.k) == (1, 0)
        assert not rep.not_qi
        assert rep.density_radius == 0
        assert rep.n_image == b.graph.n

    def test_collapsing_map_is_flagged(self):
        b = cayley_ball(F2, radius=3, action_radius=0)
        rep = schwarz_milnor_probe(b.graph, b.graph, [0] * b.graph.n)
        assert rep.not_qi
        assert rep.collapsed_diameter == 6
        assert rep.to_json_dict()["not_qi"] is True

    def test_callable_and_list_forms_agree(self):
        b = cayley_ball(Z2, radius=2, action_radius=0)
        by_list = schwarz_milnor_probe(b.graph, b.graph, list(range(b.graph.n)))
        by_fn = schwarz_milnor_probe(b.graph, b.graph, lambda v: v)
        assert by_list.to_json_dict() == by_fn.to_json_dict()
