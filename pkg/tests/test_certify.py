"""The certifier on fixtures whose sharp constants are known by hand.

The six-cycle numbers below were frozen from exhaustive parameter scans:
the canonical combing of C6 needs C = 9/4 at E = 1, displacement constant
c2 = 2, and is exactly consistent (K = 0).
"""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ccl.certify import (
    CertReport,
    SamplePlan,
    ThetaTable,
    check_bounded,
    check_cc_full,
    check_consistency,
    check_forward_backward,
    check_gcc,
    check_quasigeodesic,
    check_thinness,
    cross_check_sufficiency,
    replay_witness,
)
from ccl.combing import CanonicalCombing, TableCombing
from ccl.errors import (
    ConfigError,
    NotQuasiGeodesic,
    PremiseNotCertified,
    SubspaceNotConvex,
    TriplesTooShort,
)
from ccl.metricgraph import GeodesicPath, MetricGraph, canonical_geodesic

EXH = SamplePlan(mode="exhaustive")


def cycle(m):
    return MetricGraph(m, [(i, (i + 1) % m, 1) for i in range(m)])


@pytest.fixture(scope="module")
def c6():
    return CanonicalCombing(cycle(6))


def detour_combing():
    """Canonical paths on C6 except 0->3, which backtracks once."""
    g = cycle(6)
    t = TableCombing(g)
    for u in range(6):
        for v in range(6):
            t.set_path(canonical_geodesic(g, u, v))
    t.set_path(GeodesicPath(g, [0, 1, 0, 1, 2, 3], [0, 0, 0, 1, 2]))
    return t


class TestQuasigeodesic:
    def test_canonical_six_cycle_is_geodesic(self, c6):
        rep = check_quasigeodesic(c6, 1, 0, EXH)
        assert rep.certified
        assert rep.extra["min_k_at_lambda"]["1/1"] == 0
        assert rep.samples["mode"] == "exhaustive"

    def test_sweep_reports_smaller_k_for_larger_lambda(self, c6):
        rep = check_quasigeodesic(c6, 1, 0, EXH, sweep_lambdas=[2])
        assert rep.extra["min_k_at_lambda"]["2/1"] == 0

    def test_backtracking_path_fails_the_lower_display(self):
        rep = check_quasigeodesic(detour_combing(), 1, 0, EXH)
        assert rep.verdict == "violated"
        assert rep.witness["property"] == "quasigeodesic"
        assert rep.extra["min_k_at_lambda"]["1/1"] > 0

    def test_lambda_below_one_rejected(self, c6):
        with pytest.raises(ConfigError):
            check_quasigeodesic(c6, Fraction(1, 2), 0, EXH)


class TestGcc:
    def test_sharp_constant_certifies(self, c6):
        rep = check_gcc(c6, E=1, C=Fraction(9, 4), plan=EXH)
        assert rep.certified
        assert rep.extra["min_C_at_E"]["1/1"] == Fraction(9, 4)

    def test_below_sharp_constant_is_violated(self, c6):
        rep = check_gcc(c6, E=1, C=2, plan=EXH)
        assert rep.verdict == "violated"
        w = rep.witness
        assert w["property"] == "gcc"
        assert Fraction(w["lhs"]) > Fraction(w["bound"])

    def test_sweep_collects_minima_per_e(self, c6):
        rep = check_gcc(c6, E=1, C=Fraction(9, 4), plan=EXH, sweep_E=[2])
        minima = rep.extra["min_C_at_E"]
        assert minima["1/1"] == Fraction(9, 4)
        assert minima["2/1"] <= minima["1/1"]

    def test_jobs_do_not_change_the_verdict_or_minima(self, c6):
        one = check_gcc(c6, E=1, C=Fraction(9, 4), plan=EXH, jobs=1)
        two = check_gcc(c6, E=1, C=Fraction(9, 4), plan=EXH, jobs=2)
        assert one.verdict == two.verdict == "certified"
        assert one.extra == two.extra
        assert one.samples["n_checks"] == two.samples["n_checks"]


def test_consistency_exact_on_canonical(c6):
    rep = check_consistency(c6, K=0, plan=EXH)
    assert rep.certified
    assert rep.extra["min_K"] == 0


def test_consistency_broken_by_detour():
    rep = check_consistency(detour_combing(), K=0, plan=EXH)
    assert rep.verdict == "violated"
    assert rep.extra["min_K"] > 0


def test_forward_and_backward_convexity(c6):
    for direction in ("forward", "backward"):
        rep = check_forward_backward(
            c6, E=1, C=Fraction(9, 4), direction=direction, plan=EXH
        )
        assert rep.certified, direction
        assert rep.extra["min_C_at_E"][direction]["1/1"] == Fraction(9, 4)


class TestBounded:
    def test_sharp_displacement_constant(self, c6):
        rep = check_bounded(c6, 1, 0, c1=1, c2=2, plan=EXH)
        assert rep.certified
        assert rep.extra["min_c2_at_c1"]["1/1"] == 2

    def test_below_sharp_is_violated(self, c6):
        rep = check_bounded(c6, 1, 0, c1=1, c2=Fraction(3, 2), plan=EXH)
        assert rep.verdict == "violated"
        assert rep.witness["property"] == "bounded"

    def test_quasigeodesic_precheck_raises(self):
        with pytest.raises(NotQuasiGeodesic):
            check_bounded(
                detour_combing(), 1, 0, c1=1, c2=6, plan=EXH,
                verify_quasigeodesic=True,
            )


def test_cc_full_with_identity_gauge(c6):
    plan = SamplePlan(mode="exhaustive", grid_denominator=4)
    rep = check_cc_full(
        c6, lam=1, k=0, E=1, C=Fraction(9, 4), theta=ThetaTable.identity(),
        plan=plan,
    )
    assert rep.certified
    assert rep.profile["theta"]["slope"] == 1


def test_theta_table_gauge_evaluation():
    th = ThetaTable(samples=[(0, 1), (2, 3)], slope=Fraction(1, 2), intercept=1)
    assert th(0) == 2            # 0/2 + 1 + step 1
    assert th(1) == Fraction(5, 2)
    assert th(2) == 5            # 1 + 1 + step 3
    assert ThetaTable.zero()(10) == 0
    assert ThetaTable.identity()(Fraction(7, 3)) == Fraction(7, 3)
    with pytest.raises(ConfigError):
        ThetaTable(samples=[(0, 2), (1, 1)])
    with pytest.raises(ConfigError):
        ThetaTable(slope=-1)


class TestSufficiencyCrossCheck:
    def test_six_cycle_budgets(self, c6):
        rep = cross_check_sufficiency(c6, plan=EXH, E=1)
        assert rep.certified
        ex = rep.extra
        assert ex["conclusion_min_C"] == Fraction(9, 4)
        assert ex["anchored_premises_min_C"] == {
            "toward": Fraction(9, 4),
            "from": Fraction(9, 4),
        }
        assert ex["anchored_budget"] == Fraction(9, 2)
        assert ex["consistency_min_K"] == 0
        assert ex["directional_min_C"] == {
            "forward": Fraction(9, 4),
            "backward": Fraction(9, 4),
        }
        assert ex["directional_budget"] == Fraction(9, 2)
        assert ex["anchored_holds"] and ex["directional_holds"]
        assert rep.samples["n_tuples"] == 666

    def test_uncertified_premise_is_rejected(self, c6):
        bad = check_gcc(c6, E=1, C=1, plan=EXH)
        assert not bad.certified
        with pytest.raises(PremiseNotCertified):
            cross_check_sufficiency(
                c6, plan=EXH, E=1, premise_reports={"gcc": bad}
            )


class TestThinness:
    def line_fixture(self):
        # path graph 0-..-8 with a pendant hair at each end vertex
        edges = [(i, i + 1, 1) for i in range(8)]
        edges += [(0, 9, 1), (8, 10, 1)]
        g = MetricGraph(11, edges)
        return CanonicalCombing(g)

    def test_convex_subspace_certifies(self):
        combing = self.line_fixture()
        rep = check_thinness(
            combing, subspace=list(range(9)), C=0, D=1, E=1,
            direction="forward", plan=EXH,
        )
        assert rep.certified
        assert rep.extra["item3_restriction_identities"]
        assert rep.extra["fellow_travel_within_D"]

    def test_non_convex_subspace_raises(self, c6):
        with pytest.raises(SubspaceNotConvex):
            check_thinness(c6, subspace=[0, 2, 3], C=0, D=1, E=1, plan=EXH)

    def test_short_triples_raise(self, c6):
        with pytest.raises(TriplesTooShort):
            check_thinness(c6, subspace=[0, 1, 2], C=0, D=2, E=1, plan=EXH)


class TestWitnessReplay:
    def test_gcc_witness_replays_bit_exact(self, c6):
        rep = check_gcc(c6, E=1, C=2, plan=EXH)
        out = replay_witness(c6, rep.witness)
        assert out["matches"] is True
        assert out["violated"] is True
        assert out["lhs"] > 0

    def test_tampered_witness_is_detected(self, c6):
        rep = check_gcc(c6, E=1, C=2, plan=EXH)
        w = dict(rep.witness)
        w["lhs"] = "99"
        out = replay_witness(c6, w)
        assert out["matches"] is False

    def test_consistency_witness_replays(self):
        rep = check_consistency(detour_combing(), K=0, plan=EXH)
        out = replay_witness(detour_combing(), rep.witness)
        assert out["matches"] is True
        assert out["violated"] is True

    def test_unknown_property_rejected(self, c6):
        with pytest.raises(ConfigError):
            replay_witness(c6, {"property": "nope", "args": {}})


def test_sampled_runs_are_deterministic(c6):
    plan = SamplePlan(mode="sampled", n_samples=120, seed="det-check")
    a = check_gcc(c6, E=1, C=Fraction(9, 4), plan=plan)
    b = check_gcc(c6, E=1, C=Fraction(9, 4), plan=plan)
    assert a.to_json() == b.to_json()
    assert a.samples["mode"] == "sampled"


def test_sampled_mode_requires_a_seed(c6):
    with pytest.raises(ConfigError):
        check_quasigeodesic(
            c6, 1, 0, SamplePlan(mode="sampled", n_samples=10)
        )


def test_report_json_round_trip_fields(c6):
    rep = check_consistency(c6, K=0, plan=EXH)
    d = rep.to_json_dict()
    assert d["property"] == "coarse-consistency"
    assert d["verdict"] == "certified"
    assert "witness" not in d
    assert isinstance(rep, CertReport)


@st.composite
def random_tree_combing(draw):
    seed = draw(st.integers(0, 10**6))
    n = draw(st.integers(2, 10))
    rng = random.Random(seed)
    edges = [(rng.randrange(i), i, rng.choice((1, 2, Fraction(1, 2)))) for i in range(1, n)]
    return CanonicalCombing(MetricGraph(n, edges))


class TestTreesAreIdeal:
    """Unique geodesics make every display hold with the best constants."""

    @settings(max_examples=15, deadline=None)
    @given(random_tree_combing(), st.integers(0, 10**6))
    def test_all_displays(self, combing, seed):
        plan = SamplePlan(mode="sampled", n_samples=50, seed=str(seed))
        assert check_quasigeodesic(combing, 1, 0, plan).certified
        assert check_gcc(combing, E=1, C=0, plan=plan).certified
        assert check_consistency(combing, K=0, plan=plan).certified
        assert check_bounded(combing, 1, 0, c1=1, c2=0, plan=plan).certified
