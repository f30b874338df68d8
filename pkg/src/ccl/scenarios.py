"""Built-in scenario catalog and the runner behind the command line.

A scenario packages one geometric fixture (a graph, a coned ball, or a
tree of spaces, together with its combing) with a default list of
certification checks and, where it makes sense, a measurement probe.
`run_scenario` executes a validated configuration and writes a
deterministic report bundle: report.json, summary.csv, serialized
fixtures, and one witness file per violated check.  Nothing in the bundle
depends on wall-clock time or file-system paths, so two runs of the same
configuration produce byte-identical output.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from fractions import Fraction

from . import certify as _certify
from .certify import SamplePlan, ThetaTable
from .combing import CanonicalCombing
from .cones import ConeSpec, GraphCone, SphericalCone, build_coned_space, extend_bicombing, validate_cone_spec
from .configio import ScenarioConfig
from .errors import CertificationFailed, ConfigError, UnknownScenario
from .groups import (
    ConedCayleySpec,
    DirectProduct,
    FreeAbelian,
    FreeGroup,
    cayley_ball,
    coned_cayley_ball,
    relative_diameter,
    relative_properness_probe,
    schwarz_milnor_probe,
    word_morphism,
)
from .jsonio import dumps
from .metricgraph import MetricGraph
from .rational import frac
from .seeds import derive_rng
from .treespaces import (
    HNN,
    Amalgam,
    build_coalescence,
    build_pushout,
    canonical_family,
    combine_bicombing,
    equivariant_family_check,
    glue_spaces,
    stabilizer_report,
    structural_report,
    transported_family,
)


@dataclass
class Built:
    """What a scenario builder hands to the check runner."""

    combing: object
    build_info: dict
    artifacts: dict = field(default_factory=dict)
    suite_checks: list = field(default_factory=list)
    subspace: list = None
    subspace_D: Fraction = None
    subspace_profile: tuple = None


@dataclass(frozen=True)
class Scenario:
    name: str
    summary: str
    description: str
    build: object
    default_checks: tuple
    probe: object = None
    params_allowed: tuple = ()


_REGISTRY = {}


def _register(scenario: Scenario):
    _REGISTRY[scenario.name] = scenario
    return scenario


def get_scenario(name: str) -> Scenario:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownScenario(
            "unknown scenario %r; `ccl list` shows the catalog" % name
        )


def scenario_names():
    return sorted(_REGISTRY)


def list_scenarios() -> str:
    width = max(len(n) for n in _REGISTRY)
    lines = []
    for name in scenario_names():
        lines.append("%-*s  %s" % (width, name, _REGISTRY[name].summary))
    return "\n".join(lines)


def describe(name: str) -> str:
    scenario = get_scenario(name)
    parts = [scenario.name, "", scenario.description.strip()]
    parts.append("")
    parts.append("Default checks:")
    if scenario.default_checks:
        for request in scenario.default_checks:
            items = ", ".join(
                "%s=%s" % (k, v) for k, v in request.items() if k != "check"
            )
            line = "  - %s" % request["check"]
            if items:
                line += " (%s)" % items
            parts.append(line)
    else:
        parts.append("  (none)")
    parts.append("Probe: %s" % ("yes" if scenario.probe else "no"))
    if scenario.params_allowed:
        parts.append("Params: %s" % ", ".join(scenario.params_allowed))
    return "\n".join(parts)


# -- check dispatch ----------------------------------------------------------

_PLAN_KEYS = (
    "mode",
    "n_samples",
    "grid_denominator",
    "exhaustive_limit",
    "include_breakpoints",
    "max_violations",
)
_COMMON_KEYS = ("check", "record_only", "dmax") + _PLAN_KEYS

_CHECK_KEYS = {
    "quasigeodesic": ("lam", "k", "sweep_lambdas"),
    "gcc": ("E", "C", "sweep_E", "assume_geodesic"),
    "cc-full": ("lam", "k", "E", "C", "theta_slope", "theta_intercept", "theta_samples"),
    "consistency": ("K",),
    "forward-backward": ("E", "C", "direction"),
    "bounded": ("lam", "k", "c1", "c2", "sweep_c1", "verify_quasigeodesic"),
    "thinness": ("C", "D", "E", "direction"),
    "sufficiency": ("E", "use_subspace"),
}


def _validate_request(request: dict) -> str:
    name = request.get("check")
    if name not in _CHECK_KEYS:
        raise ConfigError(
            "unknown check %r; known checks: %s"
            % (name, ", ".join(sorted(_CHECK_KEYS)))
        )
    allowed = set(_COMMON_KEYS) | set(_CHECK_KEYS[name])
    unknown = sorted(set(request) - allowed)
    if unknown:
        raise ConfigError(
            "check %r does not accept keys: %s" % (name, ", ".join(unknown))
        )
    return name


def _plan_for(request: dict, config: ScenarioConfig, idx: int, name: str) -> SamplePlan:
    return SamplePlan(
        mode=request.get("mode", "auto"),
        exhaustive_limit=request.get("exhaustive_limit", 60),
        n_samples=request.get("n_samples", 800),
        grid_denominator=request.get("grid_denominator", 8),
        include_breakpoints=request.get("include_breakpoints", True),
        seed="%s/check%d:%s" % (config.seed, idx, name),
        max_violations=request.get("max_violations"),
    )


def _sweep(values):
    if values is None:
        return None
    return [frac(v) for v in values]


def run_check(built: Built, config: ScenarioConfig, idx: int, request: dict):
    """Run one requested check against the built fixture."""
    name = _validate_request(request)
    plan = _plan_for(request, config, idx, name)
    combing = built.combing
    common = dict(plan=plan, dmax=request.get("dmax"))

    if name == "quasigeodesic":
        return _certify.check_quasigeodesic(
            combing,
            lam=frac(request.get("lam", 1)),
            k=frac(request.get("k", 0)),
            sweep_lambdas=_sweep(request.get("sweep_lambdas")),
            **common,
        )
    if name == "gcc":
        return _certify.check_gcc(
            combing,
            E=frac(request.get("E", 1)),
            C=frac(request.get("C", 0)),
            sweep_E=_sweep(request.get("sweep_E")),
            jobs=config.jobs,
            assume_geodesic=request.get("assume_geodesic", False),
            **common,
        )
    if name == "cc-full":
        theta = ThetaTable(
            samples=[(frac(x), frac(y)) for (x, y) in request.get("theta_samples", ())],
            slope=frac(request.get("theta_slope", 1)),
            intercept=frac(request.get("theta_intercept", 0)),
        )
        E = request.get("E")
        C = request.get("C")
        return _certify.check_cc_full(
            combing,
            lam=frac(request.get("lam", 1)),
            k=frac(request.get("k", 0)),
            E=None if E is None else frac(E),
            C=None if C is None else frac(C),
            theta=theta,
            jobs=config.jobs,
            **common,
        )
    if name == "consistency":
        return _certify.check_consistency(
            combing, K=frac(request.get("K", 0)), **common
        )
    if name == "forward-backward":
        return _certify.check_forward_backward(
            combing,
            E=frac(request.get("E", 1)),
            C=frac(request.get("C", 0)),
            direction=request.get("direction", "both"),
            **common,
        )
    if name == "bounded":
        return _certify.check_bounded(
            combing,
            lam=frac(request.get("lam", 1)),
            k=frac(request.get("k", 0)),
            c1=frac(request.get("c1", 1)),
            c2=frac(request.get("c2", 0)),
            sweep_c1=_sweep(request.get("sweep_c1")),
            verify_quasigeodesic=request.get("verify_quasigeodesic", True),
            **common,
        )
    if name == "thinness":
        if built.subspace is None:
            raise ConfigError(
                "scenario %r has no distinguished convex subspace for thinness"
                % config.scenario
            )
        E, C = built.subspace_profile or (1, 0)
        return _certify.check_thinness(
            combing,
            built.subspace,
            C=frac(request.get("C", C)),
            D=frac(request.get("D", built.subspace_D)),
            E=frac(request.get("E", E)),
            direction=request.get("direction", "forward"),
            **common,
        )
    # sufficiency
    kwargs = dict(common)
    if request.get("use_subspace"):
        if built.subspace is None:
            raise ConfigError(
                "scenario %r has no distinguished convex subspace" % config.scenario
            )
        kwargs.update(
            subspace=built.subspace,
            D=built.subspace_D,
            subspace_profile=built.subspace_profile,
        )
    return _certify.cross_check_sufficiency(
        combing, E=frac(request.get("E", 1)), jobs=config.jobs, **kwargs
    )


# -- fixture builders --------------------------------------------------------


def _require_canonical(config: ScenarioConfig):
    if config.combing != "canonical":
        raise ConfigError(
            "scenario %r has a single combing; only combing = \"canonical\" "
            "applies" % config.scenario
        )


def _tos_family(tos, config: ScenarioConfig):
    if config.combing == "transported-equivariant":
        return transported_family(tos)
    return canonical_family(tos)


def _tos_suite(tos, family, config: ScenarioConfig) -> list:
    suite = [c.to_json_dict() for c in structural_report(tos).checks]
    stab = stabilizer_report(tos)
    stab["check"] = "stabilizer"
    suite.append(stab)
    if config.combing == "transported-equivariant":
        equiv = equivariant_family_check(tos, family)
        suite.append(
            {
                "check": "family-equivariance",
                "ok": equiv.ok,
                "checked": equiv.checked,
                "skipped": equiv.skipped,
            }
        )
    return suite


def _tos_built(tos, config: ScenarioConfig, extra_info=None) -> Built:
    family = _tos_family(tos, config)
    combing = combine_bicombing(tos, family)
    info = {
        "n_vertices": tos.graph.n,
        "n_edges": len(tos.graph.edges),
        "tree_vertices": tos.tree.n,
        "n_copies": len(tos.copies),
        "n_gluing_points": len(tos.l_vertices()),
    }
    info.update(extra_info or {})
    return Built(
        combing=combing,
        build_info=info,
        artifacts={
            "space.txt": tos.serialize(),
            "tree.graph.txt": tos.tree.serialize(),
        },
        suite_checks=_tos_suite(tos, family, config),
    )


def _cycle(m: int) -> MetricGraph:
    return MetricGraph(m, [(i, (i + 1) % m, 1) for i in range(m)])


def _int_param(config: ScenarioConfig, key: str, default: int, minimum: int) -> int:
    value = config.params.get(key, default)
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ConfigError("param %r must be an integer >= %d" % (key, minimum))
    return value


def _build_tree_sanity(config: ScenarioConfig) -> Built:
    _require_canonical(config)
    n = _int_param(config, "n", 40, 2)
    rng = derive_rng(config.seed, "tree-sanity/shape")
    edges = [(rng.randrange(i), i, 1) for i in range(1, n)]
    graph = MetricGraph(n, edges)
    return Built(
        combing=CanonicalCombing(graph),
        build_info={"fixture": "random-tree", "n_vertices": n, "n_edges": n - 1},
        artifacts={"space.graph.txt": graph.serialize()},
    )


def _build_wedge(config: ScenarioConfig) -> Built:
    m = _int_param(config, "cycle_length", 9, 3)
    tos = glue_spaces([_cycle(m), _cycle(m)], [(0, 0, 1, 0)])
    family = _tos_family(tos, config)
    combing = combine_bicombing(tos, family)
    return Built(
        combing=combing,
        build_info={
            "fixture": "wedge-of-cycles",
            "cycle_length": m,
            "n_vertices": tos.graph.n,
            "tree_vertices": tos.tree.n,
        },
        artifacts={"space.txt": tos.serialize()},
        suite_checks=[c.to_json_dict() for c in structural_report(tos).checks],
    )


def _build_six_cycle(config: ScenarioConfig) -> Built:
    _require_canonical(config)
    graph = _cycle(6)
    return Built(
        combing=CanonicalCombing(graph),
        build_info={"fixture": "six-cycle", "n_vertices": 6},
        artifacts={"space.graph.txt": graph.serialize()},
    )


def _build_coned_line(config: ScenarioConfig) -> Built:
    _require_canonical(config)
    half = _int_param(config, "half_length", 4, 2)
    n = 2 * half + 1
    labels = {i: str(i - half) for i in range(n)}
    base = MetricGraph(n, [(i, i + 1, 1) for i in range(n - 1)], labels)
    fibers = {}
    for i in range(n):
        if (i - half) % 2 == 0:
            fibers["p%d" % i] = [i]
    spec = ConeSpec(base, fibers, GraphCone(frac(1)))
    space = build_coned_space(spec)
    combing = extend_bicombing(space, CanonicalCombing(base))
    validation = validate_cone_spec(spec)
    return Built(
        combing=combing,
        build_info={
            "fixture": "coned-segment",
            "base_vertices": n,
            "n_cone_points": len(fibers),
            "D": frac(1),
        },
        artifacts={"space.txt": space.serialize()},
        suite_checks=[c.to_json_dict() for c in validation.checks],
        subspace=list(range(n)),
        subspace_D=frac(1),
        subspace_profile=(frac(1), frac(0)),
    )


def _f2xz_group():
    return DirectProduct((FreeGroup(2), FreeAbelian(1)))


def _coset_fibers(ball, peripheral):
    """Left cosets of the peripheral meeting the ball, as labeled fibers."""
    by_key = {}
    for vid, g in enumerate(ball.elements):
        by_key.setdefault(peripheral.coset_key(g), []).append(vid)
    fibers = {}
    for vids in by_key.values():
        rep = min(vids)
        label = "%s|%s" % (peripheral.name, ball.spec.name_of(ball.elements[rep]))
        fibers[label] = vids
    return fibers


def _build_f2xz(config: ScenarioConfig) -> Built:
    _require_canonical(config)
    radius = config.radius or 6
    group = _f2xz_group()
    peripheral = group.subgroup("A", ("a",))
    ball = cayley_ball(group, radius=radius, action_radius=0)
    fibers = _coset_fibers(ball, peripheral)
    D = frac(2 * radius + 1)
    spec = ConeSpec(ball.graph, fibers, GraphCone(D))
    space = build_coned_space(spec)
    combing = extend_bicombing(space, CanonicalCombing(ball.graph))
    return Built(
        combing=combing,
        build_info={
            "fixture": "coned-off-ball",
            "group": "F2 x Z",
            "peripheral": "A = <a>",
            "radius": radius,
            "D": D,
            "base_vertices": ball.graph.n,
            "n_cone_points": len(fibers),
        },
        artifacts={"space.txt": space.serialize()},
        suite_checks=[
            {
                "check": "cone-attachment-validation",
                "ok": True,
                "detail": "validated during build",
            }
        ],
    )


def _probe_f2xz(config: ScenarioConfig) -> list:
    group = _f2xz_group()
    peripheral = group.subgroup("A", ("a",))
    cspec = ConedCayleySpec(
        group, peripherals=(peripheral,), radius=5, action_radius=0
    )
    target = coned_cayley_ball(cspec)
    out = []
    for r in (1, 2, 3, 4):
        report = relative_properness_probe(cspec, target, 0, r)
        out.append(report.to_json_dict())
    return out


def _build_spherical(config: ScenarioConfig) -> Built:
    _require_canonical(config)
    base = _cycle(8)
    spec = ConeSpec(base, {"eq": list(range(8))}, SphericalCone(frac(2)))
    space = build_coned_space(spec)
    combing = extend_bicombing(space, CanonicalCombing(base))
    validation = validate_cone_spec(spec)
    return Built(
        combing=combing,
        build_info={
            "fixture": "spherical-cone-over-cycle",
            "base_vertices": 8,
            "D": frac(2),
        },
        artifacts={"space.txt": space.serialize()},
        suite_checks=[c.to_json_dict() for c in validation.checks],
    )


def _build_amalgam(config: ScenarioConfig) -> Built:
    radius = config.radius or 4
    tree_radius = config.tree_radius or 2
    spec = Amalgam(FreeAbelian(1, ("a",)), FreeAbelian(1, ("b",)))
    tos = build_pushout(
        spec, radius=radius, tree_radius=tree_radius, action_radius=1
    )
    return _tos_built(
        tos,
        config,
        {
            "fixture": "pushout-of-spiked-lines",
            "radius": radius,
            "tree_radius": tree_radius,
        },
    )


def _probe_amalgam(config: ScenarioConfig) -> list:
    domain = FreeGroup(2)
    out = []
    for r in (3, 4, 5):
        spec = Amalgam(FreeAbelian(1, ("a",)), FreeAbelian(1, ("b",)))
        tos = build_pushout(
            spec,
            radius=r,
            tree_radius=2 * r + 2,
            ambient_radius=r,
            action_radius=0,
        )
        ball = cayley_ball(domain, radius=r, action_radius=0)
        apply = word_morphism(domain, tos.ambient, {"a": "a", "b": "b"})
        images = [tos.tip_vertex(apply(g)) for g in ball.elements]
        core = None
        if ball.graph.n > 200:
            rng = derive_rng(config.seed, "amalgam-f2/sm-core-%d" % r)
            core = sorted(rng.sample(range(ball.graph.n), 160))
        report = schwarz_milnor_probe(
            ball.graph, tos.graph, images, domain_core=core
        )
        entry = report.to_json_dict()
        entry["domain_radius"] = r
        entry["codomain_vertices"] = tos.graph.n
        out.append(entry)
    return out


def _build_hnn(config: ScenarioConfig) -> Built:
    radius = config.radius or 2
    tree_radius = config.tree_radius or 1
    spec = HNN(FreeAbelian(2), ("edge", "x"), ("edge", "y"))
    tos = build_coalescence(
        spec, radius=radius, tree_radius=tree_radius, action_radius=1
    )
    return _tos_built(
        tos,
        config,
        {
            "fixture": "coalescence-of-spiked-plane",
            "radius": radius,
            "tree_radius": tree_radius,
        },
    )


def _build_z3(config: ScenarioConfig) -> Built:
    _require_canonical(config)
    radius = config.radius or 3
    group = FreeAbelian(3)
    plane = group.subgroup("H", ("x", "y"))
    coned = coned_cayley_ball(
        ConedCayleySpec(group, peripherals=(plane,), radius=radius, action_radius=0)
    )
    combing = CanonicalCombing(coned.graph)
    suite = []
    m = min(3, radius)
    axis = [group.parse("z^%d" % k) for k in range(-m, m + 1)]
    axis_diam = relative_diameter(coned, axis)
    suite.append(
        {
            "check": "relative-diameter-transverse-axis",
            "ok": axis_diam == 2 * m,
            "value": axis_diam,
            "expected": frac(2 * m),
        }
    )
    inplane = [group.parse("x^%d" % k) for k in range(-m, m + 1)]
    inplane_diam = relative_diameter(coned, inplane)
    suite.append(
        {
            "check": "relative-diameter-peripheral-axis",
            "ok": inplane_diam == 1,
            "value": inplane_diam,
            "expected": frac(1),
        }
    )
    return Built(
        combing=combing,
        build_info={
            "fixture": "coned-off-ball",
            "group": "Z^3",
            "peripheral": "H = <x, y>",
            "radius": radius,
            "n_vertices": coned.graph.n,
            "n_cone_points": len(coned.cone_vertices),
        },
        artifacts={"space.graph.txt": coned.graph.serialize()},
        suite_checks=suite,
    )


def _probe_z3(config: ScenarioConfig) -> list:
    group = FreeAbelian(3)
    plane = group.subgroup("H", ("x", "y"))
    line = group.subgroup("K", ("x",))
    measure = ConedCayleySpec(
        group, peripherals=(plane,), radius=5, action_radius=0
    )
    target = coned_cayley_ball(
        ConedCayleySpec(
            group, peripherals=(plane, line), radius=5, action_radius=0
        )
    )
    out = []
    for r in (1, 2, 3, 4):
        report = relative_properness_probe(measure, target, 0, r)
        out.append(report.to_json_dict())
    return out


# -- the catalog -------------------------------------------------------------

_register(
    Scenario(
        name="tree-sanity",
        summary="canonical combing of a seeded random tree; every display is ideal",
        description="""
A random tree on n vertices (shape drawn from the run seed), combed by
its unique geodesics.  Trees satisfy every display with the best
possible constants: geodesic (1,0), convexity (1,0), exact consistency,
and bounded displacement (1,0).  This is the sanity anchor for the
certifier itself: any violation here is a bug, not geometry.
""",
        build=_build_tree_sanity,
        default_checks=(
            {"check": "quasigeodesic", "lam": 1, "k": 0, "mode": "sampled", "n_samples": 1500},
            {"check": "gcc", "E": 1, "C": 0, "mode": "sampled", "n_samples": 1500},
            {"check": "consistency", "K": 0, "mode": "sampled", "n_samples": 800},
            {"check": "bounded", "lam": 1, "k": 0, "c1": 1, "c2": 0, "mode": "sampled", "n_samples": 1000},
        ),
        params_allowed=("n",),
    )
)

_register(
    Scenario(
        name="wedge-cycles",
        summary="two equal cycles glued at a point, combed piecewise",
        description="""
Two cycles of length 9 share a single vertex; the dual tree has two
piece vertices joined through one gluing vertex.  The combined combing
concatenates per-cycle canonical combings through the wedge point.  It
is geodesic and exactly consistent; convexity and bounded displacement
hold with the cycle's own constants, comfortably inside the combination
budgets (each cycle alone is (1, 7/2)-convex at E = 1, and the combined
space stays within (3, 21) and bounded (1, 0, 1, 9/2)).
""",
        build=_build_wedge,
        default_checks=(
            {"check": "quasigeodesic", "lam": 1, "k": 0},
            {"check": "consistency", "K": 0},
            {"check": "gcc", "E": 3, "C": 21, "mode": "sampled", "n_samples": 900},
            {"check": "bounded", "lam": 1, "k": 0, "c1": 1, "c2": "9/2", "mode": "sampled", "n_samples": 900},
        ),
        params_allowed=("cycle_length",),
    )
)

_register(
    Scenario(
        name="six-cycle",
        summary="one even cycle; exhaustive transfer cross-check",
        description="""
The cycle of length 6 with its canonical combing, small enough that
every check runs exhaustively.  The cross-check measures the minimal
constants of the anchored premise displays, consistency, and the two
directional convexity displays, then asserts the published transfers
against the measured minimal conclusion constant.
""",
        build=_build_six_cycle,
        default_checks=(
            {"check": "sufficiency", "E": 1},
            {"check": "gcc", "E": 1, "C": "9/4", "grid_denominator": 4},
            {"check": "bounded", "lam": 1, "k": 0, "c1": 1, "c2": 2},
        ),
    )
)

_register(
    Scenario(
        name="coned-line-thin",
        summary="segment with pendant cone points; thinness over the base line",
        description="""
A length-8 segment with a cone point attached over every second vertex
by a radial edge of length D = 1.  The base line is convex, combing
lines leave it only through those radial edges, and the thinness
package holds with D = 1: off-line segments fellow-travel, exit points
are controlled, and the in-line subpaths agree with the combing.  The
cross-check additionally certifies the subspace route: the line is
(1, 0)-convex, so the whole space is (3, 18)-convex.
""",
        build=_build_coned_line,
        default_checks=(
            {"check": "quasigeodesic", "lam": 1, "k": 0},
            {"check": "thinness", "direction": "forward"},
            {"check": "thinness", "direction": "backward"},
            {"check": "sufficiency", "E": 1, "use_subspace": True, "mode": "sampled", "n_samples": 2000},
        ),
        params_allowed=("half_length",),
    )
)

_register(
    Scenario(
        name="f2xz-coned",
        summary="coned-off ball of F2 x Z over the cosets of A = <a>",
        description="""
The coned-off Cayley ball of the direct product of a rank-2 free group
<a, b> with a central line <z>, radius 6 by default.  Every left coset
of the peripheral subgroup A = <a> meeting the ball receives a cone
point at distance D = 13, and the coned-off combing Γ̂ (Gamma-hat)
extends the canonical combing of the base ball through those cone
points.  Certified here: the extension stays
geodesic, and convexity holds at E = 3 within the transfer budget
C = 6 E D + 12 D = 390, with a sweep recording the minimal C at smaller
E.  The probe measures orbit-return sets of the coned-off metric
against itself, whose relative diameters grow linearly with the return
radius.
""",
        build=_build_f2xz,
        probe=_probe_f2xz,
        default_checks=(
            {"check": "quasigeodesic", "lam": 1, "k": 0, "mode": "sampled", "n_samples": 1000},
            {"check": "gcc", "E": 3, "C": 390, "sweep_E": [1, 2], "mode": "sampled", "n_samples": 500},
        ),
    )
)

_register(
    Scenario(
        name="spherical-cone",
        summary="even cycle under a spherical cone of radius 2",
        description="""
An 8-cycle whose single fiber is the whole vertex set, coned by a
spherical cone of radius D = 2.  The attachment conditions are checked
exactly: distances do not increase through the cone, every attachment
point sits at cone distance exactly D, and the in-cone metric agrees
with the planar development of the comparison sector (degenerate
angles reduce to the through-apex sum exactly).  The graph-metric
combing through the apex is certified geodesic and convex.
""",
        build=_build_spherical,
        default_checks=(
            {"check": "quasigeodesic", "lam": 1, "k": 0},
            {"check": "consistency", "K": 0},
            {"check": "gcc", "E": 1, "C": 3, "grid_denominator": 4},
        ),
    )
)

_register(
    Scenario(
        name="amalgam-f2",
        summary="pushout of two spiked lines over the truncated dual tree",
        description="""
The free product of two infinite cyclic groups <a> and <b>, realized
as a tree of spaces: one spiked line ball per factor coset, glued at
tip orbits, over the truncated dual tree of the splitting.  The glued
space is itself a tree, so the combined combing (canonical per piece,
or the transported family that is equivariant by construction) is
geodesic, exactly consistent, and (1, 0)-convex.  The structural suite
verifies the fiber map, singleton gluing fibers, convex vertex spaces,
and the bipartite tree; the stabilizer table identifies the trivial
edge group.  The probe builds the orbit map from the rank-2 free group
and measures its quasi-isometry constants at growing radii.
""",
        build=_build_amalgam,
        probe=_probe_amalgam,
        default_checks=(
            {"check": "quasigeodesic", "lam": 1, "k": 0, "mode": "sampled", "n_samples": 800},
            {"check": "consistency", "K": 0, "mode": "sampled", "n_samples": 500},
            {"check": "gcc", "E": 1, "C": 0, "mode": "sampled", "n_samples": 600},
            {"check": "bounded", "lam": 1, "k": 0, "c1": 1, "c2": 0, "mode": "sampled", "n_samples": 600},
        ),
    )
)

_register(
    Scenario(
        name="hnn-z2",
        summary="coalescence of a spiked plane ball along two edge midpoints",
        description="""
A rank-2 free abelian ball, edges subdivided, with spikes over the
orbits of the x-edge and y-edge midpoints; a stable letter t glues the
y-tips of each copy to the x-tips of the translated copy.  Basepoints
in the same orbit are rejected, which is why the two basepoints are
edge midpoints of different generators.  The combined combing is geodesic
and exactly consistent; convexity is certified at E = 3 with the
plane's own defect.  The structural suite and the stabilizer table
run as in the pushout case.  Note that combing = "transported-equivariant"
fails its equivariance suite check here by design: the plane ball has
cycles, so canonical tie-breaks do not commute with the local shifts
(on the tree pieces of amalgam-f2 they do).
""",
        build=_build_hnn,
        default_checks=(
            {"check": "quasigeodesic", "lam": 1, "k": 0, "mode": "sampled", "n_samples": 1500},
            {"check": "consistency", "K": 0},
            {"check": "gcc", "E": 3, "C": 4, "mode": "sampled", "n_samples": 600},
        ),
    )
)

_register(
    Scenario(
        name="z3-relative",
        summary="Z^3 coned over a plane subgroup; orbit-return probe",
        description="""
The rank-3 free abelian ball coned over the left cosets of the plane
subgroup H = <x, y>.  The canonical combing of the coned graph is
geodesic; the recorded relative diameters show the collapse at work: a
transverse axis {z^k} keeps diameter 6 while the peripheral axis
{x^k} collapses to diameter 1.  The probe cones a second peripheral
K = <x> into the target metric and measures the orbit-return sets
V_r; their relative diameters 2r grow linearly, the signature of a
peripheral that is not relatively proper in this normalization.
""",
        build=_build_z3,
        probe=_probe_z3,
        default_checks=(
            {"check": "quasigeodesic", "lam": 1, "k": 0, "mode": "sampled", "n_samples": 1200},
            {"check": "consistency", "K": 0, "mode": "sampled", "n_samples": 600},
        ),
    )
)


# -- runner ------------------------------------------------------------------


def _csv_cell(value) -> str:
    # the CSV is the human summary, so Fractions render as "2" or "9/2"
    # rather than the JSON files' explicit "p/q" form
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str) and "/" in value:
        return str(Fraction(value))
    return str(value)


def _summary_rows(out: dict) -> list:
    rows = [("kind", "label", "verdict", "note")]
    for entry in out.get("suite_checks", ()):
        rows.append(
            ("suite", entry["check"], "ok" if entry["ok"] else "failed", "")
        )
    for entry in out.get("checks", ()):
        note = "record-only" if entry["record_only"] else ""
        rows.append(
            (
                "check",
                "%d:%s" % (entry["id"], entry["request"]["check"]),
                entry["report"]["verdict"],
                note,
            )
        )
    for entry in out.get("probes", ()):
        label = entry.get("probe", "probe")
        if "radius" in entry:
            label += " r=%s" % _csv_cell(frac(entry["radius"]))
            verdict = _csv_cell(entry["relative_diameter"])
        else:
            label += " r=%s" % entry.get("domain_radius", "?")
            verdict = "lambda=%s k=%s" % (
                _csv_cell(entry["lambda"]),
                _csv_cell(entry["k"]),
            )
        rows.append(("probe", label, verdict, ""))
    return rows


def _write_bundle(out_dir: str, out: dict, artifacts: dict):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        fh.write(dumps(out) + "\n")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in _summary_rows(out):
        writer.writerow(row)
    with open(os.path.join(out_dir, "summary.csv"), "w") as fh:
        fh.write(buf.getvalue())
    for name, text in sorted(artifacts.items()):
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write(text)
    for entry in out.get("checks", ()):
        witness = entry["report"].get("witness")
        if witness is not None:
            path = os.path.join(out_dir, "witness-%d.json" % entry["id"])
            with open(path, "w") as fh:
                fh.write(dumps(witness) + "\n")


def run_scenario(config: ScenarioConfig, mode: str = "certify") -> dict:
    """Build, check, or probe one scenario and write its report bundle.

    Returns the report dict; raises CertificationFailed (after writing
    the bundle) when a gating check or suite check fails.
    """
    if mode not in ("build", "certify", "probe"):
        raise ConfigError("unknown run mode %r" % mode)
    scenario = get_scenario(config.scenario)
    unknown = sorted(set(config.params) - set(scenario.params_allowed))
    if unknown:
        raise ConfigError(
            "scenario %r does not accept params: %s"
            % (scenario.name, ", ".join(unknown))
        )
    if mode == "probe" and scenario.probe is None:
        raise ConfigError("scenario %r has no probe" % scenario.name)

    built = scenario.build(config)
    out = {
        "tool": "ccl",
        "scenario": scenario.name,
        "mode": mode,
        "seed": config.seed,
        "combing": config.combing,
        "build": built.build_info,
        "suite_checks": built.suite_checks,
    }
    suite_ok = all(entry["ok"] for entry in built.suite_checks)

    if mode == "probe":
        out["probes"] = scenario.probe(config)
        out["ok"] = suite_ok
    elif mode == "certify":
        requests = [dict(r) for r in (config.checks or scenario.default_checks)]
        entries = []
        failed = []
        for idx, request in enumerate(requests):
            record_only = bool(request.pop("record_only", False))
            report = run_check(built, config, idx, request)
            entries.append(
                {
                    "id": idx,
                    "request": request,
                    "record_only": record_only,
                    "report": report.to_json_dict(),
                }
            )
            if not record_only and not report.certified:
                failed.append("%d:%s" % (idx, request["check"]))
        out["checks"] = entries
        out["ok"] = suite_ok and not failed
    else:
        out["ok"] = suite_ok

    if config.out_dir:
        _write_bundle(config.out_dir, out, built.artifacts)

    if mode == "certify" and not out["ok"]:
        detail = ", ".join(failed) if failed else "structural suite"
        raise CertificationFailed(
            "scenario %r failed: %s" % (scenario.name, detail)
        )
    if mode != "certify" and not suite_ok:
        raise CertificationFailed(
            "scenario %r failed its structural suite" % scenario.name
        )
    return out
