"""Coned spaces: attach cones over labeled vertex fibers of a metric graph.

A cone spec selects disjoint fibers of base vertices and a cone metric per
label.  Graph cones are realized exactly: one apex vertex per label joined
to each attachment point by an edge of length D.  Spherical cones share the
radial realization but carry their interior metric as a formula; distances
inside a spherical cone are evaluated by planar development of the
comparison sector, degenerate angles (>= pi) reducing to through-apex sums
exactly.

The extended combing routes cone endpoints radially through the best
attachment point and otherwise agrees with the base combing, which keeps it
prefix-closed: argmin entry points chosen by (distance, vertex id) are
stable along the chosen path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .combing import Combing
from .errors import InvalidConeSpec, NotGeodesicInput, ParameterOutOfRange
from .metricgraph import GeodesicPath, MetricGraph
from .rational import frac, frac_str


@dataclass(frozen=True)
class GraphCone:
    """Cone metric realized by radial edges of length D; no interior."""

    D: Fraction = None

    def __post_init__(self):
        if self.D is not None:
            object.__setattr__(self, "D", frac(self.D))
            if self.D <= 0:
                raise InvalidConeSpec("cone radius must be positive")

    kind = "graph"


@dataclass(frozen=True)
class SphericalCone:
    """Spherical cone of radius D over a fiber with its base metric as angle."""

    D: Fraction = None

    def __post_init__(self):
        if self.D is not None:
            object.__setattr__(self, "D", frac(self.D))
            if self.D <= 0:
                raise InvalidConeSpec("cone radius must be positive")

    kind = "spherical"


def spherical_cone_distance(D, s, t, d_x):
    """Distance in a spherical cone of radius D between points at radial
    parameters s, t over attachment points at base distance d_x.

    Degenerate angles (d_x >= pi) reduce to the through-apex sum and are
    returned exactly when the inputs are exact.  Otherwise the value is the
    planar development of the comparison sector.
    """
    if s < 0 or s > 1 or t < 0 or t > 1:
        raise ParameterOutOfRange("radial parameters must lie in [0, 1]")
    if float(d_x) >= math.pi:
        return D * s + D * t
    ang = float(d_x)
    x1, y1 = float(D) * float(s), 0.0
    x2 = float(D) * float(t) * math.cos(ang)
    y2 = float(D) * float(t) * math.sin(ang)
    return math.hypot(x1 - x2, y1 - y2)


def develop_spherical_point(D, s, t, d_x, c):
    """Point at parameter c of the in-cone geodesic, as (radius, angle).

    The geodesic between (s, 0) and (t, d_x) is developed to a straight
    planar segment; the returned polar coordinates are measured from the
    apex with the angle counted from the first generator.
    """
    if float(d_x) >= math.pi:
        # through the apex: down the first generator, then up the second
        total = float(D) * (float(s) + float(t))
        pos = float(c) * total
        down = float(D) * float(s)
        if pos <= down:
            return (down - pos, 0.0)
        return (pos - down, float(d_x))
    ang = float(d_x)
    x1, y1 = float(D) * float(s), 0.0
    x2 = float(D) * float(t) * math.cos(ang)
    y2 = float(D) * float(t) * math.sin(ang)
    x = x1 + float(c) * (x2 - x1)
    y = y1 + float(c) * (y2 - y1)
    return (math.hypot(x, y), math.atan2(y, x))


class ConeSpec:
    """Disjoint labeled fibers of base vertices with per-label cone metrics.

    `fibers` maps labels to vertex collections; `metrics` may be one metric
    shared by all labels, a per-label mapping, or None.  A missing or
    radius-free GraphCone resolves its D to (fiber diameter) + 1.
    """

    def __init__(self, base: MetricGraph, fibers, metrics=None):
        self.base = base
        self.fibers = {}
        seen = set()
        for label in sorted(fibers):
            verts = tuple(sorted(int(v) for v in fibers[label]))
            if not verts:
                raise InvalidConeSpec("empty fiber for label %r" % (label,))
            for v in verts:
                if not (0 <= v < base.n):
                    raise InvalidConeSpec("fiber vertex %d out of range" % v)
                if v in seen:
                    raise InvalidConeSpec(
                        "attachment map not injective: vertex %d reused" % v
                    )
                seen.add(v)
            self.fibers[label] = verts
        self.metrics = {}
        for label in self.fibers:
            if metrics is None:
                metric = GraphCone()
            elif isinstance(metrics, (GraphCone, SphericalCone)):
                metric = metrics
            else:
                metric = metrics.get(label, GraphCone())
            if metric.D is None:
                diam = self._fiber_diameter(label)
                metric = type(metric)(D=diam + 1)
            self.metrics[label] = metric

    def _fiber_diameter(self, label) -> Fraction:
        verts = self.fibers[label]
        best = Fraction(0)
        for i, u in enumerate(verts):
            row = self.base._dijkstra_row(u)
            for v in verts[i + 1 :]:
                if row[v] is not None:
                    best = max(best, Fraction(row[v], self.base.scale))
        return best

    def labels(self):
        return sorted(self.fibers)


@dataclass
class CheckResult:
    name: str
    ok: bool
    witness: object = None

    def to_json_dict(self):
        out = {"check": self.name, "ok": self.ok}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass
class ConeValidation:
    ok: bool
    checks: list

    def to_json_dict(self):
        return {"ok": self.ok, "checks": [c.to_json_dict() for c in self.checks]}

    def failed(self):
        return [c for c in self.checks if not c.ok]


def validate_cone_spec(spec: ConeSpec) -> ConeValidation:
    """Check the cone-attachment conditions, returning witnesses on failure.

    Checked per label: nearest-point realization of fiber distances (always
    attained on finite graphs, still asserted), the decreasing-distance
    condition d_X <= d_cone for same-fiber pairs, uniform radial
    homogeneity (every attachment point at cone distance exactly D), and
    for graph cones the strict bound sup fiber distance < D.
    """
    checks = []
    base = spec.base
    for label in spec.labels():
        verts = spec.fibers[label]
        metric = spec.metrics[label]
        D = metric.D

        # nearest points between a vertex and a fiber (and between fibers)
        # are realized automatically on a finite graph; the only failure
        # mode is a fiber split across components, which leaves some
        # fiber distances undefined
        comps = {base.component[v] for v in verts}
        checks.append(
            CheckResult(
                "nearest-point:%s" % label,
                len(comps) == 1,
                None if len(comps) == 1 else {"components": sorted(comps)},
            )
        )

        # radial homogeneity is structural (a single radius per label) but
        # asserted so a future per-edge radius cannot slip through silently
        checks.append(CheckResult("radial-homogeneity:%s" % label, D > 0))

        dec_witness = None
        sup = Fraction(0)
        sup_pair = None
        for i, u in enumerate(verts):
            row = base._dijkstra_row(u)
            for v in verts[i + 1 :]:
                if row[v] is None:
                    continue
                d_x = Fraction(row[v], base.scale)
                if d_x > sup:
                    sup, sup_pair = d_x, (u, v)
                if metric.kind == "graph":
                    d_cone = 2 * D
                    bad = d_x > d_cone
                else:
                    d_cone = spherical_cone_distance(D, 1, 1, d_x)
                    bad = float(d_x) > float(d_cone) + 1e-12
                if bad and dec_witness is None:
                    dec_witness = {
                        "pair": [u, v],
                        "d_base": d_x,
                        "d_cone": frac(d_cone) if metric.kind == "graph" else d_cone,
                    }
        checks.append(
            CheckResult(
                "decreasing-distance:%s" % label, dec_witness is None, dec_witness
            )
        )
        if metric.kind == "graph":
            strict_ok = sup < D
            witness = None
            if not strict_ok:
                witness = {"pair": list(sup_pair), "sup": sup, "D": D}
            checks.append(CheckResult("strict-bound:%s" % label, strict_ok, witness))
    return ConeValidation(ok=all(c.ok for c in checks), checks=checks)


@dataclass
class ConedSpace:
    """The base graph with one apex vertex per cone label.

    Base vertex ids and edge ids are preserved; apexes come after, joined
    by radial edges of length D.  For graph cones the graph metric is the
    induced length metric of the coned space; spherical interiors are
    served by `cone_distance` instead.
    """

    graph: MetricGraph
    base: MetricGraph
    base_n: int
    spec: ConeSpec
    apex_of: dict
    label_of: dict
    radial_eid: dict

    def is_base_vertex(self, vid: int) -> bool:
        return vid < self.base_n

    def apex(self, label) -> int:
        return self.apex_of[label]

    def cone_distance(self, label, u, v, s=1, t=1):
        """Distance inside one cone between points over attachments u, v."""
        metric = self.spec.metrics[label]
        if u == v:
            return metric.D * abs(frac(s) - frac(t))
        if metric.kind == "graph":
            return metric.D * frac(s) + metric.D * frac(t)
        return spherical_cone_distance(metric.D, s, t, self.base.distance(u, v))

    def attachment_distances(self, label):
        """Pairwise in-cone rim distances plus the apex row, materialized."""
        verts = self.spec.fibers[label]
        out = {}
        for u in verts:
            out[(u, "apex")] = self.spec.metrics[label].D
            for v in verts:
                if u < v:
                    out[(u, v)] = self.cone_distance(label, u, v)
        return out

    def serialize(self) -> str:
        lines = [self.base.serialize().rstrip("\n")]
        for label in self.spec.labels():
            metric = self.spec.metrics[label]
            lines.append(
                "cone %s %s %s" % (label, metric.kind, frac_str(metric.D))
            )
            for v in self.spec.fibers[label]:
                lines.append("attach %s %d" % (label, v))
        return "\n".join(lines) + "\n"


def parse_cone_spec(text: str) -> ConeSpec:
    """Parse the serialized form: graph lines plus cone/attach sections."""
    graph_lines = []
    cones = {}
    fibers = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "cone":
            label, kind, d = parts[1], parts[2], Fraction(parts[3])
            cones[label] = (
                GraphCone(d) if kind == "graph" else SphericalCone(d)
            )
        elif parts[0] == "attach":
            fibers.setdefault(parts[1], []).append(int(parts[2]))
        else:
            graph_lines.append(line)
    base = MetricGraph.deserialize("\n".join(graph_lines))
    return ConeSpec(base, fibers, cones)


def build_coned_space(spec: ConeSpec) -> ConedSpace:
    """Materialize the coned space; raises InvalidConeSpec on a failed
    validation."""
    report = validate_cone_spec(spec)
    if not report.ok:
        raise InvalidConeSpec(
            "cone spec failed validation: %s"
            % ", ".join(c.name for c in report.failed())
        )
    base = spec.base
    edges = list(base.edges)
    labels = dict(base.labels)
    apex_of = {}
    label_of = {}
    radial_eid = {}
    vid = base.n
    for label in spec.labels():
        D = spec.metrics[label].D
        apex_of[label] = vid
        label_of[vid] = label
        labels[vid] = "apex:%s" % label
        for v in spec.fibers[label]:
            radial_eid[(label, v)] = len(edges)
            edges.append((v, vid, D))
        vid += 1
    graph = MetricGraph(vid, edges, labels)
    return ConedSpace(
        graph=graph,
        base=base,
        base_n=base.n,
        spec=spec,
        apex_of=apex_of,
        label_of=label_of,
        radial_eid=radial_eid,
    )


class ConedCombing(Combing):
    """Extension of a base combing to the coned space.

    Base pairs keep their base paths.  An apex endpoint descends its radial
    edge at the attachment point minimizing (distance to the far endpoint,
    vertex id); apex-to-apex pairs minimize over attachment pairs with
    lexicographic tie-break.  Base paths are length-checked against base
    distances, so a non-geodesic base combing is rejected on first use.
    """

    def __init__(self, space: ConedSpace, gamma: Combing):
        self.space = space
        self.gamma = gamma
        self.graph = space.graph
        self._cache = {}

    def path(self, u: int, v: int) -> GeodesicPath:
        key = (u, v)
        out = self._cache.get(key)
        if out is None:
            out = self._build(u, v)
            self._cache[key] = out
        return out

    def _lift(self, a: int, b: int) -> GeodesicPath:
        p = self.gamma.path(a, b)
        if p.total != self.space.base.distance(a, b):
            raise NotGeodesicInput(
                "base combing is not geodesic on (%d, %d)" % (a, b)
            )
        return p

    def _build(self, u: int, v: int) -> GeodesicPath:
        space = self.space
        if u == v:
            return GeodesicPath(self.graph, [u], [], canonical=True)
        u_base = space.is_base_vertex(u)
        v_base = space.is_base_vertex(v)
        if u_base and v_base:
            p = self._lift(u, v)
            return GeodesicPath(
                self.graph, p.vertices, p.edge_ids, canonical=p.canonical
            )
        if not u_base and v_base:
            label = space.label_of[u]
            row = space.base.int_row(v)
            a = min(
                space.spec.fibers[label],
                key=lambda w: (row[w] is None, row[w], w),
            )
            p = self._lift(a, v)
            return GeodesicPath(
                self.graph,
                [u] + p.vertices,
                [space.radial_eid[(label, a)]] + p.edge_ids,
            )
        if u_base and not v_base:
            label = space.label_of[v]
            row = space.base.int_row(u)
            b = min(
                space.spec.fibers[label],
                key=lambda w: (row[w] is None, row[w], w),
            )
            p = self._lift(u, b)
            return GeodesicPath(
                self.graph,
                p.vertices + [v],
                p.edge_ids + [space.radial_eid[(label, b)]],
            )
        lu, lv = space.label_of[u], space.label_of[v]
        best = None
        for a in space.spec.fibers[lu]:
            row = space.base.int_row(a)
            for b in space.spec.fibers[lv]:
                if row[b] is None:
                    continue
                cand = (row[b], a, b)
                if best is None or cand < best:
                    best = cand
        if best is None:
            raise NotGeodesicInput(
                "no base route between cones %r and %r" % (lu, lv)
            )
        _, a, b = best
        p = self._lift(a, b)
        return GeodesicPath(
            self.graph,
            [u] + p.vertices + [v],
            [space.radial_eid[(lu, a)]] + p.edge_ids + [space.radial_eid[(lv, b)]],
        )


def extend_bicombing(space: ConedSpace, gamma: Combing) -> ConedCombing:
    """Extend a geodesic combing of the base to the whole coned space."""
    if gamma.graph is not space.base:
        raise NotGeodesicInput("combing is not defined on the base graph")
    return ConedCombing(space, gamma)


def cone_crossings(space: ConedSpace, path: GeodesicPath) -> int:
    """Number of maximal path segments through the cone part.

    Apexes are the only non-base vertices, so each crossing shows up as one
    apex visit.
    """
    return sum(1 for v in path.vertices if not space.is_base_vertex(v))


@dataclass
class ConePathProfile:
    """Breakpoint structure of an extended path with cone-point endpoints.

    t1 and t2 are the arclengths at which the path leaves the first cone
    and enters the second; t3 is the total length, so the normalized
    breakpoints are t1/t3 and t2/t3.
    """

    t1: Fraction
    t2: Fraction
    t3: Fraction

    @property
    def breakpoints(self):
        return (self.t1 / self.t3, self.t2 / self.t3)


def cone_entry_profile(space: ConedSpace, p1, p2) -> ConePathProfile:
    """Arclength profile of the extended path between two cone points.

    Each endpoint may be a base vertex id or a triple (label, attachment
    vertex, h) at cone distance h from its attachment point; the extended
    path descends to the rim and runs through the base metric in between.
    """

    def unpack(p):
        if isinstance(p, int):
            return None, p, Fraction(0)
        label, vert, h = p
        h = frac(h)
        if h < 0 or h > space.spec.metrics[label].D:
            raise ParameterOutOfRange("cone distance outside [0, D]")
        return label, vert, h

    _, v1, d1 = unpack(p1)
    _, v2, d2 = unpack(p2)
    mid = space.base.distance(v1, v2)
    return ConePathProfile(t1=d1, t2=d1 + mid, t3=d1 + mid + d2)
