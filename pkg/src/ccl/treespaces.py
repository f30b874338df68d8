"""Trees of spaces: spiked vertex spaces glued along their spike tips.

A spike space is a graph with pendant edges of a fixed length attached at
every point of a basepoint orbit.  The two builders glue truncated
translates of spike spaces along tips: the pushout glues two one-spike
spaces over the free product of their groups, and the coalescence glues
translates of a single two-spike space over the free product with a stable
letter, identifying g*t times the first tip with g times the second.  Both
come with the dual tree T, the vertex map xi, a tabled piece of the ambient
action, and combined combings obtained by concatenating per-space combings
through the gluing points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .combing import CanonicalCombing, Combing
from .errors import (
    BasepointNotFixed,
    BuildError,
    CombingDomainMismatch,
    ConfigError,
    ElementOutsideBall,
    RadiusTooSmall,
    SameOrbitBasepoints,
    UnsupportedGroup,
)
from .groups import CayleyBall, FreeAbelian, FreeProduct, GroupSpec, cayley_ball
from .metricgraph import GeodesicPath, GraphPoint, MetricGraph, shortest_distance
from .rational import frac
from .seeds import derive_rng


# -- subdivided Cayley balls -------------------------------------------------


@dataclass
class SubdividedBall:
    """A Cayley ball with every edge cut at its midpoint.

    Midpoints are keyed by (element, positive generator name) for the edge
    from that element; the metric is unchanged.  Midpoint orbits under left
    translation are the per-generator families, which makes midpoints the
    smallest basepoints with trivial stabilizer in more than one orbit.
    """

    ball: CayleyBall
    graph: MetricGraph
    mid_of: dict
    mid_key: dict

    @property
    def spec(self):
        return self.ball.spec

    @property
    def elements(self):
        return self.ball.elements


def subdivide_ball(ball: CayleyBall) -> SubdividedBall:
    spec = ball.spec
    positive = {}
    for name in spec.generator_names:
        positive[spec.gen(name)] = name
    edges = []
    labels = dict(ball.graph.labels)
    mid_of = {}
    mid_key = {}
    vid = ball.graph.n
    for (u, v, length) in ball.graph.edges:
        gu, gv = ball.elements[u], ball.elements[v]
        step = spec.mul(spec.inv(gu), gv)
        if step in positive:
            key = (gu, positive[step])
        else:
            back = spec.inv(step)
            if back not in positive:
                raise BuildError(
                    "edge (%d, %d) is not a generator step" % (u, v)
                )
            key = (gv, positive[back])
        mid_of[key] = vid
        mid_key[vid] = key
        labels[vid] = "mid:%s:%s" % (key[1], spec.name_of(key[0]))
        half = length / 2
        edges.append((u, vid, half))
        edges.append((vid, v, half))
        vid += 1
    graph = MetricGraph(vid, edges, labels)
    return SubdividedBall(ball=ball, graph=graph, mid_of=mid_of, mid_key=mid_key)


def _descriptor(source, vid):
    """("group", element) or ("mid", element, generator name)."""
    if isinstance(source, SubdividedBall):
        if vid < source.ball.graph.n:
            return ("group", source.ball.elements[vid])
        g, s = source.mid_key[vid]
        return ("mid", g, s)
    return ("group", source.elements[vid])


def _orbit(source, vid):
    """The truncated orbit of a vertex: pairs (vertex, translator)."""
    spec = source.spec
    desc = _descriptor(source, vid)
    out = []
    if desc[0] == "group":
        base = spec.inv(desc[1])
        elements = (
            source.ball.elements if isinstance(source, SubdividedBall)
            else source.elements
        )
        for w, g in enumerate(elements):
            out.append((w, spec.mul(g, base)))
    else:
        _, g0, s = desc
        base = spec.inv(g0)
        for (g, name), w in source.mid_of.items():
            if name == s:
                out.append((w, spec.mul(g, base)))
    out.sort(key=lambda t: t[0])
    return out


# -- spike spaces ------------------------------------------------------------


@dataclass(frozen=True)
class Prong:
    """One basepoint to spike over: a vertex id plus the subgroup C whose
    cosets index the tips (None for trivial C)."""

    name: str
    basepoint: int
    subgroup: object = None


@dataclass
class SpikeSpace:
    """The base with a pendant length-ell edge at every orbit point.

    `tips` maps (prong name, translator) to the tip vertex; the translator
    is the group element carrying the basepoint to the attachment point.
    Tips are degree-1, so base distances are unchanged and tip-to-tip
    distances are ell + d_X + ell for distinct attachment points.
    """

    graph: MetricGraph
    base: MetricGraph
    base_n: int
    ell: Fraction
    source: object
    prongs: tuple
    tips: dict
    tip_info: dict

    def tip_items(self):
        """(key, tip vid, attach vid) in construction order."""
        out = []
        for vid in sorted(self.tip_info):
            key, attach = self.tip_info[vid]
            out.append((key, vid, attach))
        return out

    def prong_translators(self, name):
        return sorted(
            (key[1], vid) for key, vid in self.tips.items() if key[0] == name
        )


def build_spike(source, prongs, ell=Fraction(1)) -> SpikeSpace:
    """Attach one spike per orbit point of each prong's basepoint.

    The subgroup C of a prong must fix its basepoint; with the regular
    action only the trivial subgroup does, so a nontrivial C raises
    BasepointNotFixed.  One tip per coset of C in the (trivial) stabilizer
    means exactly one tip at each translated basepoint.
    """
    ell = frac(ell)
    if ell <= 0:
        raise ConfigError("spike length must be positive")
    spec = source.spec
    base = source.graph
    seen = set()
    edges = list(base.edges)
    labels = dict(base.labels)
    tips = {}
    tip_info = {}
    vid = base.n
    prongs = tuple(prongs)
    for prong in prongs:
        if prong.name in seen:
            raise ConfigError("duplicate prong name %r" % prong.name)
        seen.add(prong.name)
        bp = prong.basepoint
        if not (0 <= bp < base.n):
            raise ConfigError("basepoint %r is not a vertex" % (bp,))
        if prong.subgroup is not None:
            desc = _descriptor(source, bp)
            for c in prong.subgroup.generators():
                if spec.mul(c, desc[1]) != desc[1]:
                    raise BasepointNotFixed(
                        "subgroup %r does not fix the basepoint of prong %r"
                        % (prong.subgroup.name, prong.name)
                    )
        for (attach, translator) in _orbit(source, bp):
            key = (prong.name, translator)
            tips[key] = vid
            tip_info[vid] = (key, attach)
            labels[vid] = "spike:%s:%s" % (prong.name, spec.name_of(translator))
            edges.append((attach, vid, ell))
            vid += 1
    graph = MetricGraph(vid, edges, labels)
    return SpikeSpace(
        graph=graph,
        base=base,
        base_n=base.n,
        ell=ell,
        source=source,
        prongs=prongs,
        tips=tips,
        tip_info=tip_info,
    )


# -- splitting specs ---------------------------------------------------------


@dataclass(frozen=True)
class Amalgam:
    """Two vertex groups glued over a trivial edge group.

    Basepoints are words in the respective factors.  Peripheral lists are
    reserved for coned vertex spaces and currently unsupported.
    """

    factor1: GroupSpec
    factor2: GroupSpec
    basepoint1: str = "1"
    basepoint2: str = "1"
    peripherals1: tuple = ()
    peripherals2: tuple = ()


@dataclass(frozen=True)
class HNN:
    """A base group with a stable letter over a trivial edge subgroup.

    Basepoints are ("vertex", word) or ("edge", generator name); the edge
    form means the midpoint of that generator's edge at the identity, whose
    left-translation orbit is disjoint from other generators' midpoints.
    """

    base: GroupSpec
    basepoint_x: tuple = ("edge", None)
    basepoint_y: tuple = ("edge", None)
    stable_name: str = "t"
    peripherals: tuple = ()


# -- tree of spaces ----------------------------------------------------------


@dataclass(frozen=True)
class CopyInfo:
    kind: int
    rep: object
    t_vid: int
    offset: int
    base_n: int
    edge_offset: int
    n_edges: int
    tip_globals: tuple  # (local tip vid, global vid) pairs


@dataclass
class TreeAction:
    """Left translation by a small ball of ambient elements, tabled on the
    glued space and on the tree."""

    names: tuple
    elements: tuple
    table: tuple
    tree_table: tuple

    def index(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise ConfigError("element %r is not tabled" % name) from None

    def act(self, i, vid):
        return self.table[i][vid]

    def act_tree(self, i, t_vid):
        return self.tree_table[i][t_vid]


@dataclass
class TreeOfSpaces:
    """A glued space Z with its dual bipartite tree T and vertex map xi.

    K-vertices of T carry vertex spaces X_k (the preimage of the star of
    k); each L-vertex carries a single gluing vertex of Z.
    """

    graph: MetricGraph
    tree: MetricGraph
    t_kind: tuple
    t_key: tuple
    xi: tuple
    vertex_spaces: dict
    gluing_point: dict
    copies: tuple = ()
    spikes: dict = field(default_factory=dict)
    ambient: object = None
    tip_of: dict = field(default_factory=dict)
    action: object = None
    meta: dict = field(default_factory=dict)

    def xi_fiber(self, t_vid):
        return tuple(z for z, t in enumerate(self.xi) if t == t_vid)

    def k_vertices(self):
        return sorted(self.vertex_spaces)

    def l_vertices(self):
        return sorted(self.gluing_point)

    def tip_vertex(self, element_or_word):
        """The gluing vertex carried by an ambient element, or None."""
        if self.ambient is None:
            raise ConfigError("this tree of spaces has no ambient group")
        g = self.ambient.parse(element_or_word)
        return self.tip_of.get(g)

    def serialize(self) -> str:
        lines = [self.graph.serialize().rstrip("\n")]
        for z, t in enumerate(self.xi):
            lines.append("xi %d %d" % (z, t))
        for k in sorted(self.vertex_spaces):
            verts = " ".join(str(v) for v in self.vertex_spaces[k])
            lines.append("vspace %d %s" % (k, verts))
        return "\n".join(lines) + "\n"


def parse_tree_of_spaces(text: str) -> TreeOfSpaces:
    graph_lines = []
    xi_pairs = []
    spaces = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "xi":
            xi_pairs.append((int(parts[1]), int(parts[2])))
        elif parts[0] == "vspace":
            spaces[int(parts[1])] = tuple(int(v) for v in parts[2:])
        else:
            graph_lines.append(line)
    graph = MetricGraph.deserialize("\n".join(graph_lines))
    xi = [0] * graph.n
    for z, t in xi_pairs:
        xi[z] = t
    n_t = max(xi, default=-1) + 1
    t_kind = ["L"] * n_t
    for k in spaces:
        t_kind[k] = "K"
    gluing = {}
    for z, t in enumerate(xi):
        if t_kind[t] == "L":
            gluing[t] = z
    t_edges = []
    for k, verts in spaces.items():
        vset = set(verts)
        for l, z in gluing.items():
            if z in vset:
                t_edges.append((min(k, l), max(k, l), Fraction(1)))
    t_edges = sorted(set(t_edges))
    tree = MetricGraph(n_t, t_edges)
    return TreeOfSpaces(
        graph=graph,
        tree=tree,
        t_kind=tuple(t_kind),
        t_key=tuple(range(n_t)),
        xi=tuple(xi),
        vertex_spaces=spaces,
        gluing_point=gluing,
        meta={"parsed": True},
    )


# -- shared construction machinery ------------------------------------------


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        p = self.parent.setdefault(x, x)
        while p != self.parent[p]:
            self.parent[p] = self.parent[self.parent[p]]
            p = self.parent[p]
        self.parent[x] = p
        return p

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[max(rx, ry)] = min(rx, ry)


def _bfs_tree(ambient, start_keys, k_neighbors, l_sides, tree_radius,
              ambient_radius):
    """Breadth-first truncation of the dual tree.

    K-vertices are (kind, rep) pairs kept while their tree distance stays
    within tree_radius and their rep within the optional ambient length
    cap; every tip of an included copy contributes its L-vertex, pendant
    ones included.
    """

    def keep_k(rep, dist):
        if dist > tree_radius:
            return False
        if ambient_radius is not None:
            return ambient.word_length(rep) <= ambient_radius
        return True

    dist = {}
    queue = []
    for key in start_keys:
        dist[("K",) + key] = 0
        queue.append(("K",) + key)
    k_set = {key: 0 for key in start_keys}
    l_set = {}
    edges = set()
    head = 0
    while head < len(queue):
        node = queue[head]
        head += 1
        d = dist[node]
        if node[0] == "K":
            kind, rep = node[1], node[2]
            for u in k_neighbors(kind, rep):
                edges.add(((kind, rep), u))
                if u not in l_set:
                    l_set[u] = d + 1
                    if d + 1 <= tree_radius:
                        dist[("L", u)] = d + 1
                        queue.append(("L", u))
        else:
            u = node[1]
            for (kind, rep) in l_sides(u):
                if (kind, rep) in k_set:
                    edges.add(((kind, rep), u))
                    continue
                if keep_k(rep, d + 1):
                    k_set[(kind, rep)] = d + 1
                    edges.add(((kind, rep), u))
                    dist[("K", kind, rep)] = d + 1
                    queue.append(("K", kind, rep))
    return k_set, l_set, edges


def _assemble(construction, ambient, spikes, k_set, l_set, edges,
              stabilizer_expected):
    """Lay out Z, T, xi and the bookkeeping from the truncated tree data."""
    k_order = sorted(
        k_set, key=lambda kr: (k_set[kr], kr[0], ambient.sort_key(kr[1]))
    )
    l_order = sorted(l_set, key=ambient.sort_key)
    t_kind = ["K"] * len(k_order) + ["L"] * len(l_order)
    t_key = list(k_order) + list(l_order)
    k_tvid = {key: i for i, key in enumerate(k_order)}
    l_tvid = {u: len(k_order) + i for i, u in enumerate(l_order)}

    tree_edges = sorted(
        (k_tvid[k], l_tvid[u], Fraction(1))
        for (k, u) in edges
        if k in k_tvid and u in l_tvid
    )
    tree = MetricGraph(
        len(t_kind),
        tree_edges,
        {
            i: (
                "space:%d:%s" % (key[0], ambient.name_of(key[1]))
                if kind == "K"
                else "glue:%s" % ambient.name_of(key)
            )
            for i, (kind, key) in enumerate(zip(t_kind, t_key))
        },
    )

    # global layout: copy base blocks in order, then one vertex per tip class
    copies = []
    offset = 0
    edge_offset = 0
    copy_tip_keys = []
    for ci, (kind, rep) in enumerate(k_order):
        spike = spikes[kind]
        tip_keys = []
        for (key, local_tip, _attach) in spike.tip_items():
            u = _tip_element(construction, ambient, kind, rep, key)
            tip_keys.append((local_tip, u))
        copy_tip_keys.append(tip_keys)
        copies.append(
            (kind, rep, ci, offset, spike.base_n, edge_offset,
             len(spike.graph.edges), tip_keys)
        )
        offset += spike.base_n
        edge_offset += len(spike.graph.edges)

    tip_vid = {}
    for i, u in enumerate(l_order):
        tip_vid[u] = offset + i
    n_z = offset + len(l_order)

    # cross-check: the copies' own tips, identified by union-find over the
    # generating relation, must reproduce the L-vertex classes
    uf = _UnionFind()
    by_u = {}
    for ci, tip_keys in enumerate(copy_tip_keys):
        for (local_tip, u) in tip_keys:
            uf.find((ci, local_tip))
            by_u.setdefault(u, []).append((ci, local_tip))
    for u, instances in by_u.items():
        for other in instances[1:]:
            uf.union(instances[0], other)
    classes = {}
    for u, instances in by_u.items():
        roots = {uf.find(inst) for inst in instances}
        if len(roots) != 1:
            raise BuildError("tip identification split a gluing class")
        root = roots.pop()
        if root in classes:
            raise BuildError("tip identification merged two gluing classes")
        classes[root] = u
    if set(by_u) != set(l_order):
        raise BuildError("copy tips and tree gluing vertices disagree")

    z_edges = []
    z_labels = {}
    xi = [0] * n_z
    vertex_spaces = {}
    gluing_point = {}
    final_copies = []
    for (kind, rep, ci, off, base_n, e_off, n_e, tip_keys) in copies:
        spike = spikes[kind]
        t_vid = k_tvid[(kind, rep)]
        tip_map = dict(tip_keys)

        def to_global(local, _off=off, _n=base_n, _tips=tip_map):
            if local < _n:
                return _off + local
            return tip_vid[_tips[local]]

        for (u, v, w) in spike.graph.edges:
            z_edges.append((to_global(u), to_global(v), w))
        for local in range(base_n):
            z_labels[off + local] = "c%d:%s" % (ci, spike.graph.labels.get(
                local, str(local)))
            xi[off + local] = t_vid
        space = list(range(off, off + base_n))
        for (local_tip, u) in tip_keys:
            space.append(tip_vid[u])
        vertex_spaces[t_vid] = tuple(sorted(space))
        final_copies.append(
            CopyInfo(
                kind=kind,
                rep=rep,
                t_vid=t_vid,
                offset=off,
                base_n=base_n,
                edge_offset=e_off,
                n_edges=n_e,
                tip_globals=tuple(sorted(tip_keys)),
            )
        )
    for u in l_order:
        vid = tip_vid[u]
        z_labels[vid] = "tip:%s" % ambient.name_of(u)
        xi[vid] = l_tvid[u]
        gluing_point[l_tvid[u]] = vid
    graph = MetricGraph(n_z, z_edges, z_labels)
    return TreeOfSpaces(
        graph=graph,
        tree=tree,
        t_kind=tuple(t_kind),
        t_key=tuple(t_key),
        xi=tuple(xi),
        vertex_spaces=vertex_spaces,
        gluing_point=gluing_point,
        copies=tuple(final_copies),
        spikes=dict(spikes),
        ambient=ambient,
        tip_of={u: tip_vid[u] for u in l_order},
        action=None,
        meta={
            "construction": construction,
            "stabilizer_expected": stabilizer_expected,
        },
    )


def _tip_element(construction, ambient, kind, rep, key):
    """The ambient element labelling a copy's tip (its L-vertex)."""
    prong, translator = key
    if construction == "pushout":
        return ambient.mul(rep, ambient.embed(kind, translator))
    u = ambient.mul(rep, ambient.embed(0, translator))
    if prong == "y":
        u = ambient.mul(u, ambient.gen(_stable_name(ambient)))
    return u


def _stable_name(ambient):
    return ambient.factors[1].generator_names[0]


# -- builders ----------------------------------------------------------------


def build_pushout(spec: Amalgam, radius: int, tree_radius: int,
                  ell=Fraction(1), ambient_radius=None,
                  action_radius: int = 0) -> TreeOfSpaces:
    """Glue spiked copies of the two factor balls along their tips.

    Copies are indexed by factor cosets of the free product; the tip over
    translator a in copy (i, h) is the gluing vertex h * a, shared with the
    other factor's copy through that element.  The dual tree is the
    truncated Bass-Serre tree of the splitting with one L-vertex per glued
    tip.
    """
    if radius < 1 or tree_radius < 1:
        raise RadiusTooSmall("need radius >= 1 and tree_radius >= 1")
    if spec.peripherals1 or spec.peripherals2:
        raise UnsupportedGroup("coned vertex spaces are not supported here")
    ambient = FreeProduct((spec.factor1, spec.factor2))
    spikes = {}
    for i, (factor, bp_word) in enumerate(
        ((spec.factor1, spec.basepoint1), (spec.factor2, spec.basepoint2))
    ):
        ball = cayley_ball(factor, radius=radius, action_radius=0)
        try:
            bp = ball.vertex(bp_word)
        except ElementOutsideBall:
            raise RadiusTooSmall(
                "basepoint %r outside the radius-%d ball" % (bp_word, radius)
            ) from None
        spikes[i] = build_spike(ball, [Prong("x", bp, None)], ell)

    def k_neighbors(kind, rep):
        for (a, _tip) in spikes[kind].prong_translators("x"):
            yield ambient.mul(rep, ambient.embed(kind, a))

    def l_sides(u):
        for i in (0, 1):
            head, tail = ambient.split_trailing(u, i)
            if ("x", tail) in spikes[i].tips:
                yield (i, head)

    k_set, l_set, edges = _bfs_tree(
        ambient, [(0, ambient.identity)], k_neighbors, l_sides,
        tree_radius, ambient_radius,
    )
    tos = _assemble("pushout", ambient, spikes, k_set, l_set, edges,
                    stabilizer_expected=())
    tos.meta["z"] = tos.tip_of[ambient.identity]
    if action_radius > 0:
        tos.action = _build_tree_action(tos, action_radius)
    return tos


def build_coalescence(spec: HNN, radius: int, tree_radius: int,
                      ell=Fraction(1), ambient_radius=None,
                      action_radius: int = 0) -> TreeOfSpaces:
    """Glue spiked copies of one base ball, twisting by the stable letter.

    Each copy has x-tips and y-tips; the y-tip over translator a in copy h
    is identified with the x-tip of copy h*a*t, so both carry the gluing
    vertex h*a*t.  Basepoints must lie in different orbits: two vertex
    basepoints always share the regular orbit and are rejected, midpoint
    basepoints are in different orbits exactly when their generators
    differ.
    """
    if radius < 1 or tree_radius < 1:
        raise RadiusTooSmall("need radius >= 1 and tree_radius >= 1")
    if spec.peripherals:
        raise UnsupportedGroup("coned vertex spaces are not supported here")
    kind_x, kind_y = spec.basepoint_x[0], spec.basepoint_y[0]
    if kind_x == "vertex" and kind_y == "vertex":
        raise SameOrbitBasepoints(
            "two vertex basepoints lie in one orbit of the regular action "
            "(their stabilizers K and L coincide)"
        )
    if kind_x == "edge" and kind_y == "edge":
        if spec.basepoint_x[1] == spec.basepoint_y[1]:
            raise SameOrbitBasepoints(
                "midpoints of the same generator lie in one orbit"
            )
    ambient = FreeProduct(
        (spec.base, FreeAbelian(1, names=(spec.stable_name,)))
    )
    t_elem = ambient.gen(spec.stable_name)
    ball = cayley_ball(spec.base, radius=radius, action_radius=0)
    source = (
        subdivide_ball(ball) if "edge" in (kind_x, kind_y) else ball
    )

    def resolve(bp):
        if bp[0] == "vertex":
            try:
                return ball.vertex(bp[1])
            except ElementOutsideBall:
                raise RadiusTooSmall(
                    "basepoint %r outside the radius-%d ball" % (bp[1], radius)
                ) from None
        if bp[1] not in spec.base.generator_names:
            raise ConfigError("unknown edge generator %r" % (bp[1],))
        return source.mid_of[(spec.base.identity, bp[1])]

    spike = build_spike(
        source,
        [Prong("x", resolve(spec.basepoint_x), None),
         Prong("y", resolve(spec.basepoint_y), None)],
        ell,
    )
    spikes = {0: spike}

    def k_neighbors(kind, rep):
        for (a, _tip) in spike.prong_translators("x"):
            yield ambient.mul(rep, ambient.embed(0, a))
        for (a, _tip) in spike.prong_translators("y"):
            yield ambient.mul(ambient.mul(rep, ambient.embed(0, a)), t_elem)

    def l_sides(u):
        head, tail = ambient.split_trailing(u, 0)
        if ("x", tail) in spike.tips:
            yield (0, head)
        head2, tail2 = ambient.split_trailing(
            ambient.mul(u, ambient.inv(t_elem)), 0
        )
        if ("y", tail2) in spike.tips:
            yield (0, head2)

    k_set, l_set, edges = _bfs_tree(
        ambient, [(0, ambient.identity)], k_neighbors, l_sides,
        tree_radius, ambient_radius,
    )
    tos = _assemble("coalescence", ambient, spikes, k_set, l_set, edges,
                    stabilizer_expected=())
    tos.meta["z"] = tos.tip_of[t_elem]
    if action_radius > 0:
        tos.action = _build_tree_action(tos, action_radius)
    return tos


def _build_tree_action(tos: TreeOfSpaces, action_radius: int) -> TreeAction:
    """Table left translation by the ambient ball on Z and on T."""
    ambient = tos.ambient
    acting_ball = cayley_ball(ambient, radius=action_radius, action_radius=0)
    elements = list(acting_ball.elements)
    names = [ambient.name_of(g) for g in elements]
    copy_of = {}
    for copy in tos.copies:
        copy_of[(copy.kind, copy.rep)] = copy
    construction = tos.meta["construction"]
    table = []
    tree_table = []
    for g in elements:
        row = [None] * tos.graph.n
        t_row = [None] * tos.tree.n
        for i, key in enumerate(tos.t_key):
            if tos.t_kind[i] == "K":
                kind, rep = key
                # the image coset's rep absorbs any trailing factor part
                head, _tail = ambient.split_trailing(
                    ambient.mul(g, rep),
                    kind if construction == "pushout" else 0,
                )
                target = copy_of.get((kind, head))
                t_row[i] = None if target is None else target.t_vid
            else:
                u2 = ambient.mul(g, key)
                vid2 = tos.tip_of.get(u2)
                t_row[i] = None if vid2 is None else tos.xi[vid2]
        for copy in tos.copies:
            spike = tos.spikes[copy.kind]
            factor = _copy_factor(tos, copy.kind)
            emb = (
                (lambda x, _k=copy.kind: tos.ambient.embed(_k, x))
                if construction == "pushout"
                else (lambda x: tos.ambient.embed(0, x))
            )
            j = copy.kind if construction == "pushout" else 0
            for local in range(copy.base_n):
                desc = _descriptor(spike.source, local)
                w = ambient.mul(ambient.mul(g, copy.rep), emb(desc[1]))
                head, tail = ambient.split_trailing(w, j)
                target = copy_of.get((copy.kind, head))
                if target is None:
                    continue
                if desc[0] == "group":
                    vid2 = _local_vertex(tos, target, ("group", tail))
                else:
                    vid2 = _local_vertex(tos, target, ("mid", tail, desc[2]))
                if vid2 is not None:
                    row[copy.offset + local] = vid2
        for u, vid in tos.tip_of.items():
            u2 = ambient.mul(g, u)
            row[vid] = tos.tip_of.get(u2)
        table.append(tuple(row))
        tree_table.append(tuple(t_row))
    return TreeAction(
        names=tuple(names),
        elements=tuple(elements),
        table=tuple(table),
        tree_table=tuple(tree_table),
    )


def _copy_factor(tos, kind):
    construction = tos.meta["construction"]
    if construction == "pushout":
        return tos.ambient.factors[kind]
    return tos.ambient.factors[0]


def _local_vertex(tos, copy: CopyInfo, desc):
    """Global vertex of a copy from a local descriptor, or None."""
    spike = tos.spikes[copy.kind]
    source = spike.source
    if desc[0] == "group":
        if isinstance(source, SubdividedBall):
            local = source.ball.vertex_of.get(desc[1])
        else:
            local = source.vertex_of.get(desc[1])
        if local is None:
            return None
        return copy.offset + local
    local = source.mid_of.get((desc[1], desc[2]))
    if local is None:
        return None
    return copy.offset + local


# -- hand-glued fixtures -----------------------------------------------------


def glue_spaces(pieces, joins) -> TreeOfSpaces:
    """Glue whole graphs at named vertices; joins are (i, vi, j, vj).

    Each join identifies one vertex of piece i with one of piece j and
    becomes an L-vertex of the dual tree; joins sharing a vertex coalesce.
    The result must be a tree of pieces, otherwise ConfigError.
    """
    pieces = list(pieces)
    if not pieces:
        raise ConfigError("need at least one piece")
    offsets = []
    total = 0
    for g in pieces:
        offsets.append(total)
        total += g.n
    uf = _UnionFind()
    for (i, vi, j, vj) in joins:
        if not (0 <= i < len(pieces) and 0 <= j < len(pieces)):
            raise ConfigError("join references a missing piece")
        if i == j:
            raise ConfigError("cannot join a piece to itself")
        uf.union(offsets[i] + vi, offsets[j] + vj)
    raw_class = {}
    for raw in range(total):
        raw_class.setdefault(uf.find(raw), []).append(raw)
    glued_classes = sorted(
        root for root, members in raw_class.items() if len(members) > 1
    )
    new_of = {}
    nxt = 0
    for raw in range(total):
        root = uf.find(raw)
        if root in new_of:
            continue
        new_of[root] = nxt
        nxt += 1
    n_z = nxt

    def z_of(raw):
        return new_of[uf.find(raw)]

    z_edges = []
    z_labels = {}
    for pi, g in enumerate(pieces):
        for (u, v, w) in g.edges:
            z_edges.append((z_of(offsets[pi] + u), z_of(offsets[pi] + v), w))
        for v in range(g.n):
            z_labels.setdefault(
                z_of(offsets[pi] + v), "p%d:%s" % (pi, g.labels.get(v, v))
            )
    n_k = len(pieces)
    l_tvid = {root: n_k + i for i, root in enumerate(glued_classes)}
    t_kind = ("K",) * n_k + ("L",) * len(glued_classes)
    gluing_point = {l_tvid[root]: z_of(root) for root in glued_classes}
    vertex_spaces = {}
    t_edges = set()
    xi = [None] * n_z
    for pi, g in enumerate(pieces):
        verts = sorted({z_of(offsets[pi] + v) for v in range(g.n)})
        vertex_spaces[pi] = tuple(verts)
        for v in range(g.n):
            raw = offsets[pi] + v
            root = uf.find(raw)
            if root in l_tvid:
                xi[z_of(raw)] = l_tvid[root]
                t_edges.add((pi, l_tvid[root]))
            elif xi[z_of(raw)] is None:
                xi[z_of(raw)] = pi
    tree = MetricGraph(
        len(t_kind), sorted((a, b, Fraction(1)) for (a, b) in t_edges)
    )
    if len(tree.edges) != tree.n - 1 or tree.n_components != 1:
        raise ConfigError("gluing pattern is not a tree")
    return TreeOfSpaces(
        graph=MetricGraph(n_z, z_edges, z_labels),
        tree=tree,
        t_kind=t_kind,
        t_key=tuple(range(len(t_kind))),
        xi=tuple(xi),
        vertex_spaces=vertex_spaces,
        gluing_point=gluing_point,
        meta={"construction": "glued"},
    )


# -- combings on trees of spaces --------------------------------------------


class PieceCombing(Combing):
    """A combing of one vertex space, addressed by global vertex ids."""

    def __init__(self, graph, local: Combing, to_global, edge_ids):
        self.graph = graph
        self.local = local
        self.to_global = tuple(to_global)
        self.edge_ids = tuple(edge_ids)
        self._to_local = {g: i for i, g in enumerate(self.to_global)}

    def path(self, u: int, v: int) -> GeodesicPath:
        try:
            lu, lv = self._to_local[u], self._to_local[v]
        except KeyError:
            raise CombingDomainMismatch(
                "vertex outside this vertex space"
            ) from None
        p = self.local.path(lu, lv)
        return GeodesicPath(
            self.graph,
            [self.to_global[w] for w in p.vertices],
            [self.edge_ids[e] for e in p.edge_ids],
            canonical=p.canonical,
        )


def _extract_space(tos: TreeOfSpaces, k: int):
    verts = tos.vertex_spaces[k]
    index = {v: i for i, v in enumerate(verts)}
    edges = []
    edge_ids = []
    labels = {}
    for eid, (u, v, w) in enumerate(tos.graph.edges):
        if u in index and v in index:
            edges.append((index[u], index[v], w))
            edge_ids.append(eid)
    for v, i in index.items():
        labels[i] = tos.graph.labels.get(v, str(v))
    return MetricGraph(len(verts), edges, labels), verts, edge_ids


def canonical_family(tos: TreeOfSpaces) -> dict:
    """Independent canonical combings, one per vertex space."""
    family = {}
    for k in tos.k_vertices():
        local, verts, edge_ids = _extract_space(tos, k)
        family[k] = PieceCombing(
            tos.graph, CanonicalCombing(local), verts, edge_ids
        )
    return family


def transported_family(tos: TreeOfSpaces) -> dict:
    """One canonical combing per copy type, transported to every copy.

    All copies of a type share the local spike graph, so the transported
    family is the type's combing read through each copy's translation;
    this realizes the family equivariance identity by construction.
    """
    if not tos.copies:
        raise ConfigError("transported family needs construction copies")
    type_combing = {
        kind: CanonicalCombing(spike.graph)
        for kind, spike in tos.spikes.items()
    }
    family = {}
    for copy in tos.copies:
        spike = tos.spikes[copy.kind]
        to_global = [copy.offset + i for i in range(copy.base_n)]
        tip_map = dict(copy.tip_globals)
        for local in range(copy.base_n, spike.graph.n):
            u = tip_map[local]
            to_global.append(tos.tip_of[u])
        edge_ids = range(copy.edge_offset, copy.edge_offset + copy.n_edges)
        family[copy.t_vid] = PieceCombing(
            tos.graph, type_combing[copy.kind], to_global, edge_ids
        )
    return family


class CombinedCombing(Combing):
    """Concatenation of vertex-space combings through the gluing points.

    The tree geodesic between the xi-images determines the gluing vertex
    sequence; the path is the concatenation of the per-space paths between
    consecutive waypoints, parametrized by cumulative arclength.  On pairs
    within one vertex space it coincides with that space's combing.
    """

    def __init__(self, tos: TreeOfSpaces, family: dict):
        self.tos = tos
        self.family = dict(family)
        self.graph = tos.graph
        self._cache = {}
        self._t_parent = {}
        for k in self.family:
            if k not in tos.vertex_spaces:
                raise CombingDomainMismatch(
                    "family indexed by a non-space tree vertex %r" % (k,)
                )
        missing = set(tos.vertex_spaces) - set(self.family)
        if missing:
            raise CombingDomainMismatch(
                "no combing for vertex spaces %s" % sorted(missing)
            )

    def _tree_path(self, s: int, t: int):
        parent = self._t_parent.get(s)
        if parent is None:
            parent = [None] * self.tos.tree.n
            parent[s] = s
            queue = [s]
            head = 0
            while head < len(queue):
                x = queue[head]
                head += 1
                for (y, _, _) in self.tos.tree.adj[x]:
                    if parent[y] is None:
                        parent[y] = x
                        queue.append(y)
            self._t_parent[s] = parent
        if parent[t] is None:
            raise CombingDomainMismatch("tree vertices in different components")
        path = [t]
        while path[-1] != s:
            path.append(parent[path[-1]])
        path.reverse()
        return path

    def path(self, u: int, v: int) -> GeodesicPath:
        key = (u, v)
        got = self._cache.get(key)
        if got is None:
            got = self._build(u, v)
            self._cache[key] = got
        return got

    def _build(self, u: int, v: int) -> GeodesicPath:
        tos = self.tos
        n = tos.graph.n
        if not (0 <= u < n and 0 <= v < n):
            raise CombingDomainMismatch("vertex outside the glued space")
        tpath = self._tree_path(tos.xi[u], tos.xi[v])
        ks = [p for p in tpath if tos.t_kind[p] == "K"]
        if not ks:
            # both map to one gluing vertex, so u == v
            return GeodesicPath(tos.graph, [u], [], canonical=True)
        interior = [
            p for p in tpath[1:-1] if tos.t_kind[p] == "L"
        ]
        waypoints = [u] + [tos.gluing_point[l] for l in interior] + [v]
        vertices = [u]
        edge_ids = []
        for k, a, b in zip(ks, waypoints[:-1], waypoints[1:]):
            if a == b:
                continue
            p = self.family[k].path(a, b)
            vertices.extend(p.vertices[1:])
            edge_ids.extend(p.edge_ids)
        return GeodesicPath(tos.graph, vertices, edge_ids, canonical=False)


def combine_bicombing(tos: TreeOfSpaces, family=None) -> CombinedCombing:
    """The combing of Z obtained by concatenating per-space combings."""
    if family is None:
        family = canonical_family(tos)
    return CombinedCombing(tos, family)


# -- reports -----------------------------------------------------------------


@dataclass
class SuiteCheck:
    name: str
    ok: bool
    detail: object = None

    def to_json_dict(self):
        out = {"check": self.name, "ok": self.ok}
        if self.detail is not None:
            out["detail"] = self.detail
        return out


@dataclass
class StructuralReport:
    ok: bool
    checks: list

    def to_json_dict(self):
        return {"ok": self.ok, "checks": [c.to_json_dict() for c in self.checks]}

    def failed(self):
        return [c for c in self.checks if not c.ok]


def structural_report(tos: TreeOfSpaces) -> StructuralReport:
    """The structural suite: xi totality, singleton gluing fibers,
    vertex-space convexity, and the dual graph being a bipartite tree."""
    checks = []
    n = tos.graph.n
    xi_ok = len(tos.xi) == n and all(
        0 <= t < tos.tree.n for t in tos.xi
    )
    checks.append(SuiteCheck("xi-total", xi_ok))

    bad_l = []
    for l in tos.l_vertices():
        fiber = tos.xi_fiber(l)
        if len(fiber) != 1 or fiber[0] != tos.gluing_point[l]:
            bad_l.append(l)
    checks.append(
        SuiteCheck("gluing-fibers-singleton", not bad_l, bad_l or None)
    )

    tree_ok = (
        len(tos.tree.edges) == tos.tree.n - 1
        and len(set(tos.tree.component)) <= 1
    )
    checks.append(SuiteCheck("tree-acyclic-connected", tree_ok))
    bipartite_ok = all(
        {tos.t_kind[u], tos.t_kind[v]} == {"K", "L"}
        for (u, v, _) in tos.tree.edges
    )
    checks.append(SuiteCheck("tree-bipartite", bipartite_ok))

    bad_star = []
    for k in tos.k_vertices():
        star = set(tos.xi_fiber(k))
        for (a, b, _) in tos.tree.edges:
            if k in (a, b):
                star.add(tos.gluing_point[b if a == k else a])
        if tuple(sorted(star)) != tuple(sorted(tos.vertex_spaces[k])):
            bad_star.append(k)
    checks.append(
        SuiteCheck("spaces-match-tree-stars", not bad_star, bad_star or None)
    )

    witness = None
    for k in tos.k_vertices():
        local, verts, _ = _extract_space(tos, k)
        inside = set(verts)
        rows = {}
        for u in verts:
            rows[u] = tos.graph.int_row(u)
        for i, u in enumerate(verts):
            lrow = local.int_row(i)
            zrow = rows[u]
            for j in range(i + 1, len(verts)):
                v = verts[j]
                lz = lrow[j]
                gz = zrow[v]
                if (
                    lz is None
                    or gz is None
                    or Fraction(lz, local.scale) != Fraction(gz, tos.graph.scale)
                ):
                    witness = {"space": k, "pair": [u, v]}
                    break
            if witness:
                break
        if witness:
            break
        # no outside vertex may sit on a geodesic between space vertices
        for w in range(n):
            if w in inside:
                continue
            wrow = tos.graph.int_row(w)
            for i, u in enumerate(verts):
                du = wrow[u]
                if du is None:
                    continue
                zrow = rows[u]
                for j in range(i + 1, len(verts)):
                    v = verts[j]
                    dv = wrow[v]
                    if dv is None or zrow[v] is None:
                        continue
                    if du + dv == zrow[v]:
                        witness = {
                            "space": k,
                            "pair": [u, v],
                            "through": w,
                        }
                        break
                if witness:
                    break
            if witness:
                break
        if witness:
            break
    checks.append(SuiteCheck("vertex-spaces-convex", witness is None, witness))
    return StructuralReport(ok=all(c.ok for c in checks), checks=checks)


def stabilizer_report(tos: TreeOfSpaces) -> dict:
    """Tabled fixers of the distinguished gluing vertex versus the expected
    subgroup bookkeeping."""
    if tos.action is None:
        raise ConfigError("stabilizer bookkeeping needs a tabled action")
    z = tos.meta["z"]
    fixers = [
        tos.action.names[i]
        for i in range(len(tos.action.elements))
        if tos.action.table[i][z] == z
    ]
    expected = tos.meta.get("stabilizer_expected", ())
    expected_tabled = ["1"] if not expected else None
    ok = expected_tabled is not None and fixers == expected_tabled
    return {
        "construction": tos.meta["construction"],
        "z": z,
        "tabled_fixers": fixers,
        "expected_generators": list(expected),
        "ok": ok,
    }


# -- equivariance ------------------------------------------------------------


@dataclass
class EquivReport:
    checked: int
    skipped: int
    violations: list
    ok: bool

    def to_json_dict(self):
        return {
            "checked": self.checked,
            "skipped": self.skipped,
            "violations": self.violations[:10],
            "n_violations": len(self.violations),
            "ok": self.ok,
        }


def _translate_point(graph, point, act):
    """Map a path point through a vertex action; None when it leaves."""
    if point.is_vertex:
        v = act(point.vertex)
        return None if v is None else GraphPoint.at_vertex(v)
    u, v, length = graph.edges[point.edge]
    pu, pv = act(u), act(v)
    if pu is None or pv is None:
        return None
    w_int = graph.int_weights[point.edge]
    for (other, w, eid) in graph.adj[pu]:
        if other == pv and w == w_int:
            a, _b, _ = graph.edges[eid]
            offset = point.offset if a == pu else length - point.offset
            return GraphPoint.on_edge(graph, eid, offset)
    return None


def _grid(denominator):
    return [Fraction(i, denominator) for i in range(denominator + 1)]


def equivariant_combing_check(combing: Combing, action, pairs=None,
                              grid_denominator=4,
                              max_violations=25) -> EquivReport:
    """Check g . path(u, v)(t) == path(g.u, g.v)(t) over a tabled action.

    Tie-broken canonical combings need not pass; the report lists offending
    (element, pair, t) triples with the two points' distance.
    """
    graph = combing.graph
    if pairs is None:
        pairs = [
            (u, v)
            for u in range(graph.n)
            for v in range(graph.n)
            if u != v
        ]
    grid = _grid(grid_denominator)
    checked = skipped = 0
    violations = []
    for gi in range(len(action.acting_elements)):
        name = action.acting_names[gi]
        if name == "1":
            continue

        def act(v, _gi=gi):
            w = action.tabled(_gi, v)
            return None if w is None or w < 0 else w

        for (u, v) in pairs:
            pu, pv = act(u), act(v)
            if pu is None or pv is None:
                skipped += 1
                continue
            for t in grid:
                lhs = _translate_point(graph, combing.path(u, v).eval(t), act)
                if lhs is None:
                    skipped += 1
                    continue
                rhs = combing.path(pu, pv).eval(t)
                checked += 1
                gap = shortest_distance(graph, lhs, rhs)
                if gap != 0:
                    violations.append(
                        {"element": name, "pair": [u, v], "t": t, "gap": gap}
                    )
                    if len(violations) >= max_violations:
                        return EquivReport(checked, skipped, violations, False)
    return EquivReport(checked, skipped, violations, not violations)


def equivariant_family_check(tos: TreeOfSpaces, family=None,
                             grid_denominator=4, sample_pairs=200,
                             seed=0, max_violations=25) -> EquivReport:
    """Family identity h . G_k(x, y)(t) == G_{hk}(hx, hy)(t), then the same
    for the combined combing, over the tabled ambient action.

    Without a tabled action the report is vacuous.  The transported family
    realizes the identity by construction whenever the type combings
    commute with the local shifts; independent canonical families merely
    measure it.
    """
    if family is None:
        family = canonical_family(tos)
    action = tos.action
    if action is None:
        return EquivReport(0, 0, [], True)
    graph = tos.graph
    grid = _grid(grid_denominator)
    rng = derive_rng(seed, "equivariant-family")
    checked = skipped = 0
    violations = []

    def act(gi, v):
        return action.act(gi, v)

    for gi, g in enumerate(action.elements):
        name = action.names[gi]
        if name == "1":
            continue
        for k in tos.k_vertices():
            hk = action.act_tree(gi, k)
            if hk is None or hk not in tos.vertex_spaces:
                skipped += 1
                continue
            verts = tos.vertex_spaces[k]
            all_pairs = [
                (u, v) for u in verts for v in verts if u != v
            ]
            if len(all_pairs) > sample_pairs:
                all_pairs = rng.sample(all_pairs, sample_pairs)
            for (u, v) in sorted(all_pairs):
                pu, pv = act(gi, u), act(gi, v)
                if pu is None or pv is None:
                    skipped += 1
                    continue
                if pu not in tos.vertex_spaces[hk] or (
                    pv not in tos.vertex_spaces[hk]
                ):
                    skipped += 1
                    continue
                for t in grid:
                    lhs = _translate_point(
                        graph, family[k].path(u, v).eval(t),
                        lambda w, _gi=gi: act(_gi, w),
                    )
                    if lhs is None:
                        skipped += 1
                        continue
                    rhs = family[hk].path(pu, pv).eval(t)
                    checked += 1
                    gap = shortest_distance(graph, lhs, rhs)
                    if gap != 0:
                        violations.append(
                            {
                                "stage": "family",
                                "element": name,
                                "space": k,
                                "pair": [u, v],
                                "t": t,
                                "gap": gap,
                            }
                        )
                        if len(violations) >= max_violations:
                            return EquivReport(
                                checked, skipped, violations, False
                            )
    combined = CombinedCombing(tos, family)
    pairs = [
        (u, v)
        for u in range(graph.n)
        for v in range(graph.n)
        if u != v
    ]
    if len(pairs) > sample_pairs:
        pairs = rng.sample(pairs, sample_pairs)
    for gi in range(len(action.elements)):
        name = action.names[gi]
        if name == "1":
            continue
        for (u, v) in sorted(pairs):
            pu, pv = act(gi, u), act(gi, v)
            if pu is None or pv is None:
                skipped += 1
                continue
            for t in grid:
                lhs = _translate_point(
                    graph, combined.path(u, v).eval(t),
                    lambda w, _gi=gi: act(_gi, w),
                )
                if lhs is None:
                    skipped += 1
                    continue
                rhs = combined.path(pu, pv).eval(t)
                checked += 1
                gap = shortest_distance(graph, lhs, rhs)
                if gap != 0:
                    violations.append(
                        {
                            "stage": "combined",
                            "element": name,
                            "pair": [u, v],
                            "t": t,
                            "gap": gap,
                        }
                    )
                    if len(violations) >= max_violations:
                        return EquivReport(checked, skipped, violations, False)
    return EquivReport(checked, skipped, violations, not violations)
