"""Group specifications with decidable normal forms, and their truncated
Cayley and coned-off Cayley graphs.

Supported groups are free, free-abelian, and finite-cyclic groups, closed
under direct products (further constructors live in ``treespaces``).  Every
element has a unique normal form, so equality, multiplication, inversion and
membership in generator-closed subgroups are all decidable by direct
computation.

Elements are plain hashable values (tuples and ints); all structure lives on
the spec objects.  This keeps ball enumeration cheap and makes elements
directly usable as dictionary keys.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    BallTooSmall,
    ConfigError,
    ElementOutsideBall,
    UnsupportedGroup,
)
from .metricgraph import MetricGraph
from .rational import frac

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


# -- specs ------------------------------------------------------------------


class GroupSpec:
    """Base class for group descriptions with decidable normal forms.

    Subclasses provide the identity, multiplication and inversion on normal
    forms, a deterministic sort key, and coset bookkeeping for subgroups
    generated by subsets of the standard generators.  Anything not
    implemented raises UnsupportedGroup so that partial extensions fail
    loudly in the builders.
    """

    generator_names: tuple = ()

    def _unsupported(self):
        raise UnsupportedGroup(
            "%s does not define a normal-form rule" % type(self).__name__
        )

    @property
    def identity(self):
        self._unsupported()

    def mul(self, g, h):
        self._unsupported()

    def inv(self, g):
        self._unsupported()

    def word_length(self, g) -> int:
        """Word length with respect to the standard generators."""
        self._unsupported()

    def sort_key(self, g):
        """A total order on elements; shorter words always come first."""
        return (self.word_length(g), self._key_body(g))

    def _key_body(self, g):
        self._unsupported()

    def syllables(self, g):
        """The normal form as a list of (generator name, exponent) runs."""
        self._unsupported()

    def _sub_contains(self, chosen, g) -> bool:
        self._unsupported()

    def _sub_coset_key(self, chosen, g):
        self._unsupported()

    # -- shared conveniences ------------------------------------------

    def gen(self, name: str):
        try:
            idx = self.generator_names.index(name)
        except ValueError:
            raise ConfigError(
                "unknown generator %r (have %s)" % (name, list(self.generator_names))
            ) from None
        return self._gen_by_index(idx)

    def _gen_by_index(self, idx: int):
        self._unsupported()

    def generators(self):
        return [self._gen_by_index(i) for i in range(len(self.generator_names))]

    def name_of(self, g) -> str:
        runs = self.syllables(g)
        if not runs:
            return "1"
        parts = []
        for (name, e) in runs:
            parts.append(name if e == 1 else "%s^%d" % (name, e))
        return "*".join(parts)

    def parse(self, word):
        """Turn a word string like ``a^2*b^-1`` into a normal form.

        Accepts ``*`` or whitespace as separators and ``1`` for the
        identity.  Already-normalized elements pass through unchanged.
        """
        if not isinstance(word, str):
            return self.normalize(word)
        g = self.identity
        text = word.replace("*", " ").strip()
        if text in ("", "1"):
            return g
        for token in text.split():
            if "^" in token:
                name, _, exp = token.partition("^")
                e = int(exp)
            else:
                name, e = token, 1
            s = self.gen(name)
            if e < 0:
                s, e = self.inv(s), -e
            for _ in range(e):
                g = self.mul(g, s)
        return g

    def normalize(self, g):
        """Validate that `g` is a normal form of this spec (identity check
        by round trip through mul)."""
        self.word_length(g)  # raises on malformed input
        return g

    def subgroup(self, name: str, generator_names) -> "Subgroup":
        return Subgroup(self, name, tuple(generator_names))


@dataclass(frozen=True)
class FreeGroup(GroupSpec):
    """Free group of the given rank; normal forms are reduced words.

    A word is a tuple of nonzero signed indices: +i is the (i-1)-th
    generator, -i its inverse.
    """

    rank: int
    names: tuple = None

    def __post_init__(self):
        if self.rank < 0:
            raise ConfigError("rank must be nonnegative")
        names = self.names
        if names is None:
            if self.rank > len(_LETTERS):
                raise ConfigError("rank too large for default names")
            names = tuple(_LETTERS[: self.rank])
        else:
            names = tuple(names)
            if len(names) != self.rank or len(set(names)) != self.rank:
                raise ConfigError("need %d distinct generator names" % self.rank)
        object.__setattr__(self, "names", names)

    @property
    def generator_names(self):
        return self.names

    @property
    def identity(self):
        return ()

    def _gen_by_index(self, idx):
        return (idx + 1,)

    def mul(self, g, h):
        out = list(g)
        for x in h:
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
        return tuple(out)

    def inv(self, g):
        return tuple(-x for x in reversed(g))

    def word_length(self, g):
        return len(g)

    def _key_body(self, g):
        return g

    def syllables(self, g):
        runs = []
        for x in g:
            name = self.names[abs(x) - 1]
            sgn = 1 if x > 0 else -1
            if runs and runs[-1][0] == name and (runs[-1][1] > 0) == (sgn > 0):
                runs[-1][1] += sgn
            else:
                runs.append([name, sgn])
        return [(n, e) for (n, e) in runs]

    def _sub_contains(self, chosen, g):
        idx = {self.names.index(n) + 1 for n in chosen}
        return all(abs(x) in idx for x in g)

    def _sub_coset_key(self, chosen, g):
        # gH = g'H for a free factor H iff the words agree after stripping
        # the maximal suffix written in H's letters.
        idx = {self.names.index(n) + 1 for n in chosen}
        end = len(g)
        while end > 0 and abs(g[end - 1]) in idx:
            end -= 1
        return g[:end]


@dataclass(frozen=True)
class FreeAbelian(GroupSpec):
    """Free abelian group; normal forms are exponent vectors."""

    rank: int
    names: tuple = None

    def __post_init__(self):
        if self.rank < 0:
            raise ConfigError("rank must be nonnegative")
        names = self.names
        if names is None:
            defaults = {1: ("z",), 2: ("x", "y"), 3: ("x", "y", "z")}
            names = defaults.get(self.rank)
            if names is None:
                names = tuple("x%d" % (i + 1) for i in range(self.rank))
        else:
            names = tuple(names)
            if len(names) != self.rank or len(set(names)) != self.rank:
                raise ConfigError("need %d distinct generator names" % self.rank)
        object.__setattr__(self, "names", names)

    @property
    def generator_names(self):
        return self.names

    @property
    def identity(self):
        return (0,) * self.rank

    def _gen_by_index(self, idx):
        return tuple(1 if i == idx else 0 for i in range(self.rank))

    def mul(self, g, h):
        return tuple(a + b for a, b in zip(g, h))

    def inv(self, g):
        return tuple(-a for a in g)

    def word_length(self, g):
        return sum(abs(a) for a in g)

    def _key_body(self, g):
        return g

    def syllables(self, g):
        return [(self.names[i], a) for i, a in enumerate(g) if a != 0]

    def _sub_contains(self, chosen, g):
        mask = {self.names.index(n) for n in chosen}
        return all(a == 0 for i, a in enumerate(g) if i not in mask)

    def _sub_coset_key(self, chosen, g):
        mask = {self.names.index(n) for n in chosen}
        return tuple(a for i, a in enumerate(g) if i not in mask)


@dataclass(frozen=True)
class FiniteCyclic(GroupSpec):
    """Cyclic group of the given order; normal forms are residues."""

    order: int
    name: str = "s"

    def __post_init__(self):
        if self.order < 1:
            raise ConfigError("order must be positive")

    @property
    def generator_names(self):
        return (self.name,)

    @property
    def identity(self):
        return 0

    def _gen_by_index(self, idx):
        return 1 % self.order

    def mul(self, g, h):
        return (g + h) % self.order

    def inv(self, g):
        return (-g) % self.order

    def word_length(self, g):
        return min(g % self.order, (-g) % self.order)

    def _key_body(self, g):
        return g

    def syllables(self, g):
        return [(self.name, g)] if g % self.order else []

    def _sub_contains(self, chosen, g):
        if chosen:
            return True
        return g % self.order == 0

    def _sub_coset_key(self, chosen, g):
        return 0 if chosen else g % self.order


@dataclass(frozen=True)
class DirectProduct(GroupSpec):
    """Direct product of specs; elements are tuples of factor elements.

    Factor generator names must be pairwise distinct; they become the
    product's generator names in factor order (e.g. F2 x Z has a, b, z).
    """

    factors: tuple

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise ConfigError("direct product needs at least one factor")
        for f in factors:
            if not isinstance(f, GroupSpec):
                raise ConfigError("factors must be GroupSpec instances")
        names = [n for f in factors for n in f.generator_names]
        if len(set(names)) != len(names):
            raise ConfigError("factor generator names collide: %s" % names)
        object.__setattr__(self, "factors", factors)

    @property
    def generator_names(self):
        return tuple(n for f in self.factors for n in f.generator_names)

    def _factor_of(self, name):
        for j, f in enumerate(self.factors):
            if name in f.generator_names:
                return j, f
        raise ConfigError("unknown generator %r" % name)

    @property
    def identity(self):
        return tuple(f.identity for f in self.factors)

    def _gen_by_index(self, idx):
        name = self.generator_names[idx]
        j, f = self._factor_of(name)
        return tuple(
            fac.gen(name) if i == j else fac.identity
            for i, fac in enumerate(self.factors)
        )

    def mul(self, g, h):
        return tuple(f.mul(a, b) for f, a, b in zip(self.factors, g, h))

    def inv(self, g):
        return tuple(f.inv(a) for f, a in zip(self.factors, g))

    def word_length(self, g):
        return sum(f.word_length(a) for f, a in zip(self.factors, g))

    def _key_body(self, g):
        return tuple(f.sort_key(a) for f, a in zip(self.factors, g))

    def syllables(self, g):
        out = []
        for f, a in zip(self.factors, g):
            out.extend(f.syllables(a))
        return out

    def _split_chosen(self, chosen):
        per = []
        for f in self.factors:
            per.append(frozenset(n for n in chosen if n in f.generator_names))
        return per

    def _sub_contains(self, chosen, g):
        per = self._split_chosen(chosen)
        return all(
            f._sub_contains(c, a) for f, c, a in zip(self.factors, per, g)
        )

    def _sub_coset_key(self, chosen, g):
        per = self._split_chosen(chosen)
        return tuple(
            f._sub_coset_key(c, a) for f, c, a in zip(self.factors, per, g)
        )


@dataclass(frozen=True)
class FreeProduct(GroupSpec):
    """Free product of the factor specs.

    Normal forms are tuples of (factor index, factor element) syllables
    with alternating indices and no identity syllables; multiplication
    merges and cancels at the junction.  Factor generator names must be
    pairwise distinct.
    """

    factors: tuple

    def __post_init__(self):
        factors = tuple(self.factors)
        if len(factors) < 2:
            raise ConfigError("free product needs at least two factors")
        for f in factors:
            if not isinstance(f, GroupSpec):
                raise ConfigError("factors must be GroupSpec instances")
        names = [n for f in factors for n in f.generator_names]
        if len(set(names)) != len(names):
            raise ConfigError("factor generator names collide: %s" % names)
        object.__setattr__(self, "factors", factors)

    @property
    def generator_names(self):
        return tuple(n for f in self.factors for n in f.generator_names)

    def _factor_of(self, name):
        for j, f in enumerate(self.factors):
            if name in f.generator_names:
                return j, f
        raise ConfigError("unknown generator %r" % name)

    @property
    def identity(self):
        return ()

    def _gen_by_index(self, idx):
        name = self.generator_names[idx]
        j, f = self._factor_of(name)
        return ((j, f.gen(name)),)

    def embed(self, j: int, x):
        """The factor element x as an ambient normal form."""
        if x == self.factors[j].identity:
            return ()
        return ((j, x),)

    def split_trailing(self, g, j: int):
        """Write g = h * embed(j, x) with h free of trailing j-syllables."""
        if g and g[-1][0] == j:
            return g[:-1], g[-1][1]
        return g, self.factors[j].identity

    def mul(self, g, h):
        out = list(g)
        for (j, x) in h:
            if out and out[-1][0] == j:
                f = self.factors[j]
                merged = f.mul(out[-1][1], x)
                out.pop()
                if merged != f.identity:
                    out.append((j, merged))
            else:
                out.append((j, x))
        return tuple(out)

    def inv(self, g):
        return tuple((j, self.factors[j].inv(x)) for (j, x) in reversed(g))

    def word_length(self, g):
        return sum(self.factors[j].word_length(x) for (j, x) in g)

    def _key_body(self, g):
        return tuple((j, self.factors[j].sort_key(x)) for (j, x) in g)

    def syllables(self, g):
        out = []
        for (j, x) in g:
            out.extend(self.factors[j].syllables(x))
        return out

    def _single_factor_chosen(self, chosen):
        owners = {self._factor_of(n)[0] for n in chosen}
        if len(owners) != 1:
            self._unsupported()
        return owners.pop()

    def _sub_contains(self, chosen, g):
        j = self._single_factor_chosen(chosen)
        return len(g) <= 1 and all(
            i == j and self.factors[j]._sub_contains(frozenset(chosen), x)
            for (i, x) in g
        )

    def _sub_coset_key(self, chosen, g):
        j = self._single_factor_chosen(chosen)
        head, tail = self.split_trailing(g, j)
        return (head, self.factors[j]._sub_coset_key(frozenset(chosen), tail))


@dataclass(frozen=True)
class Subgroup:
    """A named subgroup generated by a subset of the standard generators.

    Such subgroups are generator-closed by construction; membership and
    left-coset keys are computed structurally, so two elements get the same
    key exactly when they lie in the same left coset.
    """

    group: GroupSpec
    name: str
    generator_names: tuple

    def __post_init__(self):
        have = set(self.group.generator_names)
        for n in self.generator_names:
            if n not in have:
                raise ConfigError(
                    "subgroup %r uses unknown generator %r" % (self.name, n)
                )

    @property
    def _chosen(self):
        return frozenset(self.generator_names)

    def contains(self, g) -> bool:
        return self.group._sub_contains(self._chosen, g)

    def coset_key(self, g):
        return (self.name, self.group._sub_coset_key(self._chosen, g))

    def generators(self):
        return [self.group.gen(n) for n in self.generator_names]


# -- truncated Cayley graphs ------------------------------------------------

OUT_OF_BALL = -1


@dataclass
class BallAction:
    """Partial left action of the group on a truncated graph.

    `table[i][vid]` is the image of vertex `vid` under the i-th tabled
    element, or OUT_OF_BALL when the image lies outside the truncation.
    Tabled elements form a small generator ball; `act` works for arbitrary
    elements by direct computation on normal forms.
    """

    ball: "CayleyBall"
    acting_elements: tuple
    acting_names: tuple
    table: tuple

    def index(self, name: str) -> int:
        return self.acting_names.index(name)

    def tabled(self, i: int, vid: int) -> int:
        return self.table[i][vid]

    def act(self, g, vid: int):
        """Image of vertex `vid` under left translation by `g`, or None."""
        return self.ball._act_element(g, vid)


@dataclass
class CayleyBall:
    """Truncated Cayley graph: elements of word length <= radius, unit edges.

    Vertex ids are assigned by (word length, normal-form order), so the
    identity is always vertex 0 and enumeration order is deterministic.
    """

    spec: GroupSpec
    radius: int
    gens: tuple
    graph: MetricGraph
    elements: tuple
    vertex_of: dict
    word_length: tuple
    center: int
    action: BallAction = None

    def element(self, vid: int):
        return self.elements[vid]

    def vertex(self, g) -> int:
        g = self.spec.parse(g)
        vid = self.vertex_of.get(g)
        if vid is None:
            raise ElementOutsideBall(
                "element %s outside the radius-%d ball"
                % (self.spec.name_of(g), self.radius)
            )
        return vid

    def center_dist(self, vid: int) -> Fraction:
        return Fraction(self.word_length[vid])

    def core(self, dmax) -> list:
        """Vertices at word distance <= radius - dmax from the identity."""
        lim = frac(self.radius) - frac(dmax)
        return [v for v in range(len(self.elements)) if self.word_length[v] <= lim]

    def core_radius(self, dmax) -> Fraction:
        return frac(self.radius) - frac(dmax)

    def _act_element(self, g, vid):
        g = self.spec.parse(g)
        h = self.spec.mul(g, self.elements[vid])
        return self.vertex_of.get(h)


@dataclass
class ConedBall(CayleyBall):
    """Cayley ball plus one cone vertex per peripheral coset meeting it."""

    cone_length: Fraction = None
    peripherals: tuple = ()
    cone_vertices: tuple = ()
    cone_of: dict = field(default_factory=dict)
    cone_info: dict = field(default_factory=dict)

    def cone_vertex(self, peripheral_name: str, g) -> int:
        """The cone vertex over the left coset of `g`, or ElementOutsideBall."""
        g = self.spec.parse(g)
        per = {p.name: p for p in self.peripherals}[peripheral_name]
        vid = self.cone_of.get(per.coset_key(g))
        if vid is None:
            raise ElementOutsideBall(
                "coset of %s meets no ball element" % self.spec.name_of(g)
            )
        return vid

    def center_dist(self, vid: int) -> Fraction:
        if vid < len(self.elements):
            return Fraction(self.word_length[vid])
        # a cone vertex sits cone_length above its nearest coset member
        _, _, members = self.cone_info[vid]
        return min(Fraction(self.word_length[m]) for m in members) + self.cone_length

    def core(self, dmax) -> list:
        """Word-metric core, plus the apexes of cones it meets.

        Apexes are genuine points of the coned space, so checks quantify
        over them; an apex belongs to the core when some member of its
        coset does.  Fibers of boundary cosets are clipped by the
        truncation, which is exactly the truncation-relative reading of
        every verdict downstream.
        """
        lim = frac(self.radius) - frac(dmax)
        core = [v for v in range(len(self.elements)) if self.word_length[v] <= lim]
        keep = set(core)
        for vid in self.cone_vertices:
            _, _, members = self.cone_info[vid]
            if any(m in keep for m in members):
                core.append(vid)
        return core

    def _act_element(self, g, vid):
        g = self.spec.parse(g)
        if vid < len(self.elements):
            return self.vertex_of.get(self.spec.mul(g, self.elements[vid]))
        pname, rep, _ = self.cone_info[vid]
        per = {p.name: p for p in self.peripherals}[pname]
        return self.cone_of.get(per.coset_key(self.spec.mul(g, rep)))


@dataclass(frozen=True)
class ConedCayleySpec:
    """Recipe for a coned-off Cayley ball.

    `generators` may be words or normal forms (None means the standard
    generators); `peripherals` are named generator-closed subgroups whose
    left cosets receive cone vertices, attached by edges of `cone_length`.
    """

    group: GroupSpec
    generators: tuple = None
    peripherals: tuple = ()
    cone_length: Fraction = Fraction(1, 2)
    radius: int = 3
    action_radius: int = 1

    def __post_init__(self):
        object.__setattr__(self, "cone_length", frac(self.cone_length))
        if self.cone_length <= 0:
            raise ConfigError("cone length must be positive")
        if self.radius < 0 or self.action_radius < 0:
            raise ConfigError("radii must be nonnegative")
        object.__setattr__(self, "peripherals", tuple(self.peripherals))
        for p in self.peripherals:
            if p.group != self.group:
                raise ConfigError(
                    "peripheral %r belongs to a different group" % p.name
                )
        if self.generators is not None:
            object.__setattr__(self, "generators", tuple(self.generators))


def _symmetrize_generators(spec, gens):
    if gens is None:
        elems = spec.generators()
    else:
        elems = [spec.parse(g) for g in gens]
    closed = set()
    for s in elems:
        if s == spec.identity:
            raise ConfigError("a generator normalizes to the identity")
        closed.add(s)
        closed.add(spec.inv(s))
    return tuple(sorted(closed, key=spec.sort_key))


def _enumerate_ball(spec, gens, radius):
    ident = spec.identity
    dist = {ident: 0}
    frontier = [ident]
    for depth in range(1, radius + 1):
        nxt = []
        for g in frontier:
            for s in gens:
                h = spec.mul(g, s)
                if h not in dist:
                    dist[h] = depth
                    nxt.append(h)
        frontier = nxt
    return dist


def cayley_ball(spec, generators=None, radius=3, *, action_radius=1) -> CayleyBall:
    """Truncated Cayley graph with a tabled left action.

    Vertices are the normal forms of word length <= radius with respect to
    the symmetrized generating set; edges are unit-length right
    multiplications.  The action table covers the generator ball of
    `action_radius`.
    """
    if not isinstance(spec, GroupSpec):
        raise UnsupportedGroup("not a group spec: %r" % (spec,))
    if radius < 0:
        raise ConfigError("radius must be nonnegative")
    gens = _symmetrize_generators(spec, generators)
    dist = _enumerate_ball(spec, gens, radius)
    order = sorted(dist, key=lambda g: (dist[g], spec.sort_key(g)))
    vertex_of = {g: i for i, g in enumerate(order)}

    pairs = set()
    for g in order:
        u = vertex_of[g]
        for s in gens:
            v = vertex_of.get(spec.mul(g, s))
            if v is not None and v != u:
                pairs.add((min(u, v), max(u, v)))
    edges = [(u, v, Fraction(1)) for (u, v) in sorted(pairs)]
    labels = {i: spec.name_of(g) for i, g in enumerate(order)}
    graph = MetricGraph(len(order), edges, labels)

    ball = CayleyBall(
        spec=spec,
        radius=radius,
        gens=gens,
        graph=graph,
        elements=tuple(order),
        vertex_of=vertex_of,
        word_length=tuple(dist[g] for g in order),
        center=vertex_of[spec.identity],
    )
    ball.action = _build_action(ball, gens, action_radius)
    return ball


def _build_action(ball, gens, action_radius):
    spec = ball.spec
    adist = _enumerate_ball(spec, gens, action_radius)
    acting = sorted(adist, key=lambda g: (adist[g], spec.sort_key(g)))
    n = ball.graph.n
    table = []
    for a in acting:
        row = []
        for vid in range(n):
            img = ball._act_element(a, vid)
            row.append(OUT_OF_BALL if img is None else img)
        table.append(tuple(row))
    return BallAction(
        ball=ball,
        acting_elements=tuple(acting),
        acting_names=tuple(spec.name_of(a) for a in acting),
        table=tuple(table),
    )


def coned_cayley_ball(cspec: ConedCayleySpec) -> ConedBall:
    """Cayley ball with cone vertices over peripheral cosets.

    Each left coset of each peripheral that meets the ball gets one cone
    vertex, joined to every coset member in the ball by an edge of the
    configured cone length.  With no peripherals the output graph is
    identical to `cayley_ball`'s.  The action permutes cone vertices by
    left translation of cosets.
    """
    base = cayley_ball(
        cspec.group,
        cspec.generators,
        cspec.radius,
        action_radius=cspec.action_radius,
    )
    spec, graph = base.spec, base.graph

    cone_of = {}
    cone_info = {}
    cosets = []
    for per in cspec.peripherals:
        buckets = {}
        for vid, g in enumerate(base.elements):
            buckets.setdefault(per.coset_key(g), []).append(vid)
        for key in sorted(
            buckets, key=lambda k: spec.sort_key(base.elements[min(
                buckets[k], key=lambda v: spec.sort_key(base.elements[v]))])
        ):
            members = sorted(buckets[key])
            rep = base.elements[
                min(members, key=lambda v: spec.sort_key(base.elements[v]))
            ]
            cosets.append((per.name, key, rep, members))

    n0 = graph.n
    edges = list(graph.edges)
    labels = dict(graph.labels)
    cone_vids = []
    for i, (pname, key, rep, members) in enumerate(cosets):
        vid = n0 + i
        cone_vids.append(vid)
        cone_of[key] = vid
        cone_info[vid] = (pname, rep, tuple(members))
        labels[vid] = "cone:%s:%s" % (pname, spec.name_of(rep))
        for m in members:
            edges.append((m, vid, cspec.cone_length))
    coned_graph = MetricGraph(n0 + len(cosets), edges, labels)

    ball = ConedBall(
        spec=spec,
        radius=cspec.radius,
        gens=base.gens,
        graph=coned_graph,
        elements=base.elements,
        vertex_of=base.vertex_of,
        word_length=base.word_length,
        center=base.center,
        cone_length=cspec.cone_length,
        peripherals=cspec.peripherals,
        cone_vertices=tuple(cone_vids),
        cone_of=cone_of,
        cone_info=cone_info,
    )
    ball.action = _build_action(ball, base.gens, cspec.action_radius)
    return ball


# -- probes -----------------------------------------------------------------


def relative_diameter(ball: CayleyBall, elements) -> Fraction:
    """Max pairwise graph distance among the given elements.

    Measured in the ball's own metric, which for a ConedBall is the
    coned-off metric; a lower bound for the untruncated relative diameter.
    """
    vids = sorted({ball.vertex(g) for g in elements})
    if len(vids) < 2:
        return Fraction(0)
    graph = ball.graph
    graph.prefetch_rows(vids)
    best = 0
    for i, u in enumerate(vids):
        row = graph.int_row(u)
        for v in vids[i + 1 :]:
            d = row[v]
            if d is not None and d > best:
                best = d
    return Fraction(best, graph.scale)


@dataclass
class ProbeReport:
    """Outcome of one relative-properness measurement."""

    radius: Fraction
    truncation_radius: int
    target_radius: int
    n_orbit: int
    n_in_vr: int
    relative_diameter: Fraction
    stable: bool
    elements: tuple

    def to_json_dict(self):
        return {
            "probe": "relative-properness",
            "radius": self.radius,
            "truncation_radius": self.truncation_radius,
            "target_radius": self.target_radius,
            "n_orbit": self.n_orbit,
            "n_in_vr": self.n_in_vr,
            "relative_diameter": self.relative_diameter,
            "stable": self.stable,
            "elements": list(self.elements),
        }


def _rebuilt_at(ball: CayleyBall, radius: int):
    if isinstance(ball, ConedBall):
        return coned_cayley_ball(
            ConedCayleySpec(
                group=ball.spec,
                generators=ball.gens,
                peripherals=ball.peripherals,
                cone_length=ball.cone_length,
                radius=radius,
                action_radius=0,
            )
        )
    return cayley_ball(ball.spec, ball.gens, radius, action_radius=0)


def _vr_elements(target: CayleyBall, basepoint: int, r: Fraction):
    row = target.graph.int_row(basepoint)
    lim = r * target.graph.scale
    out = []
    n_orbit = 0
    for g in target.elements:
        img = target._act_element(g, basepoint)
        if img is None:
            continue
        n_orbit += 1
        d = row[img]
        if d is not None and d <= lim:
            out.append(g)
    return out, n_orbit


def relative_properness_probe(
    cspec: ConedCayleySpec,
    target: CayleyBall,
    basepoint,
    r,
    *,
    stability_check: bool = True,
) -> ProbeReport:
    """Diameter, in the coned-off Cayley ball, of the orbit-return set V_r.

    V_r collects the tabled group elements moving the basepoint at most `r`
    in the target space; its diameter is then measured in the coned-off
    Cayley ball built from `cspec` and is monotone in `r`.  When
    `stability_check` is on, the whole measurement is repeated with both
    truncations shrunk by one; a changed diameter means the truncation is
    too small to trust and raises BallTooSmall.
    """
    r = frac(r)
    if r < 0:
        raise ConfigError("probe radius must be nonnegative")
    if isinstance(basepoint, int):
        base_vid = basepoint
    else:
        base_vid = target.vertex(basepoint)
    if target.center_dist(base_vid) + r > target.radius:
        raise BallTooSmall(
            "basepoint orbit at radius %s leaves the target truncation" % r
        )

    coned = coned_cayley_ball(
        ConedCayleySpec(
            group=cspec.group,
            generators=cspec.generators,
            peripherals=cspec.peripherals,
            cone_length=cspec.cone_length,
            radius=cspec.radius,
            action_radius=0,
        )
    )
    vr, n_orbit = _vr_elements(target, base_vid, r)
    for g in vr:
        if g not in coned.vertex_of:
            raise BallTooSmall(
                "V_r element %s outside the coned truncation; increase the "
                "spec radius" % coned.spec.name_of(g)
            )
    diam = relative_diameter(coned, vr)

    stable = True
    if stability_check:
        if target.radius < 1 or cspec.radius < 1:
            raise BallTooSmall("stability check needs radius >= 1")
        small_target = _rebuilt_at(target, target.radius - 1)
        small_base = small_target.vertex(target.elements[base_vid])
        small_coned = _rebuilt_at(coned, cspec.radius - 1)
        vr_small, _ = _vr_elements(small_target, small_base, r)
        missing = [g for g in vr_small if g not in small_coned.vertex_of]
        if missing:
            raise BallTooSmall(
                "V_r reaches the shrunken coned truncation; increase radii"
            )
        diam_small = relative_diameter(small_coned, vr_small)
        stable = diam_small == diam
        if not stable:
            raise BallTooSmall(
                "relative diameter unstable under truncation (%s at %d, %s "
                "at %d)"
                % (diam, cspec.radius, diam_small, cspec.radius - 1)
            )

    return ProbeReport(
        radius=r,
        truncation_radius=cspec.radius,
        target_radius=target.radius,
        n_orbit=n_orbit,
        n_in_vr=len(vr),
        relative_diameter=diam,
        stable=stable,
        elements=tuple(coned.spec.name_of(g) for g in vr),
    )


@dataclass
class SchwarzMilnorReport:
    """Empirical two-sided quasi-isometry constants for an orbit map."""

    lam: Fraction
    k: Fraction
    density_radius: Fraction
    not_qi: bool
    n_pairs: int
    n_domain: int
    n_image: int
    collapsed_diameter: Fraction
    core_diameter: Fraction

    def to_json_dict(self):
        return {
            "probe": "schwarz-milnor",
            "lambda": self.lam,
            "k": self.k,
            "density_radius": self.density_radius,
            "not_qi": self.not_qi,
            "n_pairs": self.n_pairs,
            "n_domain": self.n_domain,
            "n_image": self.n_image,
            "collapsed_diameter": self.collapsed_diameter,
            "core_diameter": self.core_diameter,
        }


def _multi_source_row(graph: MetricGraph, sources):
    dist = [None] * graph.n
    heap = []
    for s in set(sources):
        dist[s] = 0
        heap.append((0, s))
    heapq.heapify(heap)
    adj = graph.adj
    while heap:
        d, x = heapq.heappop(heap)
        if d > dist[x]:
            continue
        for (y, w, _) in adj[x]:
            nd = d + w
            if dist[y] is None or nd < dist[y]:
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
    return dist


def schwarz_milnor_probe(
    domain_graph: MetricGraph,
    codomain_graph: MetricGraph,
    phi,
    *,
    domain_core=None,
    codomain_core=None,
    collapse_ratio=Fraction(1, 2),
) -> SchwarzMilnorReport:
    """Empirical quasi-isometry constants of a vertex map.

    Over all core pairs the report's (lam, k) satisfy both
    d(x,y)/lam - k <= d(phi x, phi y) <= lam d(x,y) + k, with lam the
    tightest ratio over non-collapsed pairs and k the residual slack.  The
    density radius is the sup over the codomain core of the distance to the
    image.  The map is flagged NotQI when collapsed pairs span at least
    `collapse_ratio` of the core diameter, which a genuine quasi-isometry
    cannot do once the core is large.
    """
    if domain_core is None:
        domain_core = range(domain_graph.n)
    if codomain_core is None:
        codomain_core = range(codomain_graph.n)
    core = sorted(set(domain_core))
    cocore = sorted(set(codomain_core))
    if len(core) < 2:
        raise BallTooSmall("domain core has fewer than two vertices")
    if not cocore:
        raise BallTooSmall("codomain core is empty")

    if callable(phi):
        images = {v: phi(v) for v in range(domain_graph.n)}
    else:
        images = {v: phi[v] for v in range(domain_graph.n)}

    domain_graph.prefetch_rows(core)
    codomain_graph.prefetch_rows(sorted({images[v] for v in core}))

    sd, sc = domain_graph.scale, codomain_graph.scale
    lam = Fraction(1)
    n_pairs = 0
    pair_data = []
    core_diam = 0
    collapsed = 0
    for i, u in enumerate(core):
        row = domain_graph.int_row(u)
        crow = codomain_graph.int_row(images[u])
        for v in core[i + 1 :]:
            d = row[v]
            dphi = crow[images[v]]
            if d is None or dphi is None:
                continue
            n_pairs += 1
            pair_data.append((d, dphi))
            if d > core_diam:
                core_diam = d
            if dphi == 0 and d > collapsed:
                collapsed = d
            if dphi > 0 and d > 0:
                lam = max(lam, Fraction(dphi * sd, d * sc), Fraction(d * sc, dphi * sd))
    if n_pairs == 0:
        raise BallTooSmall("no connected core pairs to measure")

    k = Fraction(0)
    for (d, dphi) in pair_data:
        df = Fraction(d, sd)
        dpf = Fraction(dphi, sc)
        k = max(k, dpf - lam * df, df / lam - dpf)

    image_all = sorted({images[v] for v in images})
    dens_row = _multi_source_row(codomain_graph, image_all)
    dens = 0
    for v in cocore:
        d = dens_row[v]
        if d is not None and d > dens:
            dens = d

    core_diam_f = Fraction(core_diam, sd)
    collapsed_f = Fraction(collapsed, sd)
    not_qi = collapsed > 0 and collapsed_f >= frac(collapse_ratio) * core_diam_f
    return SchwarzMilnorReport(
        lam=lam,
        k=k,
        density_radius=Fraction(dens, sc),
        not_qi=not_qi,
        n_pairs=n_pairs,
        n_domain=len(core),
        n_image=len(image_all),
        collapsed_diameter=collapsed_f,
        core_diameter=core_diam_f,
    )


def word_morphism(domain: GroupSpec, target: GroupSpec, assignment: dict):
    """Group morphism determined by images of the domain's generators.

    `assignment` maps generator names to target elements or words.  The
    caller is responsible for the images satisfying the domain's relations
    (automatic when the domain is free).
    """
    images = {name: target.parse(val) for name, val in assignment.items()}

    def apply(g):
        out = target.identity
        for (name, e) in domain.syllables(g):
            s = images.get(name)
            if s is None:
                raise ConfigError("no image assigned for generator %r" % name)
            if e < 0:
                s, e = target.inv(s), -e
            for _ in range(e):
                out = target.mul(out, s)
        return out

    return apply
