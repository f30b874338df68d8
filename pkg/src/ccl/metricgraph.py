"""Exact-arithmetic weighted graphs, points on edges, and canonical shortest paths.

Vertices are dense ids ``0..n-1`` with optional string labels.  Edge lengths are
positive rationals; parallel edges are allowed and distinguished by edge id.
Distances are computed on an integer rescaling of the lengths (by the least
common multiple of their denominators), so every reported distance is exact.

Graphs are immutable after construction and safe for concurrent reads.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction

from .errors import DisconnectedPair, ParameterOutOfRange
from .rational import frac, frac_str

# Above this vertex count, bulk distance queries go through scipy's Dijkstra
# on the scaled integer weights.  Sums of scaled weights stay below 2**53 for
# every graph we build, so the float64 round trip is exact; the pure-Python
# row computation below is the reference implementation and the two are
# property-tested against each other.
_SCIPY_MIN_VERTICES = 320


class MetricGraph:
    """Finite undirected graph with positive exact-rational edge lengths."""

    def __init__(self, n_vertices, edges, labels=None):
        if n_vertices < 0:
            raise ValueError("vertex count must be nonnegative")
        self.n = int(n_vertices)
        self.edges = []
        for (u, v, length) in edges:
            u = int(u)
            v = int(v)
            length = frac(length)
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError("edge endpoint out of range: (%d, %d)" % (u, v))
            if u == v:
                raise ValueError("self-loops are not allowed (vertex %d)" % u)
            if length <= 0:
                raise ValueError("edge length must be positive, got %s" % length)
            self.edges.append((u, v, length))
        self.labels = dict(labels) if labels else {}

        from math import lcm

        denoms = [e[2].denominator for e in self.edges]
        self.scale = lcm(*denoms) if denoms else 1
        self.int_weights = [int(e[2] * self.scale) for e in self.edges]

        adj = [[] for _ in range(self.n)]
        for eid, (u, v, _) in enumerate(self.edges):
            w = self.int_weights[eid]
            adj[u].append((v, w, eid))
            adj[v].append((u, w, eid))
        for lst in adj:
            lst.sort(key=lambda t: (t[0], t[2]))
        self.adj = adj

        self.component = [-1] * self.n
        comp = 0
        for start in range(self.n):
            if self.component[start] != -1:
                continue
            stack = [start]
            self.component[start] = comp
            while stack:
                x = stack.pop()
                for (y, _, _) in adj[x]:
                    if self.component[y] == -1:
                        self.component[y] = comp
                        stack.append(y)
            comp += 1
        self.n_components = comp

        self._rows = {}
        self._csr = None
        self._scipy_ok = None

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_csr"] = None  # scipy matrix is rebuilt on demand after unpickling
        return state

    # -- basic accessors -------------------------------------------------

    def edge_length(self, eid: int) -> Fraction:
        return self.edges[eid][2]

    def same_component(self, u: int, v: int) -> bool:
        return self.component[u] == self.component[v]

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    # -- distances -------------------------------------------------------

    def _dijkstra_row(self, source: int):
        dist = [None] * self.n
        dist[source] = 0
        heap = [(0, source)]
        adj = self.adj
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

    def _scipy_exact(self) -> bool:
        if self._scipy_ok is None:
            # every shortest path is simple, so its scaled length is at most
            # the sum of all scaled weights; below 2**53 float64 sums of
            # integers are exact
            self._scipy_ok = sum(self.int_weights) < 2**53
        return self._scipy_ok

    def _scipy_rows(self, sources):
        import numpy as np
        from scipy.sparse import csr_matrix
        from scipy.sparse.csgraph import dijkstra

        if self._csr is None:
            # coo->csr sums duplicate entries, which would turn parallel
            # edges into their weight sum; collapse them to the minimum first
            best = {}
            for (u, v, _), w in zip(self.edges, self.int_weights):
                key = (u, v) if u < v else (v, u)
                if key not in best or w < best[key]:
                    best[key] = w
            us = [k[0] for k in best] + [k[1] for k in best]
            vs = [k[1] for k in best] + [k[0] for k in best]
            ws = [float(w) for w in best.values()] * 2
            self._csr = csr_matrix(
                (ws, (us, vs)), shape=(self.n, self.n), dtype=np.float64
            )
        mat = dijkstra(self._csr, directed=False, indices=list(sources))
        out = []
        for rowidx in range(mat.shape[0]):
            row = mat[rowidx]
            out.append([None if x == float("inf") else int(x) for x in row])
        return out

    def int_row(self, source: int):
        """Distances from `source` to every vertex, scaled by `self.scale`.

        Entries are ints (or None when disconnected).  Rows are cached.
        """
        row = self._rows.get(source)
        if row is None:
            if self.n >= _SCIPY_MIN_VERTICES and self._scipy_exact():
                row = self._scipy_rows([source])[0]
            else:
                row = self._dijkstra_row(source)
            self._rows[source] = row
        return row

    def prefetch_rows(self, sources) -> None:
        missing = [s for s in dict.fromkeys(sources) if s not in self._rows]
        if not missing:
            return
        if self.n >= _SCIPY_MIN_VERTICES and self._scipy_exact() and len(missing) > 2:
            for s, row in zip(missing, self._scipy_rows(missing)):
                self._rows[s] = row
        else:
            for s in missing:
                self.int_row(s)

    def distance(self, u: int, v: int) -> Fraction:
        d = self.int_row(u)[v]
        if d is None:
            raise DisconnectedPair("no path between vertices %d and %d" % (u, v))
        return Fraction(d, self.scale)

    def distances_from(self, source: int):
        row = self.int_row(source)
        return [None if d is None else Fraction(d, self.scale) for d in row]

    def eccentricity(self, v: int) -> Fraction:
        row = self.int_row(v)
        finite = [d for d in row if d is not None]
        return Fraction(max(finite), self.scale)

    # -- serialization ---------------------------------------------------

    def serialize(self) -> str:
        lines = ["graph %d" % self.n]
        for (u, v, length) in self.edges:
            lines.append("edge %d %d %s" % (u, v, frac_str(length)))
        for vid in sorted(self.labels):
            lines.append("label %d %s" % (vid, self.labels[vid]))
        return "\n".join(lines) + "\n"

    @classmethod
    def deserialize(cls, text: str) -> "MetricGraph":
        n = None
        edges = []
        labels = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(None, 3)
            if parts[0] == "graph":
                n = int(parts[1])
            elif parts[0] == "edge":
                edges.append((int(parts[1]), int(parts[2]), Fraction(parts[3])))
            elif parts[0] == "label":
                labels[int(parts[1])] = parts[2] if len(parts) == 3 else parts[2] + " " + parts[3]
            else:
                raise ValueError("unrecognized line %d: %r" % (lineno, raw))
        if n is None:
            raise ValueError("missing graph header")
        return cls(n, edges, labels)


# -- points on a graph ----------------------------------------------------


@dataclass(frozen=True)
class GraphPoint:
    """A vertex, or an interior point of an edge.

    The canonical representation is unique: offsets 0 and `length` normalize
    to the vertex form, and interior offsets are always measured from the
    edge's stored first endpoint.
    """

    vertex: int | None = None
    edge: int | None = None
    offset: Fraction | None = None

    @staticmethod
    def at_vertex(v: int) -> "GraphPoint":
        return GraphPoint(vertex=int(v))

    @staticmethod
    def on_edge(graph: MetricGraph, eid: int, offset) -> "GraphPoint":
        offset = frac(offset)
        u, v, length = graph.edges[eid]
        if offset < 0 or offset > length:
            raise ParameterOutOfRange(
                "offset %s outside [0, %s] on edge %d" % (offset, length, eid)
            )
        if offset == 0:
            return GraphPoint(vertex=u)
        if offset == length:
            return GraphPoint(vertex=v)
        return GraphPoint(edge=eid, offset=offset)

    @property
    def is_vertex(self) -> bool:
        return self.vertex is not None

    def anchors(self, graph: MetricGraph):
        """Pairs (vertex, along-edge distance) realizing this point."""
        if self.is_vertex:
            return ((self.vertex, Fraction(0)),)
        u, v, length = graph.edges[self.edge]
        return ((u, self.offset), (v, length - self.offset))


def shortest_distance(graph: MetricGraph, p, q) -> Fraction:
    """Exact length of a shortest path between two points.

    Accepts vertex ids or GraphPoints.  Raises DisconnectedPair when no
    path exists.
    """
    if isinstance(p, int):
        p = GraphPoint.at_vertex(p)
    if isinstance(q, int):
        q = GraphPoint.at_vertex(q)
    if p.is_vertex and q.is_vertex:
        return graph.distance(p.vertex, q.vertex)
    best = None
    for (a, off_a) in p.anchors(graph):
        row = graph.int_row(a)
        for (b, off_b) in q.anchors(graph):
            if row[b] is None:
                continue
            cand = off_a + off_b + Fraction(row[b], graph.scale)
            if best is None or cand < best:
                best = cand
    if not p.is_vertex and not q.is_vertex and p.edge == q.edge:
        direct = abs(p.offset - q.offset)
        if best is None or direct < best:
            best = direct
    if best is None:
        raise DisconnectedPair("no path between %r and %r" % (p, q))
    return best


# -- geodesic paths --------------------------------------------------------


class GeodesicPath:
    """A parametrized path given by its vertex sequence.

    `vertices` has one more entry than `edge_ids`; `cum[i]` is the arclength
    from the source to `vertices[i]`.  `eval(t)` returns the point at
    arclength `t * total`, so the parametrization has constant speed.
    """

    __slots__ = ("graph", "vertices", "edge_ids", "cum", "canonical")

    def __init__(self, graph, vertices, edge_ids, canonical=False):
        if len(vertices) != len(edge_ids) + 1:
            raise ValueError("vertex/edge count mismatch")
        self.graph = graph
        self.vertices = list(vertices)
        self.edge_ids = list(edge_ids)
        cum = [Fraction(0)]
        for i, eid in enumerate(self.edge_ids):
            u, v, length = graph.edges[eid]
            if {u, v} != {self.vertices[i], self.vertices[i + 1]}:
                raise ValueError("edge %d does not join consecutive vertices" % eid)
            cum.append(cum[-1] + length)
        self.cum = cum
        self.canonical = canonical

    @property
    def source(self) -> int:
        return self.vertices[0]

    @property
    def target(self) -> int:
        return self.vertices[-1]

    @property
    def total(self) -> Fraction:
        return self.cum[-1]

    def __len__(self) -> int:
        return len(self.edge_ids)

    def breakpoints(self):
        """Parameter values at which the path sits on a vertex."""
        if self.total == 0:
            return [Fraction(0), Fraction(1)]
        return [c / self.total for c in self.cum]

    def eval(self, t) -> GraphPoint:
        t = frac(t)
        if t < 0 or t > 1:
            raise ParameterOutOfRange("parameter %s outside [0, 1]" % t)
        if self.total == 0:
            return GraphPoint.at_vertex(self.vertices[0])
        target = t * self.total
        lo, hi = 0, len(self.cum) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.cum[mid] <= target:
                lo = mid
            else:
                hi = mid - 1
        i = min(lo, len(self.edge_ids) - 1)
        offset = target - self.cum[i]
        eid = self.edge_ids[i]
        u, _, length = self.graph.edges[eid]
        if offset == 0:
            return GraphPoint.at_vertex(self.vertices[i])
        if offset == length:
            return GraphPoint.at_vertex(self.vertices[i + 1])
        if self.vertices[i] == u:
            return GraphPoint(edge=eid, offset=offset)
        return GraphPoint(edge=eid, offset=length - offset)

    def reversed(self) -> "GeodesicPath":
        return GeodesicPath(
            self.graph,
            list(reversed(self.vertices)),
            list(reversed(self.edge_ids)),
            canonical=False,
        )

    def __eq__(self, other):
        return (
            isinstance(other, GeodesicPath)
            and self.graph is other.graph
            and self.vertices == other.vertices
            and self.edge_ids == other.edge_ids
        )

    def __repr__(self):
        return "GeodesicPath(%r, total=%s)" % (self.vertices, self.total)


def eval_path(path: GeodesicPath, t) -> GraphPoint:
    return path.eval(t)


def canonical_geodesic(graph: MetricGraph, u: int, v: int) -> GeodesicPath:
    """The shortest u-v path whose vertex-id sequence is lexicographically least.

    Computed greedily from the source against the distance row of the target,
    which also makes the family of canonical paths from a fixed source
    prefix-closed (this is certified, not assumed, by the consistency check).
    Parallel edges of equal length are disambiguated by the smaller edge id.
    """
    if u == v:
        return GeodesicPath(graph, [u], [], canonical=True)
    row = graph.int_row(v)
    if row[u] is None:
        raise DisconnectedPair("no path between vertices %d and %d" % (u, v))
    vertices = [u]
    edge_ids = []
    cur = u
    remaining = row[u]
    while cur != v:
        nxt = None
        for (other, w, eid) in graph.adj[cur]:
            if row[other] is not None and w + row[other] == remaining:
                nxt = (other, eid, w)
                break
        if nxt is None:  # pragma: no cover - guarded by row[u] check
            raise DisconnectedPair("path reconstruction failed at vertex %d" % cur)
        vertices.append(nxt[0])
        edge_ids.append(nxt[1])
        remaining -= nxt[2]
        cur = nxt[0]
    return GeodesicPath(graph, vertices, edge_ids, canonical=True)


# -- balls -----------------------------------------------------------------


@dataclass
class Ball:
    """An induced subgraph on a metric ball, with its embedding data.

    `old_of[new_id]` is the ambient vertex id; `center_dist[new_id]` is the
    ambient distance to the center.  The safe core at configuration diameter
    `dmax` is the set of vertices within `radius - dmax` of the center:
    geodesics between tested configurations of that diameter provably stay
    inside the ball, so truncated distances between core points are ambient.
    """

    graph: MetricGraph
    old_of: list
    new_of: dict
    center: int
    radius: Fraction
    center_dist: list

    def core(self, dmax) -> list:
        dmax = frac(dmax)
        r_core = self.radius - dmax
        return [i for i in range(self.graph.n) if self.center_dist[i] <= r_core]

    def core_radius(self, dmax) -> Fraction:
        return self.radius - frac(dmax)


def ball(graph: MetricGraph, center: int, r) -> Ball:
    r = frac(r)
    if r < 0:
        raise ParameterOutOfRange("ball radius must be nonnegative")
    row = graph.int_row(center)
    keep = [
        v
        for v in range(graph.n)
        if row[v] is not None and Fraction(row[v], graph.scale) <= r
    ]
    new_of = {old: new for new, old in enumerate(keep)}
    edges = []
    for (u, v, length) in graph.edges:
        if u in new_of and v in new_of:
            edges.append((new_of[u], new_of[v], length))
    labels = {new_of[old]: lab for old, lab in graph.labels.items() if old in new_of}
    sub = MetricGraph(len(keep), edges, labels)
    center_dist = [Fraction(row[old], graph.scale) for old in keep]
    return Ball(
        graph=sub,
        old_of=keep,
        new_of=new_of,
        center=new_of[center],
        radius=r,
        center_dist=center_dist,
    )
