"""Combings: families of constant-speed paths, one per ordered vertex pair."""

from __future__ import annotations

from .errors import CombingDomainMismatch
from .metricgraph import GeodesicPath, MetricGraph, canonical_geodesic


class Combing:
    """Assigns to each ordered pair of vertices a path from the first to the second.

    Paths are constant-speed on [0, 1].  Subclasses decide how paths are
    produced; nothing here assumes they are geodesics, that is certified
    separately.
    """

    graph: MetricGraph

    def path(self, u: int, v: int) -> GeodesicPath:
        raise NotImplementedError

    def point(self, u: int, v: int, t):
        return self.path(u, v).eval(t)


class CanonicalCombing(Combing):
    """Lexicographically least shortest paths, built lazily and cached."""

    def __init__(self, graph: MetricGraph):
        self.graph = graph
        self._cache = {}

    def path(self, u: int, v: int) -> GeodesicPath:
        key = (u, v)
        got = self._cache.get(key)
        if got is None:
            got = canonical_geodesic(self.graph, u, v)
            self._cache[key] = got
        return got


class TableCombing(Combing):
    """A combing backed by an explicit table of paths."""

    def __init__(self, graph: MetricGraph):
        self.graph = graph
        self._table = {}

    def set_path(self, path: GeodesicPath) -> None:
        self._table[(path.source, path.target)] = path

    def has_path(self, u: int, v: int) -> bool:
        return (u, v) in self._table

    def pairs(self):
        return sorted(self._table)

    def path(self, u: int, v: int) -> GeodesicPath:
        try:
            return self._table[(u, v)]
        except KeyError:
            raise CombingDomainMismatch(
                "no combing path for pair (%d, %d)" % (u, v)
            ) from None
