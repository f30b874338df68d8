"""Independent reference computations used to pin library results.

Nothing in here touches the library's own shortest-path or cone-distance
code: graph distances go through networkx on integer-scaled weights (so
they are exact), and the spherical oracle is the plain law of cosines in
the developed plane.
"""

import math
from fractions import Fraction

import networkx as nx


def nx_graph(graph):
    """The same weighted graph as a networkx object with integer weights.

    Multiplying by ``graph.scale`` makes every weight integral, so
    networkx returns exact integer path lengths and no float rounding is
    involved.  Parallel edges collapse to their minimum weight.
    """
    G = nx.Graph()
    G.add_nodes_from(range(graph.n))
    for (u, v, length) in graph.edges:
        w = int(length * graph.scale)
        if G.has_edge(u, v):
            w = min(w, G[u][v]["weight"])
        G.add_edge(u, v, weight=w)
    return G


def nx_distance(graph, u, v):
    """Exact rational distance via networkx, or None if disconnected."""
    G = nx_graph(graph)
    try:
        d = nx.dijkstra_path_length(G, u, v)
    except nx.NetworkXNoPath:
        return None
    return Fraction(d, graph.scale)


def nx_all_distances(graph):
    """{source: {target: Fraction}} over all connected pairs."""
    G = nx_graph(graph)
    out = {}
    for src, row in nx.all_pairs_dijkstra_path_length(G):
        out[src] = {t: Fraction(d, graph.scale) for t, d in row.items()}
    return out


def cosine_cone_distance(D, s, t, d_x):
    """Distance between two cone points by the law of cosines.

    The points sit at radii D*s and D*t from the apex with developed
    angle d_x; from angle pi onward the geodesic runs through the apex
    and the distance is the sum of the radii.
    """
    D, s, t, ang = float(D), float(s), float(t), float(d_x)
    if ang >= math.pi:
        return D * s + D * t
    a, b = D * s, D * t
    return math.sqrt(a * a + b * b - 2.0 * a * b * math.cos(ang))


def random_metric_graph(rng, n, extra_edges, weights=(1,)):
    """Edge list of a connected graph: a random tree plus chords."""
    edges = []
    for i in range(1, n):
        edges.append((rng.randrange(i), i, rng.choice(weights)))
    for _ in range(extra_edges):
        u = rng.randrange(n)
        v = rng.randrange(n)
        if u != v:
            edges.append((u, v, rng.choice(weights)))
    return edges
