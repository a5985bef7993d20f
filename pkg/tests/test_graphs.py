"""Metric core.  networkx is the independent oracle for distances and geodesics."""
import itertools
import random
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from hhscert.graphs import (DiscretePath, FiniteGraph, GraphError, VertexSet, cycle_graph,
                            distance, hyperbolicity_delta, is_quasigeodesic,
                            is_unparametrized_quasigeodesic, path_graph,
                            quasiconvexity_constant, read_graph, set_diameter,
                            set_distance, slim_constant, unparametrized_fit, write_graph)


def grid_graph(r):
    vs = [(x, y) for x in range(-r, r + 1) for y in range(-r, r + 1)]
    es = [((x, y), (x + 1, y)) for x, y in vs if x < r] + [((x, y), (x, y + 1)) for x, y in vs if y < r]
    return FiniteGraph(vs, es)


def random_tree(n, rng):
    return FiniteGraph(range(n), [(i, rng.randrange(i)) for i in range(1, n)])


def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(len(g)))
    h.add_edges_from(g.edges())
    return h


def test_distance_examples():
    assert distance(path_graph(3), 0, 2) == 2
    assert distance(cycle_graph(6), 0, 3) == 3
    g = cycle_graph(5)
    assert all(distance(g, v, v) == 0 for v in g.vertices)


def test_distance_unknown_vertex():
    with pytest.raises(GraphError):
        distance(path_graph(3), 0, 7)


@pytest.mark.parametrize("seed", range(4))
def test_distance_matches_networkx(seed):
    rng = random.Random(seed)
    n = 30
    edges = {(i, rng.randrange(i)) for i in range(1, n)}
    edges |= {tuple(sorted(rng.sample(range(n), 2))) for _ in range(15)}
    g = FiniteGraph(range(n), edges)
    ref = dict(nx.all_pairs_shortest_path_length(to_nx(g)))
    d = g.dist
    assert all(d[i, j] == ref[i][j] for i in range(n) for j in range(n))
    # metric axioms
    assert (d == d.T).all()
    for i, j, k in itertools.product(range(0, n, 3), repeat=3):
        assert d[i, k] <= d[i, j] + d[j, k]


def test_diameter():
    g = cycle_graph(6)
    assert set_diameter(VertexSet(g, frozenset([2]))) == 0
    assert set_diameter(VertexSet(g, frozenset([0, 1]))) == 1
    assert set_diameter(VertexSet(g, frozenset(range(6)))) == 3
    with pytest.raises(GraphError):
        VertexSet(g, frozenset())


def test_set_distance():
    g = path_graph(10)
    assert set_distance(VertexSet(g, frozenset([0, 1])), VertexSet(g, frozenset([7, 9]))) == 6


def four_point_oracle(g):
    d = g.dist
    best = Fraction(0)
    for x, y, z, w in itertools.product(range(len(g)), repeat=4):
        s = sorted([d[x, y] + d[z, w], d[x, z] + d[y, w], d[x, w] + d[y, z]])
        best = max(best, Fraction(int(s[2] - s[1]), 2))
    return best


def test_delta_convention_four_cycle():
    # recorded convention: (largest - middle) / 2 of the three pair sums
    assert hyperbolicity_delta(cycle_graph(4)) == Fraction(1)


@pytest.mark.parametrize("g", [cycle_graph(5), cycle_graph(6), grid_graph(1), path_graph(5)],
                         ids=["C5", "C6", "grid1", "P5"])
def test_delta_matches_exhaustive(g):
    assert hyperbolicity_delta(g) == four_point_oracle(g)


@pytest.mark.parametrize("seed", range(10))
def test_delta_random_trees(seed):
    g = random_tree(25, random.Random(seed))
    assert hyperbolicity_delta(g) == 0
    assert slim_constant(g) == 0


def slim_oracle(g):
    """Every triple of geodesic sides (networkx enumeration)."""
    h = to_nx(g)
    geo = {(u, v): [p for p in nx.all_shortest_paths(h, u, v)] for u in h for v in h}
    d = g.dist
    worst = 0
    for x, y, z in itertools.product(h, repeat=3):
        for p in geo[x, y]:
            for q in geo[y, z]:
                for r in geo[x, z]:
                    for v in p:
                        worst = max(worst, min(min(d[v, w] for w in q), min(d[v, w] for w in r)))
    return worst


@pytest.mark.parametrize("g", [cycle_graph(4), cycle_graph(7), grid_graph(1)], ids=["C4", "C7", "grid1"])
def test_slim_constant_matches_enumeration(g):
    assert slim_constant(g) == slim_oracle(g)


def qc_oracle(g, mem):
    h = to_nx(g)
    d = g.dist
    to_set = d[:, sorted(mem)].min(axis=1)
    best = 0
    for u, v in itertools.combinations(sorted(mem), 2):
        for p in nx.all_shortest_paths(h, u, v):
            best = max(best, max(int(to_set[w]) for w in p))
    return best


def test_qc_examples():
    g = grid_graph(4)
    assert quasiconvexity_constant(VertexSet(g, frozenset(range(len(g))))).value == 0
    axis = VertexSet.of(g, [(x, 0) for x in range(-4, 5)])
    assert quasiconvexity_constant(axis).value == 0
    corners = VertexSet.of(g, [(-4, -4), (4, 4)])
    res = quasiconvexity_constant(corners)
    assert res.value == 8 == qc_oracle(g, corners.members)  # far corner (4,-4) of the box
    assert res.exact


def test_qc_diamond_corners():
    # word-metric ball of radius 5; geodesics between adjacent corners sweep the quarter diamond
    r = 5
    vs = [(x, y) for x in range(-r, r + 1) for y in range(-r, r + 1) if abs(x) + abs(y) <= r]
    es = [(v, (v[0] + 1, v[1])) for v in vs if (v[0] + 1, v[1]) in vs]
    es += [(v, (v[0], v[1] + 1)) for v in vs if (v[0], v[1] + 1) in vs]
    g = FiniteGraph(vs, es)
    s = VertexSet.of(g, [(r, 0), (0, r)])
    assert quasiconvexity_constant(s).value == r == qc_oracle(g, s.members)


@pytest.mark.parametrize("seed", range(6))
def test_qc_matches_enumeration(seed):
    rng = random.Random(seed)
    g = grid_graph(3) if seed % 2 else random_tree(30, rng)
    mem = frozenset(rng.sample(range(len(g)), 4))
    assert quasiconvexity_constant(VertexSet(g, mem)).value == qc_oracle(g, mem)


def test_qc_budget_flags_partial():
    g = grid_graph(4)
    res = quasiconvexity_constant(VertexSet(g, frozenset(range(0, len(g), 2))), budget=100)
    assert not res.exact


def brute_unparametrized(dm, lam, span=12):
    """Exhaustive search over nondecreasing integer parameters."""
    m = len(dm)
    lam = Fraction(lam)

    def ok(i, j, s):
        gap, d = s[j] - s[i], int(dm[i, j])
        return gap / lam - lam <= d <= lam * gap + lam

    def rec(s):
        if len(s) == m:
            return True
        for t in range(s[-1], s[-1] + span):
            if all(ok(i, len(s), s + [t]) for i in range(len(s))):
                if rec(s + [t]):
                    return True
        return False

    return rec([0])


def test_unparametrized_examples():
    g = path_graph(20)
    assert is_unparametrized_quasigeodesic(g, [5, 5, 5, 5], 1)
    assert is_unparametrized_quasigeodesic(g, list(range(10)), 1)
    # backtrack by 8 > 2 + 2 at lambda = 1
    assert not is_unparametrized_quasigeodesic(g, [0, 4, 12, 4, 13], 1)


@pytest.mark.parametrize("seed", range(8))
def test_unparametrized_matches_brute_force(seed):
    rng = random.Random(seed)
    g = path_graph(15)
    for _ in range(40):
        seq = [rng.randrange(15)]
        for _ in range(rng.randrange(1, 6)):
            seq.append(min(14, max(0, seq[-1] + rng.choice([-2, -1, 0, 1, 2, 3]))))
        dm = g.dist[np.ix_(seq, seq)]
        for lam in (1, Fraction(3, 2), 2):
            assert (unparametrized_fit(dm, lam) is not None) == brute_unparametrized(dm, lam), (seq, lam)


def test_discrete_path_subpaths():
    g = grid_graph(3)
    pts = [(-3, 0), (-2, 0), (-2, 1), (-1, 1), (0, 1), (0, 2), (1, 2)]
    p = DiscretePath(g, tuple(pts), 1)
    for i in range(len(p)):
        for j in range(i + 1, len(p) + 1):
            q = p.sub(i, j)
            ix = [g.idx(v) for v in q.points]
            assert is_quasigeodesic(g.dist[np.ix_(ix, ix)], 1)
    with pytest.raises(ValueError):
        DiscretePath(g, ((0, 0), (3, 3)), 1)


def test_graph_round_trip():
    g = grid_graph(2)
    text = write_graph(g)
    assert write_graph(read_graph(text)) == text
    line = FiniteGraph(range(5), [(i, i + 1) for i in range(4)], exact_metric=path_graph(5).dist)
    assert write_graph(read_graph(write_graph(line))) == write_graph(line)
    with pytest.raises(GraphError):
        read_graph("hhscert-graph 1\nvertices 3\nv 0\n")
