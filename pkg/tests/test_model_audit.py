"""Data model and axiom auditor.

The oracles here loop over every ambient point and every relevant pair of
domains directly, reading projections through ``pi_set`` and distances
through the coordinate graphs, so they share no code with the factor-split
quantifiers in the auditor.
"""
import copy
import itertools
import random

import numpy as np
import pytest

from hhscert import audit as A
from hhscert import zoo
from hhscert.graphs import FiniteGraph, path_graph
from hhscert.model import (NESTED, ORTH, TRANS, Coordinate, CoordinateTuple, DomainSet,
                           HierarchicalModel, ModelError, ProductSpace, model_from_json,
                           model_to_json)


@pytest.fixture(scope="module")
def f3():
    return zoo.build("f2xdxd", 3).model


@pytest.fixture(scope="module")
def g4():
    return zoo.build("grid", 4).model


def dset(c, ids):
    return list(c.sets[int(ids)])


def d_sets(c, a, b):
    return int(c.graph.dist[np.ix_(list(a), list(b))].min())


def to_target(m, u, target):
    """d_U(pi_U(z), target) for every ambient z, one set at a time."""
    c = m.coords[u]
    per_set = np.array([d_sets(c, s, target) for s in c.sets])
    return per_set[m.pi_ids(u, np.arange(len(m.ambient)))]


def behrstock_oracle(m):
    rel = m.domains.rel
    worst = 0
    for u, v in itertools.combinations(range(len(m.domains)), 2):
        if rel[u, v] != TRANS:
            continue
        du = to_target(m, u, dset(m.coords[u], m.rho_pt[u][v]))
        dv = to_target(m, v, dset(m.coords[v], m.rho_pt[v][u]))
        worst = max(worst, int(np.minimum(du, dv).max()))
    return worst


# ---------------------------------------------------------------- relations

def test_relations_simple_pass():
    rep = A.audit_relations(DomainSet(["S", "U", "V"], [("U", "S"), ("V", "S")], []))
    assert rep.passed


def test_relations_orthogonal_nested_fails():
    rep = A.audit_relations(DomainSet(["S", "U", "V"], [("U", "V"), ("V", "S")], [("U", "V")]))
    assert not rep.passed
    assert not rep["orthogonal-not-comparable"].holds_at_declared_E


def test_relations_two_maxima_fail():
    rep = A.audit_relations(DomainSet(["S", "S2", "U"], [("U", "S")], []))
    assert not rep["unique-maximum"].holds_at_declared_E


def test_product_family_relations(f3):
    ds = f3.domains
    assert A.audit_relations(ds).passed
    # L -> T -> P1 -> S; the containers P1, P2, Q add one level above the bare list
    assert ds.complexity() == 4
    lines = [u for u in ds.names if u.startswith("L_")]
    for u, v in itertools.combinations(lines, 2):
        assert ds.relation(u, v) == TRANS
    for u in lines:
        assert ds.relation(u, "T") == NESTED
        assert ds.relation(u, "W1") == ORTH and ds.relation(u, "W2") == ORTH


# ---------------------------------------------------------------- projections

def test_projection_constant_grid():
    m = zoo.build("grid", 10).model
    assert A.min_E_projection(m).minimal_constant == 1


def test_projection_constant_single_domain():
    m = zoo.build("tree", 4).model
    assert len(m.domains) == 1
    assert A.min_E_projection(m).minimal_constant == 1


def test_product_projection_constant(f3):
    assert A.min_E_projection(f3).minimal_constant == 1


# ---------------------------------------------------------------- Behrstock

def test_behrstock_vacuous_on_grid(g4):
    assert A.check_behrstock(g4).minimal_constant == 0


@pytest.mark.parametrize("family", ["f2xdxd", "f2xdxd-noW"])
def test_behrstock_matches_oracle(family):
    m = zoo.build(family, 3).model
    assert A.check_behrstock(m).minimal_constant == behrstock_oracle(m)


def _far_vertex(c, rid):
    return int(np.argmax(c.to_set(rid)))


def corrupt_rho(m, u, v):
    """Move rho^v_u to the vertex of C(u) farthest from where it was."""
    m = copy.deepcopy(m)
    ui, vi = m.domains.id(u), m.domains.id(v)
    c = m.coords[ui]
    far = _far_vertex(c, int(m.rho_pt[ui][vi]))
    m.rho_pt[ui] = m.rho_pt[ui].copy()
    m.rho_pt[ui][vi] = c.intern([far])
    return m


def test_behrstock_corrupted_pair_is_witness(f3):
    bad = corrupt_rho(corrupt_rho(f3, "L_a@1", "L_b@1"), "L_b@1", "L_a@1")
    e = A.check_behrstock(bad)
    assert not e.holds_at_declared_E
    assert {e.witness["U"], e.witness["V"]} == {"L_a@1", "L_b@1"}
    assert e.minimal_constant == behrstock_oracle(bad)


# ---------------------------------------------------------------- nesting, BGI

def test_nested_consistency_flat_grid(g4):
    assert A.check_nested_consistency(g4).minimal_constant == 0


def test_nested_consistency_single_domain():
    assert A.check_nested_consistency(zoo.build("tree", 3).model).minimal_constant == 0


def test_product_nested_and_bgi(f3):
    assert A.check_nested_consistency(f3).holds_at_declared_E
    assert A.check_bgi(f3).holds_at_declared_E
    assert A.check_bgi_two_point(f3).holds_at_declared_E


def test_bgi_corrupted_rho_map(f3):
    m = copy.deepcopy(f3)
    T, L = m.domains.id("T"), m.domains.id("L_a@1")
    cT, cL = m.coords[T], m.coords[L]
    arr = m.rho_map[(T, L)].copy()
    rid = int(m.rho_pt[T][L])
    far = set(np.flatnonzero(cT.to_set(rid) > m.E).tolist())
    # two adjacent tree vertices away from rho, sent to opposite ends of the line
    v = next(v for v in sorted(far) if far & set(cT.graph.adj[v]))
    w = next(w for w in cT.graph.adj[v] if w in far)
    arr[v] = cL.intern([0])
    arr[w] = cL.intern([len(cL.graph) - 1])
    m.rho_map[(T, L)] = arr
    assert not A.check_bgi(m).holds_at_declared_E


# ---------------------------------------------------------------- orthogonal rho

def tiny_orth_model(gap):
    """S above U, V, W; U orthogonal to V; rho^U_W and rho^V_W at distance gap."""
    P = path_graph(5)
    pt = FiniteGraph(["*"], [])
    amb = ProductSpace([P, P, P], ["u", "v", "w"])
    ds = DomainSet(["S", "U", "V", "W"], [("U", "S"), ("V", "S"), ("W", "S")], [("U", "V")])
    ident = np.arange(5)
    sets = [(i,) for i in range(5)]
    coords = [Coordinate(pt, None, [(0,)], np.zeros(1, dtype=np.int64))]
    coords += [Coordinate(P, k, list(sets), ident) for k in range(3)]
    whole = [c.intern(range(len(c.graph))) for c in coords]
    rho = [np.array([-1, 0, 0, 0]),
           np.array([-1, -1, -1, 2]),  # rho^W_U = {2}
           np.array([-1, -1, -1, 2]),  # rho^W_V = {2}
           np.array([-1, 0, gap, -1])]  # rho^U_W = {0}, rho^V_W = {gap}
    rho_map = {(0, u): np.array([whole[u]]) for u in (1, 2, 3)}
    return HierarchicalModel("tiny", amb, ds, coords, rho, rho_map, E=1)


def test_orthogonal_rho_proximity_values():
    assert A.orthogonal_rho_proximity(tiny_orth_model(1), "U", "V", "W") == 1
    bad = tiny_orth_model(4)
    assert A.orthogonal_rho_proximity(bad, "U", "V", "W") == 4
    e = A.check_orthogonal_rho(bad)
    assert not e.holds_at_declared_E and e.witness["W"] == "W"
    with pytest.raises(ModelError):
        A.orthogonal_rho_proximity(bad, "U", "W", "V")


def test_orthogonal_rho_grid(g4):
    assert A.orthogonal_rho_proximity(g4, "Lx", "Ly", "S") == 0


def test_orthogonal_rho_product_all_triples(f3):
    assert A.check_orthogonal_rho(f3).minimal_constant <= f3.E


def test_infer_transverse():
    m = tiny_orth_model(3)  # E = 1, so 3 > 2E
    out = A.infer_transverse(m, "U", "W", "V")
    assert out["distance"] == 3 and out["inferred_transverse"]
    assert not out["consistent"]  # U and V are stored as orthogonal
    assert A.infer_transverse(tiny_orth_model(0), "U", "W", "V")["inferred_transverse"] is False


def test_infer_transverse_product(f3):
    # rho^{L_a@1} and rho^{L_a@b^3}... on L_b@1: separated by the b-exponent
    m = zoo.build("f2xdxd", 6).model
    out = A.infer_transverse(m, "L_a@1", "L_b@1", "L_a@bbbbb")
    assert out["distance"] == 5 > 2 * m.E
    assert out["inferred_transverse"] and out["consistent"]


# ---------------------------------------------------------------- other axioms

def test_partial_realisation_grid(g4):
    assert A.check_partial_realisation(g4).minimal_constant == 0
    t = CoordinateTuple({0: (0,), 1: (2,), 2: (7,)}, 0)
    x, theta = A.realize_tuple(g4, t, 0)
    assert g4.ambient.label(x) == (-2, 3) and theta == 0


def test_uniqueness_grows(f3):
    theta = A.check_uniqueness(f3, (1, 2, 3, 4))[1]
    vals = [theta[k] for k in (1, 2, 3, 4)]
    assert vals == sorted(vals) and vals[0] < vals[-1]
    assert all(theta[k] <= 5 * k for k in theta)


@pytest.mark.parametrize("family,n", [("grid", 4), ("f2xdxd", 3), ("f2xdxd-noW", 3),
                                      ("tree", 4), ("parallel_lines", 3)])
def test_zoo_models_pass_audit(family, n):
    m = zoo.build(family, n).model
    rep = A.audit(m)
    assert rep.passed and rep.exact
    assert A.audited_E(rep) <= m.E


# ---------------------------------------------------------------- tuples

def realize_oracle(m, t):
    worst = np.zeros(len(m.ambient), dtype=np.int64)
    for u in range(len(m.domains)):
        worst = np.maximum(worst, to_target(m, u, t.get(u)))
    x = int(np.argmin(worst))
    return x, int(worst[x])


def test_points_are_consistent(f3):
    rng = random.Random(0)
    for x in rng.sample(range(len(f3.ambient)), 40):
        t = f3.coordinate_tuple_of(x)
        assert A.is_consistent_tuple(f3, t, f3.E)[0]
        y, theta = A.realize_tuple(f3, t, f3.E)
        assert theta == 0 and f3.ambient.distance(x, y) == 0


def test_realize_matches_brute_force():
    m = zoo.build("f2xdxd", 3).model
    rng = random.Random(1)
    for _ in range(15):
        # perturb the tuple of a point by one step in a couple of coordinates
        x = rng.randrange(len(m.ambient))
        ent = dict(m.coordinate_tuple_of(x).entries)
        for u in rng.sample(range(len(m.domains)), 3):
            c = m.coords[u]
            v = ent[u][0]
            nb = c.graph.adj[v]
            if nb:
                ent[u] = (rng.choice(nb),)
        t = CoordinateTuple(ent, m.E)
        if not A.is_consistent_tuple(m, t, m.E)[0]:
            continue
        got = A.realize_tuple(m, t, m.E)
        assert got == realize_oracle(m, t)


def test_behrstock_violating_tuple(f3):
    a, b = f3.domains.id("L_a@1"), f3.domains.id("L_b@1")
    ent = dict(f3.coordinate_tuple_of(f3.ambient.point(("", 0, 0))).entries)
    ca, cb = f3.coords[a], f3.coords[b]
    ent[a] = (_far_vertex(ca, int(f3.rho_pt[a][b])),)
    ent[b] = (_far_vertex(cb, int(f3.rho_pt[b][a])),)
    ok, why = A.is_consistent_tuple(f3, CoordinateTuple(ent, f3.E), f3.E)
    assert not ok and why["clause"] in ("transverse", "nested")
    with pytest.raises(ModelError):
        A.realize_tuple(f3, CoordinateTuple(ent, f3.E), f3.E)


def test_drift_tuple_is_consistent_but_far_from_AB():
    b = zoo.build("f2xdxd", 6)
    m = b.model
    x = m.ambient.point(("", -6, 6))  # off the diagonal that A*B follows in D x D
    t = m.coordinate_tuple_of(x)
    assert A.is_consistent_tuple(m, t, m.E)[0]
    AB = b.subset("AB")
    assert int(AB.dist()[x]) == 12


def test_partial_tuple_rejected(g4):
    with pytest.raises(ModelError):
        A.is_consistent_tuple(g4, CoordinateTuple({0: (0,)}, 0), 0)


# ---------------------------------------------------------------- file format

@pytest.mark.parametrize("family", ["grid", "f2xdxd"])
def test_model_json_round_trip(family):
    m = zoo.build(family, 3).model
    text = model_to_json(m)
    back = model_from_json(text)
    assert model_to_json(back) == text
    assert A.audit(back).to_dict() == A.audit(m).to_dict()
