"""Group actions: automorphism tables, word evaluation, orbits."""
import itertools

import numpy as np
import pytest

from hhscert import zoo
from hhscert.action import evaluate_word, orbit_ball, verify_automorphism
from hhscert.words import GElem, dmul


@pytest.fixture(scope="module")
def f4():
    return zoo.build("f2xdxd", 4, N=2)


def test_identity_automorphism(f4):
    chk = verify_automorphism(f4.model, f4.group.to_automorphism(GElem()))
    assert chk.ok and chk.complete


def test_generator_a_shifts_la(f4):
    m = f4.model
    g = f4.group.to_automorphism(GElem("a"))
    assert verify_automorphism(m, g).ok
    u = m.domains.id("L_a@1")
    assert g.domain_map[u] == u
    iso = g.coord_isos[u]
    assert (iso[:-1] == np.arange(1, len(iso))).all() and iso[-1] == -1
    for w in ("W1", "W2"):
        k = m.domains.id(w)
        assert (g.coord_isos[k] == np.arange(len(g.coord_isos[k]))).all()


def test_subgroup_generator_translations(f4):
    m = f4.model
    s = f4.group.generators["s"]  # a^2 x1 x2
    g = f4.group.to_automorphism(s)
    assert verify_automorphism(m, g).ok
    u = m.domains.id("L_a@1")
    iso = g.coord_isos[u]
    ok = iso >= 0
    assert ((iso[ok] - np.flatnonzero(ok)) == 2).all()
    # on each dihedral line the identity vertex moves to x1, at distance 1
    for w, p in (("W1", s.p1), ("W2", s.p2)):
        k = m.domains.id(w)
        D = m.coords[k].graph
        zero = D.idx(0)
        assert D.vertices[g.coord_isos[k][zero]] == dmul(p, 0) and D.dist[zero, g.coord_isos[k][zero]] == 1


def test_corrupted_isometry_reported(f4):
    m = f4.model
    g = f4.group.to_automorphism(GElem("a"))
    u = m.domains.id("W1")
    iso = g.coord_isos[u].copy()
    iso[[0, 3]] = iso[[3, 0]]
    g.coord_isos[u] = iso
    chk = verify_automorphism(m, g)
    assert not chk.ok and chk.failure == {"check": "isometry", "U": "W1"}


def test_corrupted_translation_reported(f4):
    # an isometry, just the wrong one: projections no longer commute
    m = f4.model
    g = f4.group.to_automorphism(GElem("a"))
    u = m.domains.id("W2")
    n = len(g.coord_isos[u])
    iso = np.arange(n) + 1
    iso[-1] = -1
    g.coord_isos[u] = iso
    chk = verify_automorphism(m, g)
    assert not chk.ok and chk.failure["U"] == "W2" and chk.failure["check"] == "projection"


def test_word_evaluation(f4):
    G = f4.group
    assert evaluate_word(G, "") == GElem()
    assert evaluate_word(G, "a A") == GElem()
    assert evaluate_word(G, "s") == GElem("aa", 1, 1)
    with pytest.raises(ValueError):
        evaluate_word(G, "q")


def _tables_equal(g, h):
    same_x = all(((a == b) | (a < 0) | (b < 0)).all() for a, b in zip(g.x_maps, h.x_maps))
    return same_x and g.equivalent(h)


@pytest.mark.parametrize("w1,w2", list(itertools.product(["a", "b", "x1", "y2", "s", "a B"], repeat=2)))
def test_composition_law(f4, w1, w2):
    G = f4.group
    whole = G.to_automorphism(evaluate_word(G, f"{w1} {w2}"))
    parts = G.to_automorphism(evaluate_word(G, w1)).compose(G.to_automorphism(evaluate_word(G, w2)))
    assert _tables_equal(whole, parts)


def test_inverse_pair_is_identity(f4):
    G = f4.group
    ident = G.to_automorphism(GElem())
    both = G.to_automorphism(GElem("a")).compose(G.to_automorphism(GElem("A")))
    assert _tables_equal(both, ident)


def test_orbit_balls(f4):
    G = f4.group
    assert orbit_ball(G, 0) == [GElem()]
    A1 = orbit_ball(G, 1, ["s"])
    s = G.generators["s"]
    assert set(A1) == {GElem(), s, s.inv()}
    tree = zoo.build("tree", 3)
    assert len(orbit_ball(tree.group, 2)) == 17


def test_action_preserves_relations(f4):
    m = f4.model
    rel = m.domains.rel
    for w in ("a", "b", "s", "t", "a b"):
        g = f4.group.to_automorphism(evaluate_word(f4.group, w))
        dm = g.domain_map
        ok = np.flatnonzero(dm >= 0)
        assert (rel[np.ix_(ok, ok)] == rel[np.ix_(dm[ok], dm[ok])]).all()


@pytest.mark.parametrize("family", ["f2xdxd", "f2xdxd-noW", "grid", "parallel_lines", "tree"])
def test_every_generator_passes(family):
    b = zoo.build(family, 4)
    for name, gen in b.group.generators.items():
        for h in (gen, b.group.inv(gen)):
            chk = verify_automorphism(b.model, b.group.to_automorphism(h))
            assert chk.ok, (family, name, chk.failure)
            assert sum(chk.checked.values()) > 0
