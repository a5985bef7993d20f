"""Free group of rank 2 as a one-domain hierarchical space.

The only domain is S, whose coordinate space is X itself (the Cayley tree
window) with the identity projection.  Every relational axiom is vacuous.
"""
from __future__ import annotations

import numpy as np

from .. import words as W
from ..graphs import FiniteGraph
from ..action import Automorphism, GroupSpec
from ..model import Coordinate, DomainSet, HierarchicalModel, ProductSpace


def cayley_ball(n: int) -> FiniteGraph:
    ball = W.free_ball(n)
    return FiniteGraph(ball, [(w, w[:-1]) for w in ball[1:]])


def build_model(n: int) -> HierarchicalModel:
    if n < 1:
        raise ValueError("tree radius must be positive")
    F = cayley_ball(n)
    amb = ProductSpace([F], ["F"])
    ds = DomainSet(["S"], [], [])
    cov = Coordinate(F, 0, [(i,) for i in range(len(F))], np.arange(len(F)))
    return HierarchicalModel("tree", amb, ds, [cov], [np.full(1, -1)], {}, E=1,
                             anchors=(0,), anchor_point=0, anchored_factor=0,
                             meta={"family": "tree", "n": n})


def subgroup_orbit(m: HierarchicalModel, gens: list[str]) -> np.ndarray:
    """Ambient indices of the subgroup generated by ``gens`` inside the window."""
    F = m.ambient.factors[0]
    seen = {""}
    frontier = [""]
    steps = [g for g in gens] + [W.inverse(g) for g in gens]
    while frontier:
        nxt = []
        for w in frontier:
            for s in steps:
                v = W.mul(w, s)
                if v not in seen and v in F.index:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return np.array(sorted(F.idx(v) for v in seen))


def automorphism(m: HierarchicalModel, g: str) -> Automorphism:
    F = m.ambient.factors[0]
    x = np.array([F.index.get(W.mul(g, w), -1) for w in F.vertices], dtype=np.int64)
    return Automorphism([x], np.zeros(1, dtype=np.int64), [x], g or "1")


def group_spec(m: HierarchicalModel) -> GroupSpec:
    gens = {c: c for c in "aAbB"}
    return GroupSpec("F2", gens, W.mul, W.inverse, "", lambda g: automorphism(m, g))
