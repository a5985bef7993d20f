"""The square grid [-n, n]^2 with its Cartesian structure.

Domains: S (a point), Lx and Ly (the two axis lines), Lx orthogonal to Ly.
"""
from __future__ import annotations

import numpy as np

from ..graphs import FiniteGraph, path_graph
from ..action import Automorphism, GroupSpec
from ..model import Coordinate, DomainSet, HierarchicalModel, ProductSpace


def build_model(n: int) -> HierarchicalModel:
    if n < 1:
        raise ValueError("grid radius must be positive")
    P = path_graph(2 * n + 1, start=-n)
    amb = ProductSpace([P, P], ["x", "y"])
    ds = DomainSet(["S", "Lx", "Ly"], [("Lx", "S"), ("Ly", "S")], [("Lx", "Ly")])
    pt = FiniteGraph(["*"], [])
    size = len(P)
    sets = [(i,) for i in range(size)]
    coords = [Coordinate(pt, None, [(0,)], np.zeros(1, dtype=np.int64)),
              Coordinate(P, 0, list(sets), np.arange(size)),
              Coordinate(P, 1, list(sets), np.arange(size))]
    whole = [c.intern(range(len(c.graph))) for c in coords]
    rho_pt = [np.array([-1, 0, 0]), np.full(3, -1), np.full(3, -1)]
    rho_map = {(0, 1): np.array([whole[1]]), (0, 2): np.array([whole[2]])}
    return HierarchicalModel("grid", amb, ds, coords, rho_pt, rho_map, E=2,
                             meta={"family": "grid", "n": n})


def axis(m: HierarchicalModel, which: str, offset: int = 0) -> np.ndarray:
    """Ambient indices of the line y = offset (which='x') or x = offset (which='y')."""
    n = (m.ambient.shape[0] - 1) // 2
    t = np.arange(2 * n + 1)
    c = np.full_like(t, offset + n)
    return m.ambient.join((t, c) if which == "x" else (c, t))



def automorphism(m: HierarchicalModel, g: tuple[int, int]) -> Automorphism:
    """Translation by g = (sx, sy)."""
    size = m.ambient.shape[0]

    def shift(s):
        out = np.arange(size) + s
        out[(out < 0) | (out >= size)] = -1
        return out

    sx, sy = g
    return Automorphism([shift(sx), shift(sy)], np.arange(3),
                        [np.zeros(1, dtype=np.int64), shift(sx), shift(sy)], str(g))


def group_spec(m: HierarchicalModel) -> GroupSpec:
    return GroupSpec("Z2", {"u": (1, 0), "v": (0, 1)},
                     lambda g, h: (g[0] + h[0], g[1] + h[1]), lambda g: (-g[0], -g[1]), (0, 0),
                     lambda g: automorphism(m, g))
