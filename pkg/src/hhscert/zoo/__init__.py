"""Shipped models and the subsets studied on them.

``build(family, n, ...)`` returns a ``ZooBundle``: the tabulated model,
its group action (when there is one), named subsets and, for the product
family, the amalgam data of the two cyclic subgroups.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..action import GroupSpec, orbit_ball
from ..convexity import ARBITRARY, SUBGROUP, SubsetSpec
from ..model import HierarchicalModel
from . import f2xdxd, grid, tree

FAMILIES = ("f2xdxd", "f2xdxd-noW", "grid", "parallel_lines", "tree")
ALIASES = {"product_F2xDxD": "f2xdxd", "grid_Z2": "grid", "tree_free_group": "tree"}


@dataclass
class ZooBundle:
    family: str
    params: dict
    model: HierarchicalModel
    group: GroupSpec | None = None
    subsets: dict[str, SubsetSpec] = field(default_factory=dict)
    subgroups: dict[str, GroupSpec] = field(default_factory=dict)
    amalgam: Any = None
    index: Any = None

    def subset(self, name: str) -> SubsetSpec:
        try:
            return self.subsets[name]
        except KeyError:
            raise KeyError(f"{self.family} has no subset {name!r}; "
                           f"known: {', '.join(self.subsets)}") from None


def canonical(family: str) -> str:
    fam = ALIASES.get(family, family)
    if fam not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {', '.join(FAMILIES + tuple(ALIASES))}")
    return fam


def build(family: str, n: int, N: int = 1, nD: int | None = None) -> ZooBundle:
    fam = canonical(family)
    if fam in ("f2xdxd", "f2xdxd-noW"):
        return build_f2xdxd(n, N, nD, dihedral=fam == "f2xdxd")
    if fam == "grid":
        return build_grid_z2(n)
    if fam == "parallel_lines":
        return build_parallel_lines(n)
    return build_tree_free_group(n)


# ----------------------------------------------------------------- product family

def _orbit(m, ix, spec: GroupSpec, gens: list[str], radius: int) -> np.ndarray:
    pts = (f2xdxd.point_of(ix, m.ambient, g) for g in orbit_ball(spec, radius, gens))
    return np.array(sorted({p for p in pts if p is not None}), dtype=np.int64)


def product_amalgam(N: int):
    """Closed-form amalgam data of A = <a^N x1 x2>, B = <b^N y1 y2>.

    M is raised to the largest value the hypotheses allow, when there is one.
    No window is tabulated, so any N is fine.
    """
    from ..amalgam import check_hypotheses

    if N < 1:
        raise ValueError("N must be positive")
    data = f2xdxd.amalgam_data(N)
    top = check_hypotheses(data).max_valid_M
    return data if top is None else f2xdxd.amalgam_data(N, M=top)


def build_f2xdxd(n: int, N: int = 1, nD: int | None = None, dihedral: bool = True) -> ZooBundle:
    """F(a,b) x D x D with A = <a^N x1 x2>, B = <b^N y1 y2>.

    An element of A*B with free part of length <= n is a word of at most
    n // N syllables (the free parts a^(Nk) b^(Nl) ... never cancel), so
    the orbit balls below are complete inside the window.
    """
    m, ix = f2xdxd.build_model(n, N, nD, dihedral)
    G = f2xdxd.group_spec(m, ix, N)
    gens = f2xdxd.subgroup_generators(N)
    base = f2xdxd.point_of(ix, m.ambient, G.identity)
    words = n // N
    A = _orbit(m, ix, G, ["s"], words)
    B = _orbit(m, ix, G, ["t"], words)
    AB = _orbit(m, ix, G, ["s", "t"], words)
    subs = {
        "A": SubsetSpec(m, A, SUBGROUP, "A", base),
        "B": SubsetSpec(m, B, SUBGROUP, "B", base),
        "AuB": SubsetSpec(m, np.union1d(A, B), ARBITRARY, "AuB"),
        "AB": SubsetSpec(m, AB, SUBGROUP, "A*B", base),
        "X": SubsetSpec(m, np.arange(len(m.ambient)), SUBGROUP, "X", base),
        "point": SubsetSpec(m, [base], SUBGROUP, "1", base),
    }
    sub_specs = {
        "A": GroupSpec("A", {"s": gens["s"]}, G.mul, G.inv, G.identity, G.to_automorphism),
        "B": GroupSpec("B", {"t": gens["t"]}, G.mul, G.inv, G.identity, G.to_automorphism),
    }
    data = product_amalgam(N)
    fam = "f2xdxd" if dihedral else "f2xdxd-noW"
    return ZooBundle(fam, {"n": n, "N": N, "nD": m.meta["nD"]}, m, G, subs, sub_specs, data, ix)


# ----------------------------------------------------------------- grid families

def _grid_subsets(m) -> dict:
    amb = m.ambient
    o = amb.point((0, 0))
    xa, ya = grid.axis(m, "x"), grid.axis(m, "y")
    return {
        "x_axis": SubsetSpec(m, xa, SUBGROUP, "y=0", o),
        "y_axis": SubsetSpec(m, ya, SUBGROUP, "x=0", o),
        "axes": SubsetSpec(m, np.union1d(xa, ya), ARBITRARY, "x=0 or y=0"),
        "X": SubsetSpec(m, np.arange(len(amb)), SUBGROUP, "X", o),
        "point": SubsetSpec(m, [o], SUBGROUP, "origin", o),
    }


def build_grid_z2(n: int) -> ZooBundle:
    m = grid.build_model(n)
    return ZooBundle("grid", {"n": n}, m, grid.group_spec(m), _grid_subsets(m))


def build_parallel_lines(n: int) -> ZooBundle:
    """The grid with the two horizontal lines y = 0 and y = 1 as A and B."""
    m = grid.build_model(n)
    subs = _grid_subsets(m)
    l0, l1 = grid.axis(m, "x", 0), grid.axis(m, "x", 1)
    subs.update({
        "A": SubsetSpec(m, l0, SUBGROUP, "y=0", m.ambient.point((0, 0))),
        "B": SubsetSpec(m, l1, ARBITRARY, "y=1"),
        "AuB": SubsetSpec(m, np.union1d(l0, l1), ARBITRARY, "y=0 or y=1"),
    })
    return ZooBundle("parallel_lines", {"n": n}, m, grid.group_spec(m), subs)


# ----------------------------------------------------------------- free group

TREE_SUBGROUPS = {"a": ["a"], "ab": ["ab"], "a_bb": ["a", "bb"]}


def build_tree_free_group(n: int) -> ZooBundle:
    m = tree.build_model(n)
    subs = {name: SubsetSpec(m, tree.subgroup_orbit(m, g), SUBGROUP, f"<{','.join(g)}>", 0)
            for name, g in TREE_SUBGROUPS.items()}
    subs["X"] = SubsetSpec(m, np.arange(len(m.ambient)), SUBGROUP, "X", 0)
    subs["point"] = SubsetSpec(m, [0], SUBGROUP, "1", 0)
    return ZooBundle("tree", {"n": n}, m, tree.group_spec(m), subs)
