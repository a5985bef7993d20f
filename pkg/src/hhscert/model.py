"""Hierarchical-space data model.

A model is built from three layers:

* ``DomainSet``: the index set with nesting and orthogonality tables.
* ``ProductSpace``: the ambient X, a product of factor graphs with the
  l1 (sum) metric.  A single factor gives an ordinary graph.  Every
  domain's projection reads exactly one factor (or none, for point
  spaces), which lets the auditor split quantifiers over X factor by
  factor instead of enumerating the whole product.
* ``Coordinate``: one coordinate space per domain, with an interned list of
  vertex sets.  Projections and relative projections are stored as set ids.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .graphs import FiniteGraph, GraphError, read_graph, write_graph

# relation codes: REL[u, v] describes u relative to v
EQUAL, NESTED, CONTAINS, ORTH, TRANS = 0, 1, 2, 3, 4
REL_NAMES = {EQUAL: "=", NESTED: "nested", CONTAINS: "contains", ORTH: "orth", TRANS: "trans"}


class ModelError(ValueError):
    """Malformed model data (missing tables, wrong shapes, dangling ids)."""


class DomainSet:
    """Domains with the nesting partial order and orthogonality.

    ``nest`` lists pairs (V, U) meaning V is properly nested in U; it is
    closed transitively here.  ``orth`` lists unordered pairs.  Anything
    neither comparable nor orthogonal is transverse.
    """

    def __init__(self, domains: Sequence[str], nest: Iterable[tuple[str, str]],
                 orth: Iterable[tuple[str, str]]):
        self.names: tuple[str, ...] = tuple(domains)
        self.index = {d: i for i, d in enumerate(self.names)}
        if len(self.index) != len(self.names):
            raise ModelError("duplicate domain names")
        n = len(self.names)
        below = np.zeros((n, n), dtype=bool)  # below[v, u]: v properly nested in u
        for v, u in nest:
            below[self.id(v), self.id(u)] = True
        # transitive closure by repeated squaring
        while True:
            f = below.astype(np.float32)  # BLAS path; entries stay small integers
            nxt = below | ((f @ f) > 0)
            if (nxt == below).all():
                break
            below = nxt
        orth_m = np.zeros((n, n), dtype=bool)
        for u, v in orth:
            orth_m[self.id(u), self.id(v)] = orth_m[self.id(v), self.id(u)] = True
        self.below = below
        self.orth = orth_m
        rel = np.full((n, n), TRANS, dtype=np.int8)
        rel[orth_m] = ORTH
        rel[below] = NESTED
        rel[below.T] = CONTAINS
        np.fill_diagonal(rel, EQUAL)
        self.rel = rel

    def __len__(self):
        return len(self.names)

    def id(self, name: str) -> int:
        try:
            return self.index[name]
        except KeyError:
            raise ModelError(f"unknown domain {name!r}") from None

    def relation(self, u, v) -> int:
        return int(self.rel[self._i(u), self._i(v)])

    def _i(self, u):
        return u if isinstance(u, (int, np.integer)) else self.id(u)

    @cached_property
    def top(self) -> int:
        """Index of the unique maximal domain (ModelError if there is none)."""
        maximal = [i for i in range(len(self)) if not self.below[i].any()]
        if len(maximal) != 1:
            raise ModelError(f"expected one maximal domain, found {len(maximal)}")
        return maximal[0]

    def nested_in(self, u) -> np.ndarray:
        """Indices of domains properly nested in ``u``."""
        return np.flatnonzero(self.below[:, self._i(u)])

    def complexity(self) -> int:
        """Length of the longest chain of nested domains."""
        n = len(self)
        order = np.argsort(self.below.sum(axis=0), kind="stable")  # fewer below first
        longest = np.ones(n, dtype=np.int64)
        for u in order:
            kids = np.flatnonzero(self.below[:, u])
            if len(kids):
                longest[u] = 1 + longest[kids].max()
        return int(longest.max())


class ProductSpace:
    """Product of factor graphs with the sum metric.

    Points are flat integers (C order over factor indices).
    """

    def __init__(self, factors: Sequence[FiniteGraph], names: Sequence[str] | None = None):
        self.factors: tuple[FiniteGraph, ...] = tuple(factors)
        self.names = tuple(names) if names else tuple(f"f{i}" for i in range(len(self.factors)))
        self.shape = tuple(len(f) for f in self.factors)

    def __len__(self):
        return int(np.prod(self.shape))

    def split(self, x):
        return np.unravel_index(x, self.shape)

    def join(self, coords) -> int | np.ndarray:
        return np.ravel_multi_index(tuple(coords), self.shape)

    def label(self, x) -> tuple:
        return tuple(f.vertices[int(i)] for f, i in zip(self.factors, self.split(x)))

    def point(self, labels: Sequence) -> int:
        if len(labels) != len(self.factors):
            raise GraphError("wrong number of factor coordinates")
        return int(self.join([f.idx(v) for f, v in zip(self.factors, labels)]))

    def distance(self, x, y):
        xs, ys = self.split(x), self.split(y)
        return sum(f.dist[a, b] for f, a, b in zip(self.factors, xs, ys))

    def dist_to_set(self, members: Sequence[int], points=None) -> np.ndarray:
        """min over s in ``members`` of d(x, s), for every x (or ``points``)."""
        members = np.asarray(members, dtype=np.int64)
        pts = np.arange(len(self)) if points is None else np.asarray(points)
        xs, ss = self.split(pts), self.split(members)
        best = np.full(len(pts), np.iinfo(np.int64).max, dtype=np.int64)
        chunk = max(1, 4_000_000 // max(1, len(pts)))
        for lo in range(0, len(members), chunk):
            tot = 0
            for f, xi, si in zip(self.factors, xs, ss):
                tot = tot + f.dist[np.ix_(xi, si[lo:lo + chunk])]
            best = np.minimum(best, tot.min(axis=1))
        return best

    def adjacency(self):
        """Sparse adjacency of the product graph (cached)."""
        a = getattr(self, "_adj", None)
        if a is None:
            mats = []
            for k, f in enumerate(self.factors):
                rows = [i for i, nb in enumerate(f.adj) for _ in nb]
                cols = [j for nb in f.adj for j in nb]
                fk = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(f), len(f)))
                left = sp.identity(int(np.prod(self.shape[:k], dtype=np.int64)), format="csr")
                right = sp.identity(int(np.prod(self.shape[k + 1:], dtype=np.int64)), format="csr")
                mats.append(sp.kron(sp.kron(left, fk), right, format="csr"))
            a = self._adj = sum(mats[1:], mats[0]).tocsr()
        return a

    def dist_field(self, members: Sequence[int]) -> np.ndarray:
        """d(x, members) for every point x, by multi-source search."""
        members = np.unique(np.asarray(members, dtype=np.int64))
        if len(self) <= 64 or len(members) * len(self) <= 2_000_000:
            return self.dist_to_set(members)
        out = dijkstra(self.adjacency(), directed=False, indices=members, unweighted=True, min_only=True)
        return out.astype(np.int64)

    def as_graph(self) -> FiniteGraph:
        """The product as an explicit graph (small products only)."""
        n = len(self)
        if n > 20_000:
            raise GraphError("product too large to materialise")
        edges = []
        for x in range(n):
            c = list(self.split(x))
            for k, f in enumerate(self.factors):
                for j in f.adj[int(c[k])]:
                    if j > c[k]:
                        d = list(c)
                        d[k] = j
                        edges.append((x, int(self.join(d))))
        idx = list(range(n))
        metric = None
        if any(f.has_exact_metric for f in self.factors):
            metric = self.pairwise(np.arange(n), np.arange(n))
        return FiniteGraph(idx, edges, exact_metric=metric, check=False)

    def pairwise(self, a, b) -> np.ndarray:
        xa, xb = self.split(np.asarray(a)), self.split(np.asarray(b))
        tot = 0
        for f, i, j in zip(self.factors, xa, xb):
            tot = tot + f.dist[np.ix_(i, j)]
        return tot


class Coordinate:
    """Coordinate space of one domain plus its interned vertex sets.

    ``sets[k]`` is a sorted tuple of vertex indices.  Distances from sets
    to vertices are cached on demand.
    """

    def __init__(self, graph: FiniteGraph, factor: int | None, sets: list[tuple[int, ...]],
                 pi: np.ndarray, hyperbolic: bool = True):
        self.graph = graph
        self.factor = factor
        self.sets = [tuple(sorted(s)) for s in sets]
        self.lookup = {s: k for k, s in enumerate(self.sets)}
        self.pi = np.asarray(pi, dtype=np.int64)
        self.hyperbolic = hyperbolic  # False marks "minimal, hyperbolicity unchecked"
        if any(len(s) == 0 for s in self.sets):
            raise ModelError("empty coordinate set")

    def intern(self, members: Iterable[int]) -> int:
        key = tuple(sorted(set(int(m) for m in members)))
        if not key:
            raise ModelError("empty coordinate set")
        k = self.lookup.get(key)
        if k is None:
            k = len(self.sets)
            self.sets.append(key)
            self.lookup[key] = k
        return k

    def flat(self):
        """Concatenated members and offsets of all sets (for reduceat)."""
        cached = getattr(self, "_flat_cache", None)
        if cached is None or cached[0] != len(self.sets):
            lens = np.array([len(s) for s in self.sets], dtype=np.int64)
            offs = np.concatenate([[0], np.cumsum(lens)[:-1]])
            flat = np.fromiter((v for s in self.sets for v in s), dtype=np.int64,
                               count=int(lens.sum()))
            cached = self._flat_cache = (len(self.sets), flat, offs)
        return cached[1], cached[2]

    @cached_property
    def _to_set_cache(self) -> dict:
        return {}

    def to_set(self, k: int) -> np.ndarray:
        """Distance from every coordinate vertex to set ``k``."""
        c = self._to_set_cache
        if k not in c:
            c[k] = self.graph.dist[list(self.sets[k])].min(axis=0)
        return c[k]

    def set_dist(self, ids, k: int) -> np.ndarray:
        """d(sets[i], sets[k]) for each i in ``ids``."""
        flat, offs = self.flat()
        per = np.minimum.reduceat(self.to_set(k)[flat], offs)
        return per[np.asarray(ids)]

    def dist_ids(self, a: int, b: int) -> int:
        return int(self.to_set(b)[list(self.sets[a])].min())

    def diam(self, k: int) -> int:
        s = list(self.sets[k])
        return int(self.graph.dist[np.ix_(s, s)].max())

    @cached_property
    def _far_cache(self) -> dict:
        return {}

    def far_from(self, k: int) -> np.ndarray:
        c = self._far_cache
        if k not in c:
            c[k] = self.graph.dist[list(self.sets[k])].max(axis=0)
        return c[k]

    def union_diam(self, ids_lists: Sequence) -> np.ndarray:
        """Diameter of the union of sets, row-wise.

        ``ids_lists`` is a 2D array (rows x parts) of set ids.
        """
        ids = np.atleast_2d(np.asarray(ids_lists, dtype=np.int64))
        out = np.zeros(len(ids), dtype=np.int64)
        flat, offs = self.flat()
        for j in range(ids.shape[1]):
            for k in np.unique(ids[:, j]):
                rows = ids[:, j] == k
                per = np.maximum.reduceat(self.far_from(int(k))[flat], offs)
                for jj in range(j, ids.shape[1]):
                    out[rows] = np.maximum(out[rows], per[ids[rows, jj]])
        return out

    def pi_image(self) -> tuple[int, ...]:
        """All vertices appearing in some projection set."""
        return tuple(sorted({v for k in np.unique(self.pi) for v in self.sets[int(k)]}))


@dataclass
class HierarchicalModel:
    """X, the domain set, coordinate spaces, projections and rho data.

    ``rho_pt[u]`` is an int array over domains: ``rho_pt[u][v]`` is the id
    (in ``coords[u]``) of the set rho^v_u, or -1 where undefined.
    ``rho_map[(u, v)]`` (v properly nested in u) is an int array over the
    vertices of coord(u) giving set ids in coord(v).
    """

    name: str
    ambient: ProductSpace
    domains: DomainSet
    coords: list[Coordinate]
    rho_pt: list[np.ndarray]
    rho_map: dict[tuple[int, int], np.ndarray]
    E: int = 1
    anchors: tuple[int, ...] | None = None  # orbit representatives for pair quantifiers
    anchor_point: int | None = None  # basepoint index in the anchored factor
    anchored_factor: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.domains)
        if len(self.coords) != n or len(self.rho_pt) != n:
            raise ModelError("one coordinate space and one rho row per domain required")
        for u, c in enumerate(self.coords):
            size = 1 if c.factor is None else self.ambient.shape[c.factor]
            if len(c.pi) != size:
                raise ModelError(f"projection table of {self.domains.names[u]} has wrong length")
        self._check_rho_pattern()

    def _check_rho_pattern(self):
        rel = self.domains.rel
        for u in range(len(self.domains)):
            row = self.rho_pt[u]
            need = (rel[:, u] == NESTED) | (rel[:, u] == TRANS)
            have = row >= 0
            bad = np.flatnonzero(need != have)
            if len(bad):
                v = int(bad[0])
                raise ModelError(f"rho^{self.domains.names[v]}_{self.domains.names[u]} "
                                 f"{'missing' if need[v] else 'defined but not allowed'}")
        for (u, v), arr in self.rho_map.items():
            if rel[v, u] != NESTED:
                raise ModelError("rho map stored for a pair that is not nested")
            if len(arr) != len(self.coords[u].graph):
                raise ModelError("rho map has wrong length")
        for v, u in zip(*np.nonzero(rel == NESTED)):
            if (int(u), int(v)) not in self.rho_map:
                raise ModelError(f"rho map {self.domains.names[u]}->{self.domains.names[v]} missing")

    # convenience ---------------------------------------------------------
    def name_of(self, u: int) -> str:
        return self.domains.names[u]

    def pi_ids(self, u: int, x) -> np.ndarray:
        """Set ids of pi_u at ambient points ``x`` (flat indices)."""
        c = self.coords[u]
        if c.factor is None:
            return np.zeros(np.shape(x), dtype=np.int64) + c.pi[0]
        return c.pi[self.ambient.split(np.asarray(x))[c.factor]]

    def pi_set(self, u: int, x: int) -> tuple[int, ...]:
        return self.coords[u].sets[int(self.pi_ids(u, x))]

    def factor_pi(self, u: int) -> np.ndarray:
        """pi_u as a function of its factor vertex (length 1 for point domains)."""
        return self.coords[u].pi

    def domains_on(self, k: int | None) -> list[int]:
        return [u for u, c in enumerate(self.coords) if c.factor == k]

    def pair_sources(self) -> list[int]:
        return list(self.anchors) if self.anchors is not None else list(range(len(self.domains)))

    def factor_points(self, k: int, anchored: bool = True) -> np.ndarray:
        """Factor vertices a first quantified point ranges over.

        On the anchored factor (a group factor whose symmetries the model
        declares) this is just the basepoint; elsewhere it is everything.
        """
        if anchored and self.anchored_factor == k and self.anchor_point is not None:
            return np.array([self.anchor_point])
        return np.arange(self.ambient.shape[k])

    def coordinate_tuple_of(self, x: int) -> "CoordinateTuple":
        ent = {u: self.pi_set(u, x) for u in range(len(self.domains))}
        return CoordinateTuple(ent, self.E)


@dataclass(frozen=True)
class CoordinateTuple:
    """A choice of vertex set b_U in every coordinate space (by vertex index)."""

    entries: dict
    R: int

    def get(self, u: int) -> tuple[int, ...]:
        try:
            return tuple(self.entries[u])
        except KeyError:
            raise ModelError(f"tuple has no entry for domain {u}") from None


@dataclass
class AxiomEntry:
    name: str
    minimal_constant: int | None  # None encodes infinity
    declared: int
    witness: Any = None
    exact: bool = True
    note: str = ""

    @property
    def holds_at_declared_E(self) -> bool:
        return self.minimal_constant is not None and self.minimal_constant <= self.declared

    def to_dict(self) -> dict:
        return {"axiom": self.name,
                "minimal_constant": "inf" if self.minimal_constant is None else int(self.minimal_constant),
                "declared": int(self.declared),
                "holds": self.holds_at_declared_E,
                "exact": self.exact,
                "witness": self.witness,
                "note": self.note}


@dataclass
class AxiomReport:
    entries: list[AxiomEntry] = field(default_factory=list)

    def add(self, e: AxiomEntry) -> AxiomEntry:
        self.entries.append(e)
        return e

    def __getitem__(self, name: str) -> AxiomEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return all(e.holds_at_declared_E for e in self.entries)

    @property
    def exact(self) -> bool:
        return all(e.exact for e in self.entries)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "exact": self.exact,
                "entries": [e.to_dict() for e in self.entries]}


# ------------------------------------------------------------------ file I/O

MODEL_FORMAT = "hhscert-model 1"


def _arr(a) -> list:
    return [int(v) for v in np.asarray(a).ravel()]


def model_to_json(m: HierarchicalModel) -> str:
    d = m.domains
    doc = {
        "format": MODEL_FORMAT,
        "name": m.name,
        "E": m.E,
        "meta": m.meta,
        "factors": [{"name": nm, "graph": write_graph(f)}
                    for nm, f in zip(m.ambient.names, m.ambient.factors)],
        "domains": list(d.names),
        "nest": [[d.names[v], d.names[u]] for v, u in zip(*np.nonzero(d.below))],
        "orth": [[d.names[u], d.names[v]] for u, v in zip(*np.nonzero(np.triu(d.orth)))],
        "anchors": None if m.anchors is None else [d.names[u] for u in m.anchors],
        "anchor_point": m.anchor_point,
        "anchored_factor": m.anchored_factor,
        "coords": [],
    }
    graphs: dict[int, int] = {}
    shared = []
    for u, c in enumerate(m.coords):
        gid = graphs.setdefault(id(c.graph), len(shared))
        if gid == len(shared):
            shared.append(write_graph(c.graph))
        doc["coords"].append({
            "graph": gid, "factor": c.factor, "hyperbolic": c.hyperbolic,
            "sets": [list(s) for s in c.sets], "pi": _arr(c.pi),
            "rho": _arr(m.rho_pt[u]),
        })
    doc["graphs"] = shared
    doc["rho_map"] = [[d.names[u], d.names[v], _arr(a)] for (u, v), a in sorted(m.rho_map.items())]
    return json.dumps(doc, separators=(",", ":"), sort_keys=True)


def model_from_json(text: str) -> HierarchicalModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"model file is not JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelError("not a model document")
    try:
        factors = [read_graph(f["graph"]) for f in doc["factors"]]
        amb = ProductSpace(factors, [f["name"] for f in doc["factors"]])
        ds = DomainSet(doc["domains"], [tuple(p) for p in doc["nest"]], [tuple(p) for p in doc["orth"]])
        graphs = [read_graph(g) for g in doc["graphs"]]
        coords, rho = [], []
        for c in doc["coords"]:
            coords.append(Coordinate(graphs[c["graph"]], c["factor"], [tuple(s) for s in c["sets"]],
                                     np.array(c["pi"], dtype=np.int64), c.get("hyperbolic", True)))
            rho.append(np.array(c["rho"], dtype=np.int64))
        rmap = {(ds.id(u), ds.id(v)): np.array(a, dtype=np.int64) for u, v, a in doc["rho_map"]}
        anchors = None if doc["anchors"] is None else tuple(ds.id(a) for a in doc["anchors"])
        return HierarchicalModel(doc["name"], amb, ds, coords, rho, rmap, int(doc["E"]), anchors,
                                 doc["anchor_point"], doc["anchored_factor"], doc.get("meta", {}))
    except (KeyError, TypeError, IndexError) as exc:
        raise ModelError(f"model document incomplete: {exc!r}") from None
