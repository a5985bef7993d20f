"""Finite graph metric geometry.

Every coordinate space and every ambient window is a connected
``FiniteGraph``.  Distances are integers; coarse constants are exact
``Fraction`` values.  Nothing here uses floating point.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

Vertex = Hashable


class GraphError(ValueError):
    """Raised for malformed graphs or vertices that are not in a graph."""


class FiniteGraph:
    """A finite connected graph with its path metric.

    ``exact_metric`` (a square integer matrix indexed like ``vertices``)
    overrides BFS distances.  It is used for windows cut out of infinite
    spaces, where the closed-form distance must be kept even near the
    boundary.  It must be a metric that agrees with adjacency.
    """

    def __init__(self, vertices: Iterable[Vertex], edges: Iterable[tuple[Vertex, Vertex]],
                 exact_metric=None, check: bool = True):
        self.vertices: tuple = tuple(vertices)
        if not self.vertices:
            raise GraphError("graph has no vertices")
        self.index = {v: i for i, v in enumerate(self.vertices)}
        if len(self.index) != len(self.vertices):
            raise GraphError("duplicate vertex identifiers")
        nbrs: list[set[int]] = [set() for _ in self.vertices]
        for u, v in edges:
            i, j = self.idx(u), self.idx(v)
            if i == j:
                raise GraphError(f"loop at {u!r}")
            nbrs[i].add(j)
            nbrs[j].add(i)
        self.adj: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(s)) for s in nbrs)
        self._dist = None
        self.has_exact_metric = exact_metric is not None
        if exact_metric is not None:
            m = np.asarray(exact_metric, dtype=np.int64)
            if m.shape != (len(self), len(self)):
                raise GraphError("exact metric has the wrong shape")
            self._dist = m
        if check:
            self._check()

    def __len__(self):
        return len(self.vertices)

    def __repr__(self):
        return f"FiniteGraph(|V|={len(self)}, |E|={self.n_edges})"

    @property
    def n_edges(self) -> int:
        return sum(len(a) for a in self.adj) // 2

    def idx(self, v: Vertex) -> int:
        try:
            return self.index[v]
        except (KeyError, TypeError):
            raise GraphError(f"vertex {v!r} is not in the graph") from None

    def edges(self):
        for i, a in enumerate(self.adj):
            for j in a:
                if i < j:
                    yield i, j

    @property
    def dist(self) -> np.ndarray:
        """All-pairs distance matrix (int64)."""
        if self._dist is None:
            n = len(self)
            if n == 1:
                self._dist = np.zeros((1, 1), dtype=np.int64)
            else:
                rows, cols = [], []
                for i, j in self.edges():
                    rows += [i, j]
                    cols += [j, i]
                a = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
                d = shortest_path(a, unweighted=True, directed=False)
                if np.isinf(d).any():
                    raise GraphError("graph is not connected")
                self._dist = d.astype(np.int64)
        return self._dist

    def _check(self):
        d = self.dist
        if np.isinf(d).any() if d.dtype.kind == "f" else False:
            raise GraphError("graph is not connected")
        if self.has_exact_metric:
            if (d < 0).any() or not (d == d.T).all() or (np.diag(d) != 0).any():
                raise GraphError("exact metric is not symmetric/nonnegative")
            off = d + np.eye(len(self), dtype=np.int64)
            if (off == 0).any():
                raise GraphError("exact metric vanishes off the diagonal")
            adj = np.zeros_like(d, dtype=bool)
            for i, j in self.edges():
                adj[i, j] = adj[j, i] = True
            if not ((d == 1) == adj).all():
                raise GraphError("exact metric disagrees with adjacency")
            # triangle inequality through every midpoint
            for k in range(len(self)):
                if (d > d[:, k:k + 1] + d[k:k + 1, :]).any():
                    raise GraphError("exact metric violates the triangle inequality")

    def is_tree(self) -> bool:
        return self.n_edges == len(self) - 1

    def distance(self, u: Vertex, v: Vertex) -> int:
        return int(self.dist[self.idx(u), self.idx(v)])

    def interval(self, i: int, j: int) -> np.ndarray:
        """Indices of all vertices lying on some geodesic from ``i`` to ``j``."""
        d = self.dist
        return np.flatnonzero(d[i] + d[:, j] == d[i, j])

    def geodesic(self, i: int, j: int) -> list[int]:
        """Canonical geodesic from ``i`` to ``j``: least-index neighbour at each step."""
        d = self.dist
        path = [i]
        while path[-1] != j:
            cur = path[-1]
            nxt = min(k for k in self.adj[cur] if d[k, j] == d[cur, j] - 1)
            path.append(nxt)
        return path

    def all_geodesics(self, i: int, j: int, budget: int = 10_000):
        """Every geodesic from ``i`` to ``j`` as index lists.

        Returns ``(paths, complete)``; ``complete`` is False if the budget cut
        the enumeration short.
        """
        d = self.dist
        out: list[list[int]] = []
        stack = [[i]]
        while stack:
            p = stack.pop()
            cur = p[-1]
            if cur == j:
                out.append(p)
                if len(out) >= budget:
                    return out, not stack
                continue
            for k in reversed(self.adj[cur]):
                if d[k, j] == d[cur, j] - 1:
                    stack.append(p + [k])
        return out, True

    def induced(self, keep: Sequence[int]) -> "FiniteGraph":
        keep = list(keep)
        pos = {k: t for t, k in enumerate(keep)}
        edges = [(self.vertices[i], self.vertices[j]) for i, j in self.edges()
                 if i in pos and j in pos]
        return FiniteGraph([self.vertices[k] for k in keep], edges)


@dataclass(frozen=True)
class VertexSet:
    """Nonempty set of vertices of a graph (by index)."""

    space: FiniteGraph = field(repr=False, compare=False)
    members: frozenset

    def __post_init__(self):
        if not self.members:
            raise GraphError("empty vertex set")
        n = len(self.space)
        if any(not (0 <= m < n) for m in self.members):
            raise GraphError("vertex set leaves its space")

    @classmethod
    def of(cls, space: FiniteGraph, labels: Iterable[Vertex]) -> "VertexSet":
        return cls(space, frozenset(space.idx(v) for v in labels))

    def __len__(self):
        return len(self.members)

    def sorted(self) -> list[int]:
        return sorted(self.members)


def distance(g: FiniteGraph, u: Vertex, v: Vertex) -> int:
    return g.distance(u, v)


def set_distance(a: VertexSet, b: VertexSet) -> int:
    d = a.space.dist
    return int(d[np.ix_(a.sorted(), b.sorted())].min())


def set_diameter(s: VertexSet) -> int:
    if not isinstance(s, VertexSet) or not s.members:
        raise GraphError("diameter of an empty set")
    m = s.sorted()
    return int(s.space.dist[np.ix_(m, m)].max())


# ----------------------------------------------------------------- hyperbolicity

def hyperbolicity_delta(g: FiniteGraph) -> Fraction:
    """Four-point constant: max over 4-tuples of (largest - middle pair sum) / 2.

    Trees are recognised directly (delta 0).  Under this convention the
    4-cycle has delta 1.
    """
    if g.is_tree():
        return Fraction(0)
    d = g.dist
    n = len(g)
    best = 0
    for x in range(n):
        for y in range(x + 1, n):
            s1 = d[x, y] + d  # (z, w) -> d(x,y) + d(z,w)
            s2 = d[x][:, None] + d[y][None, :]  # d(x,z) + d(y,w)
            s3 = s2.T  # d(x,w) + d(y,z)
            stack = np.sort(np.stack([s1, s2, s3]), axis=0)
            best = max(best, int((stack[2] - stack[1]).max()))
    return Fraction(best, 2)


def _bottleneck_from(g: FiniteGraph, y: int, z: int) -> np.ndarray:
    """For every vertex p, the largest value of min_{v in gamma} d(p, v) over
    geodesics gamma from y to z (the farthest a geodesic can stay from p)."""
    d = g.dist
    inter = g.interval(y, z)
    order = inter[np.argsort(d[y, inter], kind="stable")]
    best = {}
    for v in order:
        if v == y:
            best[v] = d[:, y].copy()
            continue
        preds = [u for u in g.adj[v] if u in best and d[y, u] == d[y, v] - 1]
        up = np.max(np.stack([best[u] for u in preds]), axis=0)
        best[v] = np.minimum(up, d[:, v])
    return best[z]


def slim_constant(g: FiniteGraph) -> int:
    """Least delta such that every geodesic triangle is delta-slim.

    Quantifies over every choice of geodesic sides (exhaustive, for small
    graphs).  Trees return 0.
    """
    if g.is_tree():
        return 0
    n = len(g)
    far = {}

    def bottleneck(a, b):
        key = (a, b) if a <= b else (b, a)
        if key not in far:
            far[key] = _bottleneck_from(g, *key)
        return far[key]

    worst = 0
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            ps = g.interval(x, y)
            for z in range(n):
                f1 = bottleneck(y, z)[ps]
                f2 = bottleneck(x, z)[ps]
                worst = max(worst, int(np.minimum(f1, f2).max()))
    return worst


# ----------------------------------------------------------------- quasiconvexity

@dataclass(frozen=True)
class QCResult:
    value: int
    exact: bool
    witness: tuple | None = None  # (u, v, w): w on a geodesic u->v farthest from the set


def quasiconvexity_constant(s: VertexSet, budget: int = 5_000_000) -> QCResult:
    """Least R such that every geodesic with endpoints in ``s`` stays in N_R(s).

    A vertex lies on some geodesic from u to v iff it lies in the interval
    I(u, v), so the maximum over intervals is the maximum over all
    geodesics.  ``budget`` caps pairs * |V|; beyond it only a leading sample
    of pairs is examined and ``exact`` is False.
    """
    g = s.space
    mem = np.array(s.sorted())
    if len(mem) == len(g):
        return QCResult(0, True)
    if g.is_tree():
        return _tree_qc(g, mem)
    d = g.dist
    to_set = d[:, mem].min(axis=1)
    n_pairs = len(mem) * (len(mem) - 1) // 2
    exact = n_pairs * len(g) <= budget
    limit = n_pairs if exact else max(1, budget // len(g))
    best, wit, seen = 0, None, 0
    for a in range(len(mem)):
        u = mem[a]
        vs = mem[a + 1:]
        if len(vs) == 0:
            continue
        on = d[u][None, :] + d[vs, :] == d[u, vs][:, None]  # (|vs|, |V|)
        vals = np.where(on, to_set[None, :], -1)
        k = int(vals.max())
        if k > best:
            r, w = np.unravel_index(int(vals.argmax()), vals.shape)
            best, wit = k, (int(u), int(vs[r]), int(w))
        seen += len(vs)
        if seen >= limit:
            break
    return QCResult(best, exact, wit)


def _tree_qc(g: FiniteGraph, mem: np.ndarray) -> QCResult:
    """In a tree the union of geodesics between members is their spanning subtree."""
    n = len(g)
    inside = np.zeros(n, dtype=bool)
    inside[mem] = True
    # root at the first member; count members below each vertex
    root = int(mem[0])
    order, parent = [root], np.full(n, -1)
    parent[root] = root
    for v in order:
        for w in g.adj[v]:
            if parent[w] < 0:
                parent[w] = v
                order.append(w)
    below = inside.astype(np.int64)
    for v in reversed(order[1:]):
        below[parent[v]] += below[v]
    # v is spanned iff some member lies strictly below it (the root is a member)
    hull = below > 0
    to_set = g.dist[:, mem].min(axis=1)
    vals = np.where(hull, to_set, -1)
    w = int(vals.argmax())
    return QCResult(int(vals[w]), True, (None, None, w) if vals[w] > 0 else None)


# ----------------------------------------------------------------- quasigeodesics

def _frac(lam) -> Fraction:
    lam = Fraction(lam)
    if lam < 1:
        raise ValueError("lambda must be >= 1")
    return lam


def _pair_ok(d: int, gap: int, p: int, q: int) -> bool:
    """(p/q, p/q)-quasigeodesic inequality for one pair, in integers."""
    return gap * q * q - p * p <= d * p * q and d * q <= p * gap + p


def is_quasigeodesic(dm: np.ndarray, lam) -> bool:
    """Parametrised (lam, lam)-quasigeodesic test on a pairwise distance matrix."""
    lam = _frac(lam)
    dm = np.asarray(dm, dtype=np.int64)
    return _params_ok(dm, np.arange(len(dm)), lam.numerator, lam.denominator)


def _params_ok(dm, s, p, q) -> bool:
    gap = s[None, :] - s[:, None]
    tri = np.triu(np.ones(dm.shape, dtype=bool), 1)
    bad = (gap * q * q - p * p > dm * p * q) | (dm * q > p * gap + p)
    return not (bad & tri).any()


def _step_range(d: int, p: int, q: int) -> range:
    # gap g between consecutive points: g q^2 - p^2 <= d p q  and  d q <= p g + p
    hi = (d * p * q + p * p) // (q * q)
    lo = max(0, -(-(d * q - p) // p))
    return range(lo, hi + 1)


def unparametrized_fit(dm: np.ndarray, lam, exhaustive_len: int = 8):
    """Integer parameters s_0 <= s_1 <= ... making the sequence a
    (lam, lam)-quasigeodesic on its parameter set, or None.

    Equal parameters collapse points (allowed when they are lam-close);
    a jump of the parameter leaves room for the points an honest path
    would pass through.  Short sequences are searched exhaustively with
    prefix pruning; longer ones are fitted greedily, so a None answer for
    them means "no fit found".
    """
    lam = _frac(lam)
    p, q = lam.numerator, lam.denominator
    dm = np.asarray(dm, dtype=np.int64)
    m = len(dm)
    if m <= 1:
        return np.zeros(m, dtype=np.int64)
    ranges = [_step_range(int(dm[i, i + 1]), p, q) for i in range(m - 1)]
    if any(len(r) == 0 for r in ranges):
        return None
    if m <= exhaustive_len:
        s = [0]

        def extend(i):
            if i == m:
                return True
            for g in ranges[i - 1]:
                t = s[-1] + g
                if all(_pair_ok(int(dm[j, i]), t - s[j], p, q) for j in range(i)):
                    s.append(t)
                    if extend(i + 1):
                        return True
                    s.pop()
            return False

        return np.array(s, dtype=np.int64) if extend(1) else None
    # greedy: each new parameter is the least one consistent with all earlier points
    s = [0]
    for i in range(1, m):
        for g in ranges[i - 1]:
            t = s[-1] + g
            if all(_pair_ok(int(dm[j, i]), t - s[j], p, q) for j in range(i)):
                s.append(t)
                break
        else:
            return None
    return np.array(s, dtype=np.int64)


def is_unparametrized_quasigeodesic(g: FiniteGraph, points: Sequence, lam) -> bool:
    """Points are vertex labels or ``VertexSet``s (distance = set distance)."""
    if not points:
        raise ValueError("empty sequence")
    return unparametrized_fit(sequence_distances(g, points), lam) is not None


def sequence_distances(g: FiniteGraph, points: Sequence) -> np.ndarray:
    d = g.dist
    if isinstance(points[0], VertexSet):
        mems = [p.sorted() for p in points]
        return np.array([[d[np.ix_(a, b)].min() for b in mems] for a in mems], dtype=np.int64)
    ix = [g.idx(p) for p in points]
    return d[np.ix_(ix, ix)]


@dataclass(frozen=True)
class DiscretePath:
    """Vertex sequence that is a (lam, lam)-quasigeodesic in ``space``."""

    space: FiniteGraph = field(repr=False, compare=False)
    points: tuple
    lam: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "lam", _frac(self.lam))
        if not self.points:
            raise ValueError("empty path")
        dm = sequence_distances(self.space, list(self.points))
        steps = np.diag(dm, 1)
        if (steps > 2 * self.lam).any() or not is_quasigeodesic(dm, self.lam):
            raise ValueError("not a (lam, lam)-quasigeodesic")

    def __len__(self):
        return len(self.points)

    def sub(self, i: int, j: int) -> "DiscretePath":
        return DiscretePath(self.space, self.points[i:j], self.lam)


# ----------------------------------------------------------------- interchange

HEADER = "hhscert-graph 1"


def _enc(v) -> str:
    return json.dumps(_plain(v), separators=(",", ":"), sort_keys=True)


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    if isinstance(v, np.integer):
        return int(v)
    return v


def _dec(s: str):
    return _hashable(json.loads(s))


def _hashable(v):
    if isinstance(v, list):
        return tuple(_hashable(x) for x in v)
    return v


def write_graph(g: FiniteGraph) -> str:
    """Text form: header, one ``v`` line per vertex, one ``e`` line per edge,
    optional ``m`` rows of the exact metric."""
    lines = [HEADER, f"vertices {len(g)}"]
    lines += [f"v {_enc(v)}" for v in g.vertices]
    edges = list(g.edges())
    lines.append(f"edges {len(edges)}")
    lines += [f"e {i} {j}" for i, j in edges]
    if g.has_exact_metric:
        lines.append("metric exact")
        lines += ["m " + " ".join(str(int(x)) for x in row) for row in g.dist]
    else:
        lines.append("metric bfs")
    return "\n".join(lines) + "\n"


def read_graph(text: str) -> FiniteGraph:
    lines = text.splitlines()
    if not lines or lines[0] != HEADER:
        raise GraphError("not a graph document")
    it = iter(lines[1:])
    try:
        n = int(next(it).split()[1])
        verts = []
        for _ in range(n):
            tag, rest = next(it).split(" ", 1)
            if tag != "v":
                raise GraphError("expected vertex line")
            verts.append(_dec(rest))
        m = int(next(it).split()[1])
        edges = []
        for _ in range(m):
            tag, i, j = next(it).split()
            edges.append((verts[int(i)], verts[int(j)]))
        kind = next(it).split()[1]
        metric = None
        if kind == "exact":
            metric = [[int(x) for x in next(it).split()[1:]] for _ in range(n)]
    except (StopIteration, IndexError, ValueError) as exc:
        raise GraphError(f"truncated or malformed graph document: {exc}") from None
    return FiniteGraph(verts, edges, exact_metric=metric)


def path_graph(n: int, start: int = 0) -> FiniteGraph:
    vs = list(range(start, start + n))
    return FiniteGraph(vs, zip(vs, vs[1:]))


def cycle_graph(n: int) -> FiniteGraph:
    vs = list(range(n))
    return FiniteGraph(vs, [(i, (i + 1) % n) for i in range(n)])
