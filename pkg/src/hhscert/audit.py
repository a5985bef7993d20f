"""Axiom auditor for finite hierarchical models.

Each ``check_*`` returns an ``AxiomEntry`` carrying the least constant for
which the axiom holds on the model (``None`` when no constant works) and
the worst witness.  Quantifiers over X are split by factor: a domain's
projection reads one factor, so worst cases over the product are maxima
or minima of per-factor worst cases.

Pair quantifiers use the model's anchors when it declares them.  A model
whose symmetry group acts transitively on each orbit of domains (or on
the anchored factor) only needs one representative per orbit; see
``HierarchicalModel.anchors``.
"""
from __future__ import annotations

import math
from itertools import product
from typing import Iterable

import networkx as nx
import numpy as np
from scipy.sparse.csgraph import connected_components

from .graphs import VertexSet, hyperbolicity_delta, quasiconvexity_constant
from .model import (NESTED, ORTH, TRANS, AxiomEntry, AxiomReport, CoordinateTuple,
                    DomainSet, HierarchicalModel, ModelError)

E_SEARCH_CAP = 12


# ------------------------------------------------------------------ relations

def audit_relations(d: DomainSet) -> AxiomReport:
    rep = AxiomReport()
    names = d.names
    n = len(d)
    below, orth = d.below, d.orth

    def entry(name, bad, note=""):
        rep.add(AxiomEntry(name, 0 if bad is None else None, 0, bad, True, note))

    bad = None
    if np.diag(below).any():
        i = int(np.flatnonzero(np.diag(below))[0])
        bad = {"cycle_through": names[i]}
    entry("nesting-partial-order", bad)

    maximal = [names[i] for i in range(n) if not below[i].any()]
    entry("unique-maximum", None if len(maximal) == 1 else {"maximal": maximal})

    bad = None
    if np.diag(orth).any():
        bad = {"self_orthogonal": names[int(np.flatnonzero(np.diag(orth))[0])]}
    entry("orthogonality-irreflexive", bad)

    # V nested in U and U orth W  =>  V orth W
    bad = None
    for u in range(n):
        kids = np.flatnonzero(below[:, u])
        if not len(kids) or not orth[u].any():
            continue
        miss = orth[u][None, :] & ~orth[kids]
        if miss.any():
            r, w = np.argwhere(miss)[0]
            bad = {"V": names[kids[r]], "U": names[u], "W": names[int(w)]}
            break
    entry("orthogonality-inherited", bad)

    cmp_ = orth & (below | below.T)
    bad = None
    if cmp_.any():
        u, v = np.argwhere(cmp_)[0]
        bad = {"U": names[u], "V": names[v]}
    entry("orthogonal-not-comparable", bad)

    bad = None
    cache: dict = {}
    eye = np.eye(n, dtype=bool)
    down = below | eye  # down[v, w]: v nested in or equal to w
    for t in range(n):
        inside = down[:, t]
        proper = below[:, t]
        for u in np.flatnonzero(inside):
            opp = orth[u] & inside
            if not opp.any():
                continue
            key = (t, opp.tobytes())
            if key not in cache:
                ok = (~(opp[:, None] & ~down)).all(axis=0) & proper
                cache[key] = bool(ok.any())
            if not cache[key]:
                bad = {"T": names[t], "U": names[int(u)],
                       "orthogonal": [names[i] for i in np.flatnonzero(opp)]}
                break
        if bad:
            break
    entry("container", bad)
    rep.add(AxiomEntry("complexity", 0, 0, None, True, f"longest nesting chain {d.complexity()}"))
    return rep


# ------------------------------------------------------------------ helpers

def _pair_matrix(m: HierarchicalModel, u: int, ids_a: np.ndarray, ids_b: np.ndarray) -> np.ndarray:
    """d_u(sets[ids_a[i]], sets[ids_b[j]]) as a matrix."""
    c = m.coords[u]
    ub = np.unique(ids_b)
    cols = {int(k): c.set_dist(ids_a, int(k)) for k in ub}
    out = np.empty((len(ids_a), len(ids_b)), dtype=np.int64)
    for j, k in enumerate(ids_b):
        out[:, j] = cols[int(k)]
    return out


def _rho_vec(m: HierarchicalModel, u: int, source: int) -> np.ndarray:
    """d_u(pi_u(z), rho^source_u) over the factor vertices of u."""
    rid = int(m.rho_pt[u][source])
    if rid < 0:
        raise ModelError(f"rho^{m.name_of(source)}_{m.name_of(u)} undefined")
    return m.coords[u].set_dist(m.coords[u].pi, rid)


def _worst_min(m, u, v, a: np.ndarray, b: np.ndarray):
    """max over z of min(a(z), b(z)) where a reads u's factor and b v's."""
    fu, fv = m.coords[u].factor, m.coords[v].factor
    if fu is not None and fu == fv:
        mins = np.minimum(a, b)
        i = int(np.argmax(mins))
        return int(mins[i]), {fu: i}
    val = min(int(a.max()), int(b.max()))
    wit = {}
    if fu is not None:
        wit[fu] = int(np.argmax(a))
    if fv is not None:
        wit[fv] = int(np.argmax(b))
    return val, wit


def _label(m, fac_pts: dict) -> dict:
    return {m.ambient.names[k]: m.ambient.factors[k].vertices[i] for k, i in sorted(fac_pts.items())}


# ------------------------------------------------------------------ projections

def min_E_projection(m: HierarchicalModel) -> AxiomEntry:
    """Least E1 >= 1 with diam pi <= E1, pi (E1, E1)-coarsely Lipschitz and
    pi(X) E1-quasiconvex, for every domain."""
    worst, wit, exact = 1, None, True
    qc_cache: dict = {}
    for u, c in enumerate(m.coords):
        ids = c.pi
        uniq = np.unique(ids)
        diam = max(c.diam(int(k)) for k in uniq)
        if diam > worst:
            worst, wit = diam, {"domain": m.name_of(u), "clause": "diameter"}
        if c.factor is not None:
            f = m.ambient.factors[c.factor]
            xs = m.factor_points(c.factor)
            for x in xs:
                pair = np.stack([np.full(len(ids), ids[x]), ids], axis=1)
                ud = c.union_diam(pair)
                need = -(-ud // (f.dist[x] + 1))
                j = int(np.argmax(need))
                if need[j] > worst:
                    worst = int(need[j])
                    wit = {"domain": m.name_of(u), "clause": "lipschitz",
                           "x": f.vertices[int(x)], "y": f.vertices[j]}
        image = c.pi_image()
        key = (id(c.graph), image)
        if key not in qc_cache:
            qc_cache[key] = quasiconvexity_constant(VertexSet(c.graph, frozenset(image)))
        qc = qc_cache[key]
        exact &= qc.exact
        if qc.value > worst:
            worst, wit = qc.value, {"domain": m.name_of(u), "clause": "quasiconvex image"}
    return AxiomEntry("projections", worst, m.E, wit, exact)


def check_hyperbolicity(m: HierarchicalModel) -> AxiomEntry:
    worst, wit = 0, None
    seen = {}
    for u, c in enumerate(m.coords):
        if not c.hyperbolic:
            continue
        if id(c.graph) not in seen:
            if len(c.graph) > 400 and not c.graph.is_tree():
                raise ModelError("four-point delta on a large non-tree is out of scope")
            seen[id(c.graph)] = hyperbolicity_delta(c.graph)
        dl = seen[id(c.graph)]
        if math.ceil(dl) > worst:
            worst, wit = math.ceil(dl), {"domain": m.name_of(u), "delta": str(dl)}
    return AxiomEntry("hyperbolicity", worst, m.E, wit, True, "four-point delta, rounded up")


# ------------------------------------------------------------------ consistency

def check_behrstock(m: HierarchicalModel, E: int | None = None) -> AxiomEntry:
    E = m.E if E is None else E
    rel = m.domains.rel
    worst, wit = 0, None
    for u in m.pair_sources():
        for v in np.flatnonzero(rel[u] == TRANS):
            v = int(v)
            a = _rho_vec(m, u, v)
            b = _rho_vec(m, v, u)
            val, pts = _worst_min(m, u, v, a, b)
            if val > worst or wit is None and val == worst:
                worst, wit = val, {"U": m.name_of(u), "V": m.name_of(v), "z": _label(m, pts)}
    if wit is None:
        return AxiomEntry("behrstock", 0, E, None, True, "no transverse pairs")
    return AxiomEntry("behrstock", worst, E, wit)


def _rho_of_set(m, u, v, members) -> list[int]:
    arr = m.rho_map[(u, v)]
    return [int(arr[p]) for p in members]


def check_nested_consistency(m: HierarchicalModel, E: int | None = None) -> AxiomEntry:
    """min{d_U(pi_U z, rho^V_U), diam(pi_V z u rho^U_V(pi_U z))} over V nested in U."""
    E = m.E if E is None else E
    rel = m.domains.rel
    worst, wit, any_pair = 0, None, False
    for v in m.pair_sources():
        for u in np.flatnonzero(rel[v] == NESTED):
            u = int(u)
            any_pair = True
            cu, cv = m.coords[u], m.coords[v]
            a = _rho_vec(m, u, v)
            fu, fv = cu.factor, cv.factor
            if fu is not None and fu == fv:
                combos = list(zip(range(len(cu.pi)), range(len(cv.pi))))
            else:
                combos = list(product(range(len(cu.pi)), range(len(cv.pi))))
            # only points where the first term is large need the second
            combos = [(i, j) for i, j in combos if a[i] > worst]
            if not combos:
                continue
            rows = []
            for i, j in combos:
                rows.append([int(cv.pi[j])] + _rho_of_set(m, u, v, cu.sets[int(cu.pi[i])]))
            width = max(len(r) for r in rows)
            rows = [r + [r[0]] * (width - len(r)) for r in rows]
            b = cv.union_diam(np.array(rows))
            vals = np.minimum(a[[i for i, _ in combos]], b)
            k = int(np.argmax(vals))
            if vals[k] > worst:
                i, j = combos[k]
                pts = {}
                if fu is not None:
                    pts[fu] = i
                if fv is not None:
                    pts[fv] = j
                worst, wit = int(vals[k]), {"V": m.name_of(v), "U": m.name_of(u), "z": _label(m, pts)}
    note = "" if any_pair else "no nested pairs"
    return AxiomEntry("nested-consistency", worst, E, wit, True, note)


def check_rho_compatibility(m: HierarchicalModel, E: int | None = None) -> AxiomEntry:
    """U nested in V: d_W(rho^U_W, rho^V_W) <= E when V < W or V trans W, W not orth U."""
    E = m.E if E is None else E
    rel = m.domains.rel
    worst, wit = 0, None
    for u in m.pair_sources():
        for v in np.flatnonzero(rel[u] == NESTED):
            ws = np.flatnonzero(((rel[v] == NESTED) | (rel[v] == TRANS)) & (rel[u] != ORTH))
            for w in ws:
                w = int(w)
                ru, rv = int(m.rho_pt[w][u]), int(m.rho_pt[w][v])
                if ru < 0 or rv < 0:
                    raise ModelError(f"rho into {m.name_of(w)} missing")
                d = m.coords[w].dist_ids(ru, rv)
                if d > worst:
                    worst, wit = d, {"U": m.name_of(u), "V": m.name_of(int(v)), "W": m.name_of(w)}
    return AxiomEntry("rho-compatibility", worst, E, wit)


def orthogonal_rho_proximity(m: HierarchicalModel, u, v, w) -> int:
    """d_W(rho^U_W, rho^V_W) for orthogonal U, V."""
    ds = m.domains
    u, v, w = (ds._i(x) for x in (u, v, w))
    if ds.rel[u, v] != ORTH:
        raise ModelError("U and V are not orthogonal")
    ru, rv = int(m.rho_pt[w][u]), int(m.rho_pt[w][v])
    if ru < 0 or rv < 0:
        raise ModelError("rho undefined for this triple")
    return m.coords[w].dist_ids(ru, rv)


def check_orthogonal_rho(m: HierarchicalModel, E: int | None = None) -> AxiomEntry:
    """Every defined triple satisfies d_W(rho^U_W, rho^V_W) <= 2E; the
    entry's constant is the least E making that true."""
    E = m.E if E is None else E
    rel = m.domains.rel
    worst, wit = 0, None
    for u in m.pair_sources():
        for v in np.flatnonzero(rel[u] == ORTH):
            for w in range(len(m.domains)):
                if m.rho_pt[w][u] < 0 or m.rho_pt[w][v] < 0:
                    continue
                d = orthogonal_rho_proximity(m, u, int(v), w)
                if d > worst:
                    worst, wit = d, {"U": m.name_of(u), "V": m.name_of(int(v)), "W": m.name_of(w), "d": d}
    return AxiomEntry("orthogonal-rho-proximity", -(-worst // 2), E, wit, True,
                      "constant is ceil(max d_W / 2)")


def infer_transverse(m: HierarchicalModel, u, v, w) -> dict:
    """If d_V(rho^U_V, rho^W_V) > 2E then U must be transverse to W."""
    ds = m.domains
    u, v, w = (ds._i(x) for x in (u, v, w))
    ru, rw = int(m.rho_pt[v][u]), int(m.rho_pt[v][w])
    if ru < 0 or rw < 0:
        raise ModelError("d_V(U, W) undefined")
    d = m.coords[v].dist_ids(ru, rw)
    inferred = d > 2 * m.E
    stored = int(ds.rel[u, w])
    return {"distance": d, "inferred_transverse": inferred,
            "consistent": (not inferred) or stored == TRANS}


# ------------------------------------------------------------------ BGI

def _avoid_components(c, rid: int, E: int):
    """Components of the part of C(u) farther than E from set ``rid``."""
    far = c.to_set(rid) > E
    keep = np.flatnonzero(far)
    if not len(keep):
        return keep, np.zeros(0, dtype=np.int64)
    g = c.graph
    sub = np.zeros((len(keep), len(keep)), dtype=bool)
    pos = {k: i for i, k in enumerate(keep)}
    for i, k in enumerate(keep):
        for j in g.adj[k]:
            if j in pos:
                sub[i, pos[j]] = True
    _, lab = connected_components(sub, directed=False)
    return keep, lab


def _bgi_value(m, u, v, E) -> tuple[int, bool, object]:
    """Largest diam of rho^U_V(gamma) over geodesics gamma of C(U) avoiding N_E(rho^V_U)."""
    cu, cv = m.coords[u], m.coords[v]
    rid = int(m.rho_pt[u][v])
    keep, lab = _avoid_components(cu, rid, E)
    if not len(keep):
        return 0, True, None
    arr = m.rho_map[(u, v)]
    if cu.graph.is_tree():
        best, wit = 0, None
        for comp in np.unique(lab):
            verts = keep[lab == comp]
            mem = sorted({p for k in verts for p in cv.sets[int(arr[k])]})
            dd = int(cv.graph.dist[np.ix_(mem, mem)].max())
            if dd > best:
                best, wit = dd, cu.graph.vertices[int(verts[0])]
        return best, True, wit
    # general graph: geodesics inside the avoided region, enumerated per pair
    best, exact, wit = 0, True, None
    keepset = set(int(k) for k in keep)
    for i in keep:
        for j in keep:
            if j < i:
                continue
            paths, complete = cu.graph.all_geodesics(int(i), int(j), budget=2000)
            exact &= complete
            for p in paths:
                if not keepset.issuperset(p):
                    continue
                mem = sorted({q for k in p for q in cv.sets[int(arr[k])]})
                dd = int(cv.graph.dist[np.ix_(mem, mem)].max())
                if dd > best:
                    best, wit = dd, (cu.graph.vertices[int(i)], cu.graph.vertices[int(j)])
    return best, exact, wit


def check_bgi(m: HierarchicalModel, E: int | None = None) -> AxiomEntry:
    """Least E' such that geodesics staying E'-far from rho^V_U have rho-image of diam <= E'."""
    E = m.E if E is None else E
    rel = m.domains.rel
    worst, wit, exact = 0, None, True
    for v in m.pair_sources():
        for u in np.flatnonzero(rel[v] == NESTED):
            u = int(u)
            if len(m.coords[u].graph) == 1:
                continue
            top = int(m.coords[u].graph.dist.max()) + 1
            for e in range(0, top + 1):
                val, ex, w = _bgi_value(m, u, v, e)
                exact &= ex
                if val <= e:
                    break
            if e > worst:
                worst, wit = e, {"U": m.name_of(u), "V": m.name_of(v), "start": w}
    return AxiomEntry("bounded-geodesic-image", worst, E, wit, exact)


def _pi_dist_matrix(m, u, xs, ys) -> np.ndarray:
    c = m.coords[u]
    return _pair_matrix(m, u, c.pi[xs], c.pi[ys])


def check_bgi_two_point(m: HierarchicalModel, E: int | None = None, budget: int = 20_000_000) -> AxiomEntry:
    """For U nested in V and x, y in X: d_U(x, y) <= E' or every geodesic between
    pi_V(x) and pi_V(y) passes E'-close to rho^U_V."""
    E = m.E if E is None else E
    rel = m.domains.rel
    worst, wit, exact = 0, None, True
    for u in m.pair_sources():
        for v in np.flatnonzero(rel[u] == NESTED):
            v = int(v)
            cu, cv = m.coords[u], m.coords[v]
            if len(cv.graph) == 1 or cu.factor is None:
                continue
            if cv.factor is not None and cv.factor != cu.factor:
                raise ModelError("two-point BGI needs nested domains on one factor")
            k = cu.factor
            n_pts = m.ambient.shape[k]
            pts = np.arange(n_pts)
            if n_pts * n_pts > budget:
                pts = pts[: max(1, budget // n_pts)]
                exact = False
            du = _pi_dist_matrix(m, u, pts, np.arange(n_pts))
            rid = int(m.rho_pt[v][u])
            g = cv.graph
            for e in range(0, int(du.max()) + 1):
                keep, lab = _avoid_components(cv, rid, e)
                if not len(keep):
                    break
                if not g.is_tree():
                    raise ModelError("two-point BGI implemented for tree coordinate spaces")
                comp = np.full(len(g), -1)
                comp[keep] = lab
                # in a tree, p and q are joined by a geodesic avoiding N_e(rho)
                # iff they lie in one component of the avoided region
                bad = _two_point_bad(cv, comp, pts, du, e)
                if bad is None:
                    break
            else:
                e = int(du.max()) + 1
            if e > worst:
                worst, wit = e, {"U": m.name_of(u), "V": m.name_of(v)}
    return AxiomEntry("bgi-two-point", worst, E, wit, exact)


def _two_point_bad(cv, comp, pts, du, e):
    """First (i, j) with d_U > e whose pi_V sets contain a pair in one avoided component."""
    n = du.shape[1]
    sets = [cv.sets[int(k)] for k in cv.pi]
    width = max(len(s) for s in sets)
    cm = np.array([[comp[s[min(t, len(s) - 1)]] for t in range(width)] for s in sets])
    mask = np.zeros(du.shape, dtype=bool)
    for s in range(width):
        for t in range(width):
            a = cm[pts, s][:, None]
            b = cm[:, t][None, :]
            mask |= (a == b) & (a >= 0)
    bad = mask & (du > e)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        return int(i), int(j)
    return None


# ------------------------------------------------------------------ large links

def _patterns(m, k, subs, U, E, anchored=True):
    """Distinct (active subdomains, N, pi_U id) patterns over point pairs on factor k."""
    xs = m.factor_points(k, anchored)
    ys = np.arange(m.ambient.shape[k])
    doms = [t for t in subs if m.coords[t].factor == k]
    act = np.zeros((len(xs), len(ys), len(doms)), dtype=bool)
    for j, t in enumerate(doms):
        act[:, :, j] = _pi_dist_matrix(m, t, xs, ys) >= E
    cu = m.coords[U]
    on_u = cu.factor == k
    if on_u:
        nmat = _pi_dist_matrix(m, U, xs, ys)
    pats = {}
    for i in range(len(xs)):
        for j in range(len(ys)):
            a = frozenset(doms[t] for t in np.flatnonzero(act[i, j]))
            key = (a, int(nmat[i, j]) if on_u else None, int(cu.pi[xs[i]]) if on_u else None)
            if key not in pats:
                pats[key] = (int(xs[i]), int(j))
    return pats


def _cover(m, U, active, candidates_ok, budget) -> list[int] | None:
    below = m.domains.below
    cover: list[int] = []
    left = set(active)
    while left:
        cands = set()
        for a in left:
            cands.add(a)
            cands.update(int(w) for w in np.flatnonzero(below[a]) if below[w, U])
        cands = [c for c in sorted(cands) if candidates_ok(c)]
        if not cands:
            return None
        best = max(cands, key=lambda c: (sum(1 for a in left if a == c or below[a, c]), -c))
        gain = {a for a in left if a == best or below[a, best]}
        if not gain:
            return None
        cover.append(best)
        left -= gain
        if len(cover) > budget:
            return None
    return cover


def _large_links_at(m, E):
    """First violation of large links at constant E, or None."""
    ds = m.domains
    for U in range(len(ds)):
        subs = [int(t) for t in ds.nested_in(U)]
        if not subs:
            continue
        facs = sorted({m.coords[t].factor for t in subs if m.coords[t].factor is not None}
                      | ({m.coords[U].factor} if m.coords[U].factor is not None else set()))
        per = [list(_patterns(m, k, subs, U, E).items()) for k in facs]
        for combo in product(*per):
            active = set()
            N, uid = 0, None
            pts = {}
            for k, ((a, nval, pid), where) in zip(facs, combo):
                active |= a
                if nval is not None:
                    N, uid = nval, pid
                pts[k] = where
            if not active:
                continue
            Nb = E * N + E
            cu = m.coords[U]
            uid = int(cu.pi[0]) if uid is None else uid

            def ok(t, uid=uid, Nb=Nb):
                rid = int(m.rho_pt[U][t])
                return cu.dist_ids(uid, rid) <= Nb

            cov = _cover(m, U, active, ok, math.floor(Nb))
            if cov is None or len(cov) > math.floor(Nb):
                lab = {m.ambient.names[k]: (m.ambient.factors[k].vertices[a], m.ambient.factors[k].vertices[b])
                       for k, (a, b) in pts.items()}
                return {"U": m.name_of(U), "pairs": lab, "N": N,
                        "active": sorted(m.name_of(t) for t in active)[:8]}
    return None


def check_large_links(m: HierarchicalModel, E: int | None = None) -> AxiomEntry:
    """Least E' for which every large-links instance has a cover of at most
    floor(E' * N + E') subdomains, N = d_U(pi_U z, pi_U z')."""
    E = m.E if E is None else E
    last = None
    for e in range(1, E_SEARCH_CAP + 1):
        bad = _large_links_at(m, e)
        if bad is None:
            return AxiomEntry("large-links", e, E, last, True,
                              "list length bound E*N+E; witness is the failure at the previous constant")
        last = bad
    return AxiomEntry("large-links", None, E, last, True, "no constant up to the search cap")


# ------------------------------------------------------------------ partial realisation

def _families(m: HierarchicalModel) -> list[tuple[int, ...]]:
    src = m.pair_sources()
    g = nx.Graph()
    g.add_nodes_from(src)
    for u in src:
        for v in src:
            if u < v and m.domains.rel[u, v] == ORTH:
                g.add_edge(u, v)
    fams = [tuple(sorted(c)) for c in nx.enumerate_all_cliques(g)]
    return sorted(fams, key=lambda f: (len(f), f))


def check_partial_realisation(m: HierarchicalModel, E: int | None = None) -> AxiomEntry:
    E = m.E if E is None else E
    rel = m.domains.rel
    worst, wit = 0, None
    for fam in _families(m):
        fixed: dict = {}  # factor -> max constraint vector
        for vj in fam:
            for v in np.flatnonzero((rel[vj] == NESTED) | (rel[vj] == TRANS)):
                v = int(v)
                k = m.coords[v].factor
                vec = _rho_vec(m, v, vj)
                if k is None:
                    if int(vec[0]) > worst:
                        worst, wit = int(vec[0]), {"family": [m.name_of(x) for x in fam], "V": m.name_of(v)}
                    continue
                fixed[k] = vec if k not in fixed else np.maximum(fixed[k], vec)
        by_factor: dict = {}
        for vj in fam:
            k = m.coords[vj].factor
            if k is not None:
                by_factor.setdefault(k, []).append(vj)
        for k in sorted(set(fixed) | set(by_factor)):
            base = fixed.get(k, np.zeros(m.ambient.shape[k], dtype=np.int64))
            members = by_factor.get(k, [])
            choices = [m.coords[vj].pi_image() for vj in members]
            for ps in product(*choices):
                tot = base.copy()
                for vj, p in zip(members, ps):
                    c = m.coords[vj]
                    tot = np.maximum(tot, c.set_dist(c.pi, c.intern([p])))
                val = int(tot.min())
                if val > worst:
                    worst = val
                    wit = {"family": [m.name_of(x) for x in fam],
                           "points": {m.name_of(vj): m.coords[vj].graph.vertices[p] for vj, p in zip(members, ps)}}
    return AxiomEntry("partial-realisation", worst, E, wit)


# ------------------------------------------------------------------ uniqueness

def uniqueness_theta(m: HierarchicalModel, kappa: int) -> int:
    """Least theta with: d_X(x, y) >= theta implies some d_V(x, y) >= kappa."""
    if kappa <= 0:
        return 0
    total = 0
    for k, f in enumerate(m.ambient.factors):
        xs = m.factor_points(k)
        ys = np.arange(len(f))
        ok = np.ones((len(xs), len(ys)), dtype=bool)
        for u in m.domains_on(k):
            ok &= _pi_dist_matrix(m, u, xs, ys) < kappa
        total += int(f.dist[np.ix_(xs, ys)][ok].max())
    return total + 1


def check_uniqueness(m: HierarchicalModel, kappas: Iterable[int] = (1, 2, 3, 4)) -> tuple[AxiomEntry, dict]:
    table = {int(k): uniqueness_theta(m, int(k)) for k in kappas}
    e = AxiomEntry("uniqueness", 0, m.E, {"theta_u": table}, True,
                   "theta_u measured on the window; no E involved")
    return e, table


# ------------------------------------------------------------------ tuples

def _tuple_ids(m: HierarchicalModel, t: CoordinateTuple) -> list[int]:
    return [m.coords[u].intern(t.get(u)) for u in range(len(m.domains))]


def is_consistent_tuple(m: HierarchicalModel, t: CoordinateTuple, R: int) -> tuple[bool, dict | None]:
    n = len(m.domains)
    ids = _tuple_ids(m, t)
    for u in range(n):
        if m.coords[u].diam(ids[u]) > R:
            return False, {"clause": "diameter", "U": m.name_of(u)}
    rel = m.domains.rel
    dmat = np.full((n, n), -1, dtype=np.int64)  # dmat[v, w] = d_v(b_v, rho^w_v)
    for v in range(n):
        row = m.rho_pt[v]
        have = row >= 0
        if have.any():
            dmat[v, have] = m.coords[v].set_dist(row[have], ids[v])
    trans = np.triu(rel == TRANS)
    tv = np.minimum(dmat, dmat.T)
    bad = trans & (tv > R)
    if bad.any():
        v, w = np.argwhere(bad)[0]
        return False, {"clause": "transverse", "V": m.name_of(int(v)), "W": m.name_of(int(w)), "value": int(tv[v, w])}
    for v, w in np.argwhere(rel == NESTED):
        v, w = int(v), int(w)
        if dmat[w, v] <= R:
            continue
        cv, cw = m.coords[v], m.coords[w]
        parts = [ids[v]] + [int(m.rho_map[(w, v)][p]) for p in cw.sets[ids[w]]]
        d = int(cv.union_diam(np.array([parts]))[0])
        if d > R:
            return False, {"clause": "nested", "V": m.name_of(v), "W": m.name_of(w), "value": min(d, int(dmat[w, v]))}
    return True, None


def realize_tuple(m: HierarchicalModel, t: CoordinateTuple, R: int, check: bool = True) -> tuple[int, int]:
    """Brute-force argmin over X of max_V d_V(x, b_V); least index on ties."""
    if check:
        ok, why = is_consistent_tuple(m, t, R)
        if not ok:
            raise ModelError(f"tuple is not {R}-consistent: {why}")
    ids = _tuple_ids(m, t)
    theta = 0
    for u in m.domains_on(None):
        theta = max(theta, m.coords[u].dist_ids(int(m.coords[u].pi[0]), ids[u]))
    vals = []
    for k, f in enumerate(m.ambient.factors):
        val = np.zeros(len(f), dtype=np.int64)
        for u in m.domains_on(k):
            c = m.coords[u]
            val = np.maximum(val, c.set_dist(c.pi, ids[u]))
        vals.append(val)
        theta = max(theta, int(val.min()))
    # the minimisers form a product of sublevel sets; the least flat index
    # takes the least admissible vertex in every factor
    coords = [int(np.flatnonzero(val <= theta)[0]) for val in vals]
    return int(m.ambient.join(coords)), theta


# ------------------------------------------------------------------ full audit

def audit(m: HierarchicalModel, E: int | None = None, kappas=(1, 2, 3, 4)) -> AxiomReport:
    E = m.E if E is None else E
    rep = audit_relations(m.domains)
    for entry in (min_E_projection(m), check_hyperbolicity(m), check_behrstock(m, E),
                  check_nested_consistency(m, E), check_rho_compatibility(m, E),
                  check_orthogonal_rho(m, E), check_bgi(m, E), check_bgi_two_point(m, E),
                  check_large_links(m, E), check_partial_realisation(m, E)):
        entry.declared = E
        rep.add(entry)
    rep.add(check_uniqueness(m, kappas)[0])
    return rep


def audited_E(rep: AxiomReport) -> int:
    """Maximum of the per-axiom constants (at least 1)."""
    vals = [e.minimal_constant for e in rep.entries]
    if any(v is None for v in vals):
        raise ModelError("some axiom has no finite constant")
    return max([1] + vals)
