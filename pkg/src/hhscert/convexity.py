"""Hierarchical quasiconvexity measured on finite windows.

Everything here is window-relative.  The window of radius r is the set of
ambient points whose every factor coordinate lies within r of that
factor's centre; since the ambient is a product, so is the window.  Each
measurement is sampled on every radius up to the full window, and a
quantity is called bounded when its values on the two largest radii
agree.  A gauge that keeps growing with the window is the finite shadow of
an unbounded one.

Most measurements factorize: a domain reads one ambient factor, so any
maximum over domains splits into one maximum per factor.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .graphs import (FiniteGraph, VertexSet, _pair_ok, is_quasigeodesic, quasiconvexity_constant,
                     slim_constant, unparametrized_fit)
from .model import ORTH, HierarchicalModel

SUBGROUP, COSET, ARBITRARY = "subgroup", "coset", "arbitrary"


# ----------------------------------------------------------------- subsets

@dataclass
class SubsetSpec:
    model: HierarchicalModel = field(repr=False)
    members: np.ndarray
    provenance: str = ARBITRARY
    label: str = ""
    base: int | None = None  # basepoint of a subgroup orbit

    def __post_init__(self):
        mem = np.unique(np.asarray(self.members, dtype=np.int64))
        if len(mem) == 0:
            raise ValueError("subset is empty")
        if mem[0] < 0 or mem[-1] >= len(self.model.ambient):
            raise ValueError("subset leaves the model window")
        self.members = mem
        if self.base is not None and self.base not in set(mem.tolist()):
            raise ValueError("basepoint is not a member")

    def __len__(self):
        return len(self.members)

    @property
    def is_whole(self) -> bool:
        return len(self.members) == len(self.model.ambient)

    def dist(self) -> np.ndarray:
        """d(x, s) for every ambient point (cached)."""
        d = getattr(self, "_dist", None)
        if d is None:
            d = self._dist = self.model.ambient.dist_field(self.members)
        return d

    def factor_coords(self, k: int) -> np.ndarray:
        return np.unique(self.model.ambient.split(self.members)[k])

    def restrict(self, keep: np.ndarray) -> "SubsetSpec | None":
        mem = self.members[keep[self.members]]
        if len(mem) == 0:
            return None
        base = self.base if self.base is not None and keep[self.base] else None
        return SubsetSpec(self.model, mem, self.provenance, self.label, base)

    def labels(self) -> list:
        return [self.model.ambient.label(int(x)) for x in self.members]


# ----------------------------------------------------------------- windows

def factor_centre(g: FiniteGraph) -> int:
    """Vertex of least eccentricity (least index on ties)."""
    return int(np.argmin(g.dist.max(axis=1)))


def factor_radii(m: HierarchicalModel) -> list[np.ndarray]:
    amb = m.ambient
    rad = getattr(amb, "_radii", None)
    if rad is None:
        rad = amb._radii = [f.dist[factor_centre(f)] for f in amb.factors]
    return rad


def point_radius(m: HierarchicalModel, x=None) -> np.ndarray:
    """Window radius of ambient points: max over factors of the distance to the centre."""
    rad = factor_radii(m)
    pts = np.arange(len(m.ambient)) if x is None else np.asarray(x)
    parts = m.ambient.split(pts)
    out = np.zeros(np.shape(pts), dtype=np.int64)
    for r, p in zip(rad, parts):
        out = np.maximum(out, r[p])
    return out


def window_radius(m: HierarchicalModel) -> int:
    return int(max(r.max() for r in factor_radii(m)))


def _verdict(profile: Sequence[int]) -> bool:
    return len(profile) < 2 or profile[-1] == profile[-2]


@dataclass
class GaugeTable:
    """Sampled gauge: input -> bound on the full window, with per-radius profiles."""

    kind: str
    values: dict
    profiles: dict
    radii: list
    bounded: dict
    witness: dict | None = None
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.bounded.values())

    def envelope(self) -> dict:
        """Monotone nondecreasing envelope of the sampled values."""
        out, top = {}, None
        for k in sorted(self.values):
            top = self.values[k] if top is None else max(top, self.values[k])
            out[k] = top
        return out

    def to_dict(self) -> dict:
        return {"kind": self.kind, "window_radius": self.radii[-1] if self.radii else 0,
                "radii": list(self.radii),
                "values": {str(k): v for k, v in sorted(self.values.items())},
                "envelope": {str(k): v for k, v in self.envelope().items()},
                "profiles": {str(k): list(v) for k, v in sorted(self.profiles.items())},
                "bounded": {str(k): v for k, v in sorted(self.bounded.items())},
                "passed": self.passed, "witness": self.witness, **self.extra}


# ----------------------------------------------------------------- projections of subsets

def image_vertices(m: HierarchicalModel, u: int, factor_pts) -> np.ndarray:
    """Vertices of pi_u(points) given the factor coordinates of the points."""
    c = m.coords[u]
    ids = c.pi[:1] if c.factor is None else c.pi[factor_pts]
    flat, offs = c.flat()
    lens = np.diff(np.append(offs, len(flat)))
    pick = np.zeros(len(offs), dtype=bool)
    pick[ids] = True
    return np.unique(flat[np.repeat(pick, lens)])


def _set_to_vertices(c, verts: np.ndarray) -> np.ndarray:
    """Distance from every interned set of c to the vertex set ``verts``."""
    dto = c.graph.dist[:, verts].min(axis=1)
    flat, offs = c.flat()
    return np.minimum.reduceat(dto[flat], offs)


def coordinate_defect(s: SubsetSpec) -> list[np.ndarray]:
    """Per factor k, the array v -> max over domains U on k of d_U(pi_U(v), pi_U(s)).

    The coordinate defect of an ambient point is the max of its factor
    entries (point domains contribute nothing).
    """
    m = s.model
    out = []
    for k, f in enumerate(m.ambient.factors):
        sk = s.factor_coords(k)
        best = np.zeros(len(f), dtype=np.int64)
        for u in m.domains_on(k):
            c = m.coords[u]
            per = _set_to_vertices(c, image_vertices(m, u, sk))
            best = np.maximum(best, per[c.pi])
        out.append(best)
    return out


def projection_qc(s: SubsetSpec) -> dict:
    """Worst quasiconvexity constant of pi_U(s) over all domains."""
    m = s.model
    worst, where = 0, None
    for k in range(len(m.ambient.factors)):
        sk = s.factor_coords(k)
        cache: dict = {}
        for u in m.domains_on(k):
            c = m.coords[u]
            img = image_vertices(m, u, sk)
            key = (id(c.graph), img.tobytes())
            if key not in cache:
                cache[key] = quasiconvexity_constant(VertexSet(c.graph, frozenset(img.tolist()))).value
            if cache[key] > worst:
                worst, where = cache[key], m.name_of(u)
    return {"value": int(worst), "domain": where}


# ----------------------------------------------------------------- realisation

def hqc_check(s: SubsetSpec, R_values: Sequence[int] = (0, 1)) -> GaugeTable:
    """kappa(R): worst ambient distance to s among points of coordinate defect <= R.

    Sampled on every window radius; a failure witness is the worst point at
    the full radius for the first R whose profile keeps growing.  Larger R
    needs a larger window before kappa(R) settles: on the product family
    kappa(2) of the A-orbit reaches its plateau only at radius 7.
    """
    m = s.model
    radii = list(range(window_radius(m) + 1))
    R_values = sorted(set(int(r) for r in R_values))
    qc = projection_qc(s)
    if s.is_whole:
        prof = {R: [0] * len(radii) for R in R_values}
        return GaugeTable("kappa", {R: 0 for R in R_values}, prof, radii,
                          {R: True for R in R_values}, None, {"projection_qc": qc})
    parts = coordinate_defect(s)
    split = m.ambient.split(np.arange(len(m.ambient)))
    defect = np.zeros(len(m.ambient), dtype=np.int64)
    for arr, p in zip(parts, split):
        defect = np.maximum(defect, arr[p])
    dist = s.dist()
    rad = point_radius(m)
    profiles, values, bounded = {}, {}, {}
    witness = None
    for R in R_values:
        ok = defect <= R
        prof = []
        for r in radii:
            sel = ok & (rad <= r)
            prof.append(int(dist[sel].max()) if sel.any() else 0)
        profiles[R], values[R], bounded[R] = prof, prof[-1], _verdict(prof)
        if not bounded[R] and witness is None:
            cand = np.flatnonzero(ok)
            x = int(cand[np.argmax(dist[cand])])  # argmax returns the least index on ties
            witness = {"R": R, "point": _plain(m.ambient.label(x)), "index": x,
                       "coordinate_defect": int(defect[x]), "distance": int(dist[x]),
                       "radius": int(rad[x])}
    return GaugeTable("kappa", values, profiles, radii, bounded, witness,
                      {"projection_qc": qc})


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(t) for t in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


# ----------------------------------------------------------------- gates

def _gate_costs(s: SubsetSpec, k: int, xk: int) -> np.ndarray:
    """Over the distinct factor-k coordinates of s: max over domains on k of
    d_U(pi_U(v), closest points of pi_U(s) to pi_U(x))."""
    cache = s.__dict__.setdefault("_gate_cache", {})
    key = (k, int(xk))
    if key in cache:
        return cache[key]
    m = s.model
    sk = s.factor_coords(k)
    imgs = s.__dict__.setdefault("_img_cache", {})
    cost = np.zeros(len(sk), dtype=np.int64)
    for u in m.domains_on(k):
        c = m.coords[u]
        if u not in imgs:
            imgs[u] = image_vertices(m, u, sk)
        img = imgs[u]
        px = list(c.sets[int(c.pi[xk])])
        dd = c.graph.dist[np.ix_(px, img)].min(axis=0)
        cp = img[dd == dd.min()]
        cost = np.maximum(cost, _set_to_vertices(c, cp)[c.pi[sk]])
    cache[key] = cost
    return cost


def gate(s: SubsetSpec, x: int) -> int:
    """Member of s closest, coordinate by coordinate, to the closest-point projection of x.

    Ties go to the least ambient index, so members are their own gates.
    """
    m = s.model
    xs = m.ambient.split(int(x))
    parts = m.ambient.split(s.members)
    total = np.zeros(len(s.members), dtype=np.int64)
    for k in range(len(m.ambient.factors)):
        sk = s.factor_coords(k)
        cost = _gate_costs(s, k, int(xs[k]))
        total = np.maximum(total, cost[np.searchsorted(sk, parts[k])])
    return int(s.members[int(np.argmin(total))])


def gates(s: SubsetSpec, xs) -> np.ndarray:
    return np.array([gate(s, int(x)) for x in xs], dtype=np.int64)


def hausdorff(m: HierarchicalModel, a, b) -> int:
    d = m.ambient.pairwise(np.asarray(a), np.asarray(b))
    return int(max(d.min(axis=1).max(), d.min(axis=0).max()))


def gate_vs_intersection(A: SubsetSpec, B: SubsetSpec) -> dict:
    """Hausdorff distance between g_B(A) and the enumerated A cap B."""
    inter = np.intersect1d(A.members, B.members)
    img = np.unique(gates(B, A.members))
    out = {"intersection": [_plain(A.model.ambient.label(int(x))) for x in inter],
           "gate_image_size": int(len(img)), "window_radius": window_radius(A.model)}
    if len(inter) == 0:
        out.update(L=None, finite=False)
    else:
        out.update(L=hausdorff(A.model, img, inter), finite=True)
    return out


# ----------------------------------------------------------------- unions in hyperbolic graphs

def union_qc_hyperbolic(g: FiniteGraph, Y, Y2, R: int | None = None) -> dict:
    """Quasiconvexity of Y u Y2 against R + 2 delta + d(Y, Y2) + 1.

    R defaults to the larger measured constant of Y and Y2; delta is the
    slim-triangle constant of g.
    """
    Y = VertexSet(g, frozenset(int(v) for v in Y))
    Y2 = VertexSet(g, frozenset(int(v) for v in Y2))
    q1, q2 = quasiconvexity_constant(Y), quasiconvexity_constant(Y2)
    if R is None:
        R = max(q1.value, q2.value)
    delta = slim_constant(g)
    d = int(g.dist[np.ix_(Y.sorted(), Y2.sorted())].min())
    q = quasiconvexity_constant(VertexSet(g, Y.members | Y2.members))
    bound = R + 2 * delta + d + 1
    return {"measured": q.value, "bound": bound, "R": R, "delta": delta, "distance": d,
            "holds": q.value <= bound, "exact": q.exact and q1.exact and q2.exact}


# ----------------------------------------------------------------- densities on windows

def _orth_pairs(m: HierarchicalModel) -> np.ndarray:
    return np.argwhere(m.domains.rel == ORTH)


def _window_masks(m: HierarchicalModel, radii) -> dict:
    """radius -> boolean mask over ambient points."""
    rad = point_radius(m)
    return {r: rad <= r for r in radii}


def _factor_ball(m: HierarchicalModel, k: int | None, r: int) -> np.ndarray:
    if k is None:
        return np.zeros(1, dtype=np.int64)
    return np.flatnonzero(factor_radii(m)[k] <= r)


def _fcoords(m: HierarchicalModel, pts) -> list[np.ndarray]:
    """Distinct factor coordinates of a set of ambient points."""
    return [np.unique(p) for p in m.ambient.split(np.asarray(pts))]


def _img(m, u, fc: list) -> np.ndarray:
    k = m.coords[u].factor
    return image_vertices(m, u, np.zeros(1, dtype=np.int64) if k is None else fc[k])


def density_defect(g: FiniteGraph, sub: np.ndarray, sup: np.ndarray) -> int:
    """Least T with sup inside the T-neighbourhood of sub."""
    return int(g.dist[np.ix_(sup, sub)].min(axis=1).max())


def _diam(g: FiniteGraph, verts: np.ndarray) -> int:
    return int(g.dist[np.ix_(verts, verts)].max())


# ----------------------------------------------------------------- fill all squares

def fill_all_squares(A: SubsetSpec, B: SubsetSpec, radii: Sequence[int] | None = None) -> dict:
    """Minimal T over orthogonal pairs, per window radius.

    For (U, V) with U orthogonal to V the pair needs
    min(dens(pi_U g_A(B) in pi_U A), dens(pi_V g_B(A) in pi_V B)).
    ``T_diameter`` is the cruder certificate K + 1 with K the largest
    min(diam_U A, diam_V B).
    """
    m = A.model
    radii = list(range(1, window_radius(m) + 1)) if radii is None else list(radii)
    masks = _window_masks(m, radii)
    pairs = _orth_pairs(m)
    T_prof, D_prof, wit = [], [], None
    for r in radii:
        Ar, Br = A.restrict(masks[r]), B.restrict(masks[r])
        if Ar is None or Br is None or len(pairs) == 0:
            T_prof.append(0)
            D_prof.append(0)
            continue
        gAB, gBA = gates(Ar, Br.members), gates(Br, Ar.members)
        us = np.unique(pairs.ravel())
        fa, fb, fab, fba = (_fcoords(m, p) for p in (Ar.members, Br.members, gAB, gBA))
        dA, dB, diamA, diamB = {}, {}, {}, {}
        for u in us:
            gph = m.coords[u].graph
            ia, ib = _img(m, u, fa), _img(m, u, fb)
            dA[u] = density_defect(gph, _img(m, u, fab), ia)
            dB[u] = density_defect(gph, _img(m, u, fba), ib)
            diamA[u], diamB[u] = _diam(gph, ia), _diam(gph, ib)
        T, K, worst = 0, 0, None
        for u, v in pairs:
            t = min(dA[u], dB[v])
            if t > T:
                T, worst = t, (int(u), int(v))
            K = max(K, min(diamA[u], diamB[v]))
        T_prof.append(T)
        D_prof.append(K + 1)
        if r == radii[-1] and worst is not None:
            u, v = worst
            wit = {"U": m.name_of(u), "V": m.name_of(v), "dens_U": dA[u], "dens_V": dB[v]}
    return {"T": T_prof[-1], "T_profile": T_prof, "T_diameter": D_prof[-1],
            "T_diameter_profile": D_prof, "radii": radii, "window_radius": radii[-1],
            "bounded": _verdict(T_prof), "witness": None if _verdict(T_prof) else wit}


# ----------------------------------------------------------------- orthogonal dichotomy

@dataclass
class DichotomyReport:
    theta: int
    profile: list
    radii: list
    bounded: bool
    pairs: list  # worst pairs at the full radius: (U, V, diam_U, dens_V)
    witness: dict | None = None
    T: dict | None = None
    R: dict | None = None
    theta_checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.bounded

    def to_dict(self) -> dict:
        return {"theta": self.theta, "profile": self.profile, "radii": self.radii,
                "window_radius": self.radii[-1], "bounded": self.bounded, "passed": self.passed,
                "pairs": self.pairs, "witness": self.witness, "T": self.T, "R": self.R,
                "theta_checks": {str(k): v for k, v in sorted(self.theta_checks.items())}}


def orth_dichotomy(s: SubsetSpec, theta_values: Sequence[int] | None = None,
                   radii: Sequence[int] | None = None, top: int = 5) -> DichotomyReport:
    """Least Theta with: diam_U(s) >= Theta implies pi_V(s) Theta-dense, for U orthogonal to V.

    Density in C(V) is measured inside the image of the window.  A pair
    needs Theta >= min(diam_U + 1, dens_V).  ``theta_values``, if given,
    are also checked individually and the verdicts stored on the report.
    """
    m = s.model
    radii = list(range(1, window_radius(m) + 1)) if radii is None else list(radii)
    masks = _window_masks(m, radii)
    pairs = _orth_pairs(m)
    prof, table, wit = [], [], None
    for r in radii:
        sr = s.restrict(masks[r])
        if sr is None or len(pairs) == 0:
            prof.append(0)
            continue
        us = np.unique(pairs.ravel())
        fc = _fcoords(m, sr.members)
        diam, dens = {}, {}
        for u in us:
            gph = m.coords[u].graph
            img = _img(m, u, fc)
            diam[u] = _diam(gph, img)
            whole = image_vertices(m, u, _factor_ball(m, m.coords[u].factor, r))
            dens[u] = density_defect(gph, img, whole)
        need = [(min(diam[u] + 1, dens[v]), int(u), int(v)) for u, v in pairs]
        worst = max(need, key=lambda t: (t[0], -t[1], -t[2]))
        prof.append(worst[0])
        if r == radii[-1]:
            need.sort(key=lambda t: (-t[0], t[1], t[2]))
            table = [{"U": m.name_of(u), "V": m.name_of(v), "diam_U": diam[u], "dens_V": dens[v],
                      "needed": t} for t, u, v in need[:top]]
            if worst[0] > 0:
                wit = table[0]
    rep = DichotomyReport(prof[-1], prof, radii, _verdict(prof), table, None if _verdict(prof) else wit)
    if theta_values is not None:
        rep.theta_checks = {int(t): bool(t >= prof[-1]) for t in theta_values}
    return rep


# ----------------------------------------------------------------- no drift

def no_drift_check(d, A: SubsetSpec, B: SubsetSpec, radii: Sequence[int] | None = None) -> dict:
    """Least R such that pi_U(A) or pi_U(B) is R-dense in C(U) for every
    sampled U orthogonal to a^-1 Y_a and Y_b.

    ``d`` is the AmalgamData of the pair; a and b range over the sampled
    syllables a_i^k with |k| <= d.sample_radius outside C.
    """
    from .amalgam import _sample

    m = A.model
    geo = d.geometry
    radii = list(range(1, window_radius(m) + 1)) if radii is None else list(radii)
    rel = m.domains.rel
    idx = m.domains.index
    sample = _sample(d, d.sample_radius)
    qual: set = set()
    missing = 0
    for i, k in sample:
        ya = geo.act(geo.inv(d.element(i, k)), d.witness(i, k))
        for j, l in sample:
            if i == j:
                continue
            yb = d.witness(j, l)
            if ya not in idx or yb not in idx:
                missing += 1
                continue
            both = (rel[:, idx[ya]] == ORTH) & (rel[:, idx[yb]] == ORTH)
            qual.update(int(u) for u in np.flatnonzero(both))
    qual = sorted(qual)
    masks = _window_masks(m, radii)
    prof, wit = [], None
    for r in radii:
        Ar, Br = A.restrict(masks[r]), B.restrict(masks[r])
        worst, who = 0, None
        if Ar is not None and Br is not None:
            fa, fb = _fcoords(m, Ar.members), _fcoords(m, Br.members)
        for u in qual:
            if Ar is None or Br is None:
                break
            gph = m.coords[u].graph
            whole = image_vertices(m, u, _factor_ball(m, m.coords[u].factor, r))
            da = density_defect(gph, _img(m, u, fa), whole)
            db = density_defect(gph, _img(m, u, fb), whole)
            if min(da, db) > worst:
                worst, who = min(da, db), {"U": m.name_of(u), "dens_A": da, "dens_B": db}
        prof.append(worst)
        if r == radii[-1]:
            wit = who
    ok = _verdict(prof)
    return {"R": prof[-1], "profile": prof, "radii": radii, "window_radius": radii[-1],
            "bounded": ok, "qualifying": [m.name_of(u) for u in qual], "vacuous": not qual,
            "unmaterialized_pairs": missing, "witness": None if ok else wit,
            "note": "a, b range over sampled syllables only"}


# ----------------------------------------------------------------- hierarchy paths

def _lam(lam) -> tuple[int, int]:
    f = Fraction(lam)
    if f < 1:
        raise ValueError("lambda must be >= 1")
    return f.numerator, f.denominator


def max_length(d: int, lam) -> int:
    """Longest (lam, lam)-quasigeodesic between points at distance d: lam d + lam^2 steps."""
    p, q = _lam(lam)
    return (d * p * q + p * p) // (q * q)


def _neighbours(m: HierarchicalModel, x: int) -> list[int]:
    amb = m.ambient
    c = [int(t) for t in amb.split(x)]
    out = []
    for k, f in enumerate(amb.factors):
        for j in f.adj[c[k]]:
            d = list(c)
            d[k] = j
            out.append(int(amb.join(d)))
    return sorted(out)


def shadows_ok(m: HierarchicalModel, pts: Sequence[int], lam, cache: dict | None = None) -> str | None:
    """Name of the first domain whose shadow of the path is not an unparametrised
    (lam, lam)-quasigeodesic, or None."""
    cache = {} if cache is None else cache
    parts = m.ambient.split(np.asarray(pts))
    for u, c in enumerate(m.coords):
        if c.factor is None:
            continue
        ids = c.pi[parts[c.factor]]
        seq = [int(ids[0])] + [int(b) for a, b in zip(ids, ids[1:]) if a != b]
        if len(seq) == 1:
            continue
        key = (id(c.graph), tuple(c.sets[k] for k in seq), Fraction(lam))
        if key not in cache:
            dm = np.array([[c.dist_ids(a, b) for b in seq] for a in seq], dtype=np.int64)
            cache[key] = unparametrized_fit(dm, lam) is not None
        if not cache[key]:
            return m.name_of(u)
    return None


def is_hierarchy_path(m: HierarchicalModel, pts: Sequence[int], lam) -> bool:
    """Ambient (lam, lam)-quasigeodesic whose every shadow is unparametrised quasigeodesic."""
    pts = [int(x) for x in pts]
    dm = m.ambient.pairwise(pts, pts)
    return is_quasigeodesic(dm, lam) and shadows_ok(m, pts, lam) is None


@dataclass
class PathSet:
    paths: list
    complete: bool
    lam: Fraction
    rejected: int = 0  # ambient quasigeodesics whose shadows failed
    expanded: int = 0


def enumerate_hierarchy_paths(m: HierarchicalModel, x: int, y: int, lam=1,
                              budget: int = 200_000, cache: dict | None = None) -> PathSet:
    """All edge paths x -> y without repeated vertices that are lam-hierarchy paths.

    The search is a depth-first walk pruned by the quasigeodesic
    inequalities against every earlier point and by the remaining length
    allowance.  ``budget`` caps expanded nodes; past it the set is partial.
    """
    p, q = _lam(lam)
    amb = m.ambient
    x, y = int(x), int(y)
    if x == y:
        return PathSet([(x,)], True, Fraction(lam))
    L = max_length(int(amb.distance(x, y)), lam)
    to_y = amb.pairwise(np.arange(len(amb)), [y])[:, 0] if len(amb) <= 50_000 else None
    cache = {} if cache is None else cache
    out = PathSet([], True, Fraction(lam))
    pts, on = [x], {x}

    def dist_to_y(z):
        return int(to_y[z]) if to_y is not None else int(amb.distance(z, y))

    def walk():
        if out.expanded >= budget:
            out.complete = False
            return
        out.expanded += 1
        i = len(pts)
        for z in _neighbours(m, pts[-1]):
            if z in on or i + dist_to_y(z) > L:
                continue
            dz = amb.pairwise([z], pts)[0]
            gap = i - np.arange(i)
            if ((gap * q * q - p * p > dz * p * q) | (dz * q > p * gap + p)).any():
                continue
            pts.append(z)
            if z == y:
                if shadows_ok(m, pts, lam, cache) is None:
                    out.paths.append(tuple(pts))
                else:
                    out.rejected += 1
            else:
                on.add(z)
                walk()
                on.discard(z)
            pts.pop()

    walk()
    return out


def _member_pairs(s: SubsetSpec) -> list[tuple[int, int]]:
    mem = [int(v) for v in s.members]
    if s.base is not None:
        return [(s.base, b) for b in mem]
    return [(a, b) for i, a in enumerate(mem) for b in mem[i:]]


def hqc_via_paths(s: SubsetSpec, lambda_values=(1,), budget: int = 200_000) -> GaugeTable:
    """Lambda(lam): worst distance to s from a lam-hierarchy path with endpoints on s."""
    m = s.model
    radii = list(range(window_radius(m) + 1))
    dist = s.dist()
    rad = point_radius(m)
    values, profiles, bounded, complete = {}, {}, {}, True
    witness = None
    cache: dict = {}
    for lam in lambda_values:
        lam = Fraction(lam)
        prof = np.zeros(len(radii), dtype=np.int64)
        worst = (-1, None)
        if not s.is_whole:
            for a, b in _member_pairs(s):
                ps = enumerate_hierarchy_paths(m, a, b, lam, budget, cache)
                complete &= ps.complete
                for path in ps.paths:
                    arr = np.asarray(path)
                    v, r = int(dist[arr].max()), int(rad[arr].max())
                    prof[r:] = np.maximum(prof[r:], v)
                    if v > worst[0]:
                        worst = (v, path)
        key = str(lam)
        profiles[key] = prof.tolist()
        values[key] = int(prof[-1])
        bounded[key] = _verdict(profiles[key])
        if not bounded[key] and witness is None:
            witness = {"lambda": key, "distance": worst[0],
                       "path": [_plain(m.ambient.label(int(x))) for x in worst[1]]}
    return GaugeTable("Lambda", values, profiles, radii, bounded, witness, {"complete": complete})


def hull(Z: SubsetSpec, lam=1, n: int = 1, budget: int = 200_000) -> tuple[SubsetSpec, bool]:
    """n-fold union of lam-hierarchy paths between points, starting from Z.

    Returns the hull and whether every enumeration finished within budget.
    """
    m = Z.model
    cur = Z
    complete = True
    cache: dict = {}
    for _ in range(n):
        pts = set(int(v) for v in cur.members)
        mem = sorted(pts)
        for i, a in enumerate(mem):
            for b in mem[i + 1:]:
                ps = enumerate_hierarchy_paths(m, a, b, lam, budget, cache)
                complete &= ps.complete
                for path in ps.paths:
                    pts.update(path)
        nxt = SubsetSpec(m, sorted(pts), Z.provenance, f"P^{_ + 1}({Z.label})")
        if len(nxt) == len(cur):
            cur = nxt
            break
        cur = nxt
    return cur, complete


# ----------------------------------------------------------------- strong quasiconvexity

def _detour(m: HierarchicalModel, a: int, b: int, k: int, z: int) -> list[int]:
    """Move factor k from a_k to z, then every other factor in turn, then factor k to b_k."""
    amb = m.ambient
    cur = [int(t) for t in amb.split(a)]
    end = [int(t) for t in amb.split(b)]
    out = [a]

    def move(j, target):
        for v in amb.factors[j].geodesic(cur[j], target)[1:]:
            cur[j] = v
            out.append(int(amb.join(cur)))

    move(k, z)
    for j in range(len(amb.factors)):
        if j != k:
            move(j, end[j])
    move(k, end[k])
    return out


def _max_along(g: FiniteGraph, root: int, h: np.ndarray) -> np.ndarray:
    """For every vertex w, max of h over the canonical geodesic root -> w."""
    out = np.empty(len(g), dtype=np.int64)
    if g.is_tree():
        order, parent = [root], np.full(len(g), -1)
        parent[root] = root
        out[root] = h[root]
        for v in order:
            for w in g.adj[v]:
                if parent[w] < 0:
                    parent[w] = v
                    out[w] = max(out[v], h[w])
                    order.append(w)
        return out
    for w in range(len(g)):
        out[w] = h[g.geodesic(root, w)].max()
    return out


def _segment_values(m, field: np.ndarray, ca, cb, k: int, mids: list):
    """Exact max of ``field`` over every detour through factor k, indexed by z."""
    amb = m.ambient
    g = amb.factors[k]
    zs = np.arange(len(g))
    c1, c2 = list(ca), list(cb)
    c1[k] = c2[k] = zs
    seg1 = _max_along(g, ca[k], field[amb.join(c1)])
    seg3 = _max_along(g, cb[k], field[amb.join(c2)])  # geodesics in a tree are reversible
    out = np.maximum(seg1, seg3)
    for rest in mids:
        c = list(rest)
        c[k] = zs
        out = np.maximum(out, field[amb.join(c)])
    return out


def _middle_configs(amb, ca, cb, k: int) -> list:
    cur = list(ca)
    out = []
    for j, f in enumerate(amb.factors):
        if j == k:
            continue
        for v in f.geodesic(cur[j], cb[j])[1:]:
            cur[j] = v
            out.append(list(cur))
    return out


def _detour_prefilter(fd: np.ndarray, ak: int, bk: int, l2: int, d: int, lam, tree: bool) -> np.ndarray:
    """Necessary quasigeodesic conditions for every detour z, evaluated at once.

    Checks the endpoint pair and, in a tree factor, the two visits of the
    branch point where the detour leaves the a-b geodesic.
    """
    p, q = _lam(lam)
    l1, l3 = fd[ak], fd[:, bk]

    def ok(dist, gap):
        return (gap * q * q - p * p <= dist * p * q) & (dist * q <= p * gap + p)

    good = ok(d, l1 + l2 + l3)
    if tree:
        t = (l1 + l3 - fd[ak, bk]) // 2  # distance from z to the a-b geodesic
        good &= ok(l2, l2 + 2 * t)
    return good


def strong_qc_sweep(s: SubsetSpec, lambda_values=(1, 2, 3)) -> GaugeTable:
    """Q(lam) over single-factor detours with endpoints on s.

    A detour moves one factor from a to an arbitrary vertex z, then moves
    the other factors from a to b, then brings the first factor to b.
    Detours that are (lam, lam)-quasigeodesics are kept and their worst
    distance to s is recorded.  Subgroup orbits only need pairs through the
    basepoint.  The value and window radius of every detour are computed
    for all z at once; only detours that would raise the profile are
    materialised and tested.
    """
    m = s.model
    amb = m.ambient
    radii = list(range(window_radius(m) + 1))
    lams = [Fraction(x) for x in lambda_values]
    keys = [str(x) for x in lams]
    prof = {kk: np.zeros(len(radii), dtype=np.int64) for kk in keys}
    worst = {kk: (-1, None) for kk in keys}
    checked = 0
    if not s.is_whole:
        dist = s.dist()
        rad = point_radius(m)
        fdist = [f.dist for f in amb.factors]
        for a, b in _member_pairs(s):
            ca = [int(t) for t in amb.split(a)]
            cb = [int(t) for t in amb.split(b)]
            rest = [int(fd[ca[j], cb[j]]) for j, fd in enumerate(fdist)]
            d = sum(rest)
            Ls = [max_length(d, x) for x in lams]
            rab = max(rad[a], rad[b])
            for k, fd in enumerate(fdist):
                length = fd[ca[k]] + fd[:, cb[k]] + d - rest[k]
                if not lams or length.min() > max(Ls):
                    continue
                mids = _middle_configs(amb, ca, cb, k)
                val = _segment_values(m, dist, ca, cb, k, mids)
                rr = _segment_values(m, rad, ca, cb, k, mids)
                tree = amb.factors[k].is_tree()
                for li, kk in enumerate(keys):
                    P = prof[kk]
                    live = (length <= Ls[li]) & (val > P[rab])
                    if live.any():
                        live &= _detour_prefilter(fd, ca[k], cb[k], d - rest[k], d, lams[li], tree)
                    cand = np.flatnonzero(live)
                    for z in cand[np.lexsort((cand, -val[cand]))]:
                        v, r = int(val[z]), int(rr[z])
                        if v <= P[r]:
                            continue
                        path = _detour(m, a, b, k, int(z))
                        arr = np.asarray(path)
                        checked += 1
                        if not is_quasigeodesic(amb.pairwise(arr, arr), lams[li]):
                            continue
                        P[r:] = np.maximum(P[r:], v)
                        if v > worst[kk][0]:
                            worst[kk] = (v, path)
    values, profiles, bounded, witness = {}, {}, {}, None
    for kk in keys:
        profiles[kk] = prof[kk].tolist()
        values[kk] = profiles[kk][-1]
        bounded[kk] = _verdict(profiles[kk])
        if not bounded[kk] and witness is None:
            v, path = worst[kk]
            witness = {"lambda": kk, "distance": v,
                       "path": [_plain(amb.label(int(x))) for x in path]}
    return GaugeTable("Q", values, profiles, radii, bounded, witness, {"paths_checked": checked})


# ----------------------------------------------------------------- combination theorems

def combined_amalgam_convexity(d, A: SubsetSpec, B: SubsetSpec, AB: SubsetSpec,
                               R_values=(0, 1)) -> dict:
    """Measure both combination theorems' hypotheses and conclusions on one window.

    Hypothesis failures are reported, never raised.  The conclusions are
    checked as implications: when every hypothesis holds the orbit ball of
    the amalgam has to pass; when no-drift fails the report says whether
    the realisation failure shows up too.
    """
    from .amalgam import check_hypotheses

    hyp = check_hypotheses(d)
    fill = fill_all_squares(A, B)
    drift = no_drift_check(d, A, B)
    kA, kB, kAB = (hqc_check(x, R_values) for x in (A, B, AB))
    dA, dB, dAB = (orth_dichotomy(x) for x in (A, B, AB))
    hqc_hyp = {"amalgam_hypotheses": hyp.ok, "A_hqc": kA.passed, "B_hqc": kB.passed,
               "fill_all_squares": fill["bounded"], "no_drift": drift["bounded"]}
    strong_hyp = {"amalgam_hypotheses": hyp.ok, "A_hqc": kA.passed, "B_hqc": kB.passed,
                  "A_dichotomy": dA.passed, "B_dichotomy": dB.passed}
    hqc_applies = all(hqc_hyp.values())
    strong_applies = all(strong_hyp.values())
    return {
        "window_radius": window_radius(A.model),
        "hypotheses": hyp.to_dict(),
        "fill_all_squares": fill,
        "no_drift": drift,
        "hqc": {"A": kA.to_dict(), "B": kB.to_dict(), "AB": kAB.to_dict()},
        "dichotomy": {"A": dA.to_dict(), "B": dB.to_dict(), "AB": dAB.to_dict()},
        "hqc_theorem": {"hypotheses": hqc_hyp, "applies": hqc_applies,
                        "conclusion_holds": kAB.passed,
                        "consistent": (not hqc_applies) or kAB.passed},
        "strong_theorem": {"hypotheses": strong_hyp, "applies": strong_applies,
                           "conclusion_holds": kAB.passed and dAB.passed,
                           "consistent": (not strong_applies) or (kAB.passed and dAB.passed)},
        "drift_counterexample": {"no_drift_fails": not drift["bounded"],
                                 "AB_realisation_fails": not kAB.passed,
                                 "witness": kAB.witness},
    }
