"""Group actions on tabulated hierarchical models.

An ``Automorphism`` is stored as index maps: one per ambient factor, one
on domains, and one vertex map per domain into the coordinate space of
its image.  ``-1`` marks a point whose image leaves the window; checks
skip those and report how much was covered.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .model import HierarchicalModel, ModelError
from .words import parse_word


@dataclass
class Automorphism:
    x_maps: list[np.ndarray]
    domain_map: np.ndarray
    coord_isos: list[np.ndarray]
    label: str = ""

    def compose(self, other: "Automorphism") -> "Automorphism":
        """self after other."""
        def chain(a, b):
            out = np.full(len(b), -1, dtype=np.int64)
            ok = b >= 0
            out[ok] = a[b[ok]]
            return out

        xs = [chain(a, b) for a, b in zip(self.x_maps, other.x_maps)]
        dm = chain(self.domain_map, other.domain_map)
        isos = []
        for u, iso in enumerate(other.coord_isos):
            w = other.domain_map[u]
            isos.append(chain(self.coord_isos[w], iso) if w >= 0 else np.full(len(iso), -1, dtype=np.int64))
        return Automorphism(xs, dm, isos, f"{self.label}*{other.label}")

    def equivalent(self, other: "Automorphism") -> bool:
        """Same domain map and coordinate isometries wherever both are defined."""
        both = (self.domain_map >= 0) & (other.domain_map >= 0)
        if (self.domain_map[both] != other.domain_map[both]).any():
            return False
        for u in np.flatnonzero(both):
            a, b = self.coord_isos[u], other.coord_isos[u]
            ok = (a >= 0) & (b >= 0)
            if (a[ok] != b[ok]).any():
                return False
        return True


@dataclass
class ActionCheck:
    ok: bool
    checked: dict = field(default_factory=dict)
    skipped: dict = field(default_factory=dict)
    failure: dict | None = None

    @property
    def complete(self) -> bool:
        return not any(self.skipped.values())


def _mapped_sets(c_src, c_dst, iso) -> np.ndarray:
    """Target set id of iso(sets[k]) per source set; -1 partial, -2 not a target set."""
    out = np.empty(len(c_src.sets), dtype=np.int64)
    for k, s in enumerate(c_src.sets):
        img = iso[list(s)]
        if (img < 0).any():
            out[k] = -1
        else:
            out[k] = c_dst.lookup.get(tuple(sorted(int(v) for v in img)), -2)
    return out


def verify_automorphism(m: HierarchicalModel, g: Automorphism) -> ActionCheck:
    """Check that g respects relations, coordinates, projections and rho data."""
    chk = ActionCheck(True)
    ds = m.domains
    dm = g.domain_map
    n = len(ds)
    defined = dm >= 0

    def tally(key, done, skip):
        chk.checked[key] = chk.checked.get(key, 0) + int(done)
        chk.skipped[key] = chk.skipped.get(key, 0) + int(skip)

    def fail(**kw):
        chk.ok = False
        chk.failure = kw
        return chk

    # relations
    idx = np.flatnonzero(defined)
    sub = ds.rel[np.ix_(idx, idx)]
    img = ds.rel[np.ix_(dm[idx], dm[idx])]
    tally("relations", len(idx) ** 2, n * n - len(idx) ** 2)
    if (sub != img).any():
        a, b = np.argwhere(sub != img)[0]
        return fail(check="relations", U=m.name_of(int(idx[a])), V=m.name_of(int(idx[b])))

    # isometries
    iso_cache: dict = {}
    for u in idx:
        cu, cw = m.coords[u], m.coords[dm[u]]
        iso = g.coord_isos[u]
        if len(iso) != len(cu.graph):
            raise ModelError(f"coordinate map of {m.name_of(int(u))} has wrong length")
        key = (id(cu.graph), id(cw.graph), iso.tobytes())
        if key not in iso_cache:
            ok_v = np.flatnonzero(iso >= 0)
            d1 = cu.graph.dist[np.ix_(ok_v, ok_v)]
            d2 = cw.graph.dist[np.ix_(iso[ok_v], iso[ok_v])]
            iso_cache[key] = (bool((d1 == d2).all()), len(ok_v), len(iso) - len(ok_v))
        good, done, skip = iso_cache[key]
        tally("isometries", done, skip)
        if not good:
            return fail(check="isometry", U=m.name_of(int(u)))
    tally("isometries", 0, n - len(idx))

    mapped = {}
    for u in idx:
        mapped[int(u)] = _mapped_sets(m.coords[u], m.coords[dm[u]], g.coord_isos[u])

    # projections commute with the action
    for u in idx:
        u = int(u)
        cu, cw = m.coords[u], m.coords[dm[u]]
        if cu.factor != cw.factor:
            raise ModelError("automorphisms must preserve the factor of each domain")
        if cu.factor is None:
            xs = np.zeros(1, dtype=np.int64)
            gx = xs
        else:
            xs = np.arange(len(cu.pi))
            gx = g.x_maps[cu.factor]
        ok = gx >= 0
        got = mapped[u][cu.pi[xs[ok]]]
        want = cw.pi[gx[ok]]
        part = got == -1
        tally("projections", int((~part).sum()), int((~ok).sum() + part.sum()))
        bad = (~part) & (got != want)
        if bad.any():
            x = int(xs[ok][np.argmax(bad)])
            return fail(check="projection", U=m.name_of(u), x=x)

    # rho points
    for u in idx:
        u = int(u)
        row = m.rho_pt[u]
        vs = np.flatnonzero((row >= 0) & defined)
        got = mapped[u][row[vs]]
        want = m.rho_pt[dm[u]][dm[vs]]
        part = got == -1
        tally("rho", int((~part).sum()), int(part.sum()))
        bad = (~part) & (got != want)
        if bad.any():
            v = int(vs[np.argmax(bad)])
            return fail(check="rho", U=m.name_of(u), V=m.name_of(v))

    # rho maps on nested pairs
    for (u, v), arr in m.rho_map.items():
        if dm[u] < 0 or dm[v] < 0:
            tally("rho_maps", 0, len(arr))
            continue
        iso = g.coord_isos[u]
        ps = np.arange(len(arr))
        ok = iso[ps] >= 0
        got = mapped[v][arr[ps[ok]]]
        want = m.rho_map[(int(dm[u]), int(dm[v]))][iso[ps[ok]]]
        part = got == -1
        tally("rho_maps", int((~part).sum()), int((~ok).sum() + part.sum()))
        bad = (~part) & (got != want)
        if bad.any():
            return fail(check="rho_map", U=m.name_of(u), V=m.name_of(v))
    return chk


@dataclass
class GroupSpec:
    """A group given by generators, multiplication and an action on a model."""

    name: str
    generators: dict[str, Any]
    mul: Callable[[Any, Any], Any]
    inv: Callable[[Any], Any]
    identity: Any
    to_automorphism: Callable[[Any], Automorphism] | None = None
    fmt: Callable[[Any], str] = str

    def evaluate(self, word: str, extra: dict | None = None):
        table = dict(self.generators)
        if extra:
            table.update(extra)
        g = self.identity
        for sym, k in parse_word(word):
            if sym not in table:
                raise ValueError(f"unknown generator {sym!r} in group {self.name}")
            h = table[sym] if k > 0 else self.inv(table[sym])
            for _ in range(abs(k)):
                g = self.mul(g, h)
        return g


def evaluate_word(spec: GroupSpec, word: str, extra: dict | None = None):
    return spec.evaluate(word, extra)


def orbit_ball(spec: GroupSpec, radius: int, gens: list[str] | None = None) -> list:
    """Distinct elements of word length <= radius, in BFS order."""
    names = sorted(spec.generators) if gens is None else gens
    steps = [spec.generators[s] for s in names] + [spec.inv(spec.generators[s]) for s in names]
    seen = {spec.identity}
    out = [spec.identity]
    q = deque([(spec.identity, 0)])
    while q:
        g, r = q.popleft()
        if r == radius:
            continue
        for s in steps:
            h = spec.mul(g, s)
            if h not in seen:
                seen.add(h)
                out.append(h)
                q.append((h, r + 1))
    return out
