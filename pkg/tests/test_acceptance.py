"""Acceptance criteria, one test each.

Every test prints a single ``ACCEPTANCE k: PASS|FAIL`` line (repeated in
the summary at the end of the run) and then asserts.  Quantities are
recomputed by independent oracles wherever one is cheap enough: networkx
for geodesics, free-group word arithmetic for closest points between
lines, and subprocesses with different hash seeds for determinism.
"""
import itertools
import json
import os
import random
import subprocess
import sys
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from hhscert import amalgam as AM
from hhscert import audit as AU
from hhscert import convexity as CV
from hhscert import words as Wd
from hhscert import zoo
from hhscert.graphs import FiniteGraph
from hhscert.model import TRANS


# ----------------------------------------------------------------- 1. axiom audit

def test_1_axiom_audit(verdict):
    rows = []
    for fam, n, N in [("f2xdxd", 6, 4), ("grid", 10, 1)]:
        m = zoo.build(fam, n, N=N).model
        rep = AU.audit(m)
        rows.append((fam, rep.passed, rep.exact, AU.audited_E(rep)))
    ok = all(p and e for _, p, e, _ in rows)
    verdict(1, ok, "; ".join(f"{f}: passed={p} exact={e} E={E}" for f, p, e, E in rows))
    assert ok


# ----------------------------------------------------------------- 2. certificate suite

def free_part(d, syl):
    """Free-group image of a syllable word, built letter by letter."""
    N = len(d.factors[0].gen.f)
    w = ""
    for i, k in syl:
        w += ("ab"[i] if k > 0 else "AB"[i]) * (N * abs(k))
    return Wd.reduce(w)


def test_2_certificate_suite(verdict):
    d = zoo.product_amalgam(200)
    M, E = d.M, d.E
    hyp = AM.check_hypotheses(d)
    words = Wd.reduced_words(d.cyclic(), 4, 2)[1:]
    bad = []
    for syl in words:
        cert = AM.verify_chain(d, AM.build_chain(d, syl))
        mid = [c.value for c in cert.claim_values if c.claim == "middle-separation"]
        ok = (cert.status == AM.CERTIFIED and all(c.ok for c in cert.claim_values)
              and cert.final_bound >= Fraction(9 * M, 10) - 5 * E
              and all(v >= Fraction(4 * M, 5) - 4 * E for v in mid)
              and d.evaluate(syl) != d.geometry.identity and free_part(d, syl) != "")
        if not ok:
            bad.append(d.fmt(syl))
    inj = AM.verify_injectivity(d, 4, 2)
    ok = hyp.ok and M == 100 * E and not bad and inj.status == "PASS"
    verdict(2, ok, f"N=200 M={M} E={E}: {len(words) - len(bad)}/{len(words)} words certified, "
                   f"normal form vs evaluation {inj.status} on {inj.words_checked} words")
    assert ok, bad[:5]


# ----------------------------------------------------------------- 3. transverse rows

def dist_to_line(p, rep, c):
    """Tree distance from the vertex p to the line rep<c>: strip the leading c-run."""
    w = Wd.reduce(Wd.inverse(rep) + p)
    run = len(w) - len(w.lstrip(c + c.upper()))
    return len(w) - run


def closest_on_line(line, other):
    """Exponent k of the point s d^k of ``line`` nearest to ``other`` (unique in a tree)."""
    (d, s), (c, r) = line, other
    K = len(Wd.reduce(Wd.inverse(s) + r)) + 2
    vals = {k: dist_to_line(Wd.reduce(s + (d if k > 0 else d.upper()) * abs(k)), r, c) for k in range(-K, K + 1)}
    best = min(vals.values())
    ks = [k for k, v in vals.items() if v == best]
    assert len(ks) == 1 and abs(ks[0]) < K
    return ks[0]


def same_line(u, v):
    (c1, r1), (c2, r2) = u, v
    return c1 == c2 and set(Wd.reduce(Wd.inverse(r1) + r2)) <= {c1, c1.upper()}


def random_chain(rng):
    rep = ""
    for _ in range(rng.randrange(4)):
        rep = Wd.reduce(rep + rng.choice("aAbB"))
    lines = [(rng.choice("ab"), rep)]
    for _ in range(rng.randrange(2, 5)):
        e = rng.choice([-1, 1]) * rng.randrange(1, 17)
        step = rng.choice("ab")
        rep = Wd.reduce(rep + (step if e > 0 else step.upper()) * abs(e))
        lines.append((rng.choice("ab"), rep))
    return lines


def test_3_transverse_rows(verdict):
    geo = zoo.product_amalgam(200).geometry
    E = geo.E
    rng = random.Random(2024)
    admissible, disagreements, violations, tried = 0, 0, 0, 0
    while admissible < 1000:
        tried += 1
        lines = random_chain(rng)
        k = len(lines)
        proj = {}

        def rho(i, j):
            if (i, j) not in proj:
                proj[i, j] = closest_on_line(lines[j], lines[i])
            return proj[i, j]

        adm = all(not same_line(lines[i], lines[i + 1]) for i in range(k - 1))
        adm = adm and all(abs(rho(j - 1, j) - rho(j + 1, j)) > 6 * E for j in range(1, k - 1))
        names = [f"L_{c}@{r or '1'}" for c, r in lines]
        out = AM.verify_transverse_row(geo, names, E)
        disagreements += out["invoked"] != adm
        if not adm:
            continue
        admissible += 1
        for i, j in itertools.combinations(range(k), 2):
            violations += same_line(lines[i], lines[j]) or geo.relation(names[i], names[j]) != TRANS
        for i, j, r in itertools.combinations(range(k), 3):
            sep = abs(rho(i, j) - rho(r, j))
            violations += sep <= 2 * E or out["separations"].get((i + 1, j + 1, r + 1)) != sep
        violations += out["holds"] is not True
    ok = violations == 0 and disagreements == 0
    verdict(3, ok, f"{admissible} admissible chains of {tried} drawn; {violations} violations, "
                   f"{disagreements} admissibility disagreements")
    assert ok


# ----------------------------------------------------------------- 4. fill-all-squares, both directions

def test_4_grid_axes_and_parallel_lines(verdict):
    n = 10
    g = zoo.build("grid", n)
    amb = g.model.ambient
    axes = g.subset("axes")
    kap = CV.hqc_check(axes)
    fill = CV.fill_all_squares(g.subset("x_axis"), g.subset("y_axis"))
    defect = CV.coordinate_defect(axes)
    dist = axes.dist()
    diag_ok = True
    for r in range(n + 1):
        x = amb.point((r, r))
        parts = amb.split(x)
        dfc = max(int(p[i]) for p, i in zip(defect, parts))
        diag_ok &= dfc == 0 and int(dist[x]) == r == min(abs(r), abs(r)) and kap.profiles[0][r] == r
    grid_fails = (not kap.passed) and (not fill["bounded"]) and diag_ok
    p = zoo.build("parallel_lines", n)
    A, B = p.subset("A"), p.subset("B")
    pf = CV.fill_all_squares(A, B)
    par_ok = pf["bounded"] and pf["T_diameter"] == 1 and CV.hqc_check(A).passed and CV.hqc_check(B).passed
    ok = grid_fails and par_ok
    verdict(4, ok, f"axes: kappa(0) profile {kap.profiles[0]}, fill T profile {fill['T_profile']}; "
                   f"parallel lines: T_diameter={pf['T_diameter']} T={pf['T']}")
    assert ok


# ----------------------------------------------------------------- 5. the counterexample

def test_5_amalgam_counterexample(verdict):
    n = 6
    b = zoo.build("f2xdxd", n)
    A, B, AB = b.subset("A"), b.subset("B"), b.subset("AB")
    kA, kB, kAB = CV.hqc_check(A), CV.hqc_check(B), CV.hqc_check(AB)
    fill = CV.fill_all_squares(A, B)
    drift = CV.no_drift_check(b.amalgam, A, B)
    w = kAB.witness or {}
    prof = kAB.profiles[0]
    slope = Fraction(prof[n] - prof[4], n - 4)
    diagonal = bool(w) and w["point"][0] == "" and w["point"][1] == -w["point"][2] and abs(w["point"][1]) == n
    ok = (kA.passed and kB.passed and fill["bounded"] and not drift["bounded"]
          and (drift["witness"] or {}).get("U") == "W1" and not kAB.passed and diagonal
          and w["coordinate_defect"] == 0 and slope >= Fraction(1, 2))
    verdict(5, ok, f"A,B hqc {kA.passed},{kB.passed}; fill T={fill['T']}; no-drift witness "
                   f"{(drift['witness'] or {}).get('U')}; A*B kappa(0) {prof}, witness {w.get('point')}, slope {slope}")
    assert ok


# ----------------------------------------------------------------- 6. unions in hyperbolic graphs

def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(len(g)))
    h.add_edges_from(g.edges())
    return h


def qc_oracle(h, d, mem):
    mem = sorted(mem)
    to = d[:, mem].min(axis=1)
    best = 0
    for u, v in itertools.combinations(mem, 2):
        for p in nx.all_shortest_paths(h, u, v):
            best = max(best, int(to[p].max()))
    return best


def slim_oracle(h, d):
    geo = {(u, v): list(nx.all_shortest_paths(h, u, v)) for u in h for v in h}
    worst = 0
    for x, y, z in itertools.product(h, repeat=3):
        for p in geo[x, y]:
            for q in geo[y, z]:
                for r in geo[x, z]:
                    far = max(min(d[v, q].min(), d[v, r].min()) for v in p)
                    worst = max(worst, int(far))
    return worst


def random_hyperbolic(rng):
    """A tree with a few short chords, or a tree of small cycles."""
    n = rng.randrange(8, 13)
    edges = {(i, rng.randrange(i)) for i in range(1, n)}
    for _ in range(rng.randrange(1, 4)):
        u = rng.randrange(n)
        v = rng.randrange(n)
        if u != v:
            edges.add((max(u, v), min(u, v)))
    return FiniteGraph(range(n), edges)


def random_qc_set(rng, g, h):
    if rng.random() < 0.5:
        return nx.shortest_path(h, *rng.sample(range(len(g)), 2))
    c = rng.randrange(len(g))
    return [int(v) for v in np.flatnonzero(g.dist[c] <= rng.randrange(2))]


def test_6_union_constant(verdict):
    rng = random.Random(6)
    violations, rows = 0, 0
    for i in range(50):
        if i % 2:
            n = 30
            g = FiniteGraph(range(n), [(v, rng.randrange(v)) for v in range(1, n)])
        else:
            g = random_hyperbolic(rng)
        h, d = to_nx(g), g.dist
        Y, Y2 = random_qc_set(rng, g, h), random_qc_set(rng, g, h)
        out = CV.union_qc_hyperbolic(g, Y, Y2)
        R = max(qc_oracle(h, d, Y), qc_oracle(h, d, Y2))
        delta = 0 if i % 2 else slim_oracle(h, d)
        dist = int(d[np.ix_(Y, Y2)].min())
        measured = qc_oracle(h, d, set(Y) | set(Y2))
        bound = R + 2 * delta + dist + 1
        violations += measured > bound or (out["measured"], out["bound"]) != (measured, bound)
        rows += 1
    ok = violations == 0
    verdict(6, ok, f"{rows} pairs (25 random trees, 25 graphs with short cycles), {violations} violations")
    assert ok


# ----------------------------------------------------------------- 7. strong quasiconvexity

def test_7_strong_iff_hqc_and_dichotomy(verdict):
    rows, disagree = 0, []
    for fam in zoo.FAMILIES:
        b = zoo.build(fam, 6)
        for name, s in b.subsets.items():
            q = CV.strong_qc_sweep(s, (1, 2, 3)).passed
            k = CV.hqc_check(s).passed
            d = CV.orth_dichotomy(s).passed
            rows += 1
            if q != (k and d):
                disagree.append(f"{fam}:{name}")
    ok = not disagree
    verdict(7, ok, f"{rows} subsets at n=6, {len(disagree)} disagreements {disagree}")
    assert ok


# ----------------------------------------------------------------- 8. determinism

COMMANDS = [
    ["zoo", "build", "grid", "--n", "3"],
    ["audit", "{grid}"],
    ["certify", "--model", "{geo}", "--word", "s t^2 s^-1 t"],
    ["inject-verify", "{geo}", "--syllables", "3", "--exp", "2"],
    ["hqc", "{grid}", "--subset", "axes", "--paths"],
    ["fill-squares", "{prod}"],
    ["no-drift", "{prod}"],
    ["dichotomy", "{prod}", "--subset", "AB"],
    ["hull", "{grid}", "--vertices", "[[-2, -2], [2, 2]]"],
    ["combined", "{prod}"],
]


def test_8_determinism(verdict, tmp_path):
    files = {"grid": tmp_path / "grid.json", "prod": tmp_path / "prod.json", "geo": tmp_path / "geo.json"}

    def call(args, seed):
        env = dict(os.environ, PYTHONHASHSEED=str(seed))
        return subprocess.run([sys.executable, "-m", "hhscert.cli"] + args, capture_output=True, env=env)

    call(["zoo", "build", "grid", "--n", "3", "-o", str(files["grid"])], 0)
    call(["zoo", "build", "f2xdxd", "--n", "3", "-o", str(files["prod"])], 0)
    call(["zoo", "build", "f2xdxd", "--N", "200", "--geometry-only", "-o", str(files["geo"])], 0)
    differ = []
    for cmd in COMMANDS:
        args = [a.format(**files) for a in cmd]
        outs = [call(args, seed) for seed in (1, 2, 3)]
        codes = {o.returncode for o in outs}
        if len({o.stdout for o in outs}) != 1 or len(codes) != 1 or codes & {3} or not outs[0].stdout:
            differ.append(cmd[0])
        json.loads(outs[0].stdout)
    ok = not differ
    verdict(8, ok, f"{len(COMMANDS)} commands x 3 runs under different hash seeds; differing: {differ}")
    assert ok
