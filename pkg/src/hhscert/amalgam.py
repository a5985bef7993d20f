"""Certificates that words in an amalgam act nontrivially.

Given subgroups A_1..A_n of a group acting on a hierarchical space, a
common subset C, a basepoint x0 and a witness domain Y_a for each
a outside C, a reduced word g_1..g_k c is certified nontrivial by the
chain of cosets C_i = g_1..g_{i-1} C x0 and domains
W_i = g_1..g_{i-1} Y_{g_i}: every inequality of the argument is measured
on the model and compared with its exact bound.

The geometry is any object with ``relation, mul, inv, identity, act,
proj, rho, dist, diam`` (see ``zoo.f2xdxd.F2DDGeometry``).  A geometry
that truncates may raise ``OutsideWindow``; the certificate is then
marked partial.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Any, Callable, Sequence

from .model import TRANS
from .words import CyclicFactor, abstract_normal_form as _anf, is_reduced, parse_word, format_word

CERTIFIED = "CERTIFIED"
FAILED = "FAILED"
PARTIAL = "PARTIAL"
TRIVIAL = "TRIVIAL"
EVALUATED = "EVALUATED"
UNDECIDED = "UNDECIDED"


class AmalgamError(ValueError):
    pass


class OutsideWindow(LookupError):
    """A measurement needs a vertex the geometry does not hold."""


@dataclass(frozen=True)
class FactorSpec:
    """An infinite cyclic factor <gen>; ``witness`` is Y_a for all a outside C."""

    symbol: str
    gen: Any
    witness: str
    c_index: int = 0  # C meets this factor in <gen^c_index>; 0 = trivially


@dataclass(frozen=True)
class AmalgamData:
    geometry: Any
    factors: tuple[FactorSpec, ...]
    C: tuple  # enumerated elements of C
    x0: Any
    M: int
    E: int
    witness_fn: Callable[[int, int], str] | None = None
    sample_radius: int = 2

    def cyclic(self) -> list[CyclicFactor]:
        return [CyclicFactor(f.symbol, f.c_index) for f in self.factors]

    def element(self, i: int, k: int):
        g = self.geometry
        base = self.factors[i].gen if k >= 0 else g.inv(self.factors[i].gen)
        out = g.identity
        for _ in range(abs(k)):
            out = g.mul(out, base)
        return out

    def witness(self, i: int, k: int) -> str:
        if self.witness_fn is not None:
            y = self.witness_fn(i, k)
            if y is None:
                raise AmalgamError(f"no witness domain for {self.factors[i].symbol}^{k}")
            return y
        return self.factors[i].witness

    def in_C(self, i: int, k: int) -> bool:
        return self.cyclic()[i].split(k)[0] == 0

    def coset(self, g) -> list:
        geo = self.geometry
        return [geo.mul(g, geo.mul(c, self.x0)) for c in self.C]

    def syllables(self, word: str | Sequence) -> list[tuple[int, int]]:
        if isinstance(word, str):
            word = parse_word(word)
        names = {f.symbol: i for i, f in enumerate(self.factors)}
        out = []
        for sym, k in word:
            if isinstance(sym, int):
                out.append((sym, k))
            elif sym in names:
                out.append((names[sym], k))
            else:
                raise AmalgamError(f"{sym!r} is not a factor generator ({', '.join(names)})")
        return out

    def evaluate(self, syl: Sequence[tuple[int, int]]):
        g = self.geometry.identity
        for i, k in syl:
            g = self.geometry.mul(g, self.element(i, k))
        return g

    def fmt(self, syl) -> str:
        return format_word([(self.factors[i].symbol, k) for i, k in syl])


# ---------------------------------------------------------------- measurement

def _proj(geo, U, pts) -> frozenset:
    out: set = set()
    for p in pts:
        out |= geo.proj(U, p)
    return frozenset(out)


@dataclass
class HypothesisReport:
    values: dict = field(default_factory=dict)  # name -> list of (element, value)
    transverse_failures: list = field(default_factory=list)
    lower: int = 0
    upper: int | None = None
    M: int = 0
    E: int = 0
    sample_radius: int = 0

    @property
    def max_valid_M(self) -> int | None:
        if self.upper is None or self.transverse_failures or self.lower > self.upper:
            return None
        return self.upper

    def failing(self) -> list[str]:
        out = []
        if self.M < 100 * self.E:
            out.append("M>=100E")
        for name in ("I", "IV"):
            for _, v in self.values.get(name, []):
                if 10 * v > self.M:
                    out.append(name)
                    break
        if any(v < self.M for _, v in self.values.get("II", [])):
            out.append("II")
        if self.transverse_failures:
            out.append("III")
        return out

    @property
    def ok(self) -> bool:
        return not self.failing()

    def to_dict(self) -> dict:
        return {
            "M": self.M, "E": self.E, "sample_radius": self.sample_radius,
            "valid_M_interval": [self.lower, self.upper],
            "max_valid_M": self.max_valid_M,
            "failing": self.failing(),
            "values": {k: [[e, v] for e, v in vs] for k, vs in sorted(self.values.items())},
            "III_failures": self.transverse_failures,
        }


def _sample(d: AmalgamData, radius: int) -> list[tuple[int, int]]:
    out = []
    for i in range(len(d.factors)):
        for k in range(-radius, radius + 1):
            if k and not d.in_C(i, k):
                out.append((i, k))
    return out


def check_hypotheses(d: AmalgamData, sample_radius: int | None = None) -> HypothesisReport:
    """Measure (I)-(IV) over a_i^k with |k| <= radius, and the valid range of M."""
    r = d.sample_radius if sample_radius is None else sample_radius
    geo = d.geometry
    rep = HypothesisReport(M=d.M, E=d.E, sample_radius=r)
    sample = _sample(d, r)
    cx = d.coset(geo.identity)
    for name in ("I", "II", "IV"):
        rep.values[name] = []
    for i, k in sample:
        Y = d.witness(i, k)
        a = d.element(i, k)
        acx = d.coset(a)
        lab = d.fmt([(i, k)])
        p0, p1 = _proj(geo, Y, cx), _proj(geo, Y, acx)
        rep.values["I"].append((lab, max(geo.diam(Y, p0), geo.diam(Y, p1))))
        rep.values["II"].append((lab, geo.dist(Y, p0, p1)))
    for (i, k), (j, l) in product(sample, sample):
        if i == j:
            continue
        Ya, a = d.witness(i, k), d.element(i, k)
        b = d.element(j, l)
        aYb = geo.act(a, d.witness(j, l))
        pair = f"{d.fmt([(i, k)])},{d.fmt([(j, l)])}"
        if geo.relation(Ya, aYb) != TRANS:
            rep.transverse_failures.append(pair)
        rep.values["IV"].append((pair, geo.dist(Ya, _proj(geo, Ya, cx), _proj(geo, Ya, d.coset(b)))))
    mx = lambda name: max([v for _, v in rep.values[name]], default=0)
    rep.lower = max(100 * d.E, 10 * mx("I"), 10 * mx("IV"))
    rep.upper = min([v for _, v in rep.values["II"]], default=None)
    return rep


# ---------------------------------------------------------------- chains

@dataclass
class ClaimValue:
    claim: str
    where: str
    value: Any
    bound: Any
    op: str  # one of ">=", "<=", ">", "=="

    @property
    def ok(self) -> bool:
        v, b = self.value, self.bound
        return {">=": v >= b, "<=": v <= b, ">": v > b, "==": v == b}[self.op]

    def to_dict(self) -> dict:
        s = lambda x: str(x) if isinstance(x, Fraction) else x
        return {"claim": self.claim, "where": self.where, "value": s(self.value),
                "bound": s(self.bound), "op": self.op, "ok": self.ok}


@dataclass
class ChainCertificate:
    word: list[tuple[int, int]]
    c_exp: int
    prefixes: list
    cosets: list[list]
    chain: list[str]
    claim_values: list[ClaimValue] = field(default_factory=list)
    final_bound: Any = None
    status: str = UNDECIDED
    failure: ClaimValue | None = None
    label: str = ""

    @property
    def k(self) -> int:
        return len(self.word)

    def to_dict(self) -> dict:
        return {
            "word": self.label, "k": self.k, "c_exponent": self.c_exp,
            "chain": list(self.chain),
            "cosets": [[str(p) for p in c] for c in self.cosets],
            "claims": [c.to_dict() for c in self.claim_values],
            "final_bound": self.final_bound if not isinstance(self.final_bound, Fraction) else str(self.final_bound),
            "status": self.status,
            "failure": self.failure.to_dict() if self.failure else None,
        }


def build_chain(d: AmalgamData, word, c_exp: int = 0) -> ChainCertificate:
    syl = d.syllables(word) if not (word and isinstance(word[0], tuple) and isinstance(word[0][0], int)) else list(word)
    if not is_reduced(syl, d.cyclic()):
        raise AmalgamError(f"word {d.fmt(syl)} is not reduced; use abstract_normal_form first")
    geo = d.geometry
    prefixes = [geo.identity]
    for i, k in syl:
        prefixes.append(geo.mul(prefixes[-1], d.element(i, k)))
    cosets = [d.coset(p) for p in prefixes]
    chain = [geo.act(prefixes[j], d.witness(i, k)) for j, (i, k) in enumerate(syl)]
    return ChainCertificate(syl, c_exp, prefixes, cosets, chain, label=d.fmt(syl))


def verify_chain(d: AmalgamData, cert: ChainCertificate) -> ChainCertificate:
    """Measure every inequality of the chain argument; stop at the first failure."""
    geo, M, E = d.geometry, d.M, d.E
    tenth = Fraction(M, 10)
    W, C, k = cert.chain, cert.cosets, cert.k
    cert.claim_values = []
    cert.failure = None

    def rec(*a):
        cv = ClaimValue(*a)
        cert.claim_values.append(cv)
        if not cv.ok and cert.failure is None:
            cert.failure = cv
        return cv

    def pi(i, j):  # pi_{W_i}(C_j), 1-based
        return _proj(geo, W[i - 1], C[j - 1])

    def rho(j, i):  # rho^{W_j}_{W_i}
        return geo.rho(W[j - 1], W[i - 1])

    try:
        for i in range(1, k + 1):
            rec("translation", f"i={i}", geo.dist(W[i - 1], pi(i, i), pi(i, i + 1)), M, ">=")
        for i in range(1, k):
            rec("adjacent-transverse", f"i={i}", int(geo.relation(W[i - 1], W[i]) == TRANS), 1, "==")
        if cert.failure:
            return _close(cert)
        for i in range(2, k + 1):
            rec("entry-near-rho", f"i={i}", geo.dist(W[i - 1], rho(i - 1, i), pi(i, i)), tenth + E, "<=")
        for i in range(1, k):
            rec("exit-near-rho", f"i={i}", geo.dist(W[i - 1], rho(i + 1, i), pi(i, i + 1)), tenth + E, "<=")
        for i in range(2, k):
            rec("middle-separation", f"i={i}", geo.dist(W[i - 1], rho(i - 1, i), rho(i + 1, i)),
                Fraction(4 * M, 5) - 4 * E, ">=")
        ok_row = verify_transverse_row(geo, W, E)
        if ok_row["invoked"]:
            for (i, j), rel in ok_row["relations"].items():
                rec("row-transverse", f"i={i},j={j}", int(rel == TRANS), 1, "==")
            if cert.failure:
                return _close(cert)
            for (i, j, r), v in ok_row["separations"].items():
                rec("row-separation", f"i={i},j={j},r={r}", v, 2 * E, ">")
        for i in range(1, k + 1):
            for j in range(1, k + 1):
                if i == j:
                    continue
                if geo.relation(W[i - 1], W[j - 1]) != TRANS:
                    rec("coset-near-rho", f"i={i},j={j}", "undefined", "transverse", "==")
                    continue
                worst = max(geo.dist(W[i - 1], geo.proj(W[i - 1], x), rho(j, i)) for x in C[j - 1])
                rec("coset-near-rho", f"i={i},j={j}", worst, E, "<=")
        for i in range(1, k + 1):
            for j in range(1, k + 1):
                if j < i:
                    target = pi(i, i)
                elif i + 1 < j:
                    target = pi(i, i + 1)
                else:
                    continue
                worst = max(geo.dist(W[i - 1], geo.proj(W[i - 1], x), target) for x in C[j - 1])
                rec("coset-shadow", f"i={i},j={j}", worst, tenth + 5 * E, "<=")
        final = geo.dist(W[k - 1], pi(k, 1), pi(k, k + 1))
        cert.final_bound = final
        rec("final-separation", f"k={k}", final, Fraction(9 * M, 10) - 5 * E, ">=")
        rec("final-positive", f"k={k}", final, 0, ">")
    except OutsideWindow:
        cert.status = PARTIAL
        return cert
    return _close(cert)


def _close(cert: ChainCertificate) -> ChainCertificate:
    cert.status = FAILED if cert.failure else CERTIFIED
    return cert


def verify_transverse_row(geo, chain: Sequence[str], E: int) -> dict:
    """Measure the conclusion of the transverse-row lemma on a chain of domains.

    The lemma applies when adjacent domains are transverse and each middle
    separation d_{W_j}(W_{j-1}, W_{j+1}) exceeds 6E.  Then all pairs should
    be transverse and every d_{W_j}(W_i, W_r), i < j < r, should exceed 2E.
    """
    k = len(chain)
    out = {"invoked": False, "holds": None, "relations": {}, "separations": {}, "reason": ""}
    for i in range(k - 1):
        if geo.relation(chain[i], chain[i + 1]) != TRANS:
            out["reason"] = f"W{i + 1} and W{i + 2} are not transverse"
            return out
    for j in range(1, k - 1):
        sep = geo.dist(chain[j], geo.rho(chain[j - 1], chain[j]), geo.rho(chain[j + 1], chain[j]))
        if sep <= 6 * E:
            out["reason"] = f"middle separation at W{j + 1} is {sep} <= 6E"
            return out
    out["invoked"] = True
    holds = True
    for i in range(k):
        for j in range(i + 1, k):
            rel = geo.relation(chain[i], chain[j])
            out["relations"][(i + 1, j + 1)] = rel
            holds &= rel == TRANS
    if holds:
        for i in range(k):
            for j in range(i + 1, k):
                for r in range(j + 1, k):
                    v = geo.dist(chain[j], geo.rho(chain[i], chain[j]), geo.rho(chain[r], chain[j]))
                    out["separations"][(i + 1, j + 1, r + 1)] = v
                    holds &= v > 2 * E
    out["holds"] = bool(holds)
    return out


# ---------------------------------------------------------------- words

def abstract_normal_form(d: AmalgamData, word) -> tuple[list[tuple[int, int]], int]:
    syl = d.syllables(word) if isinstance(word, str) else list(word)
    return _anf(syl, d.cyclic())


@dataclass
class NontrivialityResult:
    status: str
    word: str
    normal_form: str
    nontrivial: bool | None
    certificate: ChainCertificate | None = None
    hypotheses: HypothesisReport | None = None

    def to_dict(self) -> dict:
        return {"status": self.status, "word": self.word, "normal_form": self.normal_form,
                "nontrivial": self.nontrivial,
                "certificate": self.certificate.to_dict() if self.certificate else None,
                "hypotheses": self.hypotheses.to_dict() if self.hypotheses else None}


def certify_nontrivial(d: AmalgamData, word, hypotheses: HypothesisReport | None = None) -> NontrivialityResult:
    """Certify that a word of the abstract amalgam is nontrivial in G.

    Words trivial in the amalgam get TRIVIAL.  Reduced words with at most
    two syllables are decided by evaluating them in G (EVALUATED).  Longer
    words get a verified chain (CERTIFIED), provided the hypotheses hold at M.
    """
    syl = d.syllables(word) if isinstance(word, str) else list(word)
    nf, c = abstract_normal_form(d, syl)
    res = NontrivialityResult(UNDECIDED, d.fmt(syl), d.fmt(nf) + (f" c^{c}" if c else ""), None)
    if not nf and c == 0:
        res.status, res.nontrivial = TRIVIAL, False
        return res
    if len(nf) <= 2:
        res.status = EVALUATED
        res.nontrivial = d.evaluate(syl) != d.geometry.identity
        return res
    hyp = check_hypotheses(d) if hypotheses is None else hypotheses
    res.hypotheses = hyp
    if not hyp.ok:
        res.status = FAILED
        return res
    cert = verify_chain(d, build_chain(d, nf, c))
    res.certificate = cert
    res.status = cert.status
    res.nontrivial = True if cert.status == CERTIFIED else None
    return res


def all_words(n_factors: int, max_syllables: int, max_exp: int) -> list[list[tuple[int, int]]]:
    """Every syllable sequence (reduced or not) within the bounds."""
    sy = [(i, e) for i in range(n_factors) for e in range(-max_exp, max_exp + 1) if e]
    out: list[list[tuple[int, int]]] = [[]]
    layer: list[list[tuple[int, int]]] = [[]]
    for _ in range(max_syllables):
        layer = [w + [s] for w in layer for s in sy]
        out += layer
    return out


@dataclass
class InjectivityReport:
    status: str  # PASS, FAIL or REFUSED
    words_checked: int = 0
    reduced_checked: int = 0
    counterexample: str | None = None
    intersection_ok: bool | None = None
    hypotheses: HypothesisReport | None = None

    def to_dict(self) -> dict:
        return {"status": self.status, "words_checked": self.words_checked,
                "reduced_checked": self.reduced_checked, "counterexample": self.counterexample,
                "intersection_ok": self.intersection_ok,
                "hypotheses": self.hypotheses.to_dict() if self.hypotheses else None}


def verify_injectivity(d: AmalgamData, max_syllables: int, per_factor_radius: int) -> InjectivityReport:
    """Check normal form triviality against evaluation in G for every word in bounds."""
    hyp = check_hypotheses(d)
    rep = InjectivityReport("PASS", hypotheses=hyp)
    if not hyp.ok:
        rep.status = "REFUSED"
        return rep
    ident = d.geometry.identity
    for syl in all_words(len(d.factors), max_syllables, per_factor_radius):
        nf, c = abstract_normal_form(d, syl)
        trivial_abstract = not nf and c == 0
        trivial_g = d.evaluate(syl) == ident
        rep.words_checked += 1
        if is_reduced(syl, d.cyclic()) and syl:
            rep.reduced_checked += 1
        if trivial_abstract != trivial_g:
            rep.status = "FAIL"
            rep.counterexample = d.fmt(syl)
            break
    # C = A_i n A_j on the enumerated balls
    R = max_syllables * per_factor_radius
    balls = [{d.element(i, k) for k in range(-R, R + 1)} for i in range(len(d.factors))]
    Cset = set(d.C)
    rep.intersection_ok = all(balls[i] & balls[j] <= Cset
                              for i in range(len(balls)) for j in range(i + 1, len(balls)))
    if not rep.intersection_ok and rep.status == "PASS":
        rep.status = "FAIL"
        rep.counterexample = "intersection"
    return rep
