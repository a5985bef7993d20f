"""Words in the zoo groups.

Free group elements are reduced strings over ``a A b B`` (capital letter
= inverse).  An element of the infinite dihedral group D = <x, y | x^2 =
y^2 = 1> is stored as its position on the Cayley line: the word
``x y x ...`` of length p sits at +p and ``y x y ...`` at -p.  Left
multiplication by the element at position p sends t to t + p (p even)
or to p - t (p odd).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

INV = {"a": "A", "A": "a", "b": "B", "B": "b"}


def reduce(w: str) -> str:
    out: list[str] = []
    for ch in w:
        if out and out[-1] == INV[ch]:
            out.pop()
        else:
            out.append(ch)
    return "".join(out)


def inverse(w: str) -> str:
    return "".join(INV[c] for c in reversed(w))


def mul(u: str, v: str) -> str:
    return reduce(u + v)


def power(letter: str, k: int) -> str:
    return (letter if k >= 0 else INV[letter]) * abs(k)


def prefix_exponent(w: str, letter: str) -> int:
    """Signed exponent of the maximal power of ``letter`` starting ``w``."""
    if not w or w[0] not in (letter, INV[letter]):
        return 0
    c = w[0]
    k = len(w) - len(w.lstrip(c))
    return k if c == letter else -k


def coset_rep(g: str, letter: str) -> str:
    """Shortest element of the coset g<letter>."""
    return g.rstrip(letter + INV[letter])


def free_ball(n: int) -> list[str]:
    """Reduced words of length <= n in BFS order (shortlex on a, A, b, B)."""
    out, layer = [""], [""]
    for _ in range(n):
        nxt = [w + c for w in layer for c in "aAbB" if not w or w[-1] != INV[c]]
        out += nxt
        layer = nxt
    return out


def dmul(p: int, q: int) -> int:
    """Product in D of the elements at positions p and q."""
    return p + q if p % 2 == 0 else p - q


def dinv(p: int) -> int:
    return -p if p % 2 == 0 else p


D_GEN = {"x": 1, "y": -1}


@dataclass(frozen=True)
class GElem:
    """Element of F(a,b) x D x D."""

    f: str = ""
    p1: int = 0
    p2: int = 0

    def __mul__(self, o: "GElem") -> "GElem":
        return GElem(mul(self.f, o.f), dmul(self.p1, o.p1), dmul(self.p2, o.p2))

    def inv(self) -> "GElem":
        return GElem(inverse(self.f), dinv(self.p1), dinv(self.p2))

    def __str__(self):
        return f"({self.f or '1'},{self.p1},{self.p2})"


G_LETTERS = {
    "a": GElem("a"), "A": GElem("A"), "b": GElem("b"), "B": GElem("B"),
    "x1": GElem("", 1, 0), "y1": GElem("", -1, 0), "x2": GElem("", 0, 1), "y2": GElem("", 0, -1),
}

_TOKEN = re.compile(r"([A-Za-z][A-Za-z0-9_]*)(?:\^(-?\d+))?")


def parse_word(text: str) -> list[tuple[str, int]]:
    """``"a^3 x1 x2.b^-2"`` -> [("a", 3), ("x1", 1), ("x2", 1), ("b", -2)].

    Separators are whitespace, ``.`` or ``*``.  Raises ValueError on junk.
    """
    out = []
    for tok in re.split(r"[\s.*]+", text.strip()):
        if not tok:
            continue
        m = _TOKEN.fullmatch(tok)
        if not m:
            raise ValueError(f"bad word token {tok!r}")
        out.append((m.group(1), int(m.group(2) or 1)))
    return out


def format_word(syl: Sequence[tuple[str, int]]) -> str:
    return " ".join(s if k == 1 else f"{s}^{k}" for s, k in syl) or "1"


def eval_g(word: Sequence[tuple[str, int]], extra: dict | None = None) -> GElem:
    """Evaluate a parsed word in F x D x D; ``extra`` adds named elements."""
    table = dict(G_LETTERS)
    if extra:
        table.update(extra)
    g = GElem()
    for sym, k in word:
        if sym not in table:
            raise ValueError(f"unknown symbol {sym!r}")
        h = table[sym]
        step = h if k > 0 else h.inv()
        for _ in range(abs(k)):
            g = g * step
    return g


# ------------------------------------------------------------- amalgam words

@dataclass(frozen=True)
class CyclicFactor:
    """Infinite cyclic factor <gen> of an amalgam, with C-part <gen^c_index>.

    ``c_index = 0`` means C is trivial in this factor.  When C is nontrivial
    it must be central in the amalgam (true for the cyclic amalgams
    Z *_{mZ = kZ} Z this models), so C-parts can be collected at the end.
    ``c_weight`` converts gen^c_index into the common generator of C.
    """

    gen: str
    c_index: int = 0
    c_weight: int = 1

    def split(self, k: int) -> tuple[int, int]:
        """k -> (coset representative exponent, C exponent)."""
        if self.c_index == 0:
            return k, 0
        q, r = divmod(k, self.c_index)
        return r, q * self.c_weight


Syllable = tuple[int, int]  # (factor index, exponent)


def to_syllables(word: Sequence[tuple[str, int]], factors: Sequence[CyclicFactor]) -> list[Syllable]:
    names = {f.gen: i for i, f in enumerate(factors)}
    out = []
    for sym, k in word:
        if sym not in names:
            raise ValueError(f"symbol {sym!r} is not a factor generator")
        out.append((names[sym], k))
    return out


def abstract_normal_form(syl: Sequence[Syllable], factors: Sequence[CyclicFactor]) -> tuple[list[Syllable], int]:
    """Reduced alternating form (rep syllables, C exponent) in the abstract amalgam.

    The element is trivial iff both parts are empty/zero.
    """
    stack: list[list[int]] = []
    c_total = 0
    for fi, k in syl:
        if stack and stack[-1][0] == fi:
            stack[-1][1] += k
        else:
            stack.append([fi, k])
        # normalise the top; a syllable that falls into C disappears and
        # its neighbours may merge
        while stack:
            f, e = stack[-1]
            r, c = factors[f].split(e)
            if c:
                c_total += c
                stack[-1][1] = r
            if stack[-1][1] == 0:
                stack.pop()
                if len(stack) >= 2 and stack[-1][0] == stack[-2][0]:
                    top = stack.pop()
                    stack[-1][1] += top[1]
                    continue
            break
    return [(f, e) for f, e in stack], c_total


def is_reduced(syl: Sequence[Syllable], factors: Sequence[CyclicFactor]) -> bool:
    """Alternating, and no syllable lies in C."""
    for i, (f, e) in enumerate(syl):
        if factors[f].split(e)[0] == 0:
            return False
        if i and syl[i - 1][0] == f:
            return False
    return True


def reduced_words(factors: Sequence[CyclicFactor], max_syllables: int, max_exp: int) -> list[list[Syllable]]:
    """All reduced alternating syllable words, shortest first."""
    exps = [e for e in range(-max_exp, max_exp + 1) if e]
    out: list[list[Syllable]] = [[]]
    layer: list[list[Syllable]] = [[]]
    for _ in range(max_syllables):
        nxt = []
        for w in layer:
            for f in range(len(factors)):
                if w and w[-1][0] == f:
                    continue
                for e in exps:
                    if factors[f].split(e)[0] != 0:
                        nxt.append(w + [(f, e)])
        out += nxt
        layer = nxt
    return out
