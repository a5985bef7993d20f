"""
When is <A, B> the amalgam A * B?
=================================

A = <a^N x1 x2> and B = <b^N y1 y2> inside F(a,b) x D x D.  The
certificate needs every nontrivial element of A and B to move the
basepoint far in some line, which here means N at least 100E.  Below the
threshold the certifier refuses; at it, every short reduced word gets a
chain of lines whose projections pin the word away from the identity.
"""
from fractions import Fraction

from hhscert import amalgam as AM
from hhscert import zoo
from hhscert.words import reduced_words

# %%
# Sweep N and watch hypothesis II, the translation length on the witness line.
for N in (1, 50, 199, 200, 400):
    rep = AM.check_hypotheses(zoo.product_amalgam(N))
    print(f"N={N:4d}  failing={rep.failing() or '-'}  largest valid M={rep.max_valid_M}")

# %%
# At N = 200 the hypotheses hold with M = 200 = 100E.
d = zoo.product_amalgam(200)
res = AM.certify_nontrivial(d, "s t^2 s^-1 t")
cert = res.certificate
print(res.status, "final bound", cert.final_bound, ">= 9M/10 - 5E =", 9 * d.M // 10 - 5 * d.E)
# Lower bounds report their smallest value, upper bounds their largest.
worst = {}
for c in cert.claim_values:
    if not isinstance(c.value, (int, Fraction)):
        continue
    key = -c.value if c.op == "<=" else c.value
    if c.claim not in worst or key < worst[c.claim][0]:
        worst[c.claim] = (key, c)
for name, (_, c) in worst.items():
    print(f"  {name:19s} worst {c.value!s:>5} {c.op:2s} {c.bound!s:<6} ok={c.ok}")

# %%
# The same word is refused by an undersized amalgam, naming the hypothesis.
small = AM.certify_nontrivial(zoo.product_amalgam(4), "s t^2 s^-1 t")
print(small.status, small.hypotheses.failing())

# %%
# Every reduced word with up to four syllables and exponents up to 2.
words = reduced_words(d.cyclic(), 4, 2)[1:]
hyp = AM.check_hypotheses(d)  # checked once, shared by every word
statuses = [AM.certify_nontrivial(d, w, hyp).status for w in words]
print({s: statuses.count(s) for s in sorted(set(statuses))})
