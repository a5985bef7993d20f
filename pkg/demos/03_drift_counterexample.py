"""
Two convex factors whose amalgam is not convex
==============================================

Inside F(a,b) x D x D take A = <a x1 x2> and B = <b y1 y2>.  Each one is
hierarchically quasiconvex on its own, and the pair fills all squares.
The amalgam still fails, because products of elements of A and B can
cancel in the free factor while their dihedral coordinates walk off in
opposite directions.  This script measures every ingredient on a window
of radius 6.
"""
from fractions import Fraction

from hhscert import convexity as CV
from hhscert import zoo

n = 6
b = zoo.build("f2xdxd", n)
A, B, AB = b.subset("A"), b.subset("B"), b.subset("AB")

# %%
# A gauge is bounded when its profile settles over the last two radii.
# The factors settle at once.
for name, s in (("A", A), ("B", B)):
    k = CV.hqc_check(s)
    print(f"{name}: kappa(0) profile {k.profiles[0]}  passes: {k.passed}")

# %%
# Filling all squares is the other hypothesis on the pair.  Its
# constant is 1 at every radius.
fill = CV.fill_all_squares(A, B)
print("fill-all-squares T profile", fill["T_profile"], "bounded:", fill["bounded"])

# %%
# No drift is where it breaks.  The domain W1 is orthogonal to lines on
# both sides, and neither projection of A nor of B comes close to
# filling it.  The gap grows one step per unit of window radius.
drift = CV.no_drift_check(b.amalgam, A, B)
print("no-drift profile", drift["profile"], "bounded:", drift["bounded"])
print("witness", drift["witness"])

# %%
# The conclusion fails the same way.  kappa(0) for the orbit ball of the
# amalgam grows linearly with the radius, and the worst point is the
# drift word itself: trivial free part, opposite dihedral coordinates.
kAB = CV.hqc_check(AB)
prof = kAB.profiles[0]
print("A*B kappa(0) profile", prof)
print("witness point", kAB.witness["point"], "coordinate defect", kAB.witness["coordinate_defect"])
print("slope over the last two radii", Fraction(prof[n] - prof[n - 2], 2))

# %%
# Put together, the combination theorem's hypotheses are reported one
# by one.  The amalgam hypotheses themselves fail here (N = 1 is far
# below the translation threshold), so the theorem is silent and the
# failure of the conclusion is consistent with it.
out = CV.combined_amalgam_convexity(b.amalgam, A, B, AB)
for key, val in out["hqc_theorem"]["hypotheses"].items():
    print(f"  {key:20s} {val}")
print("conclusion holds:", out["hqc_theorem"]["conclusion_holds"],
      "| consistent:", out["hqc_theorem"]["consistent"])
