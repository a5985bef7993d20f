"""
Axes and parallel lines in the square grid
==========================================

The two axes of Z^2 are each convex, yet their union is not: a point on
the diagonal projects into both axis lines, so the coordinates say it is
close to the union when it is far.  Two parallel lines behave well.  The
gauges below tell the two situations apart on a window of radius 10.
"""
from hhscert import convexity as CV
from hhscert import zoo

n = 10
g = zoo.build("grid", n)
axes = g.subset("axes")

# %%
# kappa(0) for the union of the axes grows one for one with the radius.
# The worst point is a corner of the window, on the diagonal.
k = CV.hqc_check(axes)
print("axes kappa(0) profile", k.profiles[0])
print("worst point", k.witness["point"], "coordinate defect", k.witness["coordinate_defect"])

# %%
# Filling all squares fails for the same reason, with a constant that
# also grows with the radius.
fill = CV.fill_all_squares(g.subset("x_axis"), g.subset("y_axis"))
print("axes fill T profile", fill["T_profile"], "bounded:", fill["bounded"])

# %%
# The lines y = 0 and y = 1 sit at Hausdorff distance one.  The raw
# constant T is 0 on this window, and the diameter version is 1.
p = zoo.build("parallel_lines", n)
pf = CV.fill_all_squares(p.subset("A"), p.subset("B"))
print("parallel lines T =", pf["T"], " T_diameter =", pf["T_diameter"], " bounded:", pf["bounded"])

# %%
# A single axis is hierarchically quasiconvex but not strongly
# quasiconvex: a detour through the y direction with multiplicative
# constant 2 can wander linearly far from it.  The orthogonality
# dichotomy records the same fact, since the axis has unbounded diameter
# in Lx while its projection to Ly is a single point.
x = g.subset("x_axis")
print(f"{'gauge':28s} {'profile':40s} bounded")
kx = CV.hqc_check(x)
rows = [("hqc kappa(0)", kx.profiles[0], kx.passed)]
d = CV.orth_dichotomy(x)
rows.append(("orthogonality dichotomy", d.profile, d.passed))
sweep = CV.strong_qc_sweep(x, lambda_values=(1, 2))
for lam, prof in sweep.profiles.items():
    rows.append((f"strong qc, lambda={lam}", prof, sweep.bounded[lam]))
for name, prof, ok in rows:
    print(f"{name:28s} {str(list(prof)):40s} {ok}")
