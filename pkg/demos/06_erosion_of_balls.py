"""Finite balls erode, but slower the larger they are.

For each radius the radial mean-field evolution is dominated from below by
the half-space evolution shifted by the curvature bound per step, and the
measured recession of the 1/2-crossing shrinks with the radius -- the
mean-field signature of arrested coarsening on actual graphs, where
sub-constant speeds collapse to zero.
"""

from girglab import theory as th

d, tau, eps = 2, 3.0, 0.5
k = 1.2 * th.k_min(d, tau)
t_max = 10

print(f"k = {k:.2f}, eps = {eps}, {t_max} update steps per radius\n")
rows = []
for r in (50.0, 100.0, 200.0):
    rep = th.check_erosion_domination(r, eps, tau, k, t_max=t_max)
    ep = rep.params
    rows.append((r, rep))
    print(f"r = {r:5.0f}: weight cap w_max = {ep.w_max:.2f}, "
          f"curvature bound Delta = {ep.delta_bound:.3f}")
    xs = [c for c in rep.crossings if c is not None]
    print(f"   crossing radius {xs[0]:.2f} -> {xs[-1]:.2f} "
          f"({rep.recession_per_step:.3f} per step, never re-expands: "
          f"{rep.crossing_non_increasing})")
    print(f"   domination g_t >= f_t(z - t*Delta): {rep.ok} "
          f"(max deficit {rep.max_deficit:.2e})\n")

recs = [rep.recession_per_step for _, rep in rows]
print("erosion slows down with the radius:",
      "OK" if all(b < a for a, b in zip(recs, recs[1:])) else "NOT OBSERVED")
