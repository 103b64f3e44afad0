"""More vortices than inclusions: how are they shared out?

The leading cost of putting d_i vortices into inclusion i is
pi d_i^2 |ln delta| + pi b^2 d_i |ln xi|; the quadratic term spreads them as
evenly as possible.  Ties between equivalent splits are broken by the
renormalized energy W_g of the host points.
"""
import numpy as np

from pinned_gl.core import BoundaryData, DomainSpec, Grid, InclusionShape, PinningConfig, energy_F
from pinned_gl.renorm import discrete_optimizer, select_inclusions
from pinned_gl.testfn import build_caseII, log_remainder
from pinned_gl.special import solve_U

delta, xi, b = 0.2, 0.1, 0.5
print(" M  d  optimal degree vectors")
for M in (2, 3):
    for d in range(1, 7):
        opt = discrete_optimizer(M, d, np.log(delta), np.log(xi), b)
        print(f"{M:2d} {d:2d}  {[c.degrees for c in opt]}")

# ---------- which inclusion gets the extra vortex? ----------
centers = [(-0.4, 0.0), (0.4, 0.0)]
dom = DomainSpec("disc", (1.0,), 256)
sel = select_inclusions(centers, 3, BoundaryData(3), dom)
for vec, w in sel.options:
    print(f"degrees {vec}: W_g = {w:.4f}")
print("tied:", sel.tied)  # mirror symmetry: both splits are equally good

# cos(n theta) phases keep the mirror symmetry x -> -x; a sin(theta) phase breaks it
g = BoundaryData(3, (), (0.8,))
sel = select_inclusions(centers, 3, g, dom)
print("with phase 0.8 sin(theta):", [(v, round(w, 4)) for v, w in sel.options], "->", sel.best)

# ---------- an explicit competitor with that split ----------
eps = 0.02
cfg = PinningConfig(centers, InclusionShape("disc", 0.5), b, delta, eps)
grid = Grid.from_domain(dom)
U = solve_U(cfg, grid).U
v = build_caseII(cfg, g, eps, list(sel.best[0]), grid)
F = energy_F(v, U, eps).total
print(f"test function energy {F:.3f}, minus predicted logs {log_remainder(F, eps, delta, b, sel.best[0]):.3f}")
