"""One vortex, one inclusion: where does it go and what does it cost?

Unit disc, a single inclusion of contrast b = 0.5 and size delta = 0.2 at the
origin, boundary data e^{i theta}.  We compute the special solution U, minimize
the weighted functional F, locate the zero, and compare the energy with the
logarithmic part of the predicted expansion.
"""
import numpy as np

from pinned_gl.core import BoundaryData, DomainSpec, Grid, InclusionShape, PinningConfig, build_pinning_field
from pinned_gl.special import solve_U
from pinned_gl.solver import minimize_F, substitution_residual
from pinned_gl.vortex import find_zeros

eps, delta, b = 0.04, 0.2, 0.5
cfg = PinningConfig([(0.0, 0.0)], InclusionShape("disc", 0.5), b, delta, eps)
grid = Grid.from_domain(DomainSpec("disc", (1.0,), 160))

# ---------- special solution ----------
sol = solve_U(cfg, grid)
U = sol.U.values[grid.active]
print(f"U in [{U.min():.4f}, {U.max():.4f}], E(U) = {sol.energy:.4f}")

# ---------- weighted minimization, two different starts ----------
g = BoundaryData(1)
res = minimize_F(sol.U, g, eps, pinning=cfg, seeds=("predicted", "random"))
print("seed energies:", {k: round(v, 5) for k, v in res.seed_energies.items()})

rep = find_zeros(res.v, cfg)
for z in rep.zeros:
    print(f"zero at {z.position:.4f}, winding {z.winding}, inclusion {z.inclusion}")

# E(U v) = E(U) + F(v) up to the discretisation of the edge weight
a = build_pinning_field(cfg, grid)
print(f"substitution residual {substitution_residual(sol.U, res.v, a, eps):.2e}")

# ---------- compare with the logarithmic terms ----------
xi = eps / delta
logs = np.pi * b * b * abs(np.log(xi)) + np.pi * abs(np.log(delta))
print(f"F = {res.energy.total:.4f}, pi b^2|ln xi| + pi|ln delta| = {logs:.4f}, "
      f"remainder {res.energy.total - logs:.4f}")
# The remainder is still large here: eps / b = 0.08 is almost the inclusion radius 0.1,
# so the core does not fit inside the inclusion yet.
