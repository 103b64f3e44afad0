import numpy as np
import pytest

from pinned_gl.core import BoundaryData, Field, build_pinning_field, energy_F
from pinned_gl.special import SolverError, solve_U
from pinned_gl.solver import initial_guess, minimize_E, minimize_F, substitution_residual
from pinned_gl.vortex import find_zeros

from conftest import desk_pinning, disc_grid


def test_classical_single_vortex_sits_at_centre():
    grid = disc_grid(64)
    a = Field(np.ones(grid.shape), grid)
    res = minimize_E(a, BoundaryData(1), 0.1, init="random", rng_seed=3)
    assert res.converged
    rep = find_zeros(res.v)
    assert rep.total_winding == 1 and len(rep.zeros) == 1
    assert abs(rep.zeros[0].position) < 0.05
    # energy history is nonincreasing
    assert np.all(np.diff(res.history) <= 1e-9 * abs(res.history[0]))


def test_multistart_keeps_lowest():
    grid = disc_grid(48)
    a = Field(np.ones(grid.shape), grid)
    res = minimize_E(a, BoundaryData(1), 0.1, seeds=("random", "harmonic"), rng_seed=1)
    assert set(res.seed_energies) == {"random", "harmonic"}
    assert res.energy.total == min(res.seed_energies.values())


def test_minimize_F_with_weight_and_substitution():
    cfg = desk_pinning(1, eps=0.05)
    grid = disc_grid(96)
    sol = solve_U(cfg, grid)
    g = BoundaryData(1)
    res = minimize_F(sol.U, g, cfg.eps, init="predicted", pinning=cfg)
    assert res.converged
    rep = find_zeros(res.v, cfg)
    assert rep.total_winding == 1
    assert rep.per_inclusion == {0: 1}
    a = build_pinning_field(cfg, grid)
    assert substitution_residual(sol.U, res.v, a, cfg.eps) < 1e-2
    assert energy_F(res.v, sol.U, cfg.eps).total == pytest.approx(res.energy.total, rel=1e-12)


def test_boundary_values_are_kept():
    grid = disc_grid(48)
    g = BoundaryData(2, (0.3,))
    a = Field(np.ones(grid.shape), grid)
    res = minimize_E(a, g, 0.1, init="harmonic")
    assert np.allclose(res.v.values[grid.boundary], g.on_grid(grid)[grid.boundary])


def test_seed_kinds():
    grid = disc_grid(48)
    g = BoundaryData(2)
    for k in ("random", "harmonic", "predicted"):
        u = initial_guess(k, grid, g, 0.1)
        assert np.all(np.isfinite(u[grid.active]))
    with pytest.raises(ValueError):
        initial_guess("nope", grid, g, 0.1)


def test_solver_error_on_nonfinite():
    grid = disc_grid(32)
    a = Field(np.ones(grid.shape), grid)
    bad = np.full(grid.shape, np.nan + 0j)
    with pytest.raises(SolverError):
        minimize_E(a, BoundaryData(1), 0.1, init=bad)


def test_centred_vortex_energy_matches_radial_solve():
    from oracles import radial_pinned_F

    cfg = desk_pinning(1, eps=0.04)
    grid = disc_grid(160)
    sol = solve_U(cfg, grid)
    res = minimize_F(sol.U, BoundaryData(1), cfg.eps, init="predicted", pinning=cfg)
    assert res.energy.total == pytest.approx(radial_pinned_F(0.04, 0.1, 0.5), rel=1e-2)
