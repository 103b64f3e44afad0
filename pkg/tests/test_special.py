import numpy as np
import pytest

from pinned_gl.core import InclusionShape, PinningConfig, build_pinning_field
from pinned_gl.special import solve_U, u_estimate_report

from conftest import desk_pinning, disc_grid


def test_no_inclusions_gives_one():
    grid = disc_grid(64)
    cfg = PinningConfig((), InclusionShape(), 0.5, 0.2, 0.05)
    sol = solve_U(cfg, grid)
    assert np.allclose(sol.U.values[grid.active], 1.0)
    rep = u_estimate_report(sol, cfg)
    assert max(rep.max_dev) == 0.0


@pytest.mark.parametrize("M", [1, 2, 3])
def test_maximum_principle_and_boundary(M):
    grid = disc_grid(128)
    cfg = desk_pinning(M, eps=0.04)
    sol = solve_U(cfg, grid)
    U = sol.U.values[grid.active]
    assert U.min() >= cfg.b - 1e-10 and U.max() <= 1 + 1e-10
    assert np.all(sol.U.values[grid.boundary] == 1.0)
    assert np.all(np.diff(sol.history) <= 1e-12 * abs(sol.history[0]))


def test_projection_is_inactive():
    grid = disc_grid(96)
    cfg = desk_pinning(1, eps=0.04)
    a = solve_U(cfg, grid)
    b = solve_U(cfg, grid, project=False)
    assert np.max(np.abs(a.U.values - b.U.values)) < 1e-6


def test_exponential_decay_away_from_inclusion():
    # eps = delta / 16
    cfg = desk_pinning(1, eps=0.2 / 16)
    grid = disc_grid(256)
    sol = solve_U(cfg, grid)
    rep = u_estimate_report(sol, cfg)
    dev = np.asarray(rep.max_dev)
    assert np.all(np.diff(dev) < 0)
    slope = np.polyfit(np.asarray(rep.R) / cfg.eps, np.log(dev), 1)[0]
    assert slope < 0
    t = np.asarray(rep.R) / cfg.eps
    grad = np.asarray(rep.max_grad)
    assert np.all(grad <= rep.fitted_C_grad * np.exp(-rep.fitted_c_grad * t) / cfg.eps * (1 + 1e-9))
    assert rep.fitted_c > 0 and rep.fitted_c_grad > 0
