import numpy as np
import pytest

from pinned_gl.core import BoundaryData, ConfigurationError, energy_F
from pinned_gl.special import solve_U
from pinned_gl.testfn import (annulus_extension, build_caseI, build_caseII, log_remainder,
                              smoothstep)
from pinned_gl.vortex import find_zeros, total_winding

from conftest import desk_pinning, disc_grid


def test_smoothstep():
    t = np.linspace(-1, 2, 31)
    s = smoothstep(t)
    assert s[0] == 0.0 and s[-1] == 1.0
    assert np.all(np.diff(s) >= 0)
    assert smoothstep(0.5) == pytest.approx(0.5)


def test_caseI_structure():
    grid = disc_grid(160)
    cfg = desk_pinning(3, eps=0.04)
    g = BoundaryData(2)
    v, spec = build_caseI(cfg, g, cfg.eps, grid, inclusions=[0, 2], return_spec=True)
    assert np.allclose(v.values[grid.boundary], g.on_grid(grid)[grid.boundary])
    assert total_winding(v) == 2
    rep = find_zeros(v, cfg)
    assert rep.per_inclusion == {0: 1, 2: 1}
    assert all(z.winding == 1 for z in rep.zeros)
    # modulus: one away from the cores, linear inside
    Z = grid.Z
    m = np.abs(v.values)
    far = grid.active & (np.abs(Z - spec.hosts[0]) > cfg.eps) & (np.abs(Z - spec.hosts[1]) > cfg.eps)
    far &= ~grid.boundary
    assert np.allclose(m[far], 1.0)
    near = grid.active & (np.abs(Z - spec.hosts[0]) < 0.8 * cfg.eps)
    assert np.allclose(m[near], np.abs(Z[near] - spec.hosts[0]) / cfg.eps, atol=1e-3)


def test_caseII_zero_split():
    grid = disc_grid(256)
    cfg = desk_pinning(2, eps=0.02)
    g = BoundaryData(3)
    v = build_caseII(cfg, g, cfg.eps, [2, 1], grid)
    rep = find_zeros(v, cfg)
    assert rep.per_inclusion == {0: 2, 1: 1}
    assert all(z.winding == 1 for z in rep.zeros)
    assert total_winding(v) == 3


def test_caseI_and_caseII_agree_for_unit_degrees():
    grid = disc_grid(128)
    cfg = desk_pinning(3, eps=0.04)
    U = solve_U(cfg, grid).U
    g = BoundaryData(2)
    a = build_caseI(cfg, g, cfg.eps, grid, inclusions=[0, 2])
    b = build_caseII(cfg, g, cfg.eps, [1, 0, 1], grid)
    assert energy_F(a, U, cfg.eps).total == pytest.approx(energy_F(b, U, cfg.eps).total, rel=1e-12)


def test_construction_errors():
    grid = disc_grid(96)
    cfg = desk_pinning(2, eps=0.04)
    with pytest.raises(ConfigurationError):
        build_caseI(cfg, BoundaryData(3), cfg.eps, grid)
    with pytest.raises(ConfigurationError):
        build_caseII(cfg, BoundaryData(3), cfg.eps, [2, 2], grid)
    with pytest.raises(ConfigurationError):
        build_caseII(cfg, BoundaryData(3), cfg.eps, [2, 1], grid, alphas={0: [0.9, -0.9]})


def test_annulus_extension_identity_and_outer_trace():
    m = 256
    th = 2 * np.pi * np.arange(m) / m
    rho = 0.1
    r = np.linspace(rho, 3 * rho, 41)
    R, T = np.meshgrid(r, np.linspace(0, 2 * np.pi, 37))
    Z = R * np.exp(1j * T)
    ext = annulus_extension(np.exp(2j * th), 2, rho, Z)
    assert np.allclose(ext, (Z / np.abs(Z)) ** 2, atol=1e-12)
    pert = (1 - 0.01 * (1 + np.cos(3 * th)) / 2) * np.exp(1j * (2 * th + 0.3 * np.sin(th)))
    ext = annulus_extension(pert, 2, rho, Z)
    outer = np.abs(Z) >= 2 * rho
    assert np.allclose(ext[outer], (Z[outer] / np.abs(Z[outer])) ** 2, atol=1e-12)
    inner = np.isclose(np.abs(Z), rho)
    assert np.allclose(ext[inner], np.interp(np.mod(np.angle(Z[inner]), 2 * np.pi), np.r_[th, 2 * np.pi],
                                             np.r_[pert, pert[0]]), atol=2e-3)
    assert np.isnan(annulus_extension(pert, 2, rho, np.array([0.01 + 0j]))[0])
    with pytest.raises(ValueError):
        annulus_extension(np.exp(1j * th), 2, rho, Z)


def test_annulus_extension_potential_scales_like_eps_squared():
    m = 256
    th = 2 * np.pi * np.arange(m) / m
    rho = 0.5
    r = np.linspace(rho, 3 * rho, 120)
    t = np.linspace(0, 2 * np.pi, 128, endpoint=False)
    R, T = np.meshgrid(r, t)
    Z = R * np.exp(1j * T)
    dA = (r[1] - r[0]) * (t[1] - t[0]) * R
    ratios = []
    for eps in (0.04, 0.02, 0.01):
        tr = (1 - eps * (1 + np.cos(2 * th)) / 2) * np.exp(1j * th)
        ext = annulus_extension(tr, 1, rho, Z)
        ratios.append(np.sum((1 - np.abs(ext) ** 2) ** 2 * dA) / eps ** 2)
    assert max(ratios) / min(ratios) < 1.2


def test_log_remainder():
    F = 10.0
    got = log_remainder(F, 0.02, 0.2, 0.5, [2, 1])
    assert got == pytest.approx(F - np.pi * 3 * 0.25 * np.log(10) - np.pi * 5 * np.log(5))
