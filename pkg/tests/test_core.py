import numpy as np
import pytest

from pinned_gl.core import (BoundaryData, ConfigurationError, DomainSpec, Field, Functional, Grid,
                            InclusionShape, InvariantError, PinningConfig, ScaleDiagnostics,
                            build_pinning_field, cell_energy_density, energy_E, energy_F, read_field,
                            rescale_hat, write_field, write_field_csv)

from conftest import desk_pinning, disc_grid


def annulus_grid(n, r_in=0.5, r_out=1.0):
    grid = disc_grid(n, r_out)
    cells = grid.annulus_cells((0.0, 0.0), r_in, r_out)
    return grid, cells


def test_disc_cell_areas_sum_to_pi():
    for n in (16, 64):
        grid = disc_grid(n)
        _, _, area = grid.edge_weights()
        assert area.sum() == pytest.approx(np.pi, rel=1e-12)


def test_pinning_field_values():
    grid = disc_grid(128)
    cfg = desk_pinning(1)
    a = build_pinning_field(cfg, grid).values
    i = np.argmin(np.abs(grid.Z))
    assert a.ravel()[i] == 0.5
    X, Y = grid.XY
    far = np.hypot(X, Y) > 0.2
    assert np.all(a[far & grid.active] == 1.0)
    empty = PinningConfig((), InclusionShape(), 0.5, 0.2, 0.02)
    assert np.all(build_pinning_field(empty, grid).values[grid.active] == 1.0)


def test_pinning_field_matches_geometric_predicate(rng):
    grid = disc_grid(96)
    cfg = desk_pinning(3)
    a = build_pinning_field(cfg, grid).values
    X, Y = grid.XY
    inside = np.zeros(grid.shape, bool)
    for cx, cy in cfg.centers:
        inside |= np.hypot(X - cx, Y - cy) < cfg.delta * 0.5
    assert np.array_equal(a[grid.active] == 0.5, inside[grid.active])


def test_energy_trivial_values():
    grid = disc_grid(64)
    one = Field(np.ones(grid.shape, complex), grid)
    a = Field(np.ones(grid.shape), grid)
    assert energy_E(one, a, 0.1).total == 0.0
    sq = Grid.from_domain(DomainSpec("rectangle", (1.0, 1.0), 32))
    zero = Field(np.zeros(sq.shape, complex), sq)
    e = energy_E(zero, Field(np.ones(sq.shape), sq), 0.1)
    assert e.potential == pytest.approx(1.0 / (4 * 0.01), rel=1e-12)
    assert e.gradient == 0.0


def test_vortex_annulus_energy_converges_to_pi_ln2():
    errs = []
    for n in (64, 128, 256):
        grid, cells = annulus_grid(n)
        Z = grid.Z
        v = Field(Z / np.maximum(np.abs(Z), 1e-300), grid)
        e = energy_E(v, Field(np.ones(grid.shape), grid), 0.1, cells=cells)
        errs.append(abs(e.gradient - np.pi * np.log(2)))
        assert e.potential == pytest.approx(0.0, abs=1e-12)
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 2e-3
    # second order
    assert errs[1] / errs[2] > 3.0


def test_energy_F_weights():
    grid, cells = annulus_grid(128)
    Z = grid.Z
    v = Field(Z / np.maximum(np.abs(Z), 1e-300), grid)
    Ub = Field(np.full(grid.shape, 0.5), grid)
    eF = energy_F(v, Ub, 0.1, cells=cells)
    eE = energy_E(v, Field(np.ones(grid.shape), grid), 0.1, cells=cells)
    assert eF.gradient == pytest.approx(0.25 * eE.gradient, rel=1e-12)
    one = Field(np.ones(grid.shape), grid)
    assert energy_F(v, one, 0.1, cells=cells).total == pytest.approx(eE.total, rel=1e-14)
    vone = Field(np.ones(grid.shape, complex), grid)
    assert energy_F(vone, Ub, 0.1).total == 0.0


def test_energy_F_rejects_bad_weight():
    grid = disc_grid(32)
    v = Field(np.ones(grid.shape, complex), grid)
    U = Field(np.full(grid.shape, 0.3), grid)
    with pytest.raises(InvariantError):
        energy_F(v, U, 0.1, b=0.5)


def test_cell_density_sums_to_total(rng):
    grid = disc_grid(48)
    v = Field(rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape), grid)
    U = Field(0.5 + 0.5 * rng.uniform(size=grid.shape), grid)
    dens = cell_energy_density(v, U, 0.1, "F")
    assert dens.sum() == pytest.approx(energy_F(v, U, 0.1).total, rel=1e-12)


def test_functional_gradient_matches_finite_differences(rng):
    grid = disc_grid(24)
    u = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    fn = Functional.E(grid, 0.5 + 0.5 * rng.uniform(size=grid.shape), 0.2)
    e, g = fn.value_and_grad(u)
    idx = np.argwhere(grid.interior)[:5]
    for i, j in idx:
        for dirn in (1.0, 1j):
            h = 1e-6
            up = u.copy(); up[i, j] += h * dirn
            um = u.copy(); um[i, j] -= h * dirn
            fd = (fn.value_and_grad(up)[0] - fn.value_and_grad(um)[0]) / (2 * h)
            an = g[i, j].real if dirn == 1.0 else g[i, j].imag
            assert an == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_rescale_hat():
    grid = disc_grid(128)
    Z = grid.Z
    const = Field(np.full(grid.shape, 2.0 + 1j), grid)
    out = rescale_hat(const, (0.0, 0.0), 0.5, 0.4, 64)
    assert np.allclose(out.values[out.grid.active], 2.0 + 1j)
    p = 0.1 + 0.05j
    v = Field(Z - (0.2 + 0.2 * p), grid)
    hat = rescale_hat(v, (0.2, 0.0), 0.2, 0.3, 96)
    # the affine map sends the zero to p
    Zh = hat.grid.Z
    assert np.allclose(hat.values[hat.grid.active], (0.2 * (Zh - p))[hat.grid.active], atol=1e-12)
    same = rescale_hat(v, (0.0, 0.0), 1.0, 0.5, 64)
    assert np.allclose(same.values[same.grid.active], (same.grid.Z - (0.2 + 0.2 * p))[same.grid.active])
    with pytest.raises(ConfigurationError):
        rescale_hat(v, (0.9, 0.0), 0.2, 0.3)


def test_field_roundtrip(tmp_path, rng):
    grid = disc_grid(20)
    v = Field(rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape), grid)
    write_field(tmp_path / "v.bin", v)
    w = read_field(tmp_path / "v.bin")
    assert np.array_equal(w.values, v.values)
    assert np.array_equal(w.grid.interior, grid.interior)
    assert w.grid.h == grid.h
    write_field_csv(tmp_path / "v.csv", v)
    data = np.loadtxt(tmp_path / "v.csv", delimiter=",", skiprows=1)
    assert data.shape == (grid.active.sum(), 4)


def test_boundary_data():
    g = BoundaryData(3, (0.4,), (0.0, 0.2))
    assert g.winding() == 3
    th = np.linspace(0, 2 * np.pi, 50)
    assert np.allclose(np.abs(g(th)), 1.0)
    rot = g.rotated(0.7)
    assert np.allclose(rot(th + 0.7), g(th) * np.exp(3j * 0.7))
    with pytest.raises(ConfigurationError):
        BoundaryData(-1)


def test_pinning_validation():
    dom = DomainSpec("disc", (1.0,), 256)
    with pytest.raises(ConfigurationError):
        PinningConfig([(0, 0)], InclusionShape(), 1.0, 0.2, 0.02)
    with pytest.raises(ConfigurationError):
        PinningConfig([(0, 0)], InclusionShape(), 0.5, 0.02, 0.02)
    with pytest.raises(ConfigurationError):
        PinningConfig([(0.95, 0)], InclusionShape(), 0.5, 0.2, 0.02).validate(dom)
    with pytest.raises(ConfigurationError):
        PinningConfig([(0, 0), (0.1, 0)], InclusionShape(), 0.5, 0.2, 0.02).validate(dom)
    with pytest.raises(ConfigurationError):
        desk_pinning(1).validate(dom.with_n(32))
    desk_pinning(3).validate(dom)


def test_polygon_shape():
    sq = InclusionShape("polygon", vertices=((-0.4, -0.4), (0.4, -0.4), (0.4, 0.4), (-0.4, 0.4)))
    assert sq.contains(np.array([0.0]), np.array([0.0]))[0]
    assert not sq.contains(np.array([0.5]), np.array([0.0]))[0]
    assert sq.inner_radius == pytest.approx(0.4)
    with pytest.raises(ConfigurationError):
        InclusionShape("polygon", vertices=((0.1, 0.1), (0.5, 0.1), (0.5, 0.5)))


def test_scale_diagnostics():
    s = ScaleDiagnostics.from_scales(0.02, 0.2)
    assert s.xi == pytest.approx(0.1)
    assert s.h_ratio == pytest.approx(np.log(5) ** 3 / np.log(50))
    assert s.h_warning
