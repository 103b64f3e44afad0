import numpy as np
from hypothesis import given, settings, strategies as st

from pinned_gl.core import BoundaryData, Field, energy_E, energy_F
from pinned_gl.renorm import (FourierTrace, annulus_energy, assemble_expansion, discrete_optimizer,
                              hhalf_seminorm)
from pinned_gl.solver import vortex_field
from pinned_gl.vortex import find_zeros, total_winding

from conftest import disc_grid

GRID = disc_grid(48)
small = st.floats(-3, 3, allow_nan=False)
coeffs = st.dictionaries(st.integers(-4, 4), st.tuples(small, small).map(lambda t: complex(*t)), max_size=5)


@given(coeffs, st.floats(-5, 5, allow_nan=False))
def test_hhalf_is_quadratic(c, t):
    base = hhalf_seminorm(FourierTrace.from_dict(c))
    scaled = hhalf_seminorm(FourierTrace.from_dict({k: t * v for k, v in c.items()}))
    assert np.isclose(scaled, t * t * base, rtol=1e-10, atol=1e-10)


@given(coeffs, coeffs, st.floats(1.1, 6.0))
def test_annulus_energy_nonnegative(a, b, R):
    val = annulus_energy(FourierTrace.from_dict(a), FourierTrace.from_dict(b), R)
    assert val >= -1e-9 * (1 + sum(abs(v) ** 2 for v in list(a.values()) + list(b.values())))


@given(st.tuples(small, small).map(lambda t: complex(*t)), st.floats(1.1, 6.0))
def test_annulus_energy_zero_for_equal_constants(c, R):
    t = FourierTrace.from_dict({0: c})
    assert annulus_energy(t, t, R) == 0.0


@given(st.integers(1, 8), st.integers(1, 8), st.floats(0.05, 0.5), st.floats(0.05, 0.5),
       st.floats(0.1, 0.95), st.floats(0.2, 5.0))
def test_optimizer_window_and_scale_invariance(M, d, delta, xi, b, s):
    opt = discrete_optimizer(M, d, np.log(delta), np.log(xi), b)
    for c in opt:
        assert sum(c.degrees) == d
        if M >= d:
            assert set(c.degrees) <= {0, 1}
        else:
            assert set(c.degrees) <= {d // M, d // M + 1}
    scaled = discrete_optimizer(M, d, s * np.log(delta), s * np.log(xi), b)
    assert [c.degrees for c in scaled] == [c.degrees for c in opt]


@given(st.integers(1, 6), st.floats(0.05, 0.999), st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 3))
def test_ledger_sum_and_limit(d, b, Wg, tw, gamma):
    led = assemble_expansion("I", dict(d=d, b=b, Wg=Wg, tildeW=tw, gamma=gamma))
    total, vals = led.evaluate(0.02, 0.2)
    assert total == sum(vals[1:], vals[0])
    assert np.isclose(led.coefficients()["ln_delta"], np.pi * (1 - b * b) * d)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.tuples(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6)), min_size=1, max_size=3),
       st.floats(-0.5, 0.5))
def test_total_winding_is_boundary_degree(pts, amp):
    pts = [complex(x, y) + 0.0123 + 0.0071j for x, y in pts]
    d = len(pts)
    g = BoundaryData(d, (amp,), ())
    v = Field(vortex_field(GRID, g, pts, [1] * d, 0.05), GRID)
    assert total_winding(v) == d
    assert find_zeros(v).total_winding == d


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 2 * np.pi), st.integers(0, 2 ** 31 - 1))
def test_energies_gauge_invariant_and_nonnegative(alpha, seed):
    rng = np.random.default_rng(seed)
    u = rng.normal(size=GRID.shape) + 1j * rng.normal(size=GRID.shape)
    U = Field(0.5 + 0.5 * rng.uniform(size=GRID.shape), GRID)
    a = Field(np.ones(GRID.shape), GRID)
    e1 = energy_E(Field(u, GRID), a, 0.1).total
    e2 = energy_E(Field(np.exp(1j * alpha) * u, GRID), a, 0.1).total
    assert e1 >= 0 and np.isclose(e1, e2, rtol=1e-12)
    f1 = energy_F(Field(u, GRID), U, 0.1).total
    f2 = energy_F(Field(np.exp(1j * alpha) * np.conj(u), GRID), U, 0.1).total
    assert f1 >= 0 and np.isclose(f1, f2, rtol=1e-12)


@given(st.integers(0, 4), st.lists(small, max_size=3), st.lists(small, max_size=3), st.floats(0, 6.3))
def test_boundary_data_unimodular(d, cs, ss, shift):
    g = BoundaryData(d, tuple(cs), tuple(ss), shift)
    th = np.linspace(0, 2 * np.pi, 97)
    assert np.allclose(np.abs(g(th)), 1.0)
    z = g(th)
    steps = np.angle(z[1:] * np.conj(z[:-1]))
    # fine sampling: each step well below pi for these amplitudes
    if np.max(np.abs(steps)) < 2.5:
        assert round(steps.sum() / (2 * np.pi)) == d
