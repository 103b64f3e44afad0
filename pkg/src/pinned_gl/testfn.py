"""Explicit competitors for F with vortices pinned at prescribed points.

Each construction is a phase field glued from three pieces: a smooth
S^1-valued map away from the hosting inclusions (singular angles plus a
harmonic correction matching g), the pure vortex (x - a)^k / |x - a|^k near
each host centre a, and, for multiple vortices in one inclusion, the product
of unit vortices at a + delta alpha_j.  The modulus is a product of linear
cores of radius eps.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .core import (BoundaryData, ConfigurationError, Field, Grid, PinningConfig, apply_boundary)
from .phase import PhaseProblem, interpolate, solve_phase, theta_nodes

# desk-scale constants; the asymptotic ones are far below any grid spacing
RHO_FRACTION = 0.25
ALPHA_FRACTION = 0.3


def smoothstep(t):
    """Quintic C^2 ramp: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    return t ** 3 * (10 - 15 * t + 6 * t * t)


@dataclass
class TestFunctionSpec:
    """Placement data of a test function (physical coordinates)."""

    __test__ = False  # not a pytest class

    case: str
    hosts: List[complex]
    degrees: List[int]
    points: Dict[int, List[complex]]
    rho: List[float]
    inner: List[float]
    core: float

    def validate(self, grid: Grid) -> None:
        dom = grid.domain
        for i, (a, r) in enumerate(zip(self.hosts, self.rho)):
            if dom is not None and dom.distance_to_boundary(a.real, a.imag) <= 2 * r:
                raise ConfigurationError("outer gluing disc leaves the domain")
            for j in range(i):
                if abs(a - self.hosts[j]) <= 2 * (r + self.rho[j]):
                    raise ConfigurationError("gluing discs overlap")
            if self.inner[i] > 0 and 2 * self.inner[i] > r:
                raise ConfigurationError("inner gluing annulus does not fit inside the outer one")
            pts = self.points[i]
            for k, p in enumerate(pts):
                for q in pts[:k]:
                    if abs(p - q) <= 1e-12:
                        raise ConfigurationError("coincident vortex points")


def _default_spec(case: str, cfg: PinningConfig, g: BoundaryData, eps: float, degrees: Sequence[int],
                  grid: Grid, alphas: Optional[Dict[int, List[complex]]] = None) -> TestFunctionSpec:
    if len(degrees) != cfg.M:
        raise ConfigurationError("one degree per inclusion required")
    if any(k < 0 for k in degrees) or sum(degrees) != g.degree:
        raise ConfigurationError("degrees must be non-negative and sum to deg g")
    occ = [i for i, k in enumerate(degrees) if k > 0]
    hosts = [complex(*cfg.centers[i]) for i in occ]
    dom = grid.domain
    rho, inner, pts = [], [], {}
    for n, i in enumerate(occ):
        a = hosts[n]
        gaps = [abs(a - b) for b in hosts if b != a]
        dist = float(dom.distance_to_boundary(a.real, a.imag)) if dom is not None else np.inf
        rho.append(RHO_FRACTION * min([dist] + gaps))
        k = degrees[i]
        if alphas is not None and i in alphas:
            al = [complex(z) for z in alphas[i]]
            if len(al) != k:
                raise ConfigurationError(f"inclusion {i} needs {k} offsets")
        elif k == 1:
            al = [0j]
        else:
            r = ALPHA_FRACTION * cfg.shape.inner_radius
            al = [r * np.exp(2j * np.pi * j / k) for j in range(k)]
        for z in al:
            if not cfg.shape.contains(z.real, z.imag):
                raise ConfigurationError("vortex offset outside omega")
        pts[n] = [a + cfg.delta * z for z in al]
        spread = max(abs(z) for z in al) * cfg.delta
        inner.append(2 * spread)
    return TestFunctionSpec(case, hosts, [degrees[i] for i in occ], pts, rho, inner, eps)


def _nudge(grid: Grid, p: complex) -> complex:
    i = (p.real - grid.x[0]) / grid.h
    j = (p.imag - grid.y[0]) / grid.h
    if abs(i - round(i)) < 1e-6 and abs(j - round(j)) < 1e-6:
        return p + 1e-3 * grid.h * (1 + 1j)
    return p


def build_from_spec(spec: TestFunctionSpec, g: BoundaryData, grid: Grid) -> Field:
    spec.validate(grid)
    Z = grid.Z
    hosts = [_nudge(grid, a) for a in spec.hosts]
    prob = PhaseProblem(grid, hosts, spec.degrees, None, g, "direct")
    psi = solve_phase(prob).values
    phase = theta_nodes(Z, hosts, spec.degrees) + psi
    v = np.exp(1j * phase)
    mod = np.ones(grid.shape)
    for n, (a, k) in enumerate(zip(hosts, spec.degrees)):
        r = np.abs(Z - a)
        rho = spec.rho[n]
        near = r < 2 * rho
        # smooth remainder phi_n = psi + angles of the other hosts, branch cut kept away
        zn = Z[near]
        phi = psi[near].copy()
        phi_a = float(interpolate(grid, psi, np.array([a]))[0])
        for m, (b, kb) in enumerate(zip(hosts, spec.degrees)):
            if m == n:
                continue
            ref = np.angle(a - b)
            phi += kb * (np.angle((zn - b) / (a - b)) + ref)
            phi_a += kb * ref
        chi = smoothstep((r[near] - rho) / rho)
        blended = chi * phi + (1 - chi) * phi_a
        base = np.exp(1j * k * np.angle(zn - a))
        pts = [_nudge(grid, p) for p in spec.points[n]]
        if spec.inner[n] > 0:
            ri = spec.inner[n]
            w = np.ones(zn.shape, complex)
            for p in pts:
                w *= (zn - p) / np.abs(zn - p)
            # Sum_j arg((x - p_j) / (x - a)) is single valued for r > max |p_j - a|
            ok = r[near] >= ri
            B = np.zeros(zn.shape)
            for p in pts:
                B[ok] += np.angle((zn[ok] - p) / (zn[ok] - a))
            cin = smoothstep((r[near] - ri) / ri)
            inner_field = np.where(ok, base * np.exp(1j * (1 - cin) * B), w)
        else:
            inner_field = base
        v[near] = inner_field * np.exp(1j * blended)
        for p in pts:
            mod *= np.minimum(1.0, np.abs(Z - p) / spec.core)
    return Field(apply_boundary(mod * v, g, grid), grid)


def build_caseI(cfg: PinningConfig, g: BoundaryData, eps: float, grid: Grid,
                inclusions: Optional[Sequence[int]] = None, return_spec: bool = False):
    """Unit vortices at the centres of ``inclusions`` (default: the first d)."""
    d = g.degree
    if cfg.M < d:
        raise ConfigurationError("Case I needs M >= d")
    inclusions = list(range(d)) if inclusions is None else list(inclusions)
    if len(set(inclusions)) != d:
        raise ConfigurationError("Case I needs d distinct inclusions")
    degrees = [1 if i in inclusions else 0 for i in range(cfg.M)]
    spec = _default_spec("I", cfg, g, eps, degrees, grid)
    v = build_from_spec(spec, g, grid)
    return (v, spec) if return_spec else v


def build_caseII(cfg: PinningConfig, g: BoundaryData, eps: float, degrees: Sequence[int], grid: Grid,
                 alphas: Optional[Dict[int, List[complex]]] = None, return_spec: bool = False):
    """d_i unit vortices inside inclusion i at a_i + delta alpha_{j,i}."""
    spec = _default_spec("II", cfg, g, eps, list(degrees), grid, alphas)
    v = build_from_spec(spec, g, grid)
    return (v, spec) if return_spec else v


def annulus_extension(trace: np.ndarray, d0: int, rho: float, Z: np.ndarray) -> np.ndarray:
    """Extension of a trace on |x| = rho to rho <= |x| <= 3 rho.

    ``trace`` holds samples at angles 2 pi k / m.  Between rho and 2 rho the
    phase remainder and the modulus are ramped off; beyond 2 rho the field is
    x^d0 / |x|^d0.  Points outside the annulus get NaN.
    """
    from .renorm import FourierTrace, phase_remainder

    trace = np.asarray(trace, complex)
    phi = phase_remainder(trace, d0)  # raises on wrong winding
    ph = FourierTrace.from_samples(phi)
    md = FourierTrace.from_samples(np.abs(trace))
    Z = np.asarray(Z, complex)
    r = np.abs(Z)
    th = np.angle(Z)
    t = smoothstep((r - rho) / rho)
    p = ph(th).real
    m = md(th).real
    out = ((1 - t) * m + t) * np.exp(1j * (d0 * th + (1 - t) * p))
    out = np.where((r >= rho * (1 - 1e-12)) & (r <= 3 * rho * (1 + 1e-12)), out, np.nan + 0j)
    return out


def log_remainder(F: float, eps: float, delta: float, b: float, degrees: Sequence[int]) -> float:
    """F - pi d b^2 |ln xi| - pi sum d_i^2 |ln delta|, with xi = eps / delta."""
    d = sum(degrees)
    s2 = sum(k * k for k in degrees)
    return float(F - np.pi * d * b * b * abs(np.log(eps / delta)) - np.pi * s2 * abs(np.log(delta)))
