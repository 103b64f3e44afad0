"""Phase formulation: singular phases, weighted Dirichlet solves and log-energies.

For prescribed vortex points p_j with degrees d_j the singular phase is
theta = sum d_j arg(x - p_j).  A correction psi solves

    -div(w (grad psi + grad theta)) = 0,   theta + psi = boundary phase,

on the 5-point stencil.  The Dirichlet energy 1/2 int w |grad(theta + psi)|^2
on a perforated domain is split into the singular part 1/2 int w |grad theta|^2,
evaluated exactly through contour integrals of the conjugate harmonic
H = sum d_j ln|x - p_j|, and the regular part, evaluated on the grid.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import (BoundaryData, ConfigurationError, DomainSpec, Field, Grid, InclusionShape,
                   edge_average)

logger = logging.getLogger(__name__)

PHASE_RES_TOL = 1e-8


def _wrap(t):
    return np.angle(np.exp(1j * t))


# ---------------------------------------------------------------------------
# sparse Dirichlet operator
# ---------------------------------------------------------------------------

class DirichletOperator:
    """Weighted graph Laplacian sum_e k_e (u_j - u_i)^2 / 2 restricted to free nodes."""

    def __init__(self, grid: Grid, kx: np.ndarray, ky: np.ndarray, free: Optional[np.ndarray] = None):
        self.grid = grid
        self.kx = kx
        self.ky = ky
        self.free = grid.interior if free is None else free
        N = grid.shape[0] * grid.shape[1]
        ids = np.arange(N).reshape(grid.shape)
        rows, cols, vals = [], [], []
        for k, a, b in ((kx, ids[:-1, :], ids[1:, :]), (ky, ids[:, :-1], ids[:, 1:])):
            m = k > 0
            a, b, k = a[m], b[m], k[m]
            rows += [a, b, a, b]
            cols += [a, b, b, a]
            vals += [k, k, -k, -k]
        L = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(N, N))
        self.L = L
        fi = np.flatnonzero(self.free)
        self.fi = fi
        self.A_ff = L[fi][:, fi].tocsc()
        self.A_fall = L[fi]
        self._lu = None

    def edge_divergence(self, tx: np.ndarray, ty: np.ndarray) -> np.ndarray:
        """D^T K t: nodal sums of weighted edge values (oriented i -> i+1)."""
        out = np.zeros(self.grid.shape)
        fx = self.kx * tx
        fy = self.ky * ty
        out[:-1, :] -= fx
        out[1:, :] += fx
        out[:, :-1] -= fy
        out[:, 1:] += fy
        return out

    def solve(self, boundary_values: np.ndarray, tx=None, ty=None, method: str = "cg",
              tol: float = 1e-12) -> Tuple[np.ndarray, float]:
        """Minimize 1/2 sum k (t + D u)^2 with u fixed off the free set.

        Returns the full nodal field and the relative residual.
        """
        u = np.where(self.free, 0.0, boundary_values).astype(float)
        rhs = -(self.A_fall @ u.ravel())
        if tx is not None:
            rhs -= self.edge_divergence(tx, ty).ravel()[self.fi]
        if not np.any(rhs):
            return u, 0.0
        if method == "direct":
            if self._lu is None:
                self._lu = spla.splu(self.A_ff)
            x = self._lu.solve(rhs)
        elif method == "cg":
            d = self.A_ff.diagonal()
            M = sp.diags(1.0 / d)
            x, info = spla.cg(self.A_ff, rhs, rtol=tol, atol=0.0, M=M, maxiter=20 * len(rhs))
            if info != 0:
                logger.warning("cg stopped with info=%d; falling back to direct solve", info)
                if self._lu is None:
                    self._lu = spla.splu(self.A_ff)
                x = self._lu.solve(rhs)
        else:
            raise ValueError(f"unknown method {method!r}")
        res = float(np.max(np.abs(self.A_ff @ x - rhs)) / max(np.max(np.abs(rhs)), 1e-300))
        u.ravel()[self.fi] = x
        return u, res


def harmonic_extension(grid: Grid, values: np.ndarray, method: str = "direct") -> np.ndarray:
    """Discrete harmonic (weight 1) extension of boundary-node values, real or complex."""
    wx, wy, _ = grid.edge_weights()
    op = DirichletOperator(grid, wx, wy)
    if np.iscomplexobj(values):
        re, _ = op.solve(values.real, method=method)
        im, _ = op.solve(values.imag, method=method)
        return re + 1j * im
    return op.solve(values, method=method)[0]


# ---------------------------------------------------------------------------
# singular phase
# ---------------------------------------------------------------------------

def theta_edges(grid: Grid, points: Sequence[complex], degrees: Sequence[int]):
    """Edge increments of theta = sum d_j arg(x - p_j) (principal branch per edge)."""
    Z = grid.Z
    tx = np.zeros((Z.shape[0] - 1, Z.shape[1]))
    ty = np.zeros((Z.shape[0], Z.shape[1] - 1))
    for p, d in zip(points, degrees):
        w = Z - p
        tx += d * np.angle(w[1:, :] * np.conj(w[:-1, :]))
        ty += d * np.angle(w[:, 1:] * np.conj(w[:, :-1]))
    return tx, ty


def theta_nodes(Z: np.ndarray, points: Sequence[complex], degrees: Sequence[int]) -> np.ndarray:
    out = np.zeros(np.shape(Z))
    for p, d in zip(points, degrees):
        out += d * np.angle(Z - p)
    return out


def check_points_off_nodes(grid: Grid, points: Sequence[complex], tol: float = 1e-9) -> None:
    for p in points:
        i = (p.real - grid.x[0]) / grid.h
        j = (p.imag - grid.y[0]) / grid.h
        if abs(i - round(i)) < tol and abs(j - round(j)) < tol:
            raise ConfigurationError(f"vortex point {p} sits on a grid node; perturb it")


@dataclass(eq=False)
class PhaseProblem:
    """Weighted phase problem on a grid.

    ``weight`` is a nodal array (a^2 or U^2); edge coefficients are endpoint
    means.  ``boundary_phase`` maps boundary node angles (about the domain
    centre) to the prescribed total phase; a :class:`BoundaryData` is
    accepted directly.
    """

    grid: Grid
    points: Sequence[complex] = ()
    degrees: Sequence[int] = ()
    weight: Optional[np.ndarray] = None
    boundary_phase: Union[BoundaryData, Callable, None] = None
    method: str = "cg"
    psi: Optional[np.ndarray] = field(default=None, repr=False)
    residual: float = np.nan

    def __post_init__(self):
        self.points = [complex(p) for p in self.points]
        self.degrees = [int(d) for d in self.degrees]
        if len(self.points) != len(self.degrees):
            raise ValueError("points and degrees differ in length")

    def edge_coefficients(self):
        wx, wy, _ = self.grid.edge_weights()
        if self.weight is None:
            return wx, wy
        kx, ky = edge_average(np.sqrt(np.abs(self.weight)), "mean")
        return wx * kx, wy * ky

    def target_boundary(self) -> np.ndarray:
        """Continuous lift of (total phase - theta) along the boundary nodes."""
        grid = self.grid
        bd = grid.boundary
        cx, cy = grid.domain.center if grid.domain is not None else (0.0, 0.0)
        X, Y = grid.XY
        ang = np.arctan2(Y[bd] - cy, X[bd] - cx)
        bp = self.boundary_phase
        if bp is None:
            total = np.zeros_like(ang)
        elif isinstance(bp, BoundaryData):
            total = bp.phase(ang)
        else:
            total = np.asarray(bp(ang), float)
        th = theta_nodes(X[bd] + 1j * Y[bd], self.points, self.degrees)
        diff = _wrap(total - th)
        order = np.argsort(ang, kind="stable")
        lifted = np.empty_like(diff)
        lifted[order] = np.unwrap(diff[order])
        out = np.zeros(grid.shape)
        out[bd] = lifted
        return out


def projected_theta_edges(grid: Grid, points, degrees, method: str = "cg"):
    """Singular phase increments made discretely divergence free.

    The wrapped angle increments t have the right discrete curl (2 pi d_j
    around the cell holding p_j) but a spurious divergence on the nodes next
    to each vortex.  Returns t - D chi with chi = 0 on the boundary and
    D^T K_geom (t - D chi) = 0 at interior nodes.  Differences of theta
    along the boundary are unchanged.
    """
    tx, ty = theta_edges(grid, points, degrees)
    if len(points) == 0:
        return tx, ty
    wx, wy, _ = grid.edge_weights()
    op = DirichletOperator(grid, wx, wy)
    chi, _ = op.solve(np.zeros(grid.shape), -tx, -ty, method=method)
    return tx - (chi[1:, :] - chi[:-1, :]), ty - (chi[:, 1:] - chi[:, :-1])


def solve_phase(p: PhaseProblem) -> Field:
    """Solve -div(w grad(theta + psi)) = 0 for psi; stores psi and residual on ``p``.

    The returned psi is the smooth correction: theta is represented by its
    divergence-free discrete increments, so psi carries no grid-scale bump at
    the vortex cells.
    """
    grid = p.grid
    check_points_off_nodes(grid, p.points)
    kx, ky = p.edge_coefficients()
    tx, ty = projected_theta_edges(grid, p.points, p.degrees, p.method)
    op = DirichletOperator(grid, kx, ky)
    psi, res = op.solve(p.target_boundary(), tx, ty, method=p.method)
    if res > PHASE_RES_TOL:
        logger.warning("phase residual %.2e above tolerance", res)
    p.psi = psi
    p.residual = res
    p._t = (tx, ty)
    return Field(psi, grid)


def flux_through_circle(p: PhaseProblem, center: complex, radius: float) -> float:
    """Discrete flux of w grad(theta + psi) out of the nodes inside a circle.

    Sums k_e (theta_e + psi_e) over grid edges leaving the node set, the
    discrete analogue of the boundary integral of w d_nu(theta + psi).
    """
    grid = p.grid
    kx, ky = p.edge_coefficients()
    tx, ty = p._t
    psi = p.psi
    fx = kx * (tx + psi[1:, :] - psi[:-1, :])
    fy = ky * (ty + psi[:, 1:] - psi[:, :-1])
    inside = np.abs(grid.Z - center) < radius
    out = np.sum(fx[inside[:-1, :] & ~inside[1:, :]]) - np.sum(fx[~inside[:-1, :] & inside[1:, :]])
    out += np.sum(fy[inside[:, :-1] & ~inside[:, 1:]]) - np.sum(fy[~inside[:, :-1] & inside[:, 1:]])
    return float(out)


def interpolate(grid: Grid, values: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of a nodal field at complex points."""
    fx = (np.real(z) - grid.x[0]) / grid.h
    fy = (np.imag(z) - grid.y[0]) / grid.h
    i = np.clip(np.floor(fx).astype(int), 0, grid.shape[0] - 2)
    j = np.clip(np.floor(fy).astype(int), 0, grid.shape[1] - 2)
    s = fx - i
    t = fy - j
    return ((1 - s) * (1 - t) * values[i, j] + s * (1 - t) * values[i + 1, j]
            + (1 - s) * t * values[i, j + 1] + s * t * values[i + 1, j + 1])


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------

def _contour_F(z, nu, w, points, degrees) -> float:
    """Integral of H d_nu H over a contour, H = sum d ln|x - p|."""
    H = np.zeros(len(z))
    dH = np.zeros(len(z))
    for p, d in zip(points, degrees):
        q = z - p
        H += d * np.log(np.abs(q))
        dH += d * (q.real * nu.real + q.imag * nu.imag) / np.abs(q) ** 2
    return float(np.sum(w * H * dH))


def _circle(center: complex, r: float, m: int):
    t = 2 * np.pi * np.arange(m) / m
    nu = np.exp(1j * t)
    return center + r * nu, nu, np.full(m, 2 * np.pi * r / m)


def singular_energy(outer, points, degrees, rho: float, inner_regions=(), m: int = 512) -> float:
    """1/2 int w |grad theta|^2 on a domain minus the discs B(p_j, rho).

    ``outer`` is a contour (z, nu, w) of the domain boundary, where w = 1.
    Each entry of ``inner_regions`` is (contour, weight, members): a
    subregion with a different constant weight and the indices of the points
    it contains.  Uses int_D |grad H|^2 = boundary integral of H d_nu H.
    """
    total = 0.5 * _contour_F(*outer, points, degrees)
    outer_w = 1.0
    hole_w = {j: outer_w for j in range(len(points))}
    for contour, w_in, members in inner_regions:
        total += 0.5 * (w_in - outer_w) * _contour_F(*contour, points, degrees)
        for j in members:
            hole_w[j] = w_in
    for j, p in enumerate(points):
        total -= 0.5 * hole_w[j] * _contour_F(*_circle(p, rho, m), points, degrees)
    return total


def _contour_theta_flux(z, nu, w, points, degrees) -> np.ndarray:
    """d_nu theta at contour points."""
    out = np.zeros(len(z))
    for p, d in zip(points, degrees):
        q = z - p
        # grad theta = d (-y, x) / r^2
        out += d * (-q.imag * nu.real + q.real * nu.imag) / np.abs(q) ** 2
    return out


def regular_energy(p: PhaseProblem, outer, interfaces=(), m: int = 512) -> Tuple[float, float]:
    """Cross term int w grad theta . grad psi and 1/2 int w |grad psi|^2.

    The cross term is reduced to contour integrals of psi d_nu theta over the
    outer boundary (``outer`` = (z, nu, w, psi_values)) and over weight
    interfaces (``interfaces`` = [(contour, jump)], psi interpolated from the
    grid).  The quadratic term is summed on the grid.
    """
    kx, ky = p.edge_coefficients()
    psi = p.psi
    px = psi[1:, :] - psi[:-1, :]
    py = psi[:, 1:] - psi[:, :-1]
    quad = 0.5 * float(np.sum(kx * px * px) + np.sum(ky * py * py))
    z, nu, w, psi_b = outer
    cross = float(np.sum(w * psi_b * _contour_theta_flux(z, nu, w, p.points, p.degrees)))
    for (zc, nuc, wc), jump in interfaces:
        psi_c = interpolate(p.grid, psi, zc)
        cross += jump * float(np.sum(wc * psi_c * _contour_theta_flux(zc, nuc, wc, p.points, p.degrees)))
    return cross, quad


def boundary_lift(p: PhaseProblem, z: np.ndarray, center: complex = 0j) -> np.ndarray:
    """Boundary phase minus theta at contour points, lifted consistently with the grid data."""
    ang = np.angle(z - center)
    bp = p.boundary_phase
    if bp is None:
        total = np.zeros(len(z))
    elif isinstance(bp, BoundaryData):
        total = bp.phase(ang)
    else:
        total = np.asarray(bp(ang), float)
    vals = np.unwrap(_wrap(total - theta_nodes(z, p.points, p.degrees)))
    # align the 2 pi branch with the grid boundary values
    ref = interpolate(p.grid, p.psi, z[:1])[0]
    return vals + 2 * np.pi * np.round((ref - vals[0]) / (2 * np.pi))


def perforated_energy_K(r: float, g0: BoundaryData, betas: Sequence[complex], b: float = 1.0,
                        shape: Optional[InclusionShape] = None, n: int = 192,
                        degrees: Optional[Sequence[int]] = None, method: str = "cg",
                        problem: Optional[PhaseProblem] = None) -> float:
    """1/2 int over B_1 minus discs B(beta_i, r) of a^2 |grad(theta + psi_0)|^2.

    ``a = b`` inside ``shape`` (default B(0, 1/2)), 1 elsewhere in B_1.
    """
    shape = shape or InclusionShape("disc", 0.5)
    betas = [complex(z) for z in betas]
    degrees = [1] * len(betas) if degrees is None else list(degrees)
    for i, z in enumerate(betas):
        if abs(z) + r >= 1:
            raise ConfigurationError("disc around beta touches the unit circle")
        for j in range(i):
            if abs(z - betas[j]) <= 2 * r:
                raise ConfigurationError("discs around betas overlap")
    if problem is None:
        problem = local_phase_problem(g0, betas, degrees, b, shape, n, method)
        solve_phase(problem)
    return _K_from_problem(problem, r, b, shape)


def local_phase_problem(g0: BoundaryData, betas, degrees, b: float, shape: InclusionShape,
                        n: int = 192, method: str = "cg") -> PhaseProblem:
    grid = Grid.from_domain(DomainSpec("disc", (1.0,), n))
    X, Y = grid.XY
    w = np.where(shape.contains(X, Y), b * b, 1.0)
    betas = [complex(z) for z in betas]
    return PhaseProblem(grid, betas, list(degrees), w, g0, method)


def _K_from_problem(problem: PhaseProblem, r: float, b: float, shape: InclusionShape,
                    m: int = 512) -> float:
    betas, degrees = problem.points, problem.degrees
    outer = _circle(0j, 1.0, 4 * m)
    inside = [j for j, z in enumerate(betas) if shape.contains(z.real, z.imag)]
    regions = [(shape.contour(4 * m), b * b, inside)] if b != 1.0 else []
    sing = singular_energy(outer, betas, degrees, r, regions, m)
    interfaces = [(shape.contour(4 * m), b * b - 1.0)] if b != 1.0 else []
    cross, quad = regular_energy(problem, (*outer, boundary_lift(problem, outer[0])), interfaces)
    return sing + cross + quad
