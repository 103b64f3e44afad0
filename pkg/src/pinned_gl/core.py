"""Geometry, pinning configuration, grid fields and discrete energies.

Fields live on the nodes of a uniform Cartesian grid (``ij`` indexing, shape
``(nx + 1, ny + 1)``).  Each cell carries a weight in [0, 1] equal to the
fraction of its area inside the domain; energies are assembled from these
cell weights so that curved boundaries are not staircased.
"""
from __future__ import annotations

import logging
import struct
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

WEIGHT_TOL = 1e-10
MIN_CELLS_ACROSS = 8


class ConfigurationError(ValueError):
    """Invalid geometry, pinning or boundary data."""


class InvariantError(ValueError):
    """A documented invariant of an input field is violated."""


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DomainSpec:
    """Computational domain.

    ``kind`` is ``"disc"`` (``extent = (radius,)``) or ``"rectangle"``
    (``extent = (Lx, Ly)``).  ``n`` is the number of cells along the first
    axis, so ``h = 2 * radius / n`` for discs and ``h = Lx / n`` for
    rectangles.
    """

    kind: str = "disc"
    extent: Tuple[float, ...] = (1.0,)
    n: int = 128
    center: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.kind in ("unit-disc", "unit_disc"):
            object.__setattr__(self, "kind", "disc")
        if self.kind not in ("disc", "rectangle"):
            raise ConfigurationError(f"unknown domain kind {self.kind!r}")
        ext = tuple(float(e) for e in np.atleast_1d(self.extent))
        need = 1 if self.kind == "disc" else 2
        if len(ext) != need or min(ext) <= 0:
            raise ConfigurationError(f"bad extent {self.extent!r} for {self.kind}")
        object.__setattr__(self, "extent", ext)
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if int(self.n) < 4:
            raise ConfigurationError("grid resolution n must be >= 4")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        if self.kind == "disc":
            return 2.0 * self.extent[0] / self.n
        return self.extent[0] / self.n

    def with_n(self, n: int) -> "DomainSpec":
        return DomainSpec(self.kind, self.extent, n, self.center)

    def contains(self, x, y) -> np.ndarray:
        """Strict interior membership."""
        x = np.asarray(x, float) - self.center[0]
        y = np.asarray(y, float) - self.center[1]
        if self.kind == "disc":
            return np.hypot(x, y) < self.extent[0]
        lx, ly = self.extent
        return (np.abs(x) < lx / 2) & (np.abs(y) < ly / 2)

    def distance_to_boundary(self, x, y) -> np.ndarray:
        x = np.asarray(x, float) - self.center[0]
        y = np.asarray(y, float) - self.center[1]
        if self.kind == "disc":
            return np.abs(self.extent[0] - np.hypot(x, y))
        lx, ly = self.extent
        dx = lx / 2 - np.abs(x)
        dy = ly / 2 - np.abs(y)
        inside = (dx > 0) & (dy > 0)
        out = np.hypot(np.minimum(dx, 0), np.minimum(dy, 0))
        return np.where(inside, np.minimum(dx, dy), out)

    def boundary_contour(self, m: int = 512):
        """Counter-clockwise quadrature of the boundary.

        Returns points ``z`` (complex), outward normals ``nu`` (complex) and
        arc-length weights ``w``.
        """
        c = complex(*self.center)
        if self.kind == "disc":
            t = 2 * np.pi * np.arange(m) / m
            nu = np.exp(1j * t)
            R = self.extent[0]
            return c + R * nu, nu, np.full(m, 2 * np.pi * R / m)
        lx, ly = self.extent
        corners = [complex(-lx / 2, -ly / 2), complex(lx / 2, -ly / 2),
                   complex(lx / 2, ly / 2), complex(-lx / 2, ly / 2)]
        return polygon_contour(np.array(corners) + c, max(m // 4, 16))


def polygon_contour(vertices: np.ndarray, per_edge: int = 64):
    """Gauss-Legendre quadrature along a counter-clockwise polygon."""
    s, ws = np.polynomial.legendre.leggauss(per_edge)
    s = 0.5 * (s + 1)
    pts, nus, wts = [], [], []
    k = len(vertices)
    for i in range(k):
        p, q = vertices[i], vertices[(i + 1) % k]
        e = q - p
        pts.append(p + s * e)
        nus.append(np.full(per_edge, -1j * e / abs(e)))
        wts.append(0.5 * ws * abs(e))
    return np.concatenate(pts), np.concatenate(nus), np.concatenate(wts)


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform node grid with interior/boundary masks and cell weights."""

    x: np.ndarray
    y: np.ndarray
    h: float
    interior: np.ndarray
    boundary: np.ndarray
    cells: np.ndarray
    domain: Optional[DomainSpec] = None

    @classmethod
    def from_domain(cls, dom: DomainSpec) -> "Grid":
        h = dom.h
        cx, cy = dom.center
        if dom.kind == "disc":
            R = dom.extent[0]
            nx = ny = dom.n
            x = cx - R + h * np.arange(nx + 1)
            y = cy - R + h * np.arange(ny + 1)
        else:
            lx, ly = dom.extent
            nx = dom.n
            ny = int(round(ly / h))
            if abs(ny * h - ly) > 1e-9 * ly:
                raise ConfigurationError("rectangle sides must be commensurate with h")
            x = cx - lx / 2 + h * np.arange(nx + 1)
            y = cy - ly / 2 + h * np.arange(ny + 1)
        X, Y = np.meshgrid(x, y, indexing="ij")
        if dom.kind == "disc":
            cells = disc_cell_fraction(x, y, (cx, cy), dom.extent[0])
            interior = np.hypot(X - cx, Y - cy) < dom.extent[0] * (1 - 1e-12)
        else:
            cells = np.ones((nx, ny))
            interior = np.zeros_like(X, dtype=bool)
            interior[1:-1, 1:-1] = True
        active_nodes = node_touch(cells > 0)
        boundary = active_nodes & ~interior
        return cls(x, y, h, interior, boundary, cells, dom)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.interior.shape

    @property
    def XY(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    @property
    def Z(self) -> np.ndarray:
        X, Y = self.XY
        return X + 1j * Y

    @property
    def active(self) -> np.ndarray:
        return self.interior | self.boundary

    def edge_weights(self, cells: Optional[np.ndarray] = None):
        """Return (wx, wy, area) for a cell weight array.

        ``wx[i, j]`` couples nodes (i, j)-(i+1, j), ``wy[i, j]`` couples
        (i, j)-(i, j+1); ``area`` is the nodal quadrature weight.
        """
        c = self.cells if cells is None else cells
        return _edge_weights(c, self.h)

    def disc_cells(self, center, radius: float) -> np.ndarray:
        """Cell weights of B(center, radius) intersected with the domain."""
        frac = disc_cell_fraction(self.x, self.y, center, radius)
        return np.minimum(frac, self.cells) if frac.any() else frac

    def annulus_cells(self, center, r_in: float, r_out: float) -> np.ndarray:
        return np.clip(self.disc_cells(center, r_out)
                       - disc_cell_fraction(self.x, self.y, center, r_in), 0, None)

    def nodes_within(self, center, radius: float) -> np.ndarray:
        X, Y = self.XY
        return np.hypot(X - center[0], Y - center[1]) < radius


def _edge_weights(c: np.ndarray, h: float):
    nx, ny = c.shape
    cp = np.zeros((nx + 2, ny + 2))
    cp[1:-1, 1:-1] = c
    wx = 0.5 * (cp[1:-1, :-1] + cp[1:-1, 1:])          # (nx, ny + 1)
    wy = 0.5 * (cp[:-1, 1:-1] + cp[1:, 1:-1])          # (nx + 1, ny)
    area = 0.25 * h * h * (cp[:-1, :-1] + cp[1:, :-1] + cp[:-1, 1:] + cp[1:, 1:])
    return wx, wy, area


def node_touch(cellmask: np.ndarray) -> np.ndarray:
    """Nodes that are a corner of at least one marked cell."""
    nx, ny = cellmask.shape
    out = np.zeros((nx + 1, ny + 1), dtype=bool)
    out[:-1, :-1] |= cellmask
    out[1:, :-1] |= cellmask
    out[:-1, 1:] |= cellmask
    out[1:, 1:] |= cellmask
    return out


def _quadrant_area(x, y, R):
    """Area of B(0, R) intersected with {X <= x, Y <= y} (vectorised)."""
    x = np.clip(x, -R, R)
    y = np.asarray(y, float)
    S = lambda t: 0.5 * (t * np.sqrt(np.maximum(R * R - t * t, 0)) + R * R * np.arcsin(t / R))
    yc = np.clip(y, -R, R)
    c = np.sqrt(R * R - yc * yc)
    # integrand in t: 2 s(t) (or 0) where s(t) <= |y|, y + s(t) where s(t) > |y|
    lo = np.minimum(x, -c)
    mid = np.clip(x, -c, c)
    outer = np.where(yc >= 0, 2.0, 0.0)
    area = outer * (S(lo) - S(-R))
    area += yc * (mid + c) + S(mid) - S(-c)
    hi = np.maximum(x, c)
    area += outer * (S(hi) - S(c))
    return np.where(y >= R, 2 * (S(x) - S(-R)), np.where(y <= -R, 0.0, area))


def disc_cell_fraction(x: np.ndarray, y: np.ndarray, center, radius: float) -> np.ndarray:
    """Exact area fraction of each grid cell inside a disc."""
    h = x[1] - x[0]
    xe = np.asarray(x, float) - center[0]
    ye = np.asarray(y, float) - center[1]
    F = _quadrant_area(xe[:, None], ye[None, :], radius)
    frac = (F[1:, 1:] - F[:-1, 1:] - F[1:, :-1] + F[:-1, :-1]) / (h * h)
    return np.clip(frac, 0.0, 1.0)


# ---------------------------------------------------------------------------
# pinning
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InclusionShape:
    """Reference shape omega with closure inside B(0, 1) and 0 inside."""

    kind: str = "disc"
    radius: float = 0.5
    vertices: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind == "disc":
            if not 0 < self.radius < 1:
                raise ConfigurationError("disc shape radius must lie in (0, 1)")
        elif self.kind == "polygon":
            v = np.asarray(self.vertices, float)
            if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
                raise ConfigurationError("polygon needs >= 3 vertices")
            if np.hypot(v[:, 0], v[:, 1]).max() >= 1:
                raise ConfigurationError("polygon must lie inside the unit disc")
            area = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
            if area < 0:
                v = v[::-1]
            object.__setattr__(self, "vertices", tuple(map(tuple, v)))
            if not self.contains(np.zeros(1), np.zeros(1))[0]:
                raise ConfigurationError("polygon must contain the origin")
        else:
            raise ConfigurationError(f"unknown shape kind {self.kind!r}")

    @property
    def outer_radius(self) -> float:
        if self.kind == "disc":
            return self.radius
        v = np.asarray(self.vertices)
        return float(np.hypot(v[:, 0], v[:, 1]).max())

    @property
    def inner_radius(self) -> float:
        """Distance from 0 to the shape boundary."""
        if self.kind == "disc":
            return self.radius
        return float(self.distance_to_boundary(np.zeros(1), np.zeros(1))[0])

    def contains(self, x, y) -> np.ndarray:
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if self.kind == "disc":
            return np.hypot(x, y) < self.radius
        v = np.asarray(self.vertices)
        inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        for k in range(len(v)):
            x1, y1 = v[k]
            x2, y2 = v[(k + 1) % len(v)]
            crosses = (y1 > y) != (y2 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (x < xc)
        return inside

    def distance_to_boundary(self, x, y) -> np.ndarray:
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if self.kind == "disc":
            return np.abs(np.hypot(x, y) - self.radius)
        v = np.asarray(self.vertices)
        best = np.full(np.broadcast(x, y).shape, np.inf)
        for k in range(len(v)):
            p, q = v[k], v[(k + 1) % len(v)]
            e = q - p
            t = np.clip(((x - p[0]) * e[0] + (y - p[1]) * e[1]) / (e @ e), 0, 1)
            best = np.minimum(best, np.hypot(x - p[0] - t * e[0], y - p[1] - t * e[1]))
        return best

    def contour(self, m: int = 256):
        """Counter-clockwise quadrature of the shape boundary (z, nu, w)."""
        if self.kind == "disc":
            t = 2 * np.pi * np.arange(m) / m
            nu = np.exp(1j * t)
            return self.radius * nu, nu, np.full(m, 2 * np.pi * self.radius / m)
        v = np.asarray(self.vertices)
        return polygon_contour(v[:, 0] + 1j * v[:, 1], max(m // len(v), 16))

    def cell_fraction(self, x, y, center, delta: float) -> np.ndarray:
        if self.kind == "disc":
            return disc_cell_fraction(x, y, center, self.radius * delta)
        h = x[1] - x[0]
        s = (np.arange(4) + 0.5) / 4 * h
        px = (x[:-1][:, None, None, None] + s[None, None, :, None] - center[0]) / delta
        py = (y[:-1][None, :, None, None] + s[None, None, None, :] - center[1]) / delta
        return self.contains(px, py).mean(axis=(2, 3))


@dataclass(frozen=True)
class PinningConfig:
    """Inclusions a_i + delta * omega with contrast b."""

    centers: Tuple[Tuple[float, float], ...] = ()
    shape: InclusionShape = field(default_factory=InclusionShape)
    b: float = 0.5
    delta: float = 0.2
    eps: float = 0.02

    def __post_init__(self):
        c = np.asarray(self.centers, float).reshape(-1, 2)
        object.__setattr__(self, "centers", tuple(map(tuple, c)))
        if not 0 < self.b < 1:
            raise ConfigurationError("contrast b must lie strictly in (0, 1)")
        if self.delta <= 0 or self.eps <= 0:
            raise ConfigurationError("delta and eps must be positive")
        if self.eps >= self.delta:
            raise ConfigurationError("xi = eps/delta must be < 1")

    @property
    def M(self) -> int:
        return len(self.centers)

    @property
    def xi(self) -> float:
        return self.eps / self.delta

    def with_scales(self, eps: Optional[float] = None, delta: Optional[float] = None) -> "PinningConfig":
        return PinningConfig(self.centers, self.shape, self.b,
                             self.delta if delta is None else delta,
                             self.eps if eps is None else eps)

    def which_inclusion(self, x, y) -> np.ndarray:
        """Index of the inclusion containing each point, -1 if none."""
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        out = np.full(np.broadcast(x, y).shape, -1, dtype=int)
        for i, (ax, ay) in enumerate(self.centers):
            out[self.shape.contains((x - ax) / self.delta, (y - ay) / self.delta)] = i
        return out

    def distance_to_inclusions(self, x, y) -> np.ndarray:
        """Distance to the union of inclusion boundaries."""
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        d = np.full(np.broadcast(x, y).shape, np.inf)
        for ax, ay in self.centers:
            d = np.minimum(d, self.delta * self.shape.distance_to_boundary(
                (x - ax) / self.delta, (y - ay) / self.delta))
        return d

    def validate(self, dom: DomainSpec) -> None:
        R = self.delta * self.shape.outer_radius
        c = np.asarray(self.centers).reshape(-1, 2)
        for i, a in enumerate(c):
            if not dom.contains(a[0], a[1]) or dom.distance_to_boundary(a[0], a[1]) <= R:
                raise ConfigurationError(f"inclusion {i} overlaps the domain boundary")
            for j in range(i):
                if np.hypot(*(a - c[j])) <= 2 * R:
                    raise ConfigurationError(f"inclusions {j} and {i} overlap")
        if self.M:
            across = 2 * self.delta * self.shape.inner_radius / dom.h
            if across < MIN_CELLS_ACROSS:
                raise ConfigurationError(
                    f"inclusions span only {across:.1f} cells (< {MIN_CELLS_ACROSS}); raise n")

    def diagnostics(self) -> "ScaleDiagnostics":
        return ScaleDiagnostics.from_scales(self.eps, self.delta)

    def hash_payload(self) -> dict:
        return {"centers": [list(map(float, a)) for a in self.centers],
                "shape": {"kind": self.shape.kind, "radius": self.shape.radius,
                          "vertices": [list(v) for v in self.shape.vertices]},
                "b": self.b, "delta": self.delta}


@dataclass(frozen=True)
class ScaleDiagnostics:
    eps: float
    delta: float
    xi: float
    h_ratio: float
    h_warning: bool

    @classmethod
    def from_scales(cls, eps: float, delta: float) -> "ScaleDiagnostics":
        ratio = abs(np.log(delta)) ** 3 / abs(np.log(eps))
        return cls(eps, delta, eps / delta, float(ratio), bool(ratio > 1))


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Field:
    """Node values (real or complex) on a grid."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"field shape {self.values.shape} != grid shape {self.grid.shape}")

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(values, self.grid)


def build_pinning_field(cfg: PinningConfig, dom_or_grid) -> Field:
    """Sample a_delta on the grid: b inside the inclusions, 1 elsewhere."""
    grid = dom_or_grid if isinstance(dom_or_grid, Grid) else Grid.from_domain(dom_or_grid)
    if grid.domain is not None:
        cfg.validate(grid.domain)
    X, Y = grid.XY
    a = np.ones(grid.shape)
    a[cfg.which_inclusion(X, Y) >= 0] = cfg.b
    return Field(a, grid)


@dataclass(frozen=True)
class BoundaryData:
    """Trace g = m(theta) exp(i (d theta + phi(theta) + shift)).

    ``phase_cos[k]``/``phase_sin[k]`` are the coefficients of cos((k+1) theta)
    and sin((k+1) theta) in phi.  The optional modulus perturbation is
    m = 1 - modulus_amplitude * (1 + cos theta) / 2.
    """

    degree: int = 1
    phase_cos: Tuple[float, ...] = ()
    phase_sin: Tuple[float, ...] = ()
    shift: float = 0.0
    modulus_amplitude: float = 0.0

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 0:
            raise ConfigurationError("degree must be a non-negative integer")
        object.__setattr__(self, "phase_cos", tuple(float(c) for c in self.phase_cos))
        object.__setattr__(self, "phase_sin", tuple(float(c) for c in self.phase_sin))
        if not 0 <= self.modulus_amplitude < 1:
            raise ConfigurationError("modulus perturbation must lie in [0, 1)")

    def phi(self, theta) -> np.ndarray:
        theta = np.asarray(theta, float)
        out = np.full(theta.shape, float(self.shift))
        for k, c in enumerate(self.phase_cos):
            out += c * np.cos((k + 1) * theta)
        for k, s in enumerate(self.phase_sin):
            out += s * np.sin((k + 1) * theta)
        return out

    def phase(self, theta) -> np.ndarray:
        """Continuous lift d theta + phi(theta)."""
        theta = np.asarray(theta, float)
        return self.degree * theta + self.phi(theta)

    def modulus(self, theta) -> np.ndarray:
        return 1.0 - self.modulus_amplitude * 0.5 * (1 + np.cos(np.asarray(theta, float)))

    def __call__(self, theta) -> np.ndarray:
        return self.modulus(theta) * np.exp(1j * self.phase(theta))

    def winding(self, samples: int = 4096) -> int:
        t = 2 * np.pi * np.arange(samples + 1) / samples
        z = self(t)
        return int(round(np.sum(np.angle(z[1:] * np.conj(z[:-1]))) / (2 * np.pi)))

    def rotated(self, angle: float) -> "BoundaryData":
        """Trace of the rotated problem: g_R(theta) = g(theta - angle) e^{i d angle}."""
        n = np.arange(1, max(len(self.phase_cos), len(self.phase_sin)) + 1)
        c = np.zeros(len(n))
        s = np.zeros(len(n))
        c[:len(self.phase_cos)] = self.phase_cos
        s[:len(self.phase_sin)] = self.phase_sin
        ca, sa = np.cos(n * angle), np.sin(n * angle)
        return BoundaryData(self.degree, tuple(c * ca - s * sa), tuple(c * sa + s * ca),
                            self.shift, self.modulus_amplitude)

    def on_grid(self, grid: Grid) -> np.ndarray:
        """Trace values at boundary nodes (angle measured from the domain centre)."""
        cx, cy = grid.domain.center if grid.domain is not None else (0.0, 0.0)
        X, Y = grid.XY
        return self(np.arctan2(Y - cy, X - cx))


def apply_boundary(values: np.ndarray, g: BoundaryData, grid: Grid) -> np.ndarray:
    out = np.array(values, dtype=complex)
    gv = g.on_grid(grid)
    out[grid.boundary] = gv[grid.boundary]
    out[~grid.active] = 0
    return out


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyBreakdown:
    total: float
    gradient: float
    potential: float

    def as_dict(self) -> dict:
        return {"total": self.total, "gradient": self.gradient, "potential": self.potential}


def _vals(f) -> np.ndarray:
    return f.values if isinstance(f, Field) else np.asarray(f)


def _grid_of(*fields) -> Grid:
    for f in fields:
        if isinstance(f, Field):
            return f.grid
    raise TypeError("at least one argument must be a Field")


def check_weight(U: np.ndarray, mask: np.ndarray, b: Optional[float]) -> None:
    lo = (b if b is not None else 0.0) - WEIGHT_TOL
    vals = U[mask]
    if vals.size and (vals.min() < lo or vals.max() > 1 + WEIGHT_TOL):
        raise InvariantError(
            f"weight outside [{lo + WEIGHT_TOL:g}, 1]: range [{vals.min():.3g}, {vals.max():.3g}]")


class Functional:
    """Discrete weighted GL functional on a fixed grid.

    energy(u) = 1/2 sum_e c_e k_e |u_i - u_j|^2 + sum_i A_i p_i (s_i - |u_i|^2)^2 / (4 eps^2)

    with edge coefficients ``k`` and nodal weights ``p``/targets ``s``.  This
    covers E (k = 1, p = 1, s = a^2) and F (k = U^2 edge average,
    p = U^4, s = 1).
    """

    def __init__(self, grid: Grid, eps: float, kx, ky, p, s, cells=None):
        self.grid = grid
        self.eps = float(eps)
        wx, wy, area = grid.edge_weights(cells)
        self.cx = wx * kx
        self.cy = wy * ky
        self.cp = area * p / (4 * self.eps ** 2)
        self.s = s

    @classmethod
    def E(cls, grid: Grid, a, eps: float, cells=None) -> "Functional":
        a = _vals(a)
        return cls(grid, eps, 1.0, 1.0, 1.0, a * a, cells)

    @classmethod
    def F(cls, grid: Grid, U, eps: float, cells=None, weight_rule: str = "mean") -> "Functional":
        U = _vals(U)
        kx, ky = edge_average(U, weight_rule)
        return cls(grid, eps, kx, ky, U ** 4, 1.0, cells)

    def parts(self, u: np.ndarray) -> EnergyBreakdown:
        dx = u[1:, :] - u[:-1, :]
        dy = u[:, 1:] - u[:, :-1]
        grad = 0.5 * (np.sum(self.cx * (dx.real ** 2 + dx.imag ** 2))
                      + np.sum(self.cy * (dy.real ** 2 + dy.imag ** 2)))
        m = self.s - (u.real ** 2 + u.imag ** 2)
        pot = np.sum(self.cp * m * m)
        return EnergyBreakdown(float(grad + pot), float(grad), float(pot))

    def value_and_grad(self, u: np.ndarray):
        """Energy and its gradient (d/d re + i d/d im) at every node."""
        dx = u[1:, :] - u[:-1, :]
        dy = u[:, 1:] - u[:, :-1]
        fx = self.cx * dx
        fy = self.cy * dy
        mod2 = u.real ** 2 + u.imag ** 2
        m = self.s - mod2
        e = 0.5 * (np.sum((fx * dx.conj()).real) + np.sum((fy * dy.conj()).real)) \
            + np.sum(self.cp * m * m)
        g = -4 * self.cp * m * u
        g[:-1, :] -= fx
        g[1:, :] += fx
        g[:, :-1] -= fy
        g[:, 1:] += fy
        return float(e), g


def edge_average(U: np.ndarray, rule: str = "mean"):
    """Edge coefficients for a nodal weight U: mean of U^2 or product U_i U_j."""
    if rule == "mean":
        U2 = U * U
        return 0.5 * (U2[1:, :] + U2[:-1, :]), 0.5 * (U2[:, 1:] + U2[:, :-1])
    if rule == "product":
        return U[1:, :] * U[:-1, :], U[:, 1:] * U[:, :-1]
    raise ValueError(f"unknown weight rule {rule!r}")


def energy_E(u: Field, a, eps: float, cells: Optional[np.ndarray] = None) -> EnergyBreakdown:
    """1/2 int |grad u|^2 + (a^2 - |u|^2)^2 / (2 eps^2)."""
    grid = _grid_of(u, a)
    a = np.ones(grid.shape) if a is None else _vals(a)
    return Functional.E(grid, a, eps, cells).parts(_vals(u).astype(complex))


def energy_F(v: Field, U, eps: float, cells: Optional[np.ndarray] = None,
             b: Optional[float] = None, weight_rule: str = "mean") -> EnergyBreakdown:
    """1/2 int U^2 |grad v|^2 + U^4 (1 - |v|^2)^2 / (2 eps^2)."""
    grid = _grid_of(v, U)
    Uv = _vals(U) if not np.isscalar(U) else np.full(grid.shape, float(U))
    check_weight(Uv, grid.active, b)
    return Functional.F(grid, Uv, eps, cells, weight_rule).parts(_vals(v).astype(complex))


def cell_energy_density(v: Field, weight, eps: float, kind: str = "F",
                        weight_rule: str = "mean") -> np.ndarray:
    """Per-cell energy of E (``weight = a``) or F (``weight = U``).

    Each edge is split equally between its two cells and each nodal
    potential between the four cells around the node, so the cell values
    add up to the corresponding energy.
    """
    grid = v.grid
    w = _vals(weight) if weight is not None else np.ones(grid.shape)
    if kind == "F":
        kx, ky = edge_average(w, weight_rule)
        p, s = w ** 4, 1.0
    else:
        kx, ky, p, s = np.ones((grid.shape[0] - 1, grid.shape[1])), \
            np.ones((grid.shape[0], grid.shape[1] - 1)), 1.0, w * w
    u = _vals(v).astype(complex)
    h2 = grid.h ** 2
    dx = np.abs(u[1:, :] - u[:-1, :]) ** 2 * kx
    dy = np.abs(u[:, 1:] - u[:, :-1]) ** 2 * ky
    m = s - np.abs(u) ** 2
    pn = p * m * m / (4 * eps ** 2)
    pot = 0.25 * h2 * (pn[:-1, :-1] + pn[1:, :-1] + pn[:-1, 1:] + pn[1:, 1:])
    # an edge shared by two cells carries half its weight into each
    grad = 0.25 * (dx[:, :-1] + dx[:, 1:] + dy[:-1, :] + dy[1:, :])
    return grid.cells * (grad + pot)


# ---------------------------------------------------------------------------
# rescaling
# ---------------------------------------------------------------------------

def rescale_hat(v: Field, center, delta: float, rho: float, target_n: int = 128) -> Field:
    """Return v_hat(x_hat) = v(center + delta * x_hat) on a disc grid of radius rho / delta.

    Values are bilinearly interpolated; the target grid must fit inside the
    source grid.
    """
    from scipy.interpolate import RegularGridInterpolator

    src = v.grid
    R = rho / delta
    cx, cy = center
    if (cx - rho < src.x[0] - 1e-12 or cx + rho > src.x[-1] + 1e-12
            or cy - rho < src.y[0] - 1e-12 or cy + rho > src.y[-1] + 1e-12):
        raise ConfigurationError("rho / delta exceeds the extent of the source grid")
    tgt = Grid.from_domain(DomainSpec("disc", (R,), target_n))
    Xh, Yh = tgt.XY
    vals = v.values.astype(complex)
    pts = np.stack([cx + delta * Xh.ravel(), cy + delta * Yh.ravel()], axis=-1)
    re = RegularGridInterpolator((src.x, src.y), vals.real)(pts)
    im = RegularGridInterpolator((src.x, src.y), vals.imag)(pts)
    out = (re + 1j * im).reshape(tgt.shape)
    out[~tgt.active] = 0
    return Field(out if v.is_complex else out.real, tgt)


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------

_MAGIC = b"PGLF"


def write_field(path, f: Field) -> None:
    """Binary container: header (dims, spacing, origin, dtype), mask, row-major payload."""
    g = f.grid
    cplx = f.is_complex
    mask = (g.interior.astype(np.uint8) + 2 * g.boundary.astype(np.uint8))
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIIB", 1, g.shape[0], g.shape[1], int(cplx)))
        fh.write(struct.pack("<ddd", g.h, g.x[0], g.y[0]))
        fh.write(np.ascontiguousarray(mask).tobytes(order="C"))
        fh.write(np.ascontiguousarray(f.values, dtype="<c16" if cplx else "<f8").tobytes(order="C"))


def read_field(path) -> Field:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a field container")
        _, n0, n1, cplx = struct.unpack("<IIIB", fh.read(13))
        h, x0, y0 = struct.unpack("<ddd", fh.read(24))
        mask = np.frombuffer(fh.read(n0 * n1), dtype=np.uint8).reshape(n0, n1)
        dt = "<c16" if cplx else "<f8"
        vals = np.frombuffer(fh.read(), dtype=dt).reshape(n0, n1).copy()
    x = x0 + h * np.arange(n0)
    y = y0 + h * np.arange(n1)
    interior = mask == 1
    boundary = mask == 2
    active = interior | boundary
    cells = (active[:-1, :-1] & active[1:, :-1] & active[:-1, 1:] & active[1:, 1:]).astype(float)
    return Field(vals, Grid(x, y, h, interior, boundary, cells, None))


def write_field_csv(path, f: Field) -> None:
    g = f.grid
    X, Y = g.XY
    m = g.active
    vals = f.values.astype(complex)[m]
    data = np.column_stack([X[m], Y[m], vals.real, vals.imag])
    np.savetxt(path, data, delimiter=",", header="x,y,re,im", comments="", fmt="%.17g")


def warn_resolution(eps: float, h: float, what: str = "core") -> None:
    if eps < 2 * h:
        warnings.warn(f"{what} under-resolved: eps/h = {eps / h:.2f} < 2", RuntimeWarning)
