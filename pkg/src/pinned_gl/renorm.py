"""Renormalized energies, the degree optimizer and energy-expansion ledgers.

Normalisation: ``hhalf_seminorm`` returns sum |n| |a_n|^2, which equals
(1 / 2 pi) int |grad psi|^2 for the harmonic extension psi of the phase
outside (or inside) the unit circle.  Energies (1/2 int |grad psi|^2) are
therefore pi times the seminorm; ``tilde_W01(..., energy_units=True)`` and
``extract_tildeW`` use the energy normalisation.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import (BoundaryData, ConfigurationError, DomainSpec, Field, Grid, InclusionShape,
                   PinningConfig)
from .phase import (DirichletOperator, PhaseProblem, _circle, boundary_lift, interpolate,
                    local_phase_problem, perforated_energy_K, regular_energy, singular_energy,
                    solve_phase, _K_from_problem, _contour_theta_flux)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Fourier traces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FourierTrace:
    """Coefficients a_n, n = -N..N, of a function on a circle of given radius."""

    coeffs: Tuple[complex, ...]
    radius: float = 1.0

    def __post_init__(self):
        c = tuple(complex(x) for x in self.coeffs)
        if len(c) % 2 == 0:
            raise ValueError("coefficient vector must have odd length 2N + 1")
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self) -> int:
        return (len(self.coeffs) - 1) // 2

    def __getitem__(self, n: int) -> complex:
        return self.coeffs[n + self.N] if abs(n) <= self.N else 0j

    @classmethod
    def from_dict(cls, d: Dict[int, complex], radius: float = 1.0) -> "FourierTrace":
        N = max([abs(int(k)) for k in d] + [0])
        c = [0j] * (2 * N + 1)
        for k, v in d.items():
            c[int(k) + N] = complex(v)
        return cls(tuple(c), radius)

    @classmethod
    def from_samples(cls, values: np.ndarray, N: Optional[int] = None, radius: float = 1.0) -> "FourierTrace":
        """Coefficients from samples at theta_k = 2 pi k / m."""
        m = len(values)
        F = np.fft.fft(values) / m
        N = (m - 1) // 2 if N is None else min(N, (m - 1) // 2)
        n = np.arange(-N, N + 1)
        return cls(tuple(F[n % m]), radius)

    def is_real_phase(self, tol: float = 1e-12) -> bool:
        return all(abs(self[n] - np.conj(self[-n])) <= tol for n in range(self.N + 1))

    def __call__(self, theta) -> np.ndarray:
        theta = np.asarray(theta, float)
        n = np.arange(-self.N, self.N + 1)
        return np.exp(1j * np.multiply.outer(theta, n)) @ np.asarray(self.coeffs)


def phase_remainder(samples: np.ndarray, d0: int) -> np.ndarray:
    """Unwrapped phase of map samples minus d0 theta; checks the winding."""
    z = np.asarray(samples, complex)
    m = len(z)
    steps = np.angle(np.roll(z, -1) * np.conj(z))
    wind = int(round(steps.sum() / (2 * np.pi)))
    if wind != d0:
        raise ValueError(f"trace winds {wind} times, expected {d0}")
    theta = 2 * np.pi * np.arange(m) / m
    phase = np.angle(z[0]) + np.concatenate([[0.0], np.cumsum(steps[:-1])])
    return phase - d0 * theta


def hhalf_seminorm(t: FourierTrace) -> float:
    """sum |n| |a_n|^2."""
    c = np.asarray(t.coeffs)
    n = np.arange(-t.N, t.N + 1)
    return float(np.sum(np.abs(n) * np.abs(c) ** 2))


def annulus_energy(a: FourierTrace, b: FourierTrace, R: float) -> float:
    """(1 / 2 pi) int |grad psi|^2 on B_R minus B_1 for the harmonic psi with traces a (r=1), b (r=R)."""
    if R <= 1:
        raise ValueError("annulus ratio R must exceed 1")
    N = max(a.N, b.N)
    out = abs(b[0] - a[0]) ** 2 / np.log(R)
    for n in range(-N, N + 1):
        if n == 0:
            continue
        k = abs(n)
        an, bn = a[n], b[n]
        Rk = R ** k
        R2 = Rk * Rk
        cross = 2 * (np.conj(an) * bn + an * np.conj(bn)).real
        out += k / (R2 - 1) * ((abs(an) ** 2 + abs(bn) ** 2) * (R2 + 1) - cross * Rk)
    return float(out)


def tilde_W01(f0, g0, d0: int = 1, N: int = 64, energy_units: bool = False) -> Tuple[float, float]:
    """(W0, W1): seminorms of the phase remainders of f0 and g0.

    ``f0``/``g0`` may be FourierTraces of the phase remainder, or complex map
    samples on uniform angles (the d0 theta part is removed after
    unwrapping).  With ``energy_units`` the values are multiplied by pi.
    """
    out = []
    for t in (f0, g0):
        if not isinstance(t, FourierTrace):
            t = FourierTrace.from_samples(phase_remainder(np.asarray(t), d0), N)
        out.append(hhalf_seminorm(t) * (np.pi if energy_units else 1.0))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# discrete degree optimizer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DegreeConfiguration:
    degrees: Tuple[int, ...]
    cost: float

    @property
    def d(self) -> int:
        return int(sum(self.degrees))


def degree_cost(degrees: Sequence[int], ln_delta: float, ln_xi: float, b: float) -> float:
    d = np.asarray(degrees)
    return float(np.pi * np.sum(d * d) * abs(ln_delta) + np.pi * b * b * np.sum(np.abs(d)) * abs(ln_xi))


def discrete_optimizer(M: int, d: int, ln_delta: float, ln_xi: float, b: float,
                       rtol: float = 1e-12) -> List[DegreeConfiguration]:
    """All minimizing canonical (nonincreasing) degree vectors with |d_i| <= d.

    Branch and bound over nonincreasing vectors; the bound is the
    continuous relaxation s^2 / k for the quadratic part and |s| for the
    linear part of the remaining k entries summing to s.
    """
    if M < 1 or d < 1:
        raise ValueError("need M >= 1 and d >= 1")
    A = np.pi * abs(ln_delta)
    B = np.pi * b * b * abs(ln_xi)
    best = [np.inf]
    found: List[Tuple[Tuple[int, ...], float]] = []

    def bound(k, s):
        return A * s * s / k + B * abs(s) if k else (0.0 if s == 0 else np.inf)

    def rec(prefix, k, s, hi, cost):
        if k == 0:
            if s == 0:
                if cost < best[0] * (1 - rtol) - 1e-300:
                    best[0] = cost
                    found.clear()
                if cost <= best[0] * (1 + rtol) + 1e-300:
                    found.append((tuple(prefix), cost))
            return
        if cost + bound(k, s) > best[0] * (1 + rtol) + 1e-300:
            return
        for v in range(min(hi, d), -d - 1, -1):
            rest = s - v
            # remaining k-1 entries lie in [-d, v]
            if rest > (k - 1) * v or rest < -(k - 1) * d:
                continue
            rec(prefix + [v], k - 1, rest, v, cost + A * v * v + B * abs(v))

    rec([], M, d, d, 0.0)
    out = [DegreeConfiguration(p, c) for p, c in found if c <= best[0] * (1 + rtol) + 1e-300]
    return sorted(out, key=lambda x: x.degrees, reverse=True)


def balanced_window(M: int, d: int) -> Tuple[int, int]:
    m = d // M
    return m, m + 1


# ---------------------------------------------------------------------------
# W_g
# ---------------------------------------------------------------------------

@dataclass
class WgResult:
    value: float
    rho: Tuple[float, ...]
    ladder: Tuple[float, ...]
    slope: float
    method: str
    residual: float = 0.0


def _disc_dirichlet_energy(psi_b: np.ndarray) -> float:
    """1/2 int |grad psi|^2 for the harmonic psi on a disc with boundary samples psi_b."""
    m = len(psi_b)
    c = np.fft.fft(psi_b) / m
    n = np.fft.fftfreq(m, 1.0 / m)
    return float(np.pi * np.sum(np.abs(n) * np.abs(c) ** 2))


def extract_Wg(dom: DomainSpec, g: BoundaryData, points: Sequence[complex], degrees: Sequence[int],
               rho_ladder: Sequence[float] = (0.08, 0.04, 0.02), n: int = 128,
               method: str = "grid", m: int = 2048) -> WgResult:
    """Renormalized energy of point vortices: I_rho - pi sum d_i^2 |ln rho|, rho -> 0.

    The singular part of I_rho is integrated exactly on contours; the
    regular correction psi comes from ``solve_phase`` (``method="grid"``) or,
    on disc domains, from the Fourier series of its boundary trace
    (``method="spectral"``).  The ladder is fitted by c0 + c1 rho |ln rho| + c2 rho^2
    (the last column is dropped for two-rung ladders).
    """
    points = [complex(p) for p in points]
    degrees = [int(k) for k in degrees]
    if sum(degrees) != g.degree:
        raise ConfigurationError("degrees must sum to the boundary degree")
    rmax = max(rho_ladder)
    for i, p in enumerate(points):
        if not dom.contains(p.real, p.imag) or dom.distance_to_boundary(p.real, p.imag) <= rmax:
            raise ConfigurationError(f"point {p} too close to the boundary")
        for j in range(i):
            if abs(p - points[j]) < 4 * rmax:
                raise ConfigurationError("points closer than 4 rho_max")
    contour = dom.boundary_contour(m)
    z, nu, w = contour
    c = complex(*dom.center)
    if method == "spectral":
        if dom.kind != "disc":
            raise ConfigurationError("spectral W_g needs a disc domain")
        ang = np.angle(z - c)
        th = np.zeros(len(z))
        for p, d in zip(points, degrees):
            th += d * np.angle(z - p)
        psi_b = np.unwrap(np.angle(np.exp(1j * (g.phase(ang) - th))))
        cross = float(np.sum(w * psi_b * _contour_theta_flux(z, nu, w, points, degrees)))
        quad = _disc_dirichlet_energy(psi_b)
        residual = 0.0
    elif method == "grid":
        grid = Grid.from_domain(dom.with_n(n))
        prob = PhaseProblem(grid, points, degrees, None, g, "cg")
        solve_phase(prob)
        cross, quad = regular_energy(prob, (*contour, boundary_lift(prob, z, c)))
        residual = prob.residual
    else:
        raise ValueError(f"unknown method {method!r}")
    s2 = sum(k * k for k in degrees)
    vals = []
    for rho in rho_ladder:
        sing = singular_energy(contour, points, degrees, rho, (), 256)
        vals.append(sing + cross + quad - np.pi * s2 * abs(np.log(rho)))
    r = np.asarray(rho_ladder, float)
    cols = [np.ones_like(r), r * np.abs(np.log(r)), r * r][:len(r)]
    Amat = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(Amat, np.asarray(vals), rcond=None)
    return WgResult(float(coef[0]), tuple(map(float, r)), tuple(map(float, vals)), float(coef[1]),
                    method, float(residual))


def wg_closed_form_disc(points: Sequence[complex], degrees: Sequence[int]) -> float:
    """W_g on the unit disc for g = exp(i d theta) (image-charge formula)."""
    W = 0.0
    for i, (p, di) in enumerate(zip(points, degrees)):
        for j, (q, dj) in enumerate(zip(points, degrees)):
            if i != j:
                W -= np.pi * di * dj * np.log(abs(p - q))
            W -= np.pi * di * dj * np.log(abs(1 - p * np.conj(q)))
    return float(W)


@dataclass
class Selection:
    case: str
    options: List[Tuple[Tuple[int, ...], float]]
    best: List[Tuple[int, ...]]

    @property
    def tied(self) -> bool:
        return len(self.best) > 1


def select_inclusions(centers: Sequence, d: int, g: BoundaryData, dom: DomainSpec,
                      case: Optional[str] = None, evaluator: Optional[Callable] = None,
                      tie_tol: float = 1e-6) -> Selection:
    """Degree vectors over the inclusions minimizing W_g; ties are all reported.

    Case I (M >= d): every d-subset with unit degrees.  Case II (M < d):
    every vector with entries in {floor(d/M), floor(d/M) + 1} summing to d.
    """
    cs = [complex(*c) if not isinstance(c, complex) else c for c in centers]
    M = len(cs)
    case = case or ("I" if M >= d else "II")
    if evaluator is None:
        meth = "spectral" if dom.kind == "disc" else "grid"
        evaluator = lambda pts, degs: extract_Wg(dom, g, pts, degs, method=meth).value
    if case == "I":
        vectors = []
        for sub in itertools.combinations(range(M), d):
            vec = [0] * M
            for i in sub:
                vec[i] = 1
            vectors.append(tuple(vec))
    else:
        lo, hi = balanced_window(M, d)
        vectors = [v for v in itertools.product((lo, hi), repeat=M) if sum(v) == d]
    opts = []
    for vec in vectors:
        pts = [cs[i] for i in range(M) if vec[i]]
        degs = [vec[i] for i in range(M) if vec[i]]
        opts.append((vec, float(evaluator(pts, degs))))
    wmin = min(w for _, w in opts)
    best = [v for v, w in opts if w <= wmin + tie_tol * max(1.0, abs(wmin))]
    return Selection(case, opts, best)


def offsets_for_degree(k: int, shape: InclusionShape, radius_fraction: float = 0.5) -> List[complex]:
    """Symmetric placement of k vortices inside omega (omega units)."""
    if k <= 1:
        return [0j] * k
    r = radius_fraction * shape.inner_radius
    return [r * np.exp(2j * np.pi * j / k) for j in range(k)]


def predict_configuration(pinning: PinningConfig, g: BoundaryData, dom: DomainSpec,
                          n: int = 128, offsets: Optional[Dict[int, List[complex]]] = None) -> dict:
    """Predicted host inclusions, degrees and vortex points for a pinning configuration."""
    M, d = pinning.M, g.degree
    ln_delta, ln_xi = np.log(pinning.delta), np.log(pinning.xi)
    opt = discrete_optimizer(M, d, ln_delta, ln_xi, pinning.b)
    sel = select_inclusions(pinning.centers, d, g, dom)
    vec = sel.best[0]
    pts = []
    for i, k in enumerate(vec):
        a = complex(*pinning.centers[i])
        offs = (offsets or {}).get(k) or offsets_for_degree(k, pinning.shape)
        pts += [a + pinning.delta * o + 1e-7 * (1 + 1j) for o in offs]
    return {"case": sel.case, "optimizer": [c.degrees for c in opt], "selection": sel,
            "degrees": vec, "points": pts}


# ---------------------------------------------------------------------------
# local renormalized energies
# ---------------------------------------------------------------------------

@dataclass
class LadderResult:
    value: float
    r: Tuple[float, ...]
    ladder: Tuple[float, ...]


def eta0(betas: Sequence[complex], shape: InclusionShape) -> float:
    betas = [complex(z) for z in betas]
    cand = [float(shape.distance_to_boundary(z.real, z.imag)) for z in betas]
    cand += [abs(p - q) for i, p in enumerate(betas) for q in betas[:i]]
    return 0.25 * min(cand)


def extract_tildeW2(betas: Sequence[complex], g0: BoundaryData, b: float,
                    shape: Optional[InclusionShape] = None,
                    r_ladder: Sequence[float] = (0.05, 0.035, 0.025), n: int = 192,
                    degrees: Optional[Sequence[int]] = None, method: str = "cg") -> LadderResult:
    """lim K(r) - pi b^2 sum d_j^2 |ln r| on B_1 with a = b in omega (fit in r^2)."""
    shape = shape or InclusionShape("disc", 0.5)
    betas = [complex(z) for z in betas]
    degrees = [1] * len(betas) if degrees is None else list(degrees)
    if max(r_ladder) >= eta0(betas, shape):
        raise ConfigurationError("r ladder must stay below eta_0")
    prob = local_phase_problem(g0, betas, degrees, b, shape, n, method)
    solve_phase(prob)
    wts = [b * b if shape.contains(z.real, z.imag) else 1.0 for z in betas]
    s2 = sum(w * k * k for w, k in zip(wts, degrees))
    vals = [_K_from_problem(prob, r, b, shape) - np.pi * s2 * abs(np.log(r)) for r in r_ladder]
    r = np.asarray(r_ladder, float)
    coef, *_ = np.linalg.lstsq(np.column_stack([np.ones_like(r), r * r]), np.asarray(vals), rcond=None)
    return LadderResult(float(coef[0]), tuple(map(float, r)), tuple(map(float, vals)))


@dataclass
class TildeWResult:
    value: float
    W1: float
    W2: float
    cos: np.ndarray
    sin: np.ndarray
    value_no_modes: float
    flag: str = "ok"


class TildeWSolver:
    """Infimum over boundary phases of W1(g) + W2(beta, g) on the unit disc.

    With g = exp(i(d0 theta + phi)), phi = sum_n c_n cos n theta + s_n sin n theta,
    the correction psi depends affinely on (c, s), so W1 + W2 is an exact
    quadratic in (c, s).  The basis solutions for each Fourier mode do not
    depend on beta and are computed once.
    """

    def __init__(self, b: float, shape: Optional[InclusionShape] = None, n: int = 160,
                 N_modes: int = 8, r: float = 0.02):
        self.b = b
        self.shape = shape or InclusionShape("disc", 0.5)
        self.N = N_modes
        self.r = r
        base = local_phase_problem(BoundaryData(1), [], [], b, self.shape, n, "direct")
        self.grid = base.grid
        self.weight = base.weight
        kx, ky = base.edge_coefficients()
        self.kx, self.ky = kx, ky
        self.op = DirichletOperator(self.grid, kx, ky)
        X, Y = self.grid.XY
        ang = np.arctan2(Y, X)
        self.modes = []
        for k in range(1, N_modes + 1):
            for f in (np.cos, np.sin):
                u, _ = self.op.solve(f(k * ang), method="direct")
                self.modes.append(u)
        self.mode_n = np.repeat(np.arange(1, N_modes + 1), 2)
        self.outer = _circle(0j, 1.0, 2048)
        self.interface = self.shape.contour(2048)
        tz = np.angle(self.outer[0])
        self.mode_bd = [np.cos(k * tz) if j % 2 == 0 else np.sin(k * tz)
                        for j, k in enumerate(self.mode_n)]

    def _dpsi(self, u):
        return u[1:, :] - u[:-1, :], u[:, 1:] - u[:, :-1]

    def _bilinear(self, u, v) -> float:
        ux, uy = self._dpsi(u)
        vx, vy = self._dpsi(v)
        return float(np.sum(self.kx * ux * vx) + np.sum(self.ky * uy * vy))

    def _cross(self, psi_outer, psi_grid, points, degrees) -> float:
        z, nu, w = self.outer
        out = float(np.sum(w * psi_outer * _contour_theta_flux(z, nu, w, points, degrees)))
        if self.b != 1.0:
            zc, nuc, wc = self.interface
            vals = interpolate(self.grid, psi_grid, zc)
            out += (self.b ** 2 - 1) * float(np.sum(wc * vals * _contour_theta_flux(zc, nuc, wc, points, degrees)))
        return out

    def __call__(self, betas: Sequence[complex], degrees: Optional[Sequence[int]] = None,
                 N_modes: Optional[int] = None) -> TildeWResult:
        betas = [complex(z) for z in betas]
        degrees = [1] * len(betas) if degrees is None else list(degrees)
        d0 = sum(degrees)
        r = min(self.r, 0.9 * eta0(betas, self.shape))
        prob = PhaseProblem(self.grid, betas, degrees, self.weight, BoundaryData(d0), "direct")
        solve_phase(prob)
        psi0 = prob.psi
        z = self.outer[0]
        psi0_b = boundary_lift(prob, z)
        wts = [self.b ** 2 if self.shape.contains(q.real, q.imag) else 1.0 for q in betas]
        inside = [j for j, q in enumerate(betas) if self.shape.contains(q.real, q.imag)]
        regions = [(self.interface, self.b ** 2, inside)] if self.b != 1.0 else []
        sing = singular_energy(self.outer, betas, degrees, r, regions, 512)
        sing -= np.pi * sum(w * k * k for w, k in zip(wts, degrees)) * abs(np.log(r))
        c0 = self._cross(psi0_b, psi0, betas, degrees)
        q0 = 0.5 * self._bilinear(psi0, psi0)
        W2_0 = sing + c0 + q0
        K = 2 * (self.N if N_modes is None else min(N_modes, self.N))
        if K == 0:
            return TildeWResult(W2_0, 0.0, W2_0, np.zeros(0), np.zeros(0), W2_0)
        modes = self.modes[:K]
        lin = np.array([self._bilinear(psi0, u) + self._cross(self.mode_bd[j], u, betas, degrees)
                        for j, u in enumerate(modes)])
        Q = np.array([[self._bilinear(u, v) for v in modes] for u in modes])
        P = np.diag(np.pi * self.mode_n[:K].astype(float))  # W1 = pi/2 sum n (c^2 + s^2)
        H = Q + P
        try:
            x = np.linalg.solve(H, -lin)
            flag = "ok"
        except np.linalg.LinAlgError:
            x = np.linalg.lstsq(H, -lin, rcond=None)[0]
            flag = "singular"
        W1 = 0.5 * float(x @ P @ x)
        W2 = W2_0 + float(lin @ x) + 0.5 * float(x @ Q @ x)
        return TildeWResult(W1 + W2, W1, W2, x[0::2], x[1::2], W2_0, flag)


def extract_tildeW(betas: Sequence[complex], b: float, shape: Optional[InclusionShape] = None,
                   d0: Optional[int] = None, N_modes: int = 8, n: int = 160) -> TildeWResult:
    """Upper bound of inf over traces of W1 + W2 (energy units), modes |n| <= N_modes."""
    betas = [complex(z) for z in betas]
    if d0 is not None and d0 != len(betas):
        raise ValueError("d0 must equal the number of unit vortices")
    return TildeWSolver(b, shape, n, N_modes)(betas)


def minimize_tildeW(d0: int, b: float, shape: Optional[InclusionShape] = None, N_modes: int = 8,
                    n: int = 128, start: Optional[Sequence[complex]] = None):
    """Vortex positions alpha in omega minimizing the local renormalized energy."""
    from scipy.optimize import minimize as _min

    shape = shape or InclusionShape("disc", 0.5)
    solver = TildeWSolver(b, shape, n, N_modes)
    start = list(start) if start is not None else offsets_for_degree(d0, shape, 0.4)
    if d0 == 1 and start == [0j]:
        start = [0.01 + 0.007j]

    def f(x):
        pts = list(x[0::2] + 1j * x[1::2])
        try:
            if eta0(pts, shape) < 1e-3:
                return 1e6
            return solver(pts).value
        except Exception:
            return 1e6

    x0 = np.ravel([[z.real, z.imag] for z in start])
    res = _min(f, x0, method="Nelder-Mead", options={"xatol": 1e-4, "fatol": 1e-8, "maxiter": 400})
    pts = list(res.x[0::2] + 1j * res.x[1::2])
    return pts, float(res.fun)


# ---------------------------------------------------------------------------
# gamma
# ---------------------------------------------------------------------------

@dataclass
class GammaResult:
    value: float
    estimates: Tuple[float, float]
    xi_over_b: Tuple[float, float]
    r: float
    n: Tuple[int, int]


def _gamma_single(eps: float, r: float, cells_per_core: float, max_n: int):
    from .core import build_pinning_field
    from .solver import minimize_E

    h = eps / cells_per_core
    n = int(np.ceil(2 * r / h))
    n += n % 2
    if n > max_n:
        raise ConfigurationError(f"gamma grid n = {n} exceeds max_n = {max_n}")
    if r / (2 * r / n) < 32:
        raise ConfigurationError("under-resolved core: r / h < 32")
    dom = DomainSpec("disc", (r,), n)
    grid = Grid.from_domain(dom)
    a = Field(np.ones(grid.shape), grid)
    res = minimize_E(a, BoundaryData(1), eps, init="predicted")
    return res.energy.total - np.pi * np.log(r / eps), n


def compute_gamma(xi_over_b: float, r: float = 1.0, cells_per_core: float = 4.0,
                  max_n: int = 1024) -> GammaResult:
    """gamma from I(eps', r) - pi ln(r / eps') at eps' and eps'/2, Richardson in eps'^2."""
    if xi_over_b >= 0.25 * r:
        raise ConfigurationError("xi/b must be small compared with r")
    g1, n1 = _gamma_single(xi_over_b, r, cells_per_core, max_n)
    g2, n2 = _gamma_single(0.5 * xi_over_b, r, cells_per_core, max_n)
    val = g2 + (g2 - g1) / 3.0
    return GammaResult(float(val), (float(g1), float(g2)), (xi_over_b, 0.5 * xi_over_b), r, (n1, n2))


# ---------------------------------------------------------------------------
# expansion ledger
# ---------------------------------------------------------------------------

LOG_KINDS = ("ln_eps", "ln_delta", "ln_xi", "const")


@dataclass
class LedgerTerm:
    name: str
    coefficient: float
    kind: str
    provenance: str


@dataclass
class ExpansionLedger:
    case: str
    terms: List[LedgerTerm]

    def coefficients(self) -> Dict[str, float]:
        out = {k: 0.0 for k in LOG_KINDS}
        for t in self.terms:
            out[t.kind] += t.coefficient
        return out

    def evaluate(self, eps: float, delta: float) -> Tuple[float, List[float]]:
        """Predicted energy and the per-term values (summed in ledger order)."""
        mult = {"ln_eps": abs(np.log(eps)), "ln_delta": abs(np.log(delta)),
                "ln_xi": abs(np.log(eps / delta)), "const": 1.0}
        vals = [t.coefficient * mult[t.kind] for t in self.terms]
        total = 0.0
        for v in vals:
            total += v
        return total, vals

    def as_dict(self) -> dict:
        return {"case": self.case,
                "terms": [{"name": t.name, "coefficient": t.coefficient, "multiplies": t.kind,
                           "provenance": t.provenance} for t in self.terms],
                "coefficients": self.coefficients()}


_REQUIRED = {
    "I": ("d", "b", "Wg", "tildeW", "gamma"),
    "II": ("d", "b", "degrees", "Wg", "tildeW", "gamma"),
    "model": ("d0", "b", "rho", "W0", "tildeW", "gamma"),
}


def assemble_expansion(case: str, inputs: dict) -> ExpansionLedger:
    """Term-by-term energy expansion.

    Case I (M >= d): pi d b^2 |ln eps| + pi (1 - b^2) d |ln delta| + W_g + d (W~ + b^2 gamma + pi b^2 ln b).
    Case II (M < d): pi d b^2 |ln eps| + pi (sum d_i^2 - d b^2) |ln delta| + W_g
    + sum_i (W~_i + d_i b^2 gamma + pi d_i b^2 ln b).
    Model problem on B_rho: pi d0 b^2 ln(b / xi) + pi d0^2 ln(rho / delta) + W0 + W~ + d0 b^2 gamma.
    ``tildeW`` is in energy units (per vortex for Case I, per inclusion for Case II).
    """
    if case not in _REQUIRED:
        raise ValueError(f"unknown case {case!r}")
    missing = [k for k in _REQUIRED[case] if inputs.get(k) is None]
    if missing:
        raise ValueError(f"missing expansion inputs: {', '.join(missing)}")
    b = float(inputs["b"])
    gam = float(inputs["gamma"])
    T = LedgerTerm
    if case == "I":
        d = int(inputs["d"])
        terms = [
            T("core log", np.pi * d * b * b, "ln_eps", "case-I expansion: pi d b^2 |ln eps|"),
            T("pinning log", np.pi * (1 - b * b) * d, "ln_delta", "case-I expansion: pi (1-b^2) d |ln delta|"),
            T("W_g", float(inputs["Wg"]), "const", "renormalized energy of the host inclusion centres"),
            T("local W~", d * float(inputs["tildeW"]), "const", "local renormalized energy, one per vortex"),
            T("core constant", d * b * b * gam, "const", "d b^2 gamma from the unit-vortex core"),
            T("contrast shift", d * np.pi * b * b * np.log(b), "const", "pi d b^2 ln b from ln(b/xi)"),
        ]
    elif case == "II":
        degs = [int(k) for k in inputs["degrees"]]
        d = int(inputs["d"])
        if sum(degs) != d:
            raise ValueError("degrees must sum to d")
        s2 = sum(k * k for k in degs)
        tw = inputs["tildeW"]
        tw_sum = float(np.sum(tw)) if np.ndim(tw) else float(tw)
        terms = [
            T("core log", np.pi * d * b * b, "ln_eps", "case-II expansion: pi d b^2 |ln eps|"),
            T("pinning log", np.pi * (s2 - d * b * b), "ln_delta",
              "case-II expansion: pi (sum d_i^2 - d b^2) |ln delta|"),
            T("W_g", float(inputs["Wg"]), "const", "renormalized energy of the degree configuration"),
            T("local W~", tw_sum, "const", "local renormalized energies, one per occupied inclusion"),
            T("core constant", d * b * b * gam, "const", "sum d_i b^2 gamma"),
            T("contrast shift", d * np.pi * b * b * np.log(b), "const", "pi sum d_i b^2 ln b"),
        ]
    else:
        d0 = int(inputs["d0"])
        rho = float(inputs["rho"])
        terms = [
            T("core log", np.pi * d0 * b * b, "ln_xi", "model problem: pi d0 b^2 ln(b/xi)"),
            T("contrast shift", np.pi * d0 * b * b * np.log(b), "const", "model problem: pi d0 b^2 ln b"),
            T("inclusion log", np.pi * d0 * d0, "ln_delta", "model problem: pi d0^2 ln(rho/delta)"),
            T("disc radius", np.pi * d0 * d0 * np.log(rho), "const", "model problem: pi d0^2 ln rho"),
            T("W0", float(inputs["W0"]), "const", "outer trace seminorm energy"),
            T("local W~", float(inputs["tildeW"]), "const", "local renormalized energy at alpha"),
            T("core constant", d0 * b * b * gam, "const", "d0 b^2 gamma"),
        ]
    return ExpansionLedger(case, terms)
