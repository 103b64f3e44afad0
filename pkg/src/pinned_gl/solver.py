"""Minimizers of the discrete energies E and F with Dirichlet data."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize

from .core import (BoundaryData, DomainSpec, EnergyBreakdown, Field, Functional, Grid,
                   PinningConfig, apply_boundary, check_weight, energy_E, energy_F)
from .phase import PhaseProblem, harmonic_extension, solve_phase, theta_nodes
from .special import SolverError

logger = logging.getLogger(__name__)

DEFAULT_SEEDS = ("predicted", "random", "harmonic")


@dataclass(eq=False)
class SolveResult:
    v: Field
    energy: EnergyBreakdown
    iterations: int
    grad_norm: float
    rel_decrease: float
    wall_time: float
    converged: bool
    seed: str = "given"
    seed_energies: Dict[str, float] = field(default_factory=dict)
    history: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    def summary(self) -> dict:
        return {"energy": self.energy.as_dict(), "iterations": self.iterations,
                "grad_norm": self.grad_norm, "rel_decrease": self.rel_decrease,
                "converged": self.converged, "seed": self.seed,
                "seed_energies": dict(self.seed_energies)}


def _lbfgs(fn: Functional, u0: np.ndarray, free: np.ndarray, eps: float,
           rtol: float = 1e-12, gscale: float = 1e-6, max_rounds: int = 40,
           maxiter: int = 5000):
    """L-BFGS on the free nodes, restarted until both stopping rules hold.

    Stops when the last step lowered the energy by less than ``rtol``
    (relative) and the scaled gradient max |g_i| / A_i is below
    ``gscale / eps^2``.
    """
    grid = fn.grid
    idx = np.flatnonzero(free)
    k = idx.size
    base = u0.copy()
    gtol = gscale / eps ** 2
    _, _, area = grid.edge_weights()
    a_free = area.ravel()[idx]

    def fun(x):
        u = base.copy()
        u.ravel()[idx] = x[:k] + 1j * x[k:]
        e, g = fn.value_and_grad(u)
        gf = g.ravel()[idx]
        return e, np.concatenate([gf.real, gf.imag])

    x = np.concatenate([u0.ravel()[idx].real, u0.ravel()[idx].imag])
    e, gx = fun(x)
    history = [e]
    iters = 0
    rel = np.inf
    gnorm = float(np.max(np.hypot(gx[:k], gx[k:]) / a_free)) if k else 0.0
    for _ in range(max_rounds):
        if gnorm < gtol and rel < rtol:
            break
        start = len(history)

        def record(intermediate_result):
            history.append(float(intermediate_result.fun))

        res = minimize(fun, x, jac=True, method="L-BFGS-B",
                       callback=record,
                       options={"maxiter": maxiter, "maxcor": 20, "ftol": rtol,
                                "gtol": 0.5 * gtol * float(a_free.min()), "maxls": 40})
        if not np.isfinite(res.fun):
            raise SolverError("non-finite energy during minimization", {"iterations": iters})
        iters += int(res.nit)
        x = res.x
        e, gx = fun(x)
        gnorm = float(np.max(np.hypot(gx[:k], gx[k:]) / a_free))
        if len(history) - start >= 1:
            prev = history[-2]
            rel = max(prev - history[-1], 0.0) / max(abs(history[-1]), 1.0)
        else:
            rel = 0.0  # no accepted step: stationary to line-search precision
        if res.nit == 0 and gnorm >= gtol:
            break
    u = base.copy()
    u.ravel()[idx] = x[:k] + 1j * x[k:]
    converged = gnorm < gtol and rel < rtol
    if not converged:
        logger.warning("minimizer stopped: scaled gradient %.2e (tol %.2e), rel step %.2e",
                       gnorm, gtol, rel)
    return u, iters, gnorm, rel, converged, np.asarray(history)


# ---------------------------------------------------------------------------
# initial guesses
# ---------------------------------------------------------------------------

def vortex_field(grid: Grid, g: BoundaryData, points: Sequence[complex], degrees: Sequence[int],
                 core: Union[float, Sequence[float]], weight: Optional[np.ndarray] = None) -> np.ndarray:
    """Product of vortices with phase corrected to match g on the boundary."""
    points = [complex(p) for p in points]
    pert = []
    for p in points:
        # keep clear of grid nodes
        i = (p.real - grid.x[0]) / grid.h
        j = (p.imag - grid.y[0]) / grid.h
        if abs(i - round(i)) < 1e-6 and abs(j - round(j)) < 1e-6:
            p = p + 1e-3 * grid.h * (1 + 1j)
        pert.append(p)
    prob = PhaseProblem(grid, pert, degrees, weight, g, "direct")
    psi = solve_phase(prob).values
    Z = grid.Z
    phase = theta_nodes(Z, pert, degrees) + psi
    cores = np.broadcast_to(np.asarray(core, float), (len(pert),)) if pert else []
    mod = np.ones(grid.shape)
    for p, d, c in zip(pert, degrees, cores):
        s = np.abs(Z - p)
        mod *= (s / np.sqrt(s * s + c * c)) ** abs(d)
    v = mod * np.exp(1j * phase)
    return apply_boundary(v, g, grid)


def random_points(grid: Grid, count: int, rng: np.random.Generator) -> list:
    dom = grid.domain
    pts = []
    c = complex(*dom.center) if dom is not None else 0j
    while len(pts) < count:
        if dom is None or dom.kind == "disc":
            R = dom.extent[0] if dom is not None else 1.0
            r = 0.7 * R * np.sqrt(rng.uniform())
            pts.append(c + r * np.exp(2j * np.pi * rng.uniform()))
        else:
            lx, ly = dom.extent
            pts.append(c + complex(0.7 * lx * (rng.uniform() - 0.5), 0.7 * ly * (rng.uniform() - 0.5)))
    return pts


def predicted_points(pinning: Optional[PinningConfig], g: BoundaryData, dom: DomainSpec):
    """Vortex points from the degree optimizer and the renormalized energy."""
    if g.degree == 0:
        return [], []
    if pinning is None or pinning.M == 0:
        c = complex(*dom.center)
        if g.degree == 1:
            return [c + 1e-4 * (1 + 1j)], [1]
        return [c + 0.2 * np.exp(2j * np.pi * k / g.degree) for k in range(g.degree)], [1] * g.degree
    from .renorm import predict_configuration
    pred = predict_configuration(pinning, g, dom, n=96)
    return pred["points"], [1] * len(pred["points"])


def initial_guess(kind: str, grid: Grid, g: BoundaryData, eps: float,
                  pinning: Optional[PinningConfig] = None, modulus: Optional[np.ndarray] = None,
                  rng: Optional[np.random.Generator] = None) -> np.ndarray:
    rng = rng or np.random.default_rng(0)
    d = g.degree
    scale = np.ones(grid.shape) if modulus is None else modulus

    def core_at(points):
        out = []
        for p in points:
            i = int(round((p.real - grid.x[0]) / grid.h))
            j = int(round((p.imag - grid.y[0]) / grid.h))
            i = min(max(i, 0), grid.shape[0] - 1)
            j = min(max(j, 0), grid.shape[1] - 1)
            out.append(eps / max(scale[i, j], 1e-3))
        return out

    if kind == "predicted":
        pts, degs = predicted_points(pinning, g, grid.domain)
        return vortex_field(grid, g, pts, degs, core_at(pts))
    if kind == "random":
        pts = random_points(grid, d, rng)
        return vortex_field(grid, g, pts, [1] * d, core_at(pts))
    if kind == "harmonic":
        vals = np.zeros(grid.shape, complex)
        vals[grid.boundary] = g.on_grid(grid)[grid.boundary]
        u = harmonic_extension(grid, vals)
        return apply_boundary(u, g, grid)
    raise ValueError(f"unknown seed kind {kind!r}")


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------

def _run(fn: Functional, grid: Grid, g: BoundaryData, eps: float, starts: Dict[str, np.ndarray],
         report, **kw) -> SolveResult:
    best = None
    energies = {}
    errors = {}
    for name, u0 in starts.items():
        t0 = time.perf_counter()
        u0 = apply_boundary(u0, g, grid)
        try:
            u, it, gn, rel, conv, hist = _lbfgs(fn, u0, grid.interior, eps, **kw)
        except SolverError as exc:
            errors[name] = str(exc)
            logger.warning("seed %s failed: %s", name, exc)
            continue
        res = SolveResult(Field(u, grid), report(u), it, gn, rel, time.perf_counter() - t0,
                          conv, name, {}, hist)
        energies[name] = res.energy.total
        if best is None or res.energy.total < best.energy.total:
            best = res
    if best is None:
        raise SolverError("all seeds failed", errors)
    best.seed_energies = energies
    return best


def _starts(init, grid, g, eps, pinning, modulus, seeds, rng_seed):
    if init is None or isinstance(init, str):
        kinds = seeds if init is None else (init,)
        rng = np.random.default_rng(rng_seed)
        return {k: initial_guess(k, grid, g, eps, pinning, modulus, rng) for k in kinds}
    vals = init.values if isinstance(init, Field) else np.asarray(init)
    return {"given": vals.astype(complex)}


def minimize_F(U: Field, g: BoundaryData, eps: float, init=None, *,
               pinning: Optional[PinningConfig] = None, b: Optional[float] = None,
               seeds: Sequence[str] = DEFAULT_SEEDS, rng_seed: int = 0,
               weight_rule: str = "mean", **kw) -> SolveResult:
    """Minimize F over v with v = g on the boundary (multistart unless ``init`` is a field)."""
    grid = U.grid
    if b is None and pinning is not None:
        b = pinning.b
    check_weight(U.values, grid.active, b)
    fn = Functional.F(grid, U.values, eps, weight_rule=weight_rule)
    starts = _starts(init, grid, g, eps, pinning, U.values, seeds, rng_seed)
    return _run(fn, grid, g, eps, starts,
                lambda v: energy_F(Field(v, grid), U, eps, weight_rule=weight_rule), **kw)


def minimize_E(a: Field, g: BoundaryData, eps: float, init=None, *,
               pinning: Optional[PinningConfig] = None, seeds: Sequence[str] = DEFAULT_SEEDS,
               rng_seed: int = 0, **kw) -> SolveResult:
    """Minimize E over u with u = g on the boundary."""
    grid = a.grid
    fn = Functional.E(grid, a.values, eps)
    starts = _starts(init, grid, g, eps, pinning, a.values, seeds, rng_seed)
    if init is None or isinstance(init, str):
        starts = {k: a.values * v for k, v in starts.items()}
    return _run(fn, grid, g, eps, starts, lambda u: energy_E(Field(u, grid), a, eps), **kw)


def substitution_residual(U: Field, v: Field, a: Field, eps: float, weight_rule: str = "mean") -> float:
    """|E(U v) - E(U) - F(v)| / max(1, E(U v))."""
    grid = U.grid
    Uv = Field(U.values * v.values, grid)
    e_uv = energy_E(Uv, a, eps).total
    e_u = energy_E(Field(U.values.astype(complex), grid), a, eps).total
    f_v = energy_F(v, U, eps, weight_rule=weight_rule).total
    return abs(e_uv - e_u - f_v) / max(1.0, e_uv)
