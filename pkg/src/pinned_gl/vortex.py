"""Zeros, winding numbers, bad discs and modulus floors of complex fields."""
from __future__ import annotations

import csv
import json
import logging
import warnings
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import ndimage

from .core import Field, PinningConfig, cell_energy_density, disc_cell_fraction

logger = logging.getLogger(__name__)

ZERO_THRESHOLD = 0.3


class WindingError(ValueError):
    """A loop passes through a zero of the field."""


def plaquette_winding(v, loop: Sequence) -> int:
    """Winding of a field along a closed node loop [(i0, j0), (i1, j1), ...]."""
    vals = v.values if isinstance(v, Field) else np.asarray(v)
    idx = np.asarray(loop)
    z = vals[idx[:, 0], idx[:, 1]]
    if np.any(np.abs(z) == 0):
        raise WindingError("zero-modulus node on the loop")
    zz = np.append(z, z[0])
    total = np.sum(np.angle(zz[1:] * np.conj(zz[:-1])))
    return int(round(total / (2 * np.pi)))


def square_loop(i0: int, j0: int, i1: int, j1: int) -> list:
    """Counter-clockwise node loop along the rectangle [i0, i1] x [j0, j1]."""
    loop = [(i, j0) for i in range(i0, i1)]
    loop += [(i1, j) for j in range(j0, j1)]
    loop += [(i, j1) for i in range(i1, i0, -1)]
    loop += [(i0, j) for j in range(j1, j0, -1)]
    return loop


def cell_windings(vals: np.ndarray) -> np.ndarray:
    """Integer winding of every grid cell (counter-clockwise)."""
    ex = np.angle(vals[1:, :] * np.conj(vals[:-1, :]))   # (i,j)->(i+1,j)
    ey = np.angle(vals[:, 1:] * np.conj(vals[:, :-1]))   # (i,j)->(i,j+1)
    circ = ex[:, :-1] + ey[1:, :] - ex[:, 1:] - ey[:-1, :]
    return np.rint(circ / (2 * np.pi)).astype(int)


@dataclass
class Zero:
    position: complex
    winding: int
    inclusion: Optional[int]
    min_modulus: float
    cells: int = 1

    def as_dict(self) -> dict:
        return {"x": self.position.real, "y": self.position.imag, "winding": self.winding,
                "inclusion": self.inclusion, "min_modulus": self.min_modulus, "cells": self.cells}


@dataclass
class VortexReport:
    zeros: List[Zero]
    total_winding: int
    min_modulus_outside: float
    bad_discs: Optional["BadDiscSet"] = None
    warnings: List[str] = field(default_factory=list)

    @property
    def per_inclusion(self) -> dict:
        out = {}
        for z in self.zeros:
            out[z.inclusion] = out.get(z.inclusion, 0) + 1
        return out

    @property
    def all_contained(self) -> bool:
        return all(z.inclusion is not None for z in self.zeros)

    def as_dict(self) -> dict:
        out = {"zeros": [z.as_dict() for z in self.zeros], "total_winding": self.total_winding,
               "min_modulus_outside": self.min_modulus_outside, "warnings": list(self.warnings)}
        if self.bad_discs is not None:
            out["bad_discs"] = self.bad_discs.as_dict()
        return out


def _bilinear_zero(c00, c10, c01, c11):
    """Zero (s, t) in [0,1]^2 of the complex bilinear interpolant, or None."""
    # f(s,t) = A + B s + C t + D s t
    A, B, C, D = c00, c10 - c00, c01 - c00, c11 - c10 - c01 + c00
    s, t = 0.5, 0.5
    for _ in range(30):
        f = A + B * s + C * t + D * s * t
        fs = B + D * t
        ft = C + D * s
        J = np.array([[fs.real, ft.real], [fs.imag, ft.imag]])
        try:
            ds, dt = np.linalg.solve(J, [-f.real, -f.imag])
        except np.linalg.LinAlgError:
            return None
        s, t = s + ds, t + dt
        if abs(ds) + abs(dt) < 1e-13:
            break
    if -1e-9 <= s <= 1 + 1e-9 and -1e-9 <= t <= 1 + 1e-9:
        return float(np.clip(s, 0, 1)), float(np.clip(t, 0, 1))
    return None


def find_zeros(v: Field, pinning: Optional[PinningConfig] = None,
               threshold: float = ZERO_THRESHOLD) -> VortexReport:
    """Zero cells (nonzero winding, min |v| below threshold), clustered by adjacency."""
    grid = v.grid
    vals = v.values.astype(complex)
    active_cells = grid.cells > 0
    w = cell_windings(vals)
    w[~active_cells] = 0
    mod = np.abs(vals)
    cmin = np.minimum(np.minimum(mod[:-1, :-1], mod[1:, :-1]), np.minimum(mod[:-1, 1:], mod[1:, 1:]))
    notes = []
    strong = (w != 0) & (cmin >= threshold)
    if strong.any():
        notes.append(f"{int(strong.sum())} winding cell(s) with min |v| >= {threshold}")
    zero_cells = (w != 0) & (cmin < threshold)
    labels, count = ndimage.label(zero_cells, structure=np.ones((3, 3)))
    zeros = []
    for lab in range(1, count + 1):
        I, J = np.nonzero(labels == lab)
        wind = int(w[I, J].sum())
        k = int(np.argmin(cmin[I, J]))
        i, j = I[k], J[k]
        st = _bilinear_zero(vals[i, j], vals[i + 1, j], vals[i, j + 1], vals[i + 1, j + 1])
        s, t = st if st is not None else (0.5, 0.5)
        pos = complex(grid.x[i] + s * grid.h, grid.y[j] + t * grid.h)
        inc = None
        if pinning is not None and pinning.M:
            k_inc = int(pinning.which_inclusion(pos.real, pos.imag))
            inc = k_inc if k_inc >= 0 else None
        if len(I) > 1:
            notes.append(f"cluster of {len(I)} zero cells merged at {pos:.4f}")
        zeros.append(Zero(pos, wind, inc, float(cmin[i, j]), len(I)))
    zeros.sort(key=lambda z: (z.position.real, z.position.imag))
    for msg in notes:
        logger.info(msg)

    outside = grid.active.copy()
    if pinning is not None and pinning.M:
        X, Y = grid.XY
        outside &= pinning.which_inclusion(X, Y) < 0
    mo = float(mod[outside].min()) if outside.any() else float("nan")
    return VortexReport(zeros, int(w.sum()), mo, None, notes)


def total_winding(v: Field) -> int:
    w = cell_windings(v.values.astype(complex))
    w[~(v.grid.cells > 0)] = 0
    return int(w.sum())


# ---------------------------------------------------------------------------
# bad discs
# ---------------------------------------------------------------------------

@dataclass
class BadDiscSet:
    centers: np.ndarray
    radius: float
    energies: np.ndarray
    threshold: float
    bad: np.ndarray
    representatives: List[int]
    lam: float
    cap: int
    over_cap: bool

    @property
    def n_bad(self) -> int:
        return int(self.bad.sum())

    def covers(self, z: complex, lam_scaled: bool = False) -> bool:
        r = self.radius * (self.lam if lam_scaled else 1.0)
        idx = self.representatives if lam_scaled else np.flatnonzero(self.bad)
        return any(abs(z - self.centers[i]) < r for i in idx)

    def as_dict(self) -> dict:
        return {"radius": self.radius, "threshold": self.threshold, "lambda": self.lam,
                "n_bad": self.n_bad, "representatives": [int(i) for i in self.representatives],
                "over_cap": self.over_cap}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["cx", "cy", "r", "energy", "flag"])
            for c, e, b in zip(self.centers, self.energies, self.bad):
                wr.writerow([repr(c.real), repr(c.imag), repr(self.radius), repr(float(e)),
                             "bad" if b else "good"])


def lattice_centers(grid, spacing: float) -> np.ndarray:
    """Square lattice of disc centres covering the active grid region."""
    x = np.arange(grid.x[0], grid.x[-1] + spacing, spacing)
    y = np.arange(grid.y[0], grid.y[-1] + spacing, spacing)
    X, Y = np.meshgrid(x, y, indexing="ij")
    Z = (X + 1j * Y).ravel()
    dom = grid.domain
    if dom is not None:
        keep = dom.distance_to_boundary(Z.real, Z.imag) < spacing
        keep |= dom.contains(Z.real, Z.imag)
        Z = Z[keep]
    return Z


def local_energies(v: Field, U, eps: float, centers: np.ndarray, radius: float) -> np.ndarray:
    dens = cell_energy_density(v, U, eps, "F")
    grid = v.grid
    return np.array([float(np.sum(dens * disc_cell_fraction(grid.x, grid.y, (c.real, c.imag), radius)))
                     for c in centers])


def reference_threshold_constant(eps: float, b: float = 1.0) -> float:
    """Default C(mu): half of the core cost pi b^2 ln(eps^{1/4} / eps) per |ln eps|.

    A disc of radius eps^{1/4} around a vortex of the weighted problem costs
    at least about pi b^2 (3/4)|ln eps|; half of it separates vortex discs
    from discs that only see phase gradients.
    """
    return 0.5 * np.pi * b * b * 0.75


def classify_bad_discs(v: Field, U, eps: float, c_mu: Optional[float] = None,
                       b: Optional[float] = None, cap: int = 64,
                       spacing_factor: float = 1.0) -> BadDiscSet:
    """Flag discs B(x_i, eps^{1/4}) whose local F exceeds C(mu)|ln eps|.

    Representatives are picked greedily by descending energy at mutual
    distance >= 8 lambda eps^{1/4}; lambda starts at 1 and doubles until every
    bad disc lies in some B(x_rep, lambda eps^{1/4}).
    """
    grid = v.grid
    r = eps ** 0.25
    Uv = U.values if isinstance(U, Field) else (np.ones(grid.shape) if U is None else U)
    if b is None:
        b = float(Uv[grid.active].min())
    C = reference_threshold_constant(eps, b) if c_mu is None else c_mu
    thr = C * abs(np.log(eps))
    centers = lattice_centers(grid, spacing_factor * r)
    en = local_energies(v, Uv, eps, centers, r)
    bad = en > thr
    order = [int(i) for i in np.argsort(-en, kind="stable") if bad[i]]
    lam = 1.0
    while True:
        reps = []
        for i in order:
            if all(abs(centers[i] - centers[j]) >= 8 * lam * r for j in reps):
                reps.append(i)
        covered = all(any(abs(centers[i] - centers[j]) + r <= lam * r + 1e-12 for j in reps)
                      for i in order)
        if covered or lam > 1e6:
            break
        lam *= 2
    over = len(order) > cap
    if over:
        warnings.warn(f"{len(order)} bad discs exceed the cap {cap}", RuntimeWarning)
    return BadDiscSet(centers, r, en, thr, bad, reps, lam, cap, over)


def calibrate_threshold(grid, U, eps: float, center: complex = 0j,
                        b: Optional[float] = None) -> float:
    """C(mu) between the vortex-disc and the vortex-free-disc energies of a reference vortex.

    Builds the single vortex (x - c)/|x - c| with a core profile of size
    eps / U(c) and returns the midpoint (in units of |ln eps|) between the
    smallest local energy among discs containing the core and the largest
    among the others.
    """
    Uv = U.values if isinstance(U, Field) else U
    Z = grid.Z
    q = Z - center
    s = np.abs(q)
    c = eps / max(float(Uv[np.unravel_index(np.argmin(s), s.shape)]), 1e-3)
    vals = q / np.sqrt(s * s + c * c)
    v = Field(vals, grid)
    r = eps ** 0.25
    centers = lattice_centers(grid, r)
    en = local_energies(v, Uv, eps, centers, r)
    with_core = np.abs(centers - center) < r
    lo = en[with_core].min()
    hi = en[~with_core].max() if (~with_core).any() else 0.0
    return float(0.5 * (lo + hi) / abs(np.log(eps)))


# ---------------------------------------------------------------------------
# modulus floor
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModulusFloor:
    floor: float
    eta: float
    ratio: float

    def as_dict(self) -> dict:
        return asdict(self)


def modulus_floor_report(v: Field, eps: float, eta: float, centers: Sequence = (),
                         zeros: Sequence[complex] = ()) -> ModulusFloor:
    """min |v| away from B(a_i, eta) and B(zero, eta); ratio (1 - floor)|ln eps|^{1/3}."""
    grid = v.grid
    mask = grid.active.copy()
    Z = grid.Z
    for c in list(centers) + list(zeros):
        c = complex(*c) if not isinstance(c, complex) and np.ndim(c) else complex(c)
        mask &= np.abs(Z - c) >= eta
    floor = float(np.abs(v.values[mask]).min()) if mask.any() else 1.0
    return ModulusFloor(floor, eta, float((1 - floor) * abs(np.log(eps)) ** (1 / 3)))
