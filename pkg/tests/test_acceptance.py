"""The twelve acceptance criteria, each at its stated tolerance.

Every test records a one-line verdict in ``conftest.CRITERIA`` (printed in the
terminal summary) and prints it as it finishes.
"""
import json
import time

import numpy as np
import pytest

from pinned_gl import experiment as X
from pinned_gl.core import BoundaryData, DomainSpec, Functional, build_pinning_field, energy_F
from pinned_gl.renorm import (FourierTrace, annulus_energy, compute_gamma, discrete_optimizer,
                              hhalf_seminorm, predict_configuration)
from pinned_gl.solver import minimize_F, substitution_residual
from pinned_gl.special import solve_U
from pinned_gl.testfn import build_caseI, build_caseII, log_remainder
from pinned_gl.vortex import find_zeros, total_winding

from conftest import CRITERIA, DESK_CENTERS, desk_pinning, disc_grid
from oracles import annulus_fd_energy, brute_force_degrees, dp_degrees, radial_pinned_F

pytestmark = pytest.mark.slow

DESK = [(1, 1), (2, 1), (3, 2), (2, 3), (2, 4)]
LADDER = [(0.04, 128), (0.02, 256), (0.01, 512)]
_U, _MIN = {}, {}


def record(capsys, k, ok, msg):
    CRITERIA[k] = (bool(ok), msg)
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'}  criterion {k}: {msg}")


def special(M, eps=0.02, n=256):
    key = (M, eps, n)
    if key not in _U:
        cfg = desk_pinning(M, eps=eps)
        grid = disc_grid(n)
        t = time.perf_counter()
        sol = solve_U(cfg, grid)
        _U[key] = (cfg, grid, sol, time.perf_counter() - t)
    return _U[key]


def minimizer(M, d, seeds=("predicted", "random", "harmonic")):
    key = (M, d, seeds)
    if key not in _MIN:
        cfg, grid, sol, _ = special(M)
        t = time.perf_counter()
        res = minimize_F(sol.U, BoundaryData(d), cfg.eps, pinning=cfg, seeds=seeds)
        _MIN[key] = (res, find_zeros(res.v, cfg), time.perf_counter() - t)
    return _MIN[key]


def zero_counts(rep, M):
    return [rep.per_inclusion.get(i, 0) for i in range(M)]


def test_criterion_01_maximum_principle(capsys):
    worst, slow, lines = 0.0, 0.0, []
    ok = True
    for M in (1, 2, 3):
        cfg, grid, sol, dt = special(M)
        U = sol.U.values[grid.active]
        lo, hi = U.min(), U.max()
        good = (lo >= cfg.b - 1e-10) and (hi <= 1 + 1e-10) and dt < 60
        ok &= good
        slow = max(slow, dt)
        lines.append(f"M={M}: [{lo:.6f}, {hi:.6f}]")
    record(capsys, 1, ok, f"b - 1e-10 <= U <= 1 + 1e-10 at n = 256 ({'; '.join(lines)}), slowest {slow:.1f} s")
    assert ok


def test_criterion_02_degree_conservation(capsys):
    out, ok = [], True
    for M, d in DESK:
        res, rep, _ = minimizer(M, d)
        w = total_winding(res.v)
        ok &= (w == d) and rep.total_winding == d and res.converged
        out.append(f"({M},{d})->{w}")
    record(capsys, 2, ok, "total plaquette winding equals d for every converged minimizer: " + ", ".join(out))
    assert ok


@pytest.mark.parametrize("M,d", [(1, 1), (2, 1), (3, 2)])
def test_criterion_03_containment(capsys, M, d):
    res, rep, dt = minimizer(M, d)
    cfg = desk_pinning(M)
    pred = predict_configuration(cfg, BoundaryData(d), DomainSpec("disc", (1.0,), 256))
    counts = zero_counts(rep, M)
    allowed = [list(v) for v in pred["selection"].best]
    ok = (rep.all_contained and all(z.winding == 1 for z in rep.zeros) and counts in allowed
          and len(rep.zeros) == d and dt < 600)
    prev = CRITERIA.get(3, (True, ""))
    msg = (f"(M,d)=({M},{d}): zeros per inclusion {counts}, predicted {allowed}, "
           f"contained {rep.all_contained}, {dt:.0f} s")
    record(capsys, 3, prev[0] and ok, (prev[1] + "; " if prev[1] else "") + msg)
    assert ok


@pytest.mark.parametrize("M,d,expect", [(2, 3, [1, 2]), (2, 4, [2, 2])])
def test_criterion_04_caseII_split(capsys, M, d, expect):
    res, rep, dt = minimizer(M, d)
    counts = sorted(zero_counts(rep, M))
    ok = rep.all_contained and counts == expect and all(z.winding == 1 for z in rep.zeros)
    # supplementary: the local minimizer reached from the predicted seed alone
    res_p, rep_p, _ = minimizer(M, d, ("predicted",))
    counts_p = sorted(zero_counts(rep_p, M))
    prev = CRITERIA.get(4, (True, ""))
    msg = (f"(M,d)=({M},{d}): global-minimizer split {counts} with {sum(z.inclusion is None for z in rep.zeros)} "
           f"zero(s) outside, F = {res.energy.total:.3f}; predicted-seed local minimizer split {counts_p}, "
           f"F = {res_p.energy.total:.3f}; expected {expect}")
    record(capsys, 4, prev[0] and ok, (prev[1] + "; " if prev[1] else "") + msg)
    assert ok


def test_criterion_05_optimizer_vs_enumeration(capsys):
    ld, lx = np.log(0.2), np.log(0.1)
    t = time.perf_counter()
    outs = {(M, d): discrete_optimizer(M, d, ld, lx, 0.5) for M in range(1, 9) for d in range(1, 9)}
    dt = time.perf_counter() - t
    ok = dt < 1.0
    for (M, d), out in outs.items():
        best, sols = dp_degrees(M, d, ld, lx, 0.5)
        ok &= np.isclose(out[0].cost, best, rtol=1e-12)
        ok &= {c.degrees for c in out} == {tuple(sorted(v, reverse=True)) for v in sols}
        if M <= 4 and d <= 4:
            best2, sols2 = brute_force_degrees(M, d, ld, lx, 0.5)
            ok &= {c.degrees for c in out} == {tuple(sorted(v, reverse=True)) for v in sols2}
        lo = d // M
        for c in out:
            ok &= set(c.degrees) <= ({0, 1} if M >= d else {lo, lo + 1})
    record(capsys, 5, ok, f"64 pairs match exhaustive search, window holds, optimizer time {dt * 1e3:.0f} ms")
    assert ok


def test_criterion_06_closed_forms(capsys):
    rng = np.random.default_rng(2024)
    t = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        ka = rng.choice(np.arange(-3, 4), size=3, replace=False)
        kb = rng.choice(np.arange(-3, 4), size=3, replace=False)
        a = {int(k): complex(*rng.normal(size=2)) for k in ka}
        b = {int(k): complex(*rng.normal(size=2)) for k in kb}
        R = rng.uniform(1.5, 4.0)
        ref = annulus_fd_energy(a, b, R)
        got = annulus_energy(FourierTrace.from_dict(a), FourierTrace.from_dict(b), R)
        worst = max(worst, abs(got / ref - 1))
    hh = [hhalf_seminorm(FourierTrace.from_dict(c)) for c in ({}, {1: 1.0}, {3: 1.0, -1: 2.0})]
    dt = time.perf_counter() - t
    ok = worst < 1e-2 and hh == [0.0, 1.0, 7.0] and dt < 60
    record(capsys, 6, ok, f"annulus series vs finite differences: worst rel. error {worst:.2e} over 20 pairs; "
                          f"H^1/2 values {hh}; {dt:.1f} s")
    assert ok


def test_criterion_07_substitution_identity(capsys):
    res_ = []
    g = BoundaryData(1)
    for n in (128, 256, 512):
        cfg, grid, sol, _ = special(1, 0.02, n)
        v = build_caseI(cfg, g, cfg.eps, grid)
        a = build_pinning_field(cfg, grid)
        res_.append(substitution_residual(sol.U, v, a, cfg.eps))
    res_min, _, _ = minimizer(1, 1)
    cfg, grid, sol, _ = special(1)
    r_min = substitution_residual(sol.U, res_min.v, build_pinning_field(cfg, grid), cfg.eps)
    ok = res_[1] < 1e-2 and r_min < 1e-2 and res_[0] > res_[1] > res_[2]
    record(capsys, 7, ok, "relative residual at n = 128/256/512: " + ", ".join(f"{r:.2e}" for r in res_)
           + f"; minimizer at n = 256: {r_min:.2e}")
    assert ok


def _sweep_config(tmp_path, name, centers, b):
    raw = {"schema_version": 1, "name": name, "domain": {"kind": "disc", "n": 160},
           "pinning": {"centers": centers, "b": b, "delta": 0.2}, "boundary": {"degree": 1},
           "eps_ladder": [0.04, 0.02, 0.01], "delta_rule": {"kind": "fixed"},
           "resolution": {"scale_with_eps": True}, "solver": {"seeds": ["predicted"]},
           "output": str(tmp_path / "runs")}
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps(raw))
    return p


def test_criterion_08_energy_slope(capsys, tmp_path):
    t = time.perf_counter()
    pinned = X.cmd_sweep(_sweep_config(tmp_path, "pinned", [[0.0, 0.0]], 0.5))
    control = X.cmd_sweep(_sweep_config(tmp_path, "control", [], 1.0))
    dt = time.perf_counter() - t
    s1, s2 = pinned["fit"]["ln_eps"], control["fit"]["ln_eps"]
    e1, e2 = abs(s1 / (np.pi / 4) - 1), abs(s2 / np.pi - 1)
    ok = e1 < 0.1 and e2 < 0.1 and dt < 1800
    # independent radial solve of the same problem: confirms the energies, and shows the slope
    # only reaches pi b^2 once eps / b is small next to the inclusion radius
    F2d = [r["F"]["total"]["value"] for r in pinned["rungs"]]
    F1d = [radial_pinned_F(e, 0.1, 0.5) for e in (0.04, 0.02, 0.01)]
    agree = max(abs(a / b - 1) for a, b in zip(F2d, F1d))
    tail = [radial_pinned_F(e, 0.1, 0.5) for e in (0.000625, 0.0003125)]
    s_tail = (tail[1] - tail[0]) / np.log(2)
    record(capsys, 8, ok, f"|ln eps| slope {s1:.4f} vs pi/4 = {np.pi / 4:.4f} ({e1:.1%}); b = 1 control "
                          f"{s2:.4f} vs pi ({e2:.1%}); {dt / 60:.1f} min. Radial oracle: energies agree within "
                          f"{agree:.2%}, oracle slope on this ladder "
                          f"{np.polyfit(-np.log([0.04, 0.02, 0.01]), F1d, 1)[0]:.4f}, "
                          f"at eps ~ 5e-4 {s_tail:.4f}")
    assert ok


def _testfn(M, d, eps, n):
    cfg, grid, sol, _ = special(M, eps, n)
    g = BoundaryData(d)
    pred = predict_configuration(cfg, g, DomainSpec("disc", (1.0,), n))
    vec = list(pred["selection"].best[0])
    if M >= d:
        v = build_caseI(cfg, g, eps, grid, [i for i, k in enumerate(vec) if k])
    else:
        v = build_caseII(cfg, g, eps, vec, grid)
    return energy_F(v, sol.U, eps).total, vec


def test_criterion_09_upper_bounds(capsys):
    ok = True
    parts = []
    for M, d in DESK:
        res, _, _ = minimizer(M, d)
        Ft, vec = _testfn(M, d, 0.02, 256)
        bound = res.energy.total <= Ft
        C = []
        for eps, n in LADDER:
            F, vec = _testfn(M, d, eps, n)
            C.append(log_remainder(F, eps, 0.2, 0.5, vec))
        C = np.array(C)
        spread = float(np.max(np.abs(C - C.mean())) / abs(C.mean()))
        ok &= bound and spread <= 0.15
        parts.append(f"({M},{d}) F_min {res.energy.total:.3f} <= F_test {Ft:.3f}: {bound}, "
                     f"remainders {np.round(C, 3).tolist()} spread {spread:.1%}")
    record(capsys, 9, ok, "; ".join(parts))
    assert ok


def test_criterion_10_gradient_check(capsys):
    rng = np.random.default_rng(10)
    grid = disc_grid(24)
    worst = 0.0
    idx = np.argwhere(grid.interior)
    for trial in range(10):
        u = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
        w = 0.5 + 0.5 * rng.uniform(size=grid.shape)
        for fn in (Functional.E(grid, w, 0.2), Functional.F(grid, w, 0.2)):
            _, g = fn.value_and_grad(u)
            for i, j in idx[rng.choice(len(idx), 4, replace=False)]:
                for dirn in (1.0, 1j):
                    # the energy is a quartic polynomial in one nodal value, so the
                    # five-point central difference is exact up to round-off
                    h = 1e-3
                    f = []
                    for m in (-2, -1, 1, 2):
                        w_ = u.copy()
                        w_[i, j] += m * h * dirn
                        f.append(fn.value_and_grad(w_)[0])
                    fd = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
                    an = g[i, j].real if dirn == 1.0 else g[i, j].imag
                    worst = max(worst, abs(an - fd) / max(abs(fd), 1e-8))
    ok = worst < 1e-6
    record(capsys, 10, ok, f"worst relative gradient error {worst:.2e} over 10 fields, E and F forms "
                           "(five-point central differences)")
    assert ok


def test_criterion_11_boundary_independence(capsys):
    cfg, grid, sol, _ = special(1, 0.01, 512)
    g0 = BoundaryData(1)
    g1 = BoundaryData(1, (0.5, 0.0, 0.5), (0.0, 0.5, 0.0))
    offs = []
    for g in (g0, g1):
        res = minimize_F(sol.U, g, cfg.eps, pinning=cfg, seeds=("predicted", "random"))
        rep = find_zeros(res.v, cfg)
        inside = [z for z in rep.zeros if z.inclusion == 0]
        offs.append([(z.position - complex(*DESK_CENTERS[1][0])) / cfg.delta for z in inside])
    ok = len(offs[0]) == len(offs[1]) == 1
    dist = abs(offs[0][0] - offs[1][0]) if ok else np.inf
    ok &= dist <= 0.1
    record(capsys, 11, ok, f"rescaled offsets {[np.round(o, 4).tolist() for o in offs]} differ by {dist:.4f} "
                           f"(omega units, threshold 0.1)")
    assert ok


def test_criterion_12_gamma(capsys):
    a = compute_gamma(0.04, 1.0)
    b = compute_gamma(0.02, 0.5)
    ladder = max(abs(r.estimates[0] / r.estimates[1] - 1) for r in (a, b))
    rdep = abs(a.value / b.value - 1)
    ok = a.value > 0 and b.value > 0 and ladder < 0.03 and rdep < 0.03
    record(capsys, 12, ok, f"gamma = {a.value:.4f} (r = 1), {b.value:.4f} (r = 0.5); "
                           f"xi-ladder spread {ladder:.2%}, r spread {rdep:.2%}")
    assert ok
