"""Batch harness: configs, solve/sweep/predict/verify runs and their records.

Every numeric record entry is a ``{"value", "units", "source"}`` triple; the
source names the formula or the routine that produced the number.  Records
omit wall times so that reruns of the same config are byte identical.
"""
from __future__ import annotations

import copy
import csv
import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import jsonschema
import numpy as np

from .core import (BoundaryData, ConfigurationError, DomainSpec, Field, Grid, InclusionShape,
                   PinningConfig, ScaleDiagnostics, write_field)
from .special import solve_U

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

_NUM = {"type": "number"}
_POINT = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}

CONFIG_SCHEMA: Dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "pinned-gl experiment config",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "domain", "pinning", "boundary"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "domain": {
            "type": "object", "additionalProperties": False, "required": ["kind", "n"],
            "properties": {
                "kind": {"enum": ["disc", "unit-disc", "rectangle"]},
                "extent": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                           "minItems": 1, "maxItems": 2},
                "n": {"type": "integer", "minimum": 8},
                "center": _POINT,
            },
        },
        "pinning": {
            "type": "object", "additionalProperties": False, "required": ["centers", "b", "delta"],
            "properties": {
                "centers": {"type": "array", "items": _POINT},
                "shape": {
                    "type": "object", "additionalProperties": False, "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["disc", "polygon"]},
                        "radius": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                        "vertices": {"type": "array", "items": _POINT, "minItems": 3},
                    },
                },
                "b": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "delta": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "boundary": {
            "type": "object", "additionalProperties": False, "required": ["degree"],
            "properties": {
                "degree": {"type": "integer", "minimum": 0},
                "phase_cos": {"type": "array", "items": _NUM},
                "phase_sin": {"type": "array", "items": _NUM},
                "shift": _NUM,
                "modulus_amplitude": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
            },
        },
        "eps": {"type": "number", "exclusiveMinimum": 0},
        "eps_ladder": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "delta_rule": {
            "type": "object", "additionalProperties": False, "required": ["kind"],
            "properties": {"kind": {"enum": ["fixed", "power", "strict"]},
                           "q": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
        },
        "resolution": {
            "type": "object", "additionalProperties": False,
            "properties": {"scale_with_eps": {"type": "boolean"}},
        },
        "solver": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "seeds": {"type": "array", "items": {"enum": ["predicted", "random", "harmonic"]},
                          "minItems": 1},
                "rtol": {"type": "number", "exclusiveMinimum": 0},
                "weight_rule": {"enum": ["mean", "product"]},
            },
        },
        "predict": {
            "type": "object", "additionalProperties": False,
            "properties": {"offsets": {"type": "boolean"}, "n": {"type": "integer", "minimum": 32},
                           "modes": {"type": "integer", "minimum": 0}},
        },
        "output": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
    },
}

RENORM_SCHEMA: Dict[str, Any] = {
    "type": "object", "additionalProperties": False, "required": ["schema_version", "op"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "op": {"enum": ["wg", "tildeW", "gamma", "optimizer", "hhalf", "annulus"]},
        "params": {"type": "object"},
        "output": {"type": "string"},
    },
}


def q(value, units: str, source: str) -> dict:
    """Record entry with units and provenance."""
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    return {"value": value, "units": units, "source": source}


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    raw: dict

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(raw, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigurationError(f"config schema violation at {loc}: {exc.message}") from exc
        cfg = cls(copy.deepcopy(raw))
        cfg.check()
        return cfg

    def override(self, seed: Optional[int] = None, n: Optional[int] = None,
                 out: Optional[str] = None) -> "ExperimentConfig":
        raw = copy.deepcopy(self.raw)
        if seed is not None:
            raw["seed"] = int(seed)
        if n is not None:
            raw["domain"]["n"] = int(n)
        if out is not None:
            raw["output"] = str(out)
        return ExperimentConfig.from_dict(raw)

    # accessors
    @property
    def domain(self) -> DomainSpec:
        d = self.raw["domain"]
        kind = d["kind"]
        ext = d.get("extent", [1.0] if kind != "rectangle" else None)
        if ext is None:
            raise ConfigurationError("rectangle domains need an extent")
        return DomainSpec(kind, tuple(ext), d["n"], tuple(d.get("center", (0.0, 0.0))))

    @property
    def shape(self) -> InclusionShape:
        s = self.raw["pinning"].get("shape", {"kind": "disc", "radius": 0.5})
        if s["kind"] == "disc":
            return InclusionShape("disc", s.get("radius", 0.5))
        return InclusionShape("polygon", vertices=tuple(map(tuple, s.get("vertices", []))))

    @property
    def b(self) -> float:
        return float(self.raw["pinning"]["b"])

    @property
    def centers(self):
        return [tuple(c) for c in self.raw["pinning"]["centers"]]

    @property
    def g(self) -> BoundaryData:
        bd = self.raw["boundary"]
        return BoundaryData(bd["degree"], tuple(bd.get("phase_cos", ())), tuple(bd.get("phase_sin", ())),
                            bd.get("shift", 0.0), bd.get("modulus_amplitude", 0.0))

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    @property
    def solver(self) -> dict:
        s = self.raw.get("solver", {})
        return {"seeds": tuple(s.get("seeds", ("predicted", "random", "harmonic"))),
                "rtol": s.get("rtol", 1e-12), "weight_rule": s.get("weight_rule", "mean")}

    def delta_for(self, eps: float) -> float:
        rule = self.raw.get("delta_rule", {"kind": "fixed"})
        if rule["kind"] == "fixed":
            return float(self.raw["pinning"]["delta"])
        if rule["kind"] == "power":
            return float(eps ** rule.get("q", 1.0 / 3.0))
        return float(np.exp(-abs(np.log(eps)) ** 0.25))

    def pinning(self, eps: Optional[float] = None) -> PinningConfig:
        eps = self.eps if eps is None else eps
        delta = self.delta_for(eps)
        b = self.b if self.centers else 0.5  # unused without inclusions
        if b >= 1:
            if self.centers:
                raise ConfigurationError("b = 1 is only allowed without inclusions")
            b = 0.5
        return PinningConfig(self.centers, self.shape, b, delta, eps)

    @property
    def eps(self) -> float:
        if "eps" in self.raw:
            return float(self.raw["eps"])
        if "eps_ladder" in self.raw:
            return float(self.raw["eps_ladder"][0])
        raise ConfigurationError("config needs eps or eps_ladder")

    @property
    def ladder(self) -> List[float]:
        lad = self.raw.get("eps_ladder")
        return [float(e) for e in lad] if lad else [self.eps]

    @property
    def output(self) -> Path:
        return Path(self.raw.get("output", "runs"))

    def check(self) -> None:
        dom = self.domain
        for e in self.ladder if ("eps" in self.raw or "eps_ladder" in self.raw) else []:
            delta = self.delta_for(e)
            if e >= delta:
                raise ConfigurationError(f"delta rule gives xi = eps/delta >= 1 at eps = {e}")
            self.pinning(e).validate(self.dom_for(e, dom))

    def dom_for(self, eps: float, dom: Optional[DomainSpec] = None) -> DomainSpec:
        """Domain for a ladder rung: n grows like 1/eps when resolution scaling is on."""
        dom = dom or self.domain
        if not self.raw.get("resolution", {}).get("scale_with_eps", False):
            return dom
        e0 = self.ladder[0]
        n = int(round(dom.n * e0 / eps))
        return dom.with_n(n + n % 2)

    @property
    def content(self) -> dict:
        """Config without the output location (what the hash and records see)."""
        return {k: v for k, v in self.raw.items() if k != "output"}

    def hash(self) -> str:
        blob = json.dumps(self.content, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def pinning_hash(self) -> str:
        p = {k: v for k, v in self.raw["pinning"].items()}
        blob = json.dumps({"pinning": p, "domain": self.raw["domain"], "eps": self.raw.get("eps"),
                           "delta_rule": self.raw.get("delta_rule")}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _scales(eps: float, delta: float, h: float) -> dict:
    s = ScaleDiagnostics.from_scales(eps, delta)
    return {"eps": q(eps, "length", "config"), "delta": q(delta, "length", "delta rule"),
            "xi": q(s.xi, "1", "eps / delta"), "h": q(h, "length", "grid spacing"),
            "h_ratio": q(s.h_ratio, "1", "|ln delta|^3 / |ln eps|"),
            "h_ratio_exceeds_one": s.h_warning}


def _write_json(path: Path, rec: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(rec, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _solve_rung(raw: dict, eps: float) -> dict:
    """One solve at a given eps; returns the record body and the fields."""
    from .solver import minimize_F, substitution_residual
    from .vortex import classify_bad_discs, find_zeros

    cfg = ExperimentConfig.from_dict(raw)
    pin = cfg.pinning(eps)
    dom = cfg.dom_for(eps)
    grid = Grid.from_domain(dom)
    g = cfg.g
    opts = cfg.solver
    if pin.M:
        sol = solve_U(pin, grid)
        U = sol.U
        u_part = {"energy": q(sol.energy, "energy", "E(U) at the solve_U minimizer"),
                  "residual": q(sol.residual, "1", "scaled Euler-Lagrange residual"),
                  "iterations": q(sol.iterations, "count", "solve_U"),
                  "min": q(float(U.values[grid.active].min()), "1", "min U"),
                  "max": q(float(U.values[grid.active].max()), "1", "max U")}
        b = pin.b
    else:
        U = Field(np.ones(grid.shape), grid)
        u_part = {"energy": q(0.0, "energy", "no inclusions: U = 1")}
        b = None
    res = minimize_F(U, g, eps, pinning=pin if pin.M else None, b=b, seeds=opts["seeds"],
                     rng_seed=cfg.seed, weight_rule=opts["weight_rule"], rtol=opts["rtol"])
    rep = find_zeros(res.v, pin if pin.M else None)
    bd = classify_bad_discs(res.v, U, eps, b=b if b is not None else 1.0)
    rep.bad_discs = bd
    a = Field(np.where(pin.which_inclusion(*grid.XY) >= 0, pin.b, 1.0) if pin.M else np.ones(grid.shape), grid)
    resid = substitution_residual(U, res.v, a, eps, opts["weight_rule"])
    zeros = []
    for z in rep.zeros:
        d = z.as_dict()
        if z.inclusion is not None:
            c = complex(*pin.centers[z.inclusion])
            off = (z.position - c) / pin.delta
            d["offset"] = [off.real, off.imag]
        zeros.append(d)
    per = {str(k): v for k, v in sorted(rep.per_inclusion.items(), key=lambda kv: (kv[0] is None, kv[0] or 0))}
    body = {
        "scales": _scales(eps, pin.delta, grid.h),
        "U": u_part,
        "F": {"total": q(res.energy.total, "energy", "F(v) = 1/2 int U^2 |grad v|^2 + int U^4 (1-|v|^2)^2 / (4 eps^2)"),
              "gradient": q(res.energy.gradient, "energy", "1/2 int U^2 |grad v|^2"),
              "potential": q(res.energy.potential, "energy", "int U^4 (1-|v|^2)^2 / (4 eps^2)"),
              "iterations": q(res.iterations, "count", "L-BFGS iterations"),
              "grad_norm": q(res.grad_norm, "energy / area", "max |dF/dv_i| / A_i"),
              "converged": res.converged, "seed": res.seed,
              "seed_energies": {k: q(v, "energy", "F after minimization from this seed")
                                for k, v in sorted(res.seed_energies.items())}},
        "substitution_residual": q(resid, "1", "|E(Uv) - E(U) - F(v)| / max(1, E(Uv))"),
        "vortices": {"zeros": zeros, "total_winding": q(rep.total_winding, "count", "plaquette winding sum"),
                     "per_inclusion": per, "contained": rep.all_contained,
                     "min_modulus_outside": q(rep.min_modulus_outside, "1", "min |v| away from zeros")},
        "bad_discs": {"count": q(bd.n_bad, "count", "discs of radius eps^(1/4) above C |ln eps|"),
                      "threshold": q(bd.threshold, "energy", "C(mu) |ln eps|"),
                      "lambda": q(bd.lam, "1", "covering radius factor")},
    }
    return {"body": body, "U": U, "v": res.v, "bad": bd}


def cmd_solve(config_path, out: Optional[str] = None, seed: Optional[int] = None,
              resolution_override: Optional[int] = None, threads: int = 1) -> dict:
    """solve_U, minimize_F and find_zeros for one config; writes runs/<hash>/."""
    cfg = ExperimentConfig.load(config_path).override(seed, resolution_override, out)
    if "eps" not in cfg.raw:
        raise ConfigurationError("solve needs eps")
    run = _solve_rung(cfg.raw, cfg.eps)
    h = cfg.hash()
    body = run["body"]
    pin = cfg.pinning()
    pred = None
    if pin.M and cfg.g.degree:
        from .renorm import predict_configuration
        p = predict_configuration(pin, cfg.g, cfg.domain)
        found = body["vortices"]["per_inclusion"]
        counts = [int(found.get(str(i), 0)) for i in range(pin.M)]
        pred = {"case": p["case"], "degrees": list(p["degrees"]),
                "tied": [list(t) for t in p["selection"].best],
                "observed_zero_counts": counts,
                "match": any(list(t) == counts for t in p["selection"].best)}
    rec = {"kind": "solve", "schema_version": SCHEMA_VERSION, "config_hash": h,
           "pinning_hash": cfg.pinning_hash(), "config": cfg.content, "boundary_degree": cfg.g.degree,
           **body, "prediction": pred}
    root = cfg.output / h
    (root / "fields").mkdir(parents=True, exist_ok=True)
    write_field(root / "fields" / "U.bin", run["U"])
    write_field(root / "fields" / "v.bin", run["v"])
    _write_csv(root / "tables" / "zeros.csv", ["x", "y", "winding", "inclusion", "min_modulus"],
               [[z["x"], z["y"], z["winding"], "" if z["inclusion"] is None else z["inclusion"],
                 z["min_modulus"]] for z in body["vortices"]["zeros"]])
    run["bad"].to_csv(root / "tables" / "bad_discs.csv")
    _write_json(root / "record.json", rec)
    return rec


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def predicted_coefficients(case: str, d: int, b: float, degrees: Sequence[int]) -> dict:
    """Coefficients of |ln eps| and |ln delta| in the leading energy expansion."""
    if case == "I":
        return {"ln_eps": np.pi * d * b * b, "ln_delta": np.pi * (1 - b * b) * d,
                "source": "pi d b^2 |ln eps| + pi (1 - b^2) d |ln delta|"}
    s2 = sum(k * k for k in degrees)
    return {"ln_eps": np.pi * d * b * b, "ln_delta": np.pi * (s2 - d * b * b),
            "source": "pi d b^2 |ln eps| + pi (sum d_i^2 - d b^2) |ln delta|"}


def fit_sweep(eps: Sequence[float], delta: Sequence[float], F: Sequence[float]) -> dict:
    """Least squares of F on {|ln eps|, |ln delta|, 1}; collinear columns are folded.

    With delta fixed the |ln delta| column merges into the intercept.  With
    |ln delta| proportional to |ln eps| (delta = eps^q) the fit reports the
    combined coefficient of |ln eps| and the proportionality factor q.
    """
    le = np.abs(np.log(np.asarray(eps, float)))
    ld = np.abs(np.log(np.asarray(delta, float)))
    y = np.asarray(F, float)
    A = np.column_stack([le, ld, np.ones_like(le)])
    rank = int(np.linalg.matrix_rank(A, tol=1e-9 * max(1.0, np.abs(A).max())))
    out = {"rank": rank, "folded": None, "warnings": []}
    if rank == 3 and len(y) > 3 - 1:
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        out.update(ln_eps=float(coef[0]), ln_delta=float(coef[1]), const=float(coef[2]))
        return out
    if np.ptp(ld) <= 1e-12 * max(1.0, ld.max()):
        coef, *_ = np.linalg.lstsq(A[:, [0, 2]], y, rcond=None)
        out.update(ln_eps=float(coef[0]), ln_delta=None, const=float(coef[1]), folded="delta fixed")
        out["warnings"].append("|ln delta| constant across the ladder: folded into the intercept")
        return out
    qq = float(np.polyfit(le, ld, 1)[0])
    coef, *_ = np.linalg.lstsq(A[:, [0, 2]], y, rcond=None)
    out.update(ln_eps=None, combined=float(coef[0]), q=qq, const=float(coef[1]), folded="delta power law")
    out["warnings"].append("|ln delta| proportional to |ln eps|: reporting the combined coefficient")
    return out


def _sweep_rung(args):
    raw, eps = args
    run = _solve_rung(raw, eps)
    return run["body"]


def cmd_sweep(config_path, out: Optional[str] = None, seed: Optional[int] = None,
              resolution_override: Optional[int] = None, threads: int = 1) -> dict:
    """Energies over the eps ladder and their fit against the predicted logarithmic coefficients."""
    from .renorm import discrete_optimizer

    cfg = ExperimentConfig.load(config_path).override(seed, resolution_override, out)
    lad = cfg.ladder
    if len(lad) < 3:
        raise ConfigurationError("sweep needs at least three eps rungs")
    jobs = [(cfg.raw, e) for e in lad]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            bodies = list(ex.map(_sweep_rung, jobs))
    else:
        bodies = [_sweep_rung(j) for j in jobs]
    deltas = [cfg.delta_for(e) for e in lad]
    F = [b["F"]["total"]["value"] for b in bodies]
    fit = fit_sweep(lad, deltas, F)
    d = cfg.g.degree
    M = len(cfg.centers)
    if M == 0:
        case, degs, bb = "I", [d], 1.0
        pred = {"ln_eps": np.pi * d, "ln_delta": 0.0, "source": "pi d |ln eps| (no inclusions)"}
    else:
        bb = cfg.b
        case = "I" if M >= d else "II"
        opt = discrete_optimizer(M, d, np.log(deltas[-1]), np.log(lad[-1] / deltas[-1]), bb)
        degs = list(opt[0].degrees)
        pred = predicted_coefficients(case, d, bb, degs)
    cmp = {}
    if fit.get("ln_eps") is not None and fit.get("folded") != "delta power law":
        cmp["ln_eps"] = {"fitted": q(fit["ln_eps"], "energy", "least squares"),
                         "predicted": q(float(pred["ln_eps"]), "energy", pred["source"]),
                         "rel_error": q(abs(fit["ln_eps"] / pred["ln_eps"] - 1), "1", "|fit/pred - 1|")}
        if fit.get("ln_delta") is not None:
            cmp["ln_delta"] = {"fitted": q(fit["ln_delta"], "energy", "least squares"),
                               "predicted": q(float(pred["ln_delta"]), "energy", pred["source"])}
    if fit.get("folded") == "delta power law":
        comb = pred["ln_eps"] + fit["q"] * pred["ln_delta"]
        cmp["combined"] = {"fitted": q(fit["combined"], "energy", "least squares on |ln eps|"),
                           "predicted": q(float(comb), "energy", pred["source"] + " with delta = eps^q"),
                           "q": q(fit["q"], "1", "slope of |ln delta| against |ln eps|"),
                           "rel_error": q(abs(fit["combined"] / comb - 1), "1", "|fit/pred - 1|")}
    h = cfg.hash()
    rec = {"kind": "sweep", "schema_version": SCHEMA_VERSION, "config_hash": h,
           "pinning_hash": cfg.pinning_hash(), "config": cfg.content, "case": case, "degrees": degs,
           "rungs": [{"eps": q(e, "length", "ladder"), "delta": q(dl, "length", "delta rule"), **b}
                     for e, dl, b in zip(lad, deltas, bodies)],
           "fit": fit, "comparison": cmp}
    root = cfg.output / h
    _write_csv(root / "tables" / "sweep.csv", ["eps", "delta", "F", "zeros", "h_ratio"],
               [[e, dl, f, len(b["vortices"]["zeros"]), b["scales"]["h_ratio"]["value"]]
                for e, dl, f, b in zip(lad, deltas, F, bodies)])
    _write_json(root / "record.json", rec)
    return rec


def refit_record(rec: dict) -> dict:
    """Refit a sweep record from its persisted per-rung energies."""
    eps = [r["eps"]["value"] for r in rec["rungs"]]
    delta = [r["delta"]["value"] for r in rec["rungs"]]
    F = [r["F"]["total"]["value"] for r in rec["rungs"]]
    return fit_sweep(eps, delta, F)


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------

def cmd_predict(config_path, out: Optional[str] = None, seed: Optional[int] = None,
                resolution_override: Optional[int] = None, threads: int = 1) -> dict:
    """Degree vector, host inclusions and interior vortex offsets predicted by the renormalized energies."""
    from .renorm import discrete_optimizer, minimize_tildeW, offsets_for_degree, select_inclusions

    cfg = ExperimentConfig.load(config_path).override(seed, resolution_override, out)
    pin = cfg.pinning()
    d = cfg.g.degree
    M = pin.M
    if M == 0 or d == 0:
        raise ConfigurationError("predict needs inclusions and a positive degree")
    opt = discrete_optimizer(M, d, np.log(pin.delta), np.log(pin.xi), pin.b)
    sel = select_inclusions(pin.centers, d, cfg.g, cfg.domain)
    popt = cfg.raw.get("predict", {})
    offsets = {}
    if popt.get("offsets", False):
        for k in sorted(set(sel.best[0]) - {0}):
            pts, val = minimize_tildeW(k, pin.b, pin.shape, N_modes=popt.get("modes", 4), n=popt.get("n", 96))
            offsets[str(k)] = {"alpha": [[z.real, z.imag] for z in pts],
                               "tildeW": q(val, "energy", "local renormalized energy at its minimizer")}
    else:
        for k in sorted(set(sel.best[0]) - {0}):
            offsets[str(k)] = {"alpha": [[z.real, z.imag] for z in offsets_for_degree(k, pin.shape)],
                               "tildeW": None}
    h = cfg.hash()
    rec = {"kind": "predict", "schema_version": SCHEMA_VERSION, "config_hash": h, "config": cfg.content,
           "case": sel.case,
           "optimizer": [list(c.degrees) for c in opt],
           "optimizer_cost": q(opt[0].cost, "energy",
                               "pi sum d_i^2 |ln delta| + pi b^2 sum |d_i| |ln xi|"),
           "options": [{"degrees": list(v), "Wg": q(w, "energy", "renormalized energy of the host points")}
                       for v, w in sel.options],
           "predicted": [list(v) for v in sel.best],
           "tied": sel.tied,
           "offsets": offsets}
    _write_json(cfg.output / h / "predict.json", rec)
    return rec


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _offsets(rec: dict) -> Dict[int, np.ndarray]:
    out: Dict[int, list] = {}
    for z in rec["vortices"]["zeros"]:
        if z.get("inclusion") is not None:
            out.setdefault(int(z["inclusion"]), []).append(complex(*z["offset"]))
    return {k: np.asarray(v) for k, v in out.items()}


def offset_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Largest distance after optimally matching two offset sets (inf if counts differ)."""
    from scipy.optimize import linear_sum_assignment

    if len(a) != len(b):
        return float("inf")
    if len(a) == 0:
        return 0.0
    C = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(C)
    return float(C[r, c].max())


def cmd_verify(record_paths: Sequence, threshold: float = 0.1) -> dict:
    """Compare rescaled interior vortex offsets across solve records with the same pinning."""
    recs = []
    for p in record_paths:
        with open(p) as fh:
            recs.append(json.load(fh))
    if len(recs) < 2:
        raise ConfigurationError("verify needs at least two records")
    ph = {r["pinning_hash"] for r in recs}
    if len(ph) != 1:
        raise ConfigurationError("records have different pinning configurations")
    offs = [_offsets(r) for r in recs]
    keys = sorted(set().union(*[o.keys() for o in offs]))
    worst = 0.0
    pairs = []
    for i in range(len(recs)):
        for j in range(i):
            dist = max([offset_distance(offs[i].get(k, np.zeros(0)), offs[j].get(k, np.zeros(0)))
                        for k in keys] + [0.0])
            pairs.append({"records": [j, i], "distance": q(dist, "omega units", "matched offset distance")})
            worst = max(worst, dist)
    return {"kind": "verify", "records": [str(p) for p in record_paths],
            "max_distance": q(worst, "omega units", "max over record pairs"),
            "threshold": q(threshold, "omega units", "acceptance threshold"),
            "within_threshold": bool(worst <= threshold), "pairs": pairs,
            "flag_spread": bool(worst > threshold)}


# ---------------------------------------------------------------------------
# renorm
# ---------------------------------------------------------------------------

def cmd_renorm(config_path) -> dict:
    """Direct access to the renormalized-energy routines from a small JSON document."""
    from . import renorm as R

    with open(config_path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"renorm document is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(raw, RENORM_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigurationError(f"renorm schema violation: {exc.message}") from exc
    op = raw["op"]
    p = raw.get("params", {})
    try:
        if op == "wg":
            dom = DomainSpec(p.get("kind", "disc"), tuple(p.get("extent", [1.0])), p.get("n", 128))
            g = BoundaryData(sum(p["degrees"]), tuple(p.get("phase_cos", ())), tuple(p.get("phase_sin", ())))
            r = R.extract_Wg(dom, g, [complex(*z) for z in p["points"]], p["degrees"],
                             method=p.get("method", "grid"))
            result = {"Wg": q(r.value, "energy", "lim I_rho - pi sum d_i^2 |ln rho|"),
                      "ladder": list(r.ladder), "rho": list(r.rho)}
        elif op == "tildeW":
            r = R.extract_tildeW([complex(*z) for z in p["betas"]], p["b"],
                                 N_modes=p.get("modes", 8), n=p.get("n", 160))
            result = {"tildeW": q(r.value, "energy", "inf over traces of W1 + W2"),
                      "W1": q(r.W1, "energy", "pi/2 sum n (c_n^2 + s_n^2)"),
                      "W2": q(r.W2, "energy", "local renormalized energy with the optimal trace")}
        elif op == "gamma":
            r = R.compute_gamma(p["xi_over_b"], p.get("r", 1.0), p.get("cells_per_core", 4.0))
            result = {"gamma": q(r.value, "energy", "I(eps', r) - pi ln(r / eps'), extrapolated"),
                      "estimates": list(r.estimates)}
        elif op == "optimizer":
            opt = R.discrete_optimizer(p["M"], p["d"], np.log(p["delta"]), np.log(p["xi"]), p["b"])
            result = {"optimal": [list(c.degrees) for c in opt],
                      "cost": q(opt[0].cost, "energy", "pi sum d_i^2 |ln delta| + pi b^2 sum |d_i| |ln xi|")}
        elif op == "hhalf":
            t = R.FourierTrace.from_dict({int(k): complex(*v) for k, v in p["coeffs"].items()})
            result = {"seminorm": q(R.hhalf_seminorm(t), "1", "sum |n| |a_n|^2")}
        else:
            a = R.FourierTrace.from_dict({int(k): complex(*v) for k, v in p["a"].items()})
            b = R.FourierTrace.from_dict({int(k): complex(*v) for k, v in p["b"].items()})
            result = {"annulus": q(R.annulus_energy(a, b, p["R"]), "1",
                                   "(1 / 2 pi) int |grad psi|^2 on the annulus")}
    except KeyError as exc:
        raise ConfigurationError(f"renorm op {op!r} is missing parameter {exc}") from exc
    rec = {"kind": "renorm", "op": op, "params": p, "result": result}
    if "output" in raw:
        _write_json(Path(raw["output"]) / f"renorm_{op}.json", rec)
    return rec
