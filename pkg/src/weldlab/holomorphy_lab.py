"""Finite-difference Cauchy–Riemann certificates for one-parameter families.

A family is a scalar probe lambda(t) computed by running the pipeline at a
complex parameter t.  At each sample t the central differences along the
real and imaginary directions give the Wirtinger derivatives

    d/dt    = 1/2 (lambda_a - i lambda_b)
    d/dtbar = 1/2 (lambda_a + i lambda_b)

and the family is certified holomorphic when |d/dtbar| is small relative to
|d/dt| over the whole sample grid.
"""
from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .beltrami_solver import solve_beltrami
from .circle_maps import CircleMap, compose, invert, nodes
from .mobius import INF
from .plane import BeltramiField, RectGrid
from .rigged_spheres import RiggedSphere, moduli, surface_from_dict, surface_to_dict
from .sewing import sew

KINDS = ("marked-point-motion", "beltrami-path", "rigging-path", "synthetic")
DEFAULT_DELTA = 1e-3
PROBE_FLOOR = 1e-12
MAX_PATH_NORM = 0.5
THRESHOLDS = {"marked-point-motion": 1e-6, "beltrami-path": 1e-2, "rigging-path": 1e-2, "synthetic": 1e-2}
SYNTHETIC = {
    "conj": np.conj,
    "exp": np.exp,
    "zero": lambda t: 0j,
    "linear": lambda t: 6 + 3 * t,
}


class FamilyEvaluationError(RuntimeError):
    """The pipeline failed at parameter t."""

    def __init__(self, t, cause):
        super().__init__(f"family evaluation failed at t = {complex(t)!r}: {cause}")
        self.t = complex(t)
        self.cause = cause


class NoiseFloorWarning(UserWarning):
    pass


def identity_scenario():
    """Two standard pieces with identity riggings marked (2, inf) and (3, inf)."""
    return RiggedSphere.standard_piece((2, INF)), RiggedSphere.standard_piece((3, INF))


def _default_base(kind):
    if kind == "marked-point-motion":
        left, right = identity_scenario()
        return {"left": surface_to_dict(left), "i": 0, "right": surface_to_dict(right), "j": 0,
                "move": [0, 0]}
    if kind in ("beltrami-path", "rigging-path"):
        base = {"amplitude": 0.3, "frequency": 4, "radii": [1.2, 2.5], "extent": 8.0}
        if kind == "beltrami-path":
            base.update(grid_n=512, normalization="fix-0-1-inf")
        else:
            base.update(grid_n=256, samples=1024, right_marked=[[3, 0], "inf", [0, 2], [-1.5, -1.5]])
        return base
    return {"function": "conj"}


def _default_probe(kind):
    if kind == "beltrami-path":
        return {"point": [0.3, 0.4]}
    if kind == "synthetic":
        return {"value": True}
    return {"modulus": 0}


@dataclass
class FamilySpec:
    kind: str
    base: dict = field(default_factory=dict)
    t_domain: float = 1.0
    probe: dict = field(default_factory=dict)
    threshold: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        self.base = {**_default_base(self.kind), **(self.base or {})}
        self.probe = self.probe or _default_probe(self.kind)
        if self.threshold is None:
            self.threshold = THRESHOLDS[self.kind]
        if self.kind in ("beltrami-path", "rigging-path"):
            nu_sup = abs(self.base["amplitude"])
            if self.t_domain * nu_sup > MAX_PATH_NORM + 1e-12:
                raise ValueError(f"t_domain {self.t_domain} gives sup |t nu| = {self.t_domain * nu_sup:.3g} "
                                 f"above {MAX_PATH_NORM}")
        if self.kind == "synthetic" and self.base["function"] not in SYNTHETIC:
            raise ValueError(f"unknown synthetic function {self.base['function']!r}")
        self._cache = {}

    def to_dict(self) -> dict:
        return {"kind": self.kind, "base": self.base, "t_domain": self.t_domain, "probe": self.probe,
                "threshold": self.threshold}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "FamilySpec":
        return cls(d["kind"], d.get("base", {}), float(d.get("t_domain", 1.0)), d.get("probe", {}),
                   d.get("threshold"))

    @classmethod
    def from_json(cls, text: str) -> "FamilySpec":
        return cls.from_dict(json.loads(text))


@dataclass
class CRReport:
    t_samples: np.ndarray
    d_t: np.ndarray
    d_tbar: np.ndarray
    ratio: float
    delta: float
    threshold: float = 1e-2
    kind: str = ""
    step_factor: float | None = None
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        if not (np.all(np.isfinite(self.d_t)) and np.all(np.isfinite(self.d_tbar))):
            raise ValueError("non-finite Wirtinger estimates")

    @property
    def passed(self) -> bool:
        return bool(self.ratio <= self.threshold)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t_re", "t_im", "d_t", "d_tbar"])
        for t, a, b in zip(self.t_samples, self.d_t, self.d_tbar):
            w.writerow([repr(float(t.real)), repr(float(t.imag)), repr(float(a)), repr(float(b))])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"kind": self.kind, "ratio": float(self.ratio), "threshold": float(self.threshold),
                "pass": self.passed, "delta": float(self.delta), "samples": int(len(self.t_samples)),
                "step_factor": None if self.step_factor is None else float(self.step_factor),
                "warnings": list(self.warnings)}

    def summary_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


# -- families ------------------------------------------------------------------

def _bump(r, a, b):
    s = np.clip((r - a) / (b - a), 0.0, 1.0)
    inside = (s > 0) & (s < 1)
    q = np.where(inside, s * (1 - s), 1.0)
    return np.where(inside, np.exp(4.0 - 1.0 / q), 0.0)


def direction_field(base: dict, grid: RectGrid):
    """(nu outside the unit disk, its reflection inside) on the grid nodes.

    nu = amplitude * bump(|z|) * (z/|z|)^k, and the reflection is
    conj(nu(1/zbar)) z^2 / zbar^2, so that t nu + conj(t) nu_refl solves to a
    map preserving the unit circle.
    """
    amp, k = base["amplitude"], int(base["frequency"])
    a, b = base["radii"]
    z = grid.z
    r = np.abs(z)
    zz = np.where(r > 0, z, 1.0)
    rr = np.abs(zz)
    outer = np.where(r >= 1, amp * _bump(rr, a, b) * (zz / rr) ** k, 0)
    w = 1 / np.conj(zz)
    rw = np.abs(w)
    refl = np.conj(amp * _bump(rw, a, b) * (w / rw) ** k) * zz ** 2 / np.conj(zz) ** 2
    inner = np.where((r < 1) & (r > 0), refl, 0)
    return outer, inner


def _grid(base):
    return RectGrid(int(base["grid_n"]), float(base["extent"]))


def _fields(spec):
    if "fields" not in spec._cache:
        grid = _grid(spec.base)
        spec._cache["fields"] = (grid, *direction_field(spec.base, grid))
    return spec._cache["fields"]


def boundary_map(spec: FamilySpec, t: complex) -> CircleMap:
    """h_t: boundary values of the circle-preserving solution for t nu (plus reflection)."""
    grid, outer, inner = _fields(spec)
    sol, _ = solve_beltrami(BeltramiField(grid, t * outer + np.conj(t) * inner), "fix-0-1-inf")
    th = nodes(int(spec.base["samples"]))
    lift = np.unwrap(np.angle(sol(np.exp(1j * th))))
    lift -= 2 * np.pi * np.round(lift[0] / (2 * np.pi))
    return CircleMap.from_lift(lift)


def _point(p):
    if p == "inf" or p is None:
        return INF
    return complex(p[0], p[1]) if isinstance(p, (list, tuple)) else complex(p)


def _marked_point(spec, t):
    b = spec.base
    left, right = surface_from_dict(b["left"]), surface_from_dict(b["right"])
    piece, idx = b["move"]
    target = left if piece == 0 else right
    marked = list(target.marked)
    marked[idx] = marked[idx] + t
    moved = RiggedSphere(target.model, tuple(marked), target.boundaries, target.punctures, target.io_labels)
    left, right = (moved, right) if piece == 0 else (left, moved)
    s = sew(left, b["i"], right, b["j"])
    return moduli(s.result).values[spec.probe.get("modulus", 0)]


def _beltrami_path(spec, t):
    grid, outer, _ = _fields(spec)
    sol, _ = solve_beltrami(BeltramiField(grid, t * outer), spec.base.get("normalization", "fix-0-1-inf"))
    return complex(sol(np.array([_point(spec.probe["point"])]))[0])


def _rigging_path(spec, t):
    b = spec.base
    h = boundary_map(spec, t)
    left = RiggedSphere.standard_piece(tuple(_point(p) for p in b.get("left_marked", [])),
                                       compose(CircleMap.identity(), invert(h)))
    right = RiggedSphere.standard_piece(tuple(_point(p) for p in b["right_marked"]))
    s = sew(left, 0, right, 0, samples=int(b["samples"]), grid_n=int(b["grid_n"]))
    return moduli(s.result).values[spec.probe.get("modulus", 0)]


def family_eval(spec: FamilySpec, t: complex) -> complex:
    """Probe value lambda(t) of the family."""
    t = complex(t)
    if abs(t) > spec.t_domain + 1e-12:
        raise ValueError(f"t = {t!r} outside the parameter disk of radius {spec.t_domain}")
    key = (t.real, t.imag)
    if key in spec._cache:
        return spec._cache[key]
    if spec.kind == "synthetic":
        val = complex(SYNTHETIC[spec.base["function"]](t))
    else:
        run = {"marked-point-motion": _marked_point, "beltrami-path": _beltrami_path,
               "rigging-path": _rigging_path}[spec.kind]
        try:
            val = complex(run(spec, t))
        except Exception as exc:
            raise FamilyEvaluationError(t, exc) from exc
    spec._cache[key] = val
    return val


def wirtinger_residual(spec: FamilySpec, t: complex, delta: float = DEFAULT_DELTA):
    """(|d lambda/dt|, |d lambda/dtbar|) by central differences of step delta."""
    t = complex(t)
    if abs(t) + delta > spec.t_domain + 1e-12:
        raise ValueError(f"stencil around t = {t!r} leaves the parameter disk")
    la = (family_eval(spec, t + delta) - family_eval(spec, t - delta)) / (2 * delta)
    lb = (family_eval(spec, t + 1j * delta) - family_eval(spec, t - 1j * delta)) / (2 * delta)
    return abs(0.5 * (la - 1j * lb)), abs(0.5 * (la + 1j * lb))


def t_grid(radius: float, rho: float | None = None) -> np.ndarray:
    """The 9 points {-rho, 0, rho}^2 (rho = radius/2 by default), ordered by real then imaginary part."""
    rho = 0.5 * radius if rho is None else rho
    v = (-rho, 0.0, rho)
    return np.array([complex(a, b) for a in v for b in v])


def holomorphy_report(spec: FamilySpec, grid=None, delta: float = DEFAULT_DELTA,
                      richardson: bool = True) -> CRReport:
    """Aggregate Wirtinger residuals over the t grid.

    ratio = max d_tbar / max(d_t, floor).  With ``richardson`` the residual at
    the grid point nearest the origin is recomputed at delta/2.  A small
    residual that shrinks by less than 3 sits at the pipeline noise floor,
    and the report carries a warning.
    """
    grid = t_grid(spec.t_domain) if grid is None else np.asarray(grid, dtype=complex)
    order = np.lexsort((grid.imag, grid.real))
    grid = grid[order]
    dt = np.empty(grid.size)
    dtb = np.empty(grid.size)
    for k, t in enumerate(grid):
        dt[k], dtb[k] = wirtinger_residual(spec, t, delta)
    ratio = float(np.max(dtb / np.maximum(dt, PROBE_FLOOR)))
    notes = []
    factor = None
    if richardson:
        k = int(np.argmin(np.abs(grid)))
        _, half = wirtinger_residual(spec, grid[k], delta / 2)
        factor = float(dtb[k] / half) if half > 0 else float("inf")
        if PROBE_FLOOR < dtb[k] < 0.1 * dt[k] and factor < 3:
            msg = (f"d_tbar at t = {complex(grid[k])!r} changed by a factor {factor:.3g} under step halving; "
                   "the residual is at the pipeline noise floor")
            notes.append(msg)
            warnings.warn(msg, NoiseFloorWarning, stacklevel=2)
    return CRReport(grid, dt, dtb, ratio, delta, spec.threshold, spec.kind, factor, notes)


__all__ = ["CRReport", "DEFAULT_DELTA", "FamilyEvaluationError", "FamilySpec", "KINDS", "NoiseFloorWarning",
           "PROBE_FLOOR", "boundary_map", "direction_field", "family_eval", "holomorphy_report",
           "identity_scenario", "t_grid", "wirtinger_residual"]
