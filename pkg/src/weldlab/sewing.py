"""Sewing two rigged genus-zero pieces along a boundary circle each.

Both boundaries are prepared to the unit circle with the piece outside.
Piece 2 is then moved inside by J(w) = 1/w, and the seam identification
p2 = psi2^{-1}(1/psi1(p1)) becomes the orientation-preserving circle map

    k = J o psi2^{-1} o iota o psi1,      iota(z) = 1/z.

Welding h = k^{-1} = g^{-1} o f gives conformal f inside and g outside with
g = f o k on S^1.  Piece 1 is carried into the sewn sphere by g o T1 and
piece 2 by f o J o T2.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .circle_maps import CircleMap, compose, invert, nodes, reciprocal_conjugate
from .mobius import INF, Mobius, is_inf
from .plane import PlaneMap
from .rigged_spheres import (Boundary, CoincidentPoints, CurveBoundary, ModuliVector, NonRoundBoundary,
                             RiggedSphere, _enc_point, _transport_puncture, moduli, transport_boundary)
from .welding import DEFAULT_GRID_N, DEFAULT_SAMPLES, WeldingPair, weld

SEAM_TOL = 1e-4
J = Mobius(0, 1, 1, 0)


class SewingFailure(RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def identification_map(psi1: CircleMap, psi2: CircleMap) -> CircleMap:
    """Seam map k = J o psi2^{-1} o iota o psi1 on normalized circle coordinates."""
    # J and iota are both complex conjugation on S^1
    return compose(reciprocal_conjugate(invert(psi2)), psi1)


@dataclass(frozen=True)
class SewnSurface:
    result: RiggedSphere
    seam: CircleMap
    welding_input: CircleMap
    welding: WeldingPair = field(compare=False)
    seam_residual: float
    prep1: Mobius
    prep2: Mobius
    left_mobius: Mobius | None = None
    right_mobius: Mobius | None = None

    def left(self, z):
        z = np.asarray(z, dtype=complex)
        if self.left_mobius is not None:
            return self.left_mobius(z)
        return self.welding.g_at(self.prep1(z))

    def right(self, w):
        w = np.asarray(w, dtype=complex)
        if self.right_mobius is not None:
            return self.right_mobius(w)
        return self.welding.f_at(J(self.prep2(w)))

    def left_map(self, grid) -> PlaneMap:
        return PlaneMap("sphere", grid, self.left(grid.z))

    def right_map(self, grid) -> PlaneMap:
        return PlaneMap("sphere", grid, self.right(grid.z))

    @property
    def left_plane_map(self) -> PlaneMap:
        return self.welding.g

    @property
    def right_plane_map(self) -> PlaneMap:
        return self.welding.f

    def seam_curve(self, n: int = 512) -> np.ndarray:
        return self.welding.g_at(np.exp(1j * nodes(n)))

    def to_dict(self) -> dict:
        return {
            "seam_residual": float(self.seam_residual),
            "marked": [_enc_point(p) for p in self.result.marked],
            "moduli": moduli(self.result).to_list(),
            "boundaries_left": len(self.result.boundaries),
            "weld_residual": float(self.welding.residual),
        }

    def to_json(self, inputs=None) -> str:
        d = self.to_dict()
        if inputs is not None:
            d["input_digests"] = {k: hashlib.sha256(v.encode()).hexdigest() for k, v in inputs.items()}
        return json.dumps(d, sort_keys=True)

    def to_svg(self, size: int = 400) -> str:
        return self.welding.to_svg(size)


def _round(b, which):
    if not isinstance(b, Boundary):
        raise NonRoundBoundary(f"boundary of piece {which} is not a round circle; it cannot be sewn")
    return b


def _carry(b, mob, fn):
    if isinstance(b, CurveBoundary):
        t = b.transport
        return CurveBoundary(b.original, lambda z, t=t: fn(np.asarray(t(z))), b.label)
    if mob is not None:
        return transport_boundary(b, mob)
    return CurveBoundary(b, fn, b.label)


def sew(s1: RiggedSphere, i: int, s2: RiggedSphere, j: int, samples: int | None = None,
        grid_n: int = DEFAULT_GRID_N, tol: float = SEAM_TOL) -> SewnSurface:
    """Sew boundary i of s1 to boundary j of s2."""
    if s1.model != "border" or s2.model != "border":
        raise ValueError("sewing needs two border-model pieces")
    b1 = _round(s1.boundaries[i], 1)
    b2 = _round(s2.boundaries[j], 2)
    k = identification_map(b1.rigging, b2.rigging)
    h = invert(k)
    n = samples or max(DEFAULT_SAMPLES, b1.rigging.n, b2.rigging.n)
    pair = weld(h, grid_n=grid_n, samples=n, check=False)
    T1, T2 = b1.preparation, b2.preparation
    parts = pair.mobius_parts
    lm = rm = None
    if parts is not None:
        fm, gm = parts
        lm, rm = gm @ T1, fm @ J @ T2
    p = np.exp(1j * nodes(n))
    resid = float(np.max(np.abs(pair.g_at(p) - pair.f_at(k(p)))))
    sewn = SewnSurface(None, k, h, pair, resid, T1, T2, lm, rm)
    if not resid <= tol:
        raise SewingFailure(f"seam residual {resid:.3g} above tolerance {tol:.3g}",
                            dict(pair.diagnostics, seam_residual=resid))
    left_pts = sewn.left(np.array(s1.marked, dtype=complex)) if s1.marked else np.array([])
    right_pts = sewn.right(np.array(s2.marked, dtype=complex)) if s2.marked else np.array([])
    marked = tuple(complex(v) for v in left_pts) + tuple(complex(v) for v in right_pts)
    bounds = [_carry(b, lm, sewn.left) for a, b in enumerate(s1.boundaries) if a != i]
    bounds += [_carry(b, rm, sewn.right) for a, b in enumerate(s2.boundaries) if a != j]
    punct = [_transport_puncture(r, sewn.left, lm) for r in s1.punctures]
    off = len(s1.marked)
    for r in s2.punctures:
        moved = _transport_puncture(r, sewn.right, rm)
        punct.append(type(moved)(moved.point + off, moved.chart, moved.distortion, moved.embedding))
    try:
        result = RiggedSphere("border" if bounds else "puncture", marked, tuple(bounds), tuple(punct),
                              s1.io_labels + s2.io_labels)
    except CoincidentPoints as exc:
        raise SewingFailure(f"marked-point collision on the sewn sphere: {exc}") from exc
    object.__setattr__(sewn, "result", result)
    return sewn


def moduli_of_sewn(s: SewnSurface) -> ModuliVector:
    return moduli(s.result)


__all__ = ["INF", "SEAM_TOL", "SewingFailure", "SewnSurface", "identification_map", "is_inf",
           "moduli_of_sewn", "sew"]
