"""Beurling–Ahlfors extension of circle and line homeomorphisms.

On the upper half-plane the extension of an increasing h is

    u(x, y) = 1/2 \\int_0^1 h(x + t y) + h(x - t y) dt
    v(x, y) = s/2 \\int_0^1 h(x + t y) - h(x - t y) dt

with s = 1 for ``ba_extend``.  The exterior disk version works in the
logarithmic coordinate z = exp(i zeta), zeta = theta - i rho, where the lift
L of a circle map is a line homeomorphism commuting with translation by 2 pi.
There s = 2, which makes the identity extend to the identity and rotations
to rotations.  Averages of a sampled lift are evaluated exactly through the
antiderivative of its interpolant, and all derivatives are analytic.
"""
from __future__ import annotations

import numpy as np

from .circle_maps import TWO_PI, CircleMap, cayley_line_map, resample
from .mobius import INF, is_inf
from .plane import BeltramiField, PlaneMap, PolarGrid, beltrami_of_map

SIMPSON_START = 64
SIMPSON_MAX = 8192
SIMPSON_TOL = 1e-10
EXT_SCALE = 2.0
BLEND = (3.0, 4.0)
DEFAULT_GRID = PolarGrid.annulus(1.0, 4.0, 256, 1024)

_SMALL_Y = 0.05
_TINY_Y = 1e-9
_GL_T, _GL_W = np.polynomial.legendre.leggauss(32)
_GL_T = 0.5 * (_GL_T + 1.0)
_GL_W = 0.5 * _GL_W


class DomainTruncationError(ValueError):
    """A quadrature node left the range where h is trusted."""


def _simpson(n):
    t = np.linspace(0.0, 1.0, n + 1)
    w = np.full(n + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return t, w / (3.0 * n)


def _averages(h, x, y, n):
    t, w = _simpson(n)
    plus = h(x[:, None] + t[None, :] * y[:, None])
    minus = h(x[:, None] - t[None, :] * y[:, None])
    return (plus + minus) @ w, (plus - minus) @ w


def ba_extend(h, grid, reliable=None, scale: float = 1.0) -> PlaneMap:
    """Beurling–Ahlfors extension of an increasing line map to the nodes of ``grid``.

    ``h`` may be a callable on the real line or a CircleMap (conjugated to the
    line by the Cayley transform).  ``reliable=(a, b)`` bounds the interval
    where h may be sampled.  Simpson's rule starts at 64 intervals and doubles
    until successive values agree to 1e-10 (capped at 8192 intervals).
    """
    if isinstance(h, CircleMap):
        h = cayley_line_map(h)
    z = np.asarray(grid.z, dtype=complex)
    x, y = z.real.ravel(), z.imag.ravel()
    if np.any(y < 0):
        raise ValueError("grid must lie in the closed upper half-plane")
    if reliable is not None:
        lo, hi = reliable
        if np.any(x - y < lo) or np.any(x + y > hi):
            raise DomainTruncationError(f"quadrature nodes leave the reliable range [{lo}, {hi}]")
    u = np.empty(x.size)
    v = np.empty(x.size)
    chunk = 2048
    for s in range(0, x.size, chunk):
        xs, ys = x[s:s + chunk], y[s:s + chunk]
        n = SIMPSON_START
        a, b = _averages(h, xs, ys, n)
        while n < SIMPSON_MAX:
            n *= 2
            a2, b2 = _averages(h, xs, ys, n)
            done = max(np.max(np.abs(a2 - a)), np.max(np.abs(b2 - b))) < SIMPSON_TOL
            a, b = a2, b2
            if done:
                break
        u[s:s + chunk] = 0.5 * a
        v[s:s + chunk] = 0.5 * scale * b
    vals = u + 1j * v
    if not np.all(np.isfinite(vals)):
        raise DomainTruncationError("h returned non-finite values at quadrature nodes")
    return PlaneMap("upper-half-plane", grid, vals.reshape(z.shape))


# -- exterior disk -------------------------------------------------------------

def _sampled(h: CircleMap) -> CircleMap:
    if h.kind in ("identity", "sampled"):
        return h
    return resample(h, max(h.n, 1024))


def _log_extension(L: CircleMap, x, y, s=EXT_SCALE):
    """u + i v and its x, y partials at (x, y), y >= 0, for the lift L."""
    Lp, Lm, L0 = L.evaluate(x + y), L.evaluate(x - y), L.evaluate(x)
    u = np.empty_like(x)
    v = np.empty_like(x)
    big = y >= _SMALL_Y
    if np.any(big):
        xb, yb = x[big], y[big]
        A0 = L.antiderivative(xb)
        ap = (L.antiderivative(xb + yb) - A0) / yb
        am = (A0 - L.antiderivative(xb - yb)) / yb
        u[big] = 0.5 * (ap + am)
        v[big] = 0.5 * s * (ap - am)
    small = ~big
    if np.any(small):
        xs, ys = x[small][:, None], y[small][:, None]
        p = L.evaluate(xs + _GL_T * ys)
        m = L.evaluate(xs - _GL_T * ys)
        u[small] = (p + m) @ _GL_W * 0.5
        v[small] = (p - m) @ _GL_W * 0.5 * s
    tiny = y < _TINY_Y
    ys = np.where(tiny, 1.0, y)
    ux = (Lp - Lm) / (2 * ys)
    uy = (0.5 * (Lp + Lm) - u) / ys
    vx = s * (Lp - 2 * L0 + Lm) / (2 * ys)
    vy = s * (Lp - Lm) / (2 * ys) - v / ys
    if np.any(tiny):
        d = L.derivative(x[tiny])
        ux[tiny], uy[tiny], vx[tiny], vy[tiny] = d, 0.0, 0.0, 0.5 * s * d
        u[tiny], v[tiny] = L0[tiny], 0.0
    return u, v, ux + 1j * vx, uy + 1j * vy


def _smoothstep(r, r0, r1):
    s = np.clip((r - r0) / (r1 - r0), 0.0, 1.0)
    return 1.0 - s * s * (3 - 2 * s), -6 * s * (1 - s) / (r1 - r0)


def mean_rotation(h: CircleMap) -> float:
    th = TWO_PI * np.arange(1024) / 1024
    return float(np.mean(h.evaluate(th) - th))


METHODS = ("hybrid", "level-average", "beurling-ahlfors")
HYBRID_FADE = float(np.log(2.0))


def disk_extension(h: CircleMap, z, blend=BLEND, method: str = "hybrid"):
    """(H, H_z, H_zbar) of the exterior-disk extension at points |z| >= 1.

    In log coordinates zeta = theta - i rho the extension is F(zeta), with
    H = exp(i conj F(conj zeta)).  ``method="level-average"`` takes
    F = u + i rho (u the half-sum average of the lift), so every circle
    |z| = r maps onto itself and the map is quasiconformal for any strictly
    increasing lift; ``"beurling-ahlfors"`` uses u + i v with scale 2.
    The deviation F - zeta - c (c the mean of L(theta) - theta) is faded out
    by a C^1 radial cutoff on ``blend``, leaving the rotation exp(ic) z
    outside.  Points inside the unit disk give NaN; Möbius h extend by
    themselves.
    """
    if method not in METHODS:
        raise ValueError(f"unknown extension method {method!r}")
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = z.ravel()
    H = np.full(z.size, np.nan, dtype=complex)
    Hz = np.full(z.size, np.nan, dtype=complex)
    Hzb = np.full(z.size, np.nan, dtype=complex)
    inf = is_inf(z)
    H[inf] = INF
    r = np.abs(z)
    ok = ~inf & (r >= 1.0 - 1e-14)
    m = h.as_mobius()
    if m is not None:
        H[ok], Hz[ok], Hzb[ok] = m(z[ok]), m.derivative(z[ok]), 0.0
        return H.reshape(shape), Hz.reshape(shape), Hzb.reshape(shape)
    L = _sampled(h)
    c = mean_rotation(L)
    rot = np.exp(1j * c)
    far = ok & (r >= blend[1])
    H[far], Hz[far], Hzb[far] = rot * z[far], rot, 0.0
    near = ok & (r < blend[1])
    if np.any(near):
        zn = z[near]
        rn = np.maximum(r[near], 1.0)
        x = np.mod(np.angle(zn), TWO_PI)
        y = np.log(rn)
        u, v, Fx, Fy = _log_extension(L, x, y)
        if method == "level-average":
            v, Fx, Fy = y, Fx.real + 0j, Fy.real + 1j
        elif method == "hybrid":
            beta, dbeta = _smoothstep(y, 0.0, HYBRID_FADE)
            vy = 1 + beta * (Fy.imag - 1) + dbeta * (v - y)
            v = y + beta * (v - y)
            Fx = Fx.real + 1j * beta * Fx.imag
            Fy = Fy.real + 1j * vy
        chi, dchi = _smoothstep(rn, *blend)
        D = u + 1j * v - (x + 1j * y) - c
        Dx = chi * (Fx - 1)
        Dy = chi * (Fy - 1j) + (rn * dchi) * D
        D = chi * D
        Fzeta = 1 + 0.5 * (Dx - 1j * Dy)
        Fzetab = 0.5 * (Dx + 1j * Dy)
        Hn = np.exp(1j * (x - 1j * y + c + np.conj(D)))
        H[near] = Hn
        Hz[near] = Hn * np.conj(Fzeta) / zn
        Hzb[near] = -Hn * np.conj(Fzetab) / np.conj(zn)
    return H.reshape(shape), Hz.reshape(shape), Hzb.reshape(shape)


def disk_extend(h: CircleMap, grid=None, blend=BLEND, method: str = "hybrid") -> PlaneMap:
    """Quasiconformal self-map of the exterior disk with boundary values h.

    Sampled on ``grid`` (default: polar, 256 x 1024 nodes on 1 <= |z| <= 4)
    with analytic Wirtinger derivatives attached.
    """
    grid = DEFAULT_GRID if grid is None else grid
    H, Hz, Hzb = disk_extension(h, grid.z, blend, method)
    return PlaneMap("exterior-disk", grid, H, "none", Hz, Hzb)


def extension_beltrami(h: CircleMap, z, blend=BLEND, method: str = "hybrid"):
    """Beltrami coefficient of the exterior extension at points |z| >= 1."""
    _, Hz, Hzb = disk_extension(h, z, blend, method)
    return Hzb / Hz


__all__ = [
    "BeltramiField", "DomainTruncationError", "ba_extend", "beltrami_of_map",
    "disk_extend", "disk_extension", "extension_beltrami", "mean_rotation",
]
