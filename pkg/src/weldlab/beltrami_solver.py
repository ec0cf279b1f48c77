"""Beltrami equation f_zbar = mu f_z on the sphere for compactly supported mu.

The solution is written f = z + C h with h = f_zbar, where

    C h(z) = (1/pi) \\int h(w) / (z - w) dA(w),     S h = d/dz C h

(Cauchy and Beurling transforms).  h solves h = mu (1 + S h), which is
iterated as a Neumann series.  On the grid both transforms are discrete
convolutions with cell-averaged kernels, applied with FFTs on the periodic
square [-L, L)^2; with mu supported in [-L/2, L/2]^2 the periodic
convolution reproduces the free-space one on the support exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .kernels import cauchy_sum
from .mobius import INF, DegenerateMobius, Mobius, is_inf
from .plane import BeltramiField, GridMismatchError, PlaneMap, RectGrid, wirtinger_fd

SUP_NORM_CAP = 0.9
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200


class ContractViolation(ValueError):
    """Input outside the solver contract (sup norm or support)."""


class DivergenceError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class DegenerateNormalization(ValueError):
    pass


@dataclass
class SolveReport:
    iterations: int
    residual: float
    normalization: str
    changes: list = field(default_factory=list)

    @property
    def contraction(self) -> float:
        """Largest ratio of successive iteration changes (ignoring the rounding tail)."""
        c = np.asarray(self.changes)
        c = c[c > 1e-13]
        if c.size < 2:
            return 0.0
        return float(np.max(c[1:] / c[:-1]))


# -- cell-averaged kernels --------------------------------------------------

def _sym_offsets(n, h):
    """Offsets w of the periodic grid (ifftshift layout) folded into Re w >= 0."""
    k = np.fft.ifftshift(np.arange(n) - n // 2)
    w = h * (k[:, None] + 1j * k[None, :])
    flip = (w.real < 0) | ((w.real == 0) & (w.imag < 0))
    return w, np.where(flip, -w, w), flip


def _cell_integral(F, w, h):
    a = 0.5 * h
    x, y = w.real, w.imag
    return F(x + a, y + a) - F(x - a, y + a) - F(x + a, y - a) + F(x - a, y - a)


@lru_cache(maxsize=16)
def beurling_symbol(n: int, h: float) -> np.ndarray:
    """DFT of K(w) = -(1/pi) \\int_cell(w) dA / w^2, zero self-cell."""
    _, wf, _ = _sym_offsets(n, h)
    # d/dx d/dy [i log(x + iy)] = 1/(x + iy)^2 ; branch cut avoided by folding
    F = lambda x, y: 1j * np.log(x + 1j * y)  # noqa: E731
    with np.errstate(divide="ignore", invalid="ignore"):
        K = -_cell_integral(F, wf, h) / np.pi
    K[0, 0] = 0.0  # even kernel: K(-w) = K(w)
    return np.fft.fft2(K)


@lru_cache(maxsize=16)
def cauchy_symbol(n: int, h: float) -> np.ndarray:
    """DFT of K(w) = (1/pi) \\int_cell(w) dA / w, zero self-cell."""
    _, wf, flip = _sym_offsets(n, h)
    # d/dx d/dy [-i (w log w - w)] = 1/w
    F = lambda x, y: -1j * ((x + 1j * y) * np.log(x + 1j * y) - (x + 1j * y))  # noqa: E731
    with np.errstate(divide="ignore", invalid="ignore"):
        K = _cell_integral(F, wf, h) / np.pi
    K = np.where(flip, -K, K)  # odd kernel
    K[0, 0] = 0.0
    return np.fft.fft2(K)


def _apply(symbol, h):
    return np.fft.ifft2(np.fft.fft2(h) * symbol)


def _padded(symbol_fn, dens, grid):
    """Free-space convolution of a density on the whole grid (zero-padding to 2n)."""
    n = grid.n
    big = np.zeros((2 * n, 2 * n), dtype=complex)
    big[:n, :n] = dens
    out = _apply(symbol_fn(2 * n, grid.spacing), big)
    return out[:n, :n]


def beurling_transform(dens, grid: RectGrid, padded: bool = True):
    return _padded(beurling_symbol, dens, grid) if padded else _apply(beurling_symbol(grid.n, grid.spacing), dens)


def cauchy_transform(dens, grid: RectGrid):
    return _padded(cauchy_symbol, dens, grid)


def _rect_cauchy(a, b, c, d):
    r"""\int_[a,b]x[c,d] dA / t for rectangles in the closed right half-plane."""
    def G(x, y):
        t = x + 1j * y
        with np.errstate(divide="ignore", invalid="ignore"):
            tl = np.where(t == 0, 0.0, t * np.log(np.where(t == 0, 1.0, t)))
        return -1j * (tl - t)
    return G(b, d) - G(a, d) - G(b, c) + G(a, c)


def cauchy_cell(delta, h):
    r"""(1/pi) \int dA/t over the h-square centred at delta (any position, exact)."""
    delta = np.asarray(delta, dtype=complex)
    x0, x1 = delta.real - 0.5 * h, delta.real + 0.5 * h
    y0, y1 = delta.imag - 0.5 * h, delta.imag + 0.5 * h
    xa = np.maximum(x0, 0.0)
    out = np.where(x1 > xa, _rect_cauchy(xa, x1, y0, y1), 0.0)
    xb = np.minimum(x1, 0.0)
    # left part by the odd symmetry t -> -t
    out = out - np.where(x0 < xb, _rect_cauchy(-xb, -x0, -y1, -y0), 0.0)
    return out / np.pi


NEAR = 2


# -- solutions ----------------------------------------------------------------

class BeltramiSolution(PlaneMap):
    """Grid solution that can also be evaluated at arbitrary points.

    ``density`` is h = (f_hydro)_zbar on the grid and ``mobius`` the
    normalizing post-composition, so f = mobius(z + C h).
    """

    def __init__(self, grid, density, mobius, normalization, values, dz, dzbar):
        super().__init__("sphere", grid, values, normalization, dz, dzbar)
        self.density = density
        self.mobius = mobius
        mask = np.abs(density) > 0
        self._src = np.ascontiguousarray(grid.z[mask])
        self._w = np.ascontiguousarray(density[mask] * grid.cell_area / np.pi)

    def hydrodynamic(self, z):
        """z + C h at arbitrary points (inf -> inf).

        Far cells are summed directly; the (2 NEAR + 1)^2 cells nearest each
        target use exact cell integrals, so the value is that of the
        piecewise-constant density everywhere, including on its support.
        """
        z = np.asarray(z, dtype=complex)
        out = np.array(z, dtype=complex, copy=True)
        fin = ~is_inf(z)
        if np.any(fin):
            zf = z[fin]
            out[fin] = zf + cauchy_sum(zf, self._src, self._w) + self._near_correction(zf)
        return out

    def _near_correction(self, z):
        g = self.grid
        h = g.spacing
        L = g.half_width
        i0 = np.rint((z.real + L) / h).astype(int)
        j0 = np.rint((z.imag + L) / h).astype(int)
        corr = np.zeros(z.shape, dtype=complex)
        for a in range(-NEAR, NEAR + 1):
            for b in range(-NEAR, NEAR + 1):
                i, j = i0 + a, j0 + b
                ok = (i >= 0) & (i < g.n) & (j >= 0) & (j < g.n)
                if not np.any(ok):
                    continue
                dens = np.zeros(z.shape, dtype=complex)
                dens[ok] = self.density[i[ok], j[ok]]
                live = ok & (dens != 0)
                if not np.any(live):
                    continue
                w = (-L + h * i[live]) + 1j * (-L + h * j[live])
                dz = z[live] - w
                point = np.where(np.abs(dz) > 1e-14, h * h / (np.pi * np.where(dz == 0, 1, dz)), 0.0)
                corr[live] += dens[live] * (cauchy_cell(dz, h) - point)
        return corr

    def hydrodynamic_dz(self, z):
        """1 + S h at points off the support."""
        z = np.asarray(z, dtype=complex)
        return 1.0 - cauchy_sum(z, self._src, self._w, power=2)

    def __call__(self, z):
        return self.mobius(self.hydrodynamic(z))

    @classmethod
    def _build(cls, grid, density, mobius, normalization, hyd, fz_h):
        d = mobius.derivative(hyd)
        out = cls(grid, density, mobius, normalization, mobius(hyd), d * fz_h, d * density)
        out._hyd = hyd
        out._fz_hydro = fz_h
        return out


def _check_contract(mu: BeltramiField):
    if not isinstance(mu.grid, RectGrid):
        raise ContractViolation("solver needs a RectGrid Beltrami field")
    if mu.sup_norm > SUP_NORM_CAP:
        raise ContractViolation(f"sup |mu| = {mu.sup_norm:.4g} exceeds the solver cap {SUP_NORM_CAP}")
    x = mu.grid.axis
    half = 0.5 * mu.grid.half_width
    outside = (np.abs(x) > half + 1e-12)
    if np.any(np.abs(mu.mu[outside, :]) > 0) or np.any(np.abs(mu.mu[:, outside]) > 0):
        raise ContractViolation("mu must vanish outside [-L/2, L/2]^2 of its grid")


def solve_beltrami(mu: BeltramiField, norm: str = "hydrodynamic", tol: float = DEFAULT_TOL,
                   max_iter: int = DEFAULT_MAX_ITER, seed: int | None = None,
                   points=(0, 1, INF)):
    """Normalized solution of f_zbar = mu f_z; returns (BeltramiSolution, SolveReport).

    ``norm`` is ``"hydrodynamic"`` (f(z) - z -> 0 at infinity) or
    ``"fix-0-1-inf"`` (f fixes ``points``, by default 0, 1 and infinity).
    ``seed`` starts the iteration from a random density instead of mu.
    """
    if norm not in ("hydrodynamic", "fix-0-1-inf"):
        raise ValueError(f"unknown normalization {norm!r}")
    _check_contract(mu)
    grid = mu.grid
    m = mu.mu
    symbol = beurling_symbol(grid.n, grid.spacing)
    support = np.abs(m) > 0
    if seed is None:
        h = m.copy()
    else:
        rng = np.random.default_rng(seed)
        h = m * (rng.standard_normal(m.shape) + 1j * rng.standard_normal(m.shape))
    changes = []
    it = 0
    if np.any(support):
        for it in range(1, max_iter + 1):
            new = m * (1.0 + _apply(symbol, h))
            change = float(np.max(np.abs(new - h)))
            changes.append(change)
            h = new
            if change < tol:
                break
            if not np.isfinite(change):
                raise DivergenceError("Neumann iteration overflowed", change)
        else:
            raise DivergenceError(f"no convergence in {max_iter} iterations (last change {changes[-1]:.3g})",
                                  changes[-1])
    else:
        h = np.zeros_like(m)
    z = grid.z
    hyd = z + cauchy_transform(h, grid)
    fz_h = 1.0 + beurling_transform(h, grid)
    interior = np.zeros(m.shape, bool)
    interior[1:-1, 1:-1] = True
    report_res = float(np.max(np.abs(h - m * fz_h)[interior] / (1 + np.abs(fz_h[interior]))))
    sol = BeltramiSolution._build(grid, h, Mobius.identity(), "hydrodynamic", hyd, fz_h)
    if norm == "fix-0-1-inf":
        sol = renormalize(sol, points)
    return sol, SolveReport(it, report_res, norm, changes)


def residual(f: PlaneMap, mu: BeltramiField, region=None) -> float:
    """sup |f_zbar - mu f_z| / |f_z| from finite differences of f's samples.

    ``region`` optionally restricts the sup to a boolean mask; the outermost
    ring of nodes is always skipped.
    """
    if np.shape(f.values) != np.shape(mu.mu) or type(f.grid) is not type(mu.grid):
        raise GridMismatchError("map and Beltrami field live on different grids")
    fz, fzb = wirtinger_fd(f.values, f.grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        defect = np.abs(fzb - mu.mu * fz) / np.abs(fz)
    keep = np.zeros(defect.shape, bool)
    keep[1:-1, 1:-1] = True
    if region is not None:
        keep &= np.asarray(region, bool)
    vals = defect[keep]
    return float(np.max(vals)) if vals.size else 0.0


def _value_at(f: PlaneMap, p):
    if is_inf(p):
        return INF if f.normalization in ("hydrodynamic", "fix-0-1-inf") else None
    if isinstance(f, BeltramiSolution):
        return complex(f(np.array([p]))[0])
    z = f.grid.z
    idx = np.unravel_index(np.argmin(np.abs(z - p)), z.shape)
    if abs(z[idx] - p) > 1e-12:
        raise DegenerateNormalization(f"map not sampled at {p}")
    return complex(f.values[idx])


def renormalize(f: PlaneMap, points=(0, 1, INF)) -> PlaneMap:
    """Post-compose f with the Möbius map that makes it fix the three points."""
    images = [_value_at(f, p) for p in points]
    if any(v is None for v in images):
        raise DegenerateNormalization("image of infinity unknown for this map")
    try:
        m = Mobius.three_point(tuple(images), tuple(points))
    except DegenerateMobius as exc:
        raise DegenerateNormalization(str(exc)) from exc
    if isinstance(f, BeltramiSolution):
        return BeltramiSolution._build(f.grid, f.density, m @ f.mobius, "fix-0-1-inf", f._hyd, f._fz_hydro)
    d = m.derivative(f.values)
    fz, fzb = (f.dz, f.dzbar) if f.dz is not None else (None, None)
    return PlaneMap(f.domain, f.grid, m(f.values), "fix-0-1-inf",
                    None if fz is None else d * fz, None if fzb is None else d * fzb)
