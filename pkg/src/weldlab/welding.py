"""Conformal welding h = g^{-1} o f of circle homeomorphisms.

The boundary map is extended quasiconformally to the exterior disk, its
Beltrami coefficient (zero inside the disk) is solved on the sphere, and the
two conformal pieces are read off the solution on the unit circle:

    f = W on the disk,        g = W o H^{-1} on the exterior disk.

Both are stored as power series of the hydrodynamically normalized solution
(Taylor for f, Laurent with a simple pole at infinity for g), followed by the
Möbius map M giving f(0) = 0 and g(1) = 1, g(-1) = -1.  When h fixes 1 and
-1 this is the same as asking the welded sphere map to fix 0, 1 and -1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .ba_extension import BLEND, extension_beltrami
from .beltrami_solver import SolveReport, solve_beltrami
from .circle_maps import TWO_PI, CircleMap, compose, invert, nodes
from .mobius import INF, Mobius, is_inf
from .plane import BeltramiField, PlaneMap, PolarGrid, RectGrid, disk_coverage

DEFAULT_GRID_N = 512
DEFAULT_SAMPLES = 1024
WELD_TOL = 1e-2
NORMAL_POINTS = (0.0, 1.0, -1.0)


class WeldingFailure(RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class CurveNotSimple(ValueError):
    """Boundary curve of the interior map self-intersects."""


def _taylor(samples):
    c = np.fft.fft(samples) / samples.size
    return c[: samples.size // 2]


def _laurent(samples):
    """Coefficients b_1, b_0, b_-1, ... from samples on the unit circle."""
    c = np.fft.fft(samples) / samples.size
    n = samples.size
    neg = c[(-np.arange(n // 2)) % n]  # b_0, b_-1, ...
    return np.concatenate([[c[1]], neg])


def _trim(coef, rel=1e-17):
    mag = np.abs(coef)
    keep = np.nonzero(mag > rel * max(mag.max(), 1e-300))[0]
    return coef[: keep[-1] + 1] if keep.size else coef[:1]


@dataclass
class WeldingPair:
    """Normalized conformal pair with f on the disk and g on the exterior disk.

    f = M o F, g = M o G o A with F(z) = sum a_k z^k and
    G(w) = b_1 w + sum_{k >= 0} b_{-k} w^{-k}.
    """

    taylor: np.ndarray
    laurent: np.ndarray
    mobius: Mobius
    pre: Mobius
    residual: float = float("nan")
    samples: int = DEFAULT_SAMPLES
    report: SolveReport | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.taylor = _trim(np.asarray(self.taylor, dtype=complex))
        lau = np.asarray(self.laurent, dtype=complex)
        self.laurent = np.concatenate([lau[:1], _trim(lau[1:])])

    # -- raw series ----------------------------------------------------------
    def _F(self, z):
        return np.polynomial.polynomial.polyval(z, self.taylor)

    def _dF(self, z):
        return np.polynomial.polynomial.polyval(z, np.polynomial.polynomial.polyder(self.taylor))

    def _G(self, w):
        w = np.asarray(w, dtype=complex)
        inf = is_inf(w)
        if not np.any(inf):
            return self.laurent[0] * w + np.polynomial.polynomial.polyval(1.0 / w, self.laurent[1:])
        out = np.empty(w.shape, dtype=complex)
        out[inf] = INF if self.laurent[0] != 0 else self.laurent[1]
        wf = w[~inf]
        out[~inf] = self.laurent[0] * wf + np.polynomial.polynomial.polyval(1.0 / wf, self.laurent[1:])
        return out

    def _dG(self, w):
        b = self.laurent[1:]
        d = np.polynomial.polynomial.polyval(1.0 / w, np.polynomial.polynomial.polyder(b))
        return self.laurent[0] - d / (w * w)

    # -- normalized maps -------------------------------------------------------
    def f_at(self, z):
        return self.mobius(self._F(np.asarray(z, dtype=complex)))

    def g_at(self, w):
        a = self.pre(np.asarray(w, dtype=complex))
        return self.mobius(self._G(a))

    def f_prime(self, z):
        z = np.asarray(z, dtype=complex)
        F = self._F(z)
        return self.mobius.derivative(F) * self._dF(z)

    def g_prime(self, w):
        w = np.asarray(w, dtype=complex)
        a = self.pre(w)
        return self.mobius.derivative(self._G(a)) * self._dG(a) * self.pre.derivative(w)

    def g_inverse_on_circle(self, targets, iters: int = 30):
        """Angles phi with g(e^{i phi}) = target for points on g(S^1)."""
        targets = np.asarray(targets, dtype=complex)
        m = 8 * self.samples
        grid = TWO_PI * np.arange(m) / m
        curve = self.g_at(np.exp(1j * grid))
        phi = np.empty(targets.size)
        flat = targets.ravel()
        for s in range(0, flat.size, 512):
            d = np.abs(flat[s:s + 512, None] - curve[None, :])
            phi[s:s + 512] = grid[np.argmin(d, axis=1)]
        for _ in range(iters):
            e = np.exp(1j * phi)
            r = self.g_at(e) - flat
            d = 1j * e * self.g_prime(e)
            step = np.real(np.conj(d) * r) / np.abs(d) ** 2
            phi = phi - step
            if np.max(np.abs(step)) < 1e-15:
                break
        return phi.reshape(targets.shape)

    @property
    def mobius_parts(self):
        """(f, g) as Möbius maps when both pieces are Möbius, else None."""
        t, b = self.taylor, self.laurent
        if t.size == 2 and t[0] == 0 and t[1] == 1 and b.size == 2 and b[0] == 1 and b[1] == 0:
            return self.mobius, self.mobius @ self.pre
        return None

    @property
    def omega_boundary(self) -> np.ndarray:
        return self.f_at(np.exp(1j * nodes(self.samples)))

    def f_map(self, n_r: int = 65, n_theta: int | None = None) -> PlaneMap:
        grid = PolarGrid.annulus(0.0, 1.0, n_r, n_theta or self.samples)
        z = grid.z
        return PlaneMap("disk", grid, self.f_at(z), "fix-0-1-inf", self.f_prime(z), np.zeros(z.shape, complex))

    def g_map(self, n_r: int = 65, n_theta: int | None = None, r_max: float = BLEND[1]) -> PlaneMap:
        grid = PolarGrid.annulus(1.0, r_max, n_r, n_theta or self.samples)
        z = grid.z
        return PlaneMap("exterior-disk", grid, self.g_at(z), "fix-0-1-inf", self.g_prime(z),
                        np.zeros(z.shape, complex))

    @property
    def f(self) -> PlaneMap:
        return self.f_map()

    @property
    def g(self) -> PlaneMap:
        return self.g_map()

    def normalization_certificate(self) -> dict:
        """Errors of f(0) = 0, g(1) = 1, g(-1) = -1 (and f(+-1) for normalized h)."""
        vals = np.array([self.f_at(np.array([0j]))[0], *self.g_at(np.array([1.0 + 0j, -1.0 + 0j]))])
        pts = np.array(NORMAL_POINTS, dtype=complex)
        return {"points": ["f(0)", "g(1)", "g(-1)"],
                "max_error": float(np.max(np.abs(vals - pts)))}

    def to_json(self) -> str:
        z = np.exp(1j * nodes(self.samples))
        fb, gb = self.f_at(z), self.g_at(z)
        payload = {
            "samples": self.samples,
            "f_boundary": [[float(v.real), float(v.imag)] for v in fb],
            "g_boundary": [[float(v.real), float(v.imag)] for v in gb],
            "residual": float(self.residual),
            "normalization": self.normalization_certificate(),
        }
        return json.dumps(payload, sort_keys=True)

    def to_svg(self, size: int = 400) -> str:
        pts = self.omega_boundary
        lo = np.array([pts.real.min(), pts.imag.min()])
        span = max(pts.real.max() - lo[0], pts.imag.max() - lo[1]) or 1.0
        scale = 0.9 * size / span
        xs = 0.05 * size + (pts.real - lo[0]) * scale
        ys = size - (0.05 * size + (pts.imag - lo[1]) * scale)
        path = " ".join(f"{x:.3f},{y:.3f}" for x, y in zip(xs, ys))
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">'
                f'<polygon points="{path}" fill="none" stroke="black" stroke-width="1"/></svg>')


def verify_weld(pair: WeldingPair, h: CircleMap, n: int | None = None) -> float:
    """sup over S^1 of |g^{-1}(f(z)) - h(z)|."""
    n = n or pair.samples
    th = nodes(n)
    w = pair.f_at(np.exp(1j * th))
    phi = pair.g_inverse_on_circle(w)
    return float(np.max(np.abs(np.exp(1j * phi) - np.exp(1j * h.evaluate(th)))))


def _normalized(pair: WeldingPair) -> WeldingPair:
    """Post-compose so that f(0) = 0 and g(1) = 1, g(-1) = -1."""
    F0 = complex(pair.f_at(np.array([0j]))[0])
    G1, Gm1 = pair.g_at(np.array([1.0 + 0j, -1.0 + 0j]))
    m = Mobius.three_point((F0, complex(G1), complex(Gm1)), NORMAL_POINTS)
    pair.mobius = m @ pair.mobius
    return pair


def exterior_beltrami(h: CircleMap, grid: RectGrid, method: str = "hybrid") -> BeltramiField:
    """mu of the exterior extension on a solver grid (0 on the disk, cell-weighted at S^1)."""
    z = grid.z
    r = np.abs(z)
    frac = 1.0 - disk_coverage(grid, 1.0)
    zz = np.where(r < 1, np.exp(1j * np.angle(z)), z)
    mu = np.where(frac > 0, frac * extension_beltrami(h, zz, method=method), 0.0)
    return BeltramiField(grid, mu)


def weld(h: CircleMap, grid_n: int = DEFAULT_GRID_N, samples: int | None = None,
         tol: float = WELD_TOL, method: str = "hybrid", check: bool = True) -> WeldingPair:
    """Conformal welding of h; raises WeldingFailure if the residual exceeds ``tol``."""
    h.check_monotone()
    n = samples or max(h.n, DEFAULT_SAMPLES)
    th = nodes(n)
    m = h.as_mobius()
    if m is not None:
        # H = m is conformal, so mu = 0 and the hydrodynamic solution is the identity
        report = SolveReport(0, 0.0, "hydrodynamic")
        mu_sup = 0.0
        pre = m.inverse()
        taylor, laurent = np.array([0, 1], complex), np.array([1, 0], complex)
    else:
        grid = RectGrid(grid_n, 2 * BLEND[1])
        mu = exterior_beltrami(h, grid, method)
        mu_sup = mu.sup_norm
        sol, report = solve_beltrami(mu, "hydrodynamic")
        pre = Mobius.identity()
        fs = sol.hydrodynamic(np.exp(1j * th))
        gs = sol.hydrodynamic(np.exp(1j * invert(h).evaluate(th)))
        taylor, laurent = _taylor(fs), _laurent(gs)
    pair = _normalized(WeldingPair(taylor, laurent, Mobius.identity(), pre, samples=n, report=report))
    pair.diagnostics = {
        "mu_sup": mu_sup,
        "iterations": report.iterations,
        "solver_residual": report.residual,
        "grid_n": grid_n,
        "taylor_tail": float(np.max(np.abs(pair.taylor[-8:]))) if pair.taylor.size > 8 else 0.0,
    }
    pair.residual = verify_weld(pair, h, n)
    if check and not pair.residual <= tol:
        raise WeldingFailure(f"welding residual {pair.residual:.3g} above tolerance {tol:.3g}",
                             dict(pair.diagnostics, residual=pair.residual))
    return pair


# -- oracle ----------------------------------------------------------------------

def _check_simple(curve):
    from shapely.geometry import LinearRing

    ring = LinearRing(np.column_stack([curve.real, curve.imag]))
    if not ring.is_simple:
        raise CurveNotSimple("boundary curve of f0 is not simple")
    x, y = curve.real, curve.imag
    area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    if area <= 0:
        raise CurveNotSimple("boundary curve of f0 is negatively oriented")


def _log_sin_weights(n):
    """Circulant weights r_k with sum_j r_{i-j} phi_j = \\int log|2 sin((s-t)/2)| phi(t) dt."""
    m = np.fft.fftfreq(n, 1.0 / n)
    c = np.zeros(n)
    nz = m != 0
    c[nz] = -np.pi / np.abs(m[nz])
    c[n // 2] = -TWO_PI / n
    return np.real(np.fft.ifft(c))


def equilibrium_density(curve):
    """Density sigma(t_j) (per unit parameter) of the equilibrium measure of a curve.

    Solves the single-layer equation \\int log|z(s) - z(t)| sigma(t) dt = const
    on z(s), \\int sigma = 1, by trigonometric (log-split) quadrature.
    """
    n = curve.size
    t = nodes(n)
    k = np.fft.fftfreq(n, 1.0 / n)
    k[n // 2] = 0
    dz = np.fft.ifft(1j * k * np.fft.fft(curve))
    diff = t[:, None] - t[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        smooth = np.log(np.abs(curve[:, None] - curve[None, :]) / np.abs(2 * np.sin(0.5 * diff)))
    smooth[np.diag_indices(n)] = np.log(np.abs(dz))
    r = _log_sin_weights(n)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = r[idx] + (TWO_PI / n) * smooth
    A[:n, n] = -1.0
    A[n, :n] = TWO_PI / n
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    sol = np.linalg.solve(A, rhs)
    return sol[:n]


class _Primitive:
    r"""phi(t) = 2 pi \int_0^t sigma for the trigonometric interpolant of sigma."""

    def __init__(self, sigma):
        n = sigma.size
        c = np.fft.fft(sigma) / n
        k = np.fft.fftfreq(n, 1.0 / n)
        keep = (k != 0) & (np.abs(k) < n // 2)
        self.c0 = float(np.real(c[0]))
        self.k = k[keep]
        self.c = c[keep]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        e = np.exp(1j * np.multiply.outer(t, self.k)) - 1.0
        return TWO_PI * (self.c0 * t + np.real(e @ (self.c / (1j * self.k))))

    def density(self, t):
        e = np.exp(1j * np.multiply.outer(np.asarray(t, dtype=float), self.k))
        return TWO_PI * (self.c0 + np.real(e @ self.c))

    def inverse(self, y, guess):
        t = np.array(guess, dtype=float)
        for _ in range(20):
            step = (self(t) - y) / self.density(t)
            t -= step
            if np.max(np.abs(step)) < 1e-15:
                break
        return t


def synthesize_h(f0, n: int = DEFAULT_SAMPLES):
    """Boundary map h = g0^{-1} o f0 for a univalent f0 and the normalized oracle pair.

    g0 is the exterior Riemann map of the complement of f0(D) (g0(inf) = inf),
    found from the equilibrium measure of the boundary curve.  Returns
    (h, pair) with h fixing 1, -1, i and pair normalized like ``weld``.
    """
    th = nodes(n)
    circle = np.exp(1j * th)
    curve = np.asarray(f0(circle), dtype=complex)
    _check_simple(curve)
    sigma = equilibrium_density(curve)
    if np.any(sigma <= 0):
        raise CurveNotSimple("equilibrium density not positive; curve under-resolved")
    prim = _Primitive(sigma)
    h_raw = CircleMap.from_lift(prim(th))
    pts = np.array([1, -1, 1j])
    sigma_n = Mobius.three_point(tuple(h_raw(pts)), tuple(pts))
    h = compose(CircleMap.mobius(sigma_n, n), h_raw)
    fs = curve
    pre_images = prim.inverse(th, invert(h_raw).evaluate(th))
    gs = np.asarray(f0(np.exp(1j * pre_images)), dtype=complex)
    pair = _normalized(WeldingPair(_taylor(fs), _laurent(gs), Mobius.identity(), sigma_n.inverse(), samples=n))
    pair.residual = verify_weld(pair, h, n)
    return h, pair


def boundary_error(pair: WeldingPair, other: WeldingPair, n: int | None = None) -> dict:
    """Sup distances between the S^1 traces of two pairs (f and g separately)."""
    n = n or max(pair.samples, other.samples)
    z = np.exp(1j * nodes(n))
    return {"f": float(np.max(np.abs(pair.f_at(z) - other.f_at(z)))),
            "g": float(np.max(np.abs(pair.g_at(z) - other.g_at(z))))}
