"""Orientation-preserving circle homeomorphisms represented by their lifts.

A :class:`CircleMap` is determined by a strictly increasing lift ``L`` with
``L(theta + 2 pi) = L(theta) + 2 pi``; the circle map is
``exp(i theta) -> exp(i L(theta))``.  Sampled maps interpolate the lift with a
monotone (PCHIP) cubic, so every sampled map is a genuine homeomorphism.

Compositions, inverses and reflections are kept as expression trees: their
samples are computed on demand and inverses are exact inversions of the
underlying interpolants, so identities such as ``invert(a) o a = id`` hold to
rounding error rather than to interpolation error.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .mobius import Mobius

TWO_PI = 2.0 * np.pi
DEFAULT_N = 1024
INTERP_TAGS = ("monotone-cubic", "linear")


class DegenerateMapError(ValueError):
    """The lift is not strictly increasing (the map is not a homeomorphism)."""


def nodes(n: int) -> np.ndarray:
    return TWO_PI * np.arange(n) / n


def _circle_form(m: Mobius) -> tuple[complex, complex]:
    """Write a disk-preserving Möbius map as z -> (a z + b) / (conj(b) z + conj(a))."""
    A, B, C, D = m.a, m.b, m.c, m.d
    s = np.sqrt(np.conj(D) / A)
    a, b = complex(s * A), complex(s * B)
    if not (abs(a) > abs(b) and abs(np.conj(b) - s * C) < 1e-9 * abs(a)):
        raise DegenerateMapError("Möbius map does not preserve the unit disk")
    return a, b


class CircleMap:
    """A sampled or closed-form orientation-preserving homeomorphism of S^1."""

    __slots__ = ("kind", "n", "interp", "_data", "_lift", "_spline")

    def __init__(self, kind: str, n: int = DEFAULT_N, interp: str = "monotone-cubic", data=None):
        if interp not in INTERP_TAGS:
            raise ValueError(f"unknown interpolation tag {interp!r}")
        self.kind = kind
        self.n = int(n)
        self.interp = interp
        self._data = data
        self._lift = None
        self._spline = None
        if kind == "sampled":
            self._setup_sampled()

    # -- constructors -----------------------------------------------------
    @classmethod
    def identity(cls, n: int = DEFAULT_N) -> "CircleMap":
        return cls("identity", n)

    @classmethod
    def mobius(cls, m: Mobius, n: int = DEFAULT_N) -> "CircleMap":
        a, b = _circle_form(m)
        return cls("mobius", n, data=(a, b))

    @classmethod
    def rotation(cls, alpha: float, n: int = DEFAULT_N) -> "CircleMap":
        return cls("mobius", n, data=(complex(np.exp(0.5j * alpha)), 0j))

    @classmethod
    def disk_automorphism(cls, a: complex, rotation: float = 0.0, n: int = DEFAULT_N) -> "CircleMap":
        """z -> e^{i rotation} (z - a) / (1 - conj(a) z) for |a| < 1."""
        m = Mobius.rotation(rotation) @ Mobius.from_matrix([[1, -a], [-np.conj(a), 1]])
        return cls.mobius(m, n)

    @classmethod
    def from_lift(cls, lift, interp: str = "monotone-cubic") -> "CircleMap":
        lift = np.asarray(lift, dtype=float)
        return cls("sampled", lift.size, interp, data=lift.copy())

    @classmethod
    def from_function(cls, fn, n: int = DEFAULT_N, interp: str = "monotone-cubic") -> "CircleMap":
        """Sample a vectorised lift function at the n uniform nodes."""
        return cls.from_lift(fn(nodes(n)), interp)

    @classmethod
    def from_line_map(cls, fn, n: int = DEFAULT_N, interp: str = "monotone-cubic") -> "CircleMap":
        """Pull back an increasing map of the real line through the Cayley transform."""
        theta = nodes(n)
        x = np.tan(theta / 2)
        x[n // 2] = np.inf
        with np.errstate(invalid="ignore"):
            y = np.asarray(fn(x), dtype=float)
        y[n // 2] = np.inf
        lift = 2 * np.arctan(y)
        lift[n // 2] = np.pi
        lift[n // 2 + 1:] += TWO_PI
        return cls.from_lift(lift, interp)

    # -- sampled-kind helpers -------------------------------------------
    def _setup_sampled(self):
        lift = self._data
        n = lift.size
        if n < 4 or n & (n - 1):
            raise ValueError("sample count must be a power of two >= 4")
        if not np.all(np.isfinite(lift)):
            raise DegenerateMapError("non-finite lift samples")
        ext = np.concatenate([lift[-3:] - TWO_PI, lift, lift[:3] + TWO_PI])
        if np.any(np.diff(ext) <= 0):
            raise DegenerateMapError("lift samples are not strictly increasing")
        th = (np.arange(-3, n + 3)) * TWO_PI / n
        self._lift = lift
        if self.interp == "monotone-cubic":
            self._spline = PchipInterpolator(th, ext, extrapolate=False)
        else:
            self._spline = (th, ext)

    def _sampled_eval(self, theta):
        q = np.floor(theta / TWO_PI)
        r = theta - TWO_PI * q
        if self.interp == "monotone-cubic":
            v = self._spline(r)
        else:
            th, ext = self._spline
            v = np.interp(r, th, ext)
        return v + TWO_PI * q

    def _sampled_inverse(self, y):
        lift = self._lift
        n = lift.size
        q = np.floor((y - lift[0]) / TWO_PI)
        r = y - TWO_PI * q
        ext_vals = np.concatenate([lift, [lift[0] + TWO_PI]])
        k = np.clip(np.searchsorted(ext_vals, r, side="right") - 1, 0, n - 1)
        h = TWO_PI / n
        lo = np.zeros_like(r)
        hi = np.full_like(r, h)
        if self.interp == "linear":
            s = h * (r - ext_vals[k]) / (ext_vals[k + 1] - ext_vals[k])
        else:
            c = self._spline.c[:, k + 3]
            target = r - c[3]
            s = h * (r - ext_vals[k]) / (ext_vals[k + 1] - ext_vals[k])
            for _ in range(60):
                f = ((c[0] * s + c[1]) * s + c[2]) * s - target
                lo = np.where(f < 0, s, lo)
                hi = np.where(f > 0, s, hi)
                df = (3 * c[0] * s + 2 * c[1]) * s + c[2]
                with np.errstate(divide="ignore", invalid="ignore"):
                    step = s - f / df
                bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
                step = np.where(bad, 0.5 * (lo + hi), step)
                if np.all(np.abs(step - s) <= 1e-16 * h):
                    s = step
                    break
                s = step
        return k * h + s + TWO_PI * q

    # -- evaluation -------------------------------------------------------
    def evaluate(self, theta):
        """Lift value L(theta) (radians)."""
        theta = np.asarray(theta, dtype=float)
        kind = self.kind
        if kind == "identity":
            return theta.copy()
        if kind == "mobius":
            a, b = self._data
            return theta + 2 * np.angle(a) + 2 * np.angle(1 + (b / a) * np.exp(-1j * theta))
        if kind == "sampled":
            return self._sampled_eval(theta)
        if kind == "composite":
            out = theta
            for part in reversed(self._data):
                out = part.evaluate(out)
            return out
        if kind == "inverse":
            return self._data.evaluate_inverse(theta)
        if kind == "reflected":
            return -self._data.evaluate(-theta)
        raise ValueError(f"unknown kind {kind!r}")

    def evaluate_inverse(self, y):
        """theta with L(theta) = y, exact for the interpolant."""
        y = np.asarray(y, dtype=float)
        kind = self.kind
        if kind == "identity":
            return y.copy()
        if kind == "mobius":
            return invert(self).evaluate(y)
        if kind == "sampled":
            return self._sampled_inverse(y)
        if kind == "composite":
            out = y
            for part in self._data:
                out = part.evaluate_inverse(out)
            return out
        if kind == "inverse":
            return self._data.evaluate(y)
        if kind == "reflected":
            return -self._data.evaluate_inverse(-y)
        raise ValueError(f"unknown kind {kind!r}")

    def derivative(self, theta):
        """L'(theta) for sampled kinds (the interpolant's derivative)."""
        if self.kind == "identity":
            return np.ones_like(np.asarray(theta, dtype=float))
        if self.kind != "sampled":
            raise TypeError("derivative needs an identity or sampled map; resample first")
        theta = np.asarray(theta, dtype=float)
        r = theta - TWO_PI * np.floor(theta / TWO_PI)
        if self.interp == "monotone-cubic":
            return self._spline.derivative()(r)
        th, ext = self._spline
        k = np.clip(np.searchsorted(th, r, side="right") - 1, 0, th.size - 2)
        return (ext[k + 1] - ext[k]) / (th[k + 1] - th[k])

    def antiderivative(self, s):
        """Integral of the lift from 0 to s (exact for the interpolant)."""
        s = np.asarray(s, dtype=float)
        if self.kind == "identity":
            return 0.5 * s * s
        if self.kind != "sampled":
            raise TypeError("antiderivative needs an identity or sampled map; resample first")
        if self.interp == "monotone-cubic":
            anti = self._spline.antiderivative()
            base = lambda r: anti(r) - anti(0.0)  # noqa: E731
        else:
            th, ext = self._spline
            cum = np.concatenate([[0.0], np.cumsum(0.5 * (ext[1:] + ext[:-1]) * np.diff(th))])

            def base(r):
                k = np.clip(np.searchsorted(th, r, side="right") - 1, 0, th.size - 2)
                d = r - th[k]
                slope = (ext[k + 1] - ext[k]) / (th[k + 1] - th[k])
                c0 = np.interp(0.0, th, cum)
                return cum[k] + ext[k] * d + 0.5 * slope * d * d - c0
        period = float(base(TWO_PI))
        q = np.floor(s / TWO_PI)
        r = s - TWO_PI * q
        # int_0^{2 pi q + r} L = q I0 + 2 pi^2 q (q - 1) + 2 pi q r + int_0^r L
        return q * period + 2 * np.pi ** 2 * q * (q - 1) + TWO_PI * q * r + base(r)

    def __call__(self, z):
        """Apply the map to points of the unit circle."""
        return np.exp(1j * self.evaluate(np.angle(z)))

    @property
    def lift(self) -> np.ndarray:
        if self._lift is None:
            self._lift = self.evaluate(nodes(self.n))
        return self._lift

    @property
    def coefficients(self):
        """(a, b, conj(b), conj(a)) for Möbius-kind maps, else None."""
        if self.kind != "mobius":
            return None
        a, b = self._data
        return (a, b, np.conj(b), np.conj(a))

    def as_mobius(self) -> Mobius | None:
        if self.kind == "identity":
            return Mobius.identity()
        if self.kind == "mobius":
            return Mobius.from_matrix([[self._data[0], self._data[1]],
                                       [np.conj(self._data[1]), np.conj(self._data[0])]])
        return None

    def is_mobius(self) -> bool:
        return self.kind in ("identity", "mobius")

    def check_monotone(self):
        lift = self.lift
        ext = np.concatenate([lift, [lift[0] + TWO_PI]])
        if np.any(np.diff(ext) <= 0):
            raise DegenerateMapError(f"{self.kind} map has non-increasing samples")
        return self

    def winding(self) -> float:
        return float(self.evaluate(TWO_PI) - self.evaluate(0.0))

    def __repr__(self):
        return f"CircleMap(kind={self.kind!r}, n={self.n}, interp={self.interp!r})"


def compose(m1: CircleMap, m2: CircleMap) -> CircleMap:
    """m1 o m2 (apply m2 first)."""
    n = max(m1.n, m2.n)
    if m1.kind == "identity":
        return m2 if m2.n == n else _with_n(m2, n)
    if m2.kind == "identity":
        return m1 if m1.n == n else _with_n(m1, n)
    if m1.is_mobius() and m2.is_mobius():
        return CircleMap.mobius(m1.as_mobius() @ m2.as_mobius(), n)
    parts = []
    for m in (m1, m2):
        parts.extend(m._data if m.kind == "composite" else (m,))
    out = CircleMap("composite", n, m1.interp, data=tuple(parts))
    return out.check_monotone()


def _with_n(m: CircleMap, n: int) -> CircleMap:
    if m.kind == "sampled":
        return CircleMap("composite", n, m.interp, data=(m,))
    return CircleMap(m.kind, n, m.interp, data=m._data)


def invert(m: CircleMap) -> CircleMap:
    kind = m.kind
    if kind == "identity":
        return m
    if kind == "mobius":
        a, b = m._data
        return CircleMap("mobius", m.n, data=(complex(np.conj(a)), -b))
    if kind == "sampled":
        return CircleMap("inverse", m.n, m.interp, data=m)
    if kind == "inverse":
        return m._data
    if kind == "composite":
        return CircleMap("composite", m.n, m.interp, data=tuple(invert(p) for p in reversed(m._data)))
    if kind == "reflected":
        return CircleMap("reflected", m.n, m.interp, data=invert(m._data))
    raise ValueError(f"unknown kind {kind!r}")


def reciprocal_conjugate(m: CircleMap) -> CircleMap:
    """iota o m o iota with iota(z) = 1/z; on S^1 the lift becomes -L(-theta)."""
    if m.kind == "identity":
        return m
    if m.kind == "mobius":
        return CircleMap.mobius(m.as_mobius().conjugate(), m.n)
    if m.kind == "reflected":
        return m._data
    return CircleMap("reflected", m.n, m.interp, data=m)


def resample(m: CircleMap, n: int | None = None, interp: str | None = None) -> CircleMap:
    """Sampled-kind copy of m taken at n uniform nodes."""
    n = m.n if n is None else n
    return CircleMap.from_lift(m.evaluate(nodes(n)), interp or m.interp)


def circle_mobius(m: Mobius, n: int = DEFAULT_N) -> CircleMap:
    return CircleMap.mobius(m, n)


def normalize_three_points(m: CircleMap) -> CircleMap:
    """sigma o m with sigma the circle-preserving Möbius map making 1, -1, i fixed."""
    pts = np.array([1, -1, 1j])
    images = m(pts)
    sigma = Mobius.three_point(tuple(images), tuple(pts))
    return compose(CircleMap.mobius(sigma, m.n), m)


def sup_distance(m1: CircleMap, m2: CircleMap, n: int | None = None) -> float:
    """Sup over nodes of |m1(z) - m2(z)| on the unit circle."""
    n = n or max(m1.n, m2.n)
    z = np.exp(1j * nodes(n))
    return float(np.max(np.abs(m1(z) - m2(z))))


# -- quasisymmetry -----------------------------------------------------------

@dataclass(frozen=True)
class QsEstimate:
    k: float
    scales: list = field(default_factory=list)
    worst_site: tuple = (0.0, 0.0)


def cayley(z):
    """C(z) = i (1 - z) / (1 + z); sends S^1 to the real line and -1 to infinity."""
    z = np.asarray(z, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1j * (1 - z) / (1 + z)


def cayley_inverse(x):
    x = np.asarray(x, dtype=complex)
    return (1j - x) / (1j + x)


def line_angle(m: CircleMap, x):
    """Angle of m(C^{-1}(x)) as a continuous increasing function of real x."""
    return m.evaluate(2 * np.arctan(np.asarray(x, dtype=float)))


def cayley_line_map(m: CircleMap):
    """The real-line homeomorphism C o m o C^{-1} (finite where m avoids -1)."""
    def h(x):
        return np.tan(0.5 * line_angle(m, x))
    return h


RATIO_TIE = 1e-12
ROUNDING = 1e-14
DENOM_FLOOR = 1e-14


def qs_constant(m: CircleMap, depth: int = 8) -> QsEstimate:
    """Estimate the quasisymmetry constant of m after Cayley conjugation.

    Sweeps x over the Cayley images of the sample nodes and y over the dyadic
    scales 2^-1 ... 2^-depth, returning the largest max(rho, 1/rho).  Triples
    straddling the preimage of infinity are skipped.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    scales = [2.0 ** -j for j in range(1, depth + 1)]
    if m.kind == "identity":
        return QsEstimate(1.0, scales, (0.0, scales[0]))
    theta = nodes(m.n)
    theta = theta[np.abs(theta - np.pi) > 1e-12]
    x = np.tan(theta / 2)
    # x* with m(C^{-1} x*) = -1; exclusion radius 2^-depth around it
    pole_theta = m.evaluate_inverse(np.array([np.pi]))[0]
    x_pole = math.tan(pole_theta / 2) if abs(math.cos(pole_theta / 2)) > 1e-15 else math.inf
    keep = np.abs(x - x_pole) >= scales[-1] if math.isfinite(x_pole) else np.ones_like(x, bool)
    x = x[keep]
    best, site = 1.0, (float(x[0]) if x.size else 0.0, scales[0])
    a0 = line_angle(m, x)
    for y in scales:
        ap = line_angle(m, x + y)
        am = line_angle(m, x - y)
        branch = np.floor((a0 + np.pi) / TWO_PI)
        same = (np.floor((ap + np.pi) / TWO_PI) == branch) & (np.floor((am + np.pi) / TWO_PI) == branch)
        # tan(a/2) - tan(b/2) = sin((a - b)/2) / (cos(a/2) cos(b/2))
        num = np.sin(0.5 * (ap - a0)) / (np.cos(0.5 * ap) * np.cos(0.5 * a0))
        den = np.sin(0.5 * (a0 - am)) / (np.cos(0.5 * a0) * np.cos(0.5 * am))
        num, den, xs = num[same], den[same], x[same]
        if xs.size == 0:
            continue
        if np.any(np.abs(den) < DENOM_FLOOR) or np.any(np.abs(num) < DENOM_FLOOR):
            i = int(np.argmin(np.minimum(np.abs(den), np.abs(num))))
            return QsEstimate(math.inf, scales, (float(xs[i]), y))
        rho = np.abs(num / den)
        r = np.maximum(rho, 1.0 / rho)
        # ratios within their own rounding bound of 1 count as exact ties
        cond = ROUNDING * (1.0 + xs * xs) / y
        r = np.where(r - 1.0 <= cond, 1.0, r)
        i = int(np.argmax(r))
        if r[i] > best:
            best, site = float(r[i]), (float(xs[i]), y)
    if best - 1.0 <= RATIO_TIE:
        best = 1.0
    return QsEstimate(best, scales, site)


# -- CSV ------------------------------------------------------------------------

class CircleMapFormatError(ValueError):
    pass


def to_csv(m: CircleMap) -> str:
    th = nodes(m.n)
    lift = m.lift
    buf = io.StringIO()
    buf.write(f"n={m.n},interp={m.interp}\n")
    for t, v in zip(th, lift):
        buf.write(f"{float(t)!r},{float(v)!r}\n")
    return buf.getvalue()


def from_csv(text: str) -> CircleMap:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise CircleMapFormatError("empty CircleMap file")
    header = dict(item.split("=", 1) for item in lines[0].split(",") if "=" in item)
    try:
        n = int(header["n"])
        interp = header.get("interp", "monotone-cubic")
    except (KeyError, ValueError) as exc:
        raise CircleMapFormatError(f"bad header {lines[0]!r}") from exc
    if interp not in INTERP_TAGS:
        raise CircleMapFormatError(f"unknown interp tag {interp!r}")
    rows = lines[1:]
    if len(rows) != n:
        raise CircleMapFormatError(f"expected {n} rows, found {len(rows)}")
    try:
        data = np.array([[float(v) for v in r.split(",")] for r in rows])
    except ValueError as exc:
        raise CircleMapFormatError("non-numeric row") from exc
    if data.shape != (n, 2):
        raise CircleMapFormatError("rows must be theta,lift")
    theta, lift = data[:, 0], data[:, 1]
    if abs(theta[0]) > 1e-12 or np.any(np.diff(theta) <= 0):
        raise CircleMapFormatError("theta must start at 0 and increase strictly")
    if np.max(np.abs(theta - nodes(n))) > 1e-9:
        raise CircleMapFormatError("theta must be the uniform nodes 2 pi k / n")
    try:
        return CircleMap.from_lift(lift, interp)
    except ValueError as exc:
        raise CircleMapFormatError(str(exc)) from exc


def read_csv(path) -> CircleMap:
    with open(path) as fh:
        return from_csv(fh.read())


def write_csv(m: CircleMap, path) -> None:
    with open(path, "w") as fh:
        fh.write(to_csv(m))
