"""Möbius transformations of the Riemann sphere.

Points at infinity are represented by ``complex(inf, 0)``; use :func:`is_inf`
to test for them rather than comparing against a constant.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

INF = complex(np.inf, 0.0)


def is_inf(z):
    z = np.asarray(z, dtype=complex)
    return np.isinf(z.real) | np.isinf(z.imag)


class DegenerateMobius(ValueError):
    """Raised for coincident reference points or a singular coefficient matrix."""


@dataclass(frozen=True)
class Mobius:
    """z -> (a z + b) / (c z + d), stored as a 2x2 matrix scaled to det 1."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if abs(det) < 1e-300:
            raise DegenerateMobius("singular Möbius matrix")

    @classmethod
    def identity(cls) -> "Mobius":
        return cls(1, 0, 0, 1)

    @classmethod
    def from_matrix(cls, m) -> "Mobius":
        m = np.asarray(m, dtype=complex)
        det = np.linalg.det(m)
        if abs(det) < 1e-300:
            raise DegenerateMobius("singular Möbius matrix")
        m = m / np.sqrt(det)
        # real or imaginary parts at rounding level of the largest entry are exact zeros in disguise
        eps = 1e-14 * np.max(np.abs(m))
        m = np.where(np.abs(m.real) < eps, 0, m.real) + 1j * np.where(np.abs(m.imag) < eps, 0, m.imag)
        return cls(complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]))

    @classmethod
    def rotation(cls, alpha: float) -> "Mobius":
        e = np.exp(0.5j * alpha)
        return cls(e, 0, 0, np.conj(e))

    @classmethod
    def scaling(cls, lam: complex, shift: complex = 0) -> "Mobius":
        return cls.from_matrix([[lam, shift], [0, 1]])

    @classmethod
    def to_zero_one_inf(cls, p1, p2, p3) -> "Mobius":
        """The unique map sending p1, p2, p3 to 0, 1, inf."""
        p = [complex(v) for v in (p1, p2, p3)]
        inf = [bool(is_inf(v)) for v in p]
        if sum(inf) > 1:
            raise DegenerateMobius("reference points coincide at infinity")
        # T(z) = (z - p1)(p2 - p3) / ((z - p3)(p2 - p1)), limits at infinity
        if inf[0]:
            m = [[0, p[1] - p[2]], [1, -p[2]]]
        elif inf[1]:
            m = [[1, -p[0]], [1, -p[2]]]
        elif inf[2]:
            m = [[1, -p[0]], [0, p[1] - p[0]]]
        else:
            m = [[p[1] - p[2], -p[0] * (p[1] - p[2])], [p[1] - p[0], -p[2] * (p[1] - p[0])]]
        if any(abs(p[i] - p[j]) < 1e-300 for i, j in ((0, 1), (1, 2), (0, 2)) if not (inf[i] or inf[j])):
            raise DegenerateMobius("reference points coincide")
        return cls.from_matrix(m)

    @classmethod
    def three_point(cls, src, dst) -> "Mobius":
        """The unique map sending src[k] to dst[k] for k = 0, 1, 2."""
        return cls.to_zero_one_inf(*dst).inverse() @ cls.to_zero_one_inf(*src)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def __matmul__(self, other: "Mobius") -> "Mobius":
        return Mobius.from_matrix(self.matrix @ other.matrix)

    def inverse(self) -> "Mobius":
        return Mobius(self.d, -self.b, -self.c, self.a)

    def conjugate(self) -> "Mobius":
        """z -> conj(M(conj z))."""
        return Mobius(np.conj(self.a), np.conj(self.b), np.conj(self.c), np.conj(self.d))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        scalar = z.ndim == 0
        z = np.atleast_1d(z)
        out = np.empty_like(z)
        zi = is_inf(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            num = self.a * z + self.b
            den = self.c * z + self.d
            out[:] = num / den
        out[np.abs(den) <= 1e-15 * np.abs(num)] = INF
        if zi.any():
            out[zi] = INF if abs(self.c) < 1e-300 else self.a / self.c
        return complex(out[0]) if scalar else out

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        return 1.0 / (self.c * z + self.d) ** 2

    def pole(self) -> complex:
        return INF if abs(self.c) < 1e-300 else -self.d / self.c

    def preserves_circle(self, tol: float = 1e-12) -> bool:
        theta = np.linspace(0, 2 * np.pi, 17, endpoint=False)
        w = self(np.exp(1j * theta))
        return bool(np.all(np.abs(np.abs(w) - 1) < tol))

    def is_close(self, other: "Mobius", tol: float = 1e-10) -> bool:
        m, n = self.matrix, other.matrix
        return bool(min(np.abs(m - n).max(), np.abs(m + n).max()) < tol)


def circle_image(m: Mobius, center: complex, radius: float):
    """Image of the circle |z - center| = radius; returns (center, radius) or None for a line."""
    theta = np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
    pts = m(center + radius * np.exp(1j * theta))
    if np.any(is_inf(pts)):
        return None
    a, b, c = pts
    # circumcentre of three points
    d = 2 * (a.real * (b.imag - c.imag) + b.real * (c.imag - a.imag) + c.real * (a.imag - b.imag))
    if abs(d) < 1e-14 * max(1.0, abs(a) ** 2):
        return None
    ux = (abs(a) ** 2 * (b.imag - c.imag) + abs(b) ** 2 * (c.imag - a.imag) + abs(c) ** 2 * (a.imag - b.imag)) / d
    uy = (abs(a) ** 2 * (c.real - b.real) + abs(b) ** 2 * (a.real - c.real) + abs(c) ** 2 * (b.real - a.real)) / d
    cen = complex(ux, uy)
    return cen, float(abs(a - cen))
