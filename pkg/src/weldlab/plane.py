"""Sampled plane maps, Beltrami fields and the grids they live on."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

DOMAINS = ("upper-half-plane", "disk", "exterior-disk", "sphere")
NORMALIZATIONS = ("fix-0-1-inf", "hydrodynamic", "none")


class NotQuasiconformalError(ValueError):
    """|mu| >= 1 somewhere at the working resolution."""


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class RectGrid:
    """n x n nodes x_j = -L + j 2L/n on the periodic square [-L, L)^2 ('ij' indexing)."""

    n: int
    half_width: float

    @property
    def spacing(self) -> float:
        return 2 * self.half_width / self.n

    @property
    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.n)

    @property
    def z(self) -> np.ndarray:
        x = self.axis
        return x[:, None] + 1j * x[None, :]

    @property
    def cell_area(self) -> float:
        return self.spacing ** 2

    def describe(self) -> dict:
        return {"type": "rect", "n": self.n, "half_width": self.half_width}


@dataclass(frozen=True)
class BoxGrid:
    """Tensor grid with arbitrary increasing x and y axes ('ij' indexing)."""

    x: tuple
    y: tuple

    @classmethod
    def uniform(cls, x0, x1, nx, y0, y1, ny) -> "BoxGrid":
        return cls(tuple(np.linspace(x0, x1, nx)), tuple(np.linspace(y0, y1, ny)))

    @property
    def z(self) -> np.ndarray:
        return np.asarray(self.x)[:, None] + 1j * np.asarray(self.y)[None, :]

    def describe(self) -> dict:
        return {"type": "box", "x": [float(v) for v in self.x], "y": [float(v) for v in self.y]}


@dataclass(frozen=True)
class PolarGrid:
    """Tensor grid of radii (inclusive endpoints) times uniform angles."""

    r: tuple
    n_theta: int

    @classmethod
    def annulus(cls, r_min: float, r_max: float, n_r: int, n_theta: int) -> "PolarGrid":
        return cls(tuple(np.linspace(r_min, r_max, n_r)), n_theta)

    @property
    def radii(self) -> np.ndarray:
        return np.asarray(self.r)

    @property
    def theta(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_theta) / self.n_theta

    @property
    def z(self) -> np.ndarray:
        return self.radii[:, None] * np.exp(1j * self.theta)[None, :]

    def describe(self) -> dict:
        return {"type": "polar", "r": [float(v) for v in self.r], "n_theta": self.n_theta}


@dataclass(frozen=True)
class PointGrid:
    """Unstructured nodes given as complex (x + i y) samples, any shape."""

    points: np.ndarray = field(compare=False)

    @property
    def z(self) -> np.ndarray:
        return np.asarray(self.points, dtype=complex)

    def describe(self) -> dict:
        pts = self.z.ravel()
        return {"type": "points", "shape": list(self.z.shape),
                "points": [[float(p.real), float(p.imag)] for p in pts]}


def grid_from_description(d: dict):
    if d["type"] == "rect":
        return RectGrid(int(d["n"]), float(d["half_width"]))
    if d["type"] == "box":
        return BoxGrid(tuple(float(v) for v in d["x"]), tuple(float(v) for v in d["y"]))
    if d["type"] == "polar":
        return PolarGrid(tuple(float(v) for v in d["r"]), int(d["n_theta"]))
    if d["type"] == "points":
        pts = np.array([complex(a, b) for a, b in d["points"]]).reshape(d["shape"])
        return PointGrid(pts)
    raise ValueError(f"unknown grid type {d['type']!r}")


@dataclass
class PlaneMap:
    """Complex samples of a map on a grid, optionally with its Wirtinger derivatives."""

    domain: str
    grid: object
    values: np.ndarray
    normalization: str = "none"
    dz: np.ndarray | None = None
    dzbar: np.ndarray | None = None

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        self.values = np.asarray(self.values, dtype=complex)

    def derivatives(self):
        """(f_z, f_zbar): stored analytic values when present, finite differences otherwise."""
        if self.dz is not None and self.dzbar is not None:
            return self.dz, self.dzbar
        return wirtinger_fd(self.values, self.grid)

    def jacobian(self) -> np.ndarray:
        fz, fzb = self.derivatives()
        return np.abs(fz) ** 2 - np.abs(fzb) ** 2

    def is_orientation_preserving(self) -> bool:
        jac = self.jacobian()
        inner = jac[1:-1, :] if isinstance(self.grid, PolarGrid) else jac[1:-1, 1:-1]
        return bool(np.all(inner > 0))


@dataclass
class BeltramiField:
    grid: object
    mu: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=complex)
        if self.sup_norm >= 1:
            raise NotQuasiconformalError(f"sup |mu| = {self.sup_norm} >= 1")

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.mu))) if self.mu.size else 0.0

    def scaled(self, t: complex) -> "BeltramiField":
        return BeltramiField(self.grid, t * self.mu)

    def to_json(self) -> str:
        flat = self.mu.ravel()
        payload = {
            "grid": self.grid.describe(),
            "shape": list(self.mu.shape),
            "mu": [[float(v.real), float(v.imag)] for v in flat],
            "sup_norm": self.sup_norm,
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BeltramiField":
        d = json.loads(text)
        grid = grid_from_description(d["grid"])
        mu = np.array([complex(a, b) for a, b in d["mu"]]).reshape(d["shape"])
        out = cls(grid, mu)
        if abs(out.sup_norm - float(d["sup_norm"])) > 1e-12:
            raise ValueError("stored sup_norm does not match the samples")
        return out


def wirtinger_fd(values, grid):
    """Finite-difference f_z, f_zbar: central inside, one-sided at the edges."""
    f = np.asarray(values, dtype=complex)
    if isinstance(grid, RectGrid):
        h = grid.spacing
        fx = np.gradient(f, h, axis=0)
        fy = np.gradient(f, h, axis=1)
        return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)
    if isinstance(grid, BoxGrid):
        fx = np.gradient(f, np.asarray(grid.x), axis=0)
        fy = np.gradient(f, np.asarray(grid.y), axis=1)
        return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)
    if isinstance(grid, PolarGrid):
        r = grid.radii
        th = grid.theta
        dth = 2 * np.pi / grid.n_theta
        fr = np.gradient(f, r, axis=0) if r.size > 1 else np.zeros_like(f)
        ft = (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2 * dth)
        e = np.exp(1j * th)[None, :]
        rr = r[:, None]
        fz = 0.5 * np.conj(e) * (fr - 1j * ft / rr)
        fzb = 0.5 * e * (fr + 1j * ft / rr)
        return fz, fzb
    raise GridMismatchError("finite differences need a rect, box or polar grid")


def beltrami_of_map(f: PlaneMap, support=None) -> BeltramiField:
    """mu = f_zbar / f_z from the map's samples.

    ``support`` is an optional boolean or fractional weight array; mu is
    multiplied by it (zero outside the declared support).
    """
    fz, fzb = f.derivatives()
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = np.where(np.abs(fz) > 0, fzb / fz, np.inf)
    if support is not None:
        mu = np.where(np.asarray(support) != 0, mu * support, 0)
    bad = ~np.isfinite(mu) | (np.abs(mu) >= 1)
    if np.any(bad):
        raise NotQuasiconformalError(
            f"|mu| >= 1 at {int(bad.sum())} nodes (max {np.nanmax(np.abs(np.where(np.isfinite(mu), mu, 0))):.3g})")
    return BeltramiField(f.grid, mu)


def cell_coverage(grid: RectGrid, inside, supersample: int = 8) -> np.ndarray:
    """Fraction of each grid cell (centred on its node) where inside(z) holds."""
    h = grid.spacing
    z = grid.z
    frac = np.zeros(z.shape)
    offs = (np.arange(supersample) + 0.5) / supersample - 0.5
    for ox in offs:
        for oy in offs:
            frac += inside(z + h * (ox + 1j * oy))
    return frac / supersample ** 2


def disk_coverage(grid: RectGrid, radius: float = 1.0, center: complex = 0, supersample: int = 8):
    return cell_coverage(grid, lambda w: np.abs(w - center) < radius, supersample)
