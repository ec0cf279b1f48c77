"""Genus-zero rigged surfaces: round-circle border pieces and punctured spheres."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .circle_maps import CircleMap, compose, from_csv, nodes, to_csv
from .mobius import INF, DegenerateMobius, Mobius, circle_image, is_inf

MODELS = ("border", "puncture")


class InvalidSurface(ValueError):
    pass


class CoincidentPoints(ValueError):
    pass


class NonRoundBoundary(ValueError):
    """A boundary curve that is no longer a round circle cannot be sewn again."""


def _pt(z) -> complex:
    return INF if is_inf(complex(z)) else complex(z)


def _same(p, q, tol=1e-12) -> bool:
    if is_inf(p) or is_inf(q):
        return bool(is_inf(p) and is_inf(q))
    return abs(p - q) <= tol * max(1.0, abs(p), abs(q))


@dataclass(frozen=True)
class Boundary:
    """The removed open disk |z - center| < radius with rigging psi(p) = Psi((p - center)/radius)."""

    center: complex
    radius: float
    rigging: CircleMap
    label: str | None = None

    @property
    def preparation(self) -> Mobius:
        """T(z) = (z - center)/radius, carrying the circle to S^1 and the piece outside."""
        return Mobius(1 / self.radius, -self.center / self.radius, 0, 1)

    def psi(self, p):
        return self.rigging((np.asarray(p, dtype=complex) - self.center) / self.radius)

    def contains(self, z, closed: bool = True) -> bool:
        if is_inf(z):
            return False
        d = abs(complex(z) - self.center)
        return d <= self.radius * (1 + 1e-12) if closed else d < self.radius

    def samples(self, n: int = 256) -> np.ndarray:
        return self.center + self.radius * np.exp(1j * nodes(n))


@dataclass(frozen=True)
class CurveBoundary:
    """Image of a round boundary under a conformal (non-Möbius) transport.

    ``transport`` maps the original boundary's coordinates into the surface;
    the rigging is the original one composed with the inverse transport.
    """

    original: Boundary
    transport: object = field(compare=False)
    label: str | None = None

    def samples(self, n: int = 256) -> np.ndarray:
        return np.asarray(self.transport(self.original.samples(n)))

    def contains(self, z, closed: bool = True) -> bool:
        from shapely.geometry import Point, Polygon

        if is_inf(z):
            return False
        pts = self.samples(512)
        return Polygon(np.column_stack([pts.real, pts.imag])).buffer(1e-12 if closed else 0).contains(
            Point(complex(z).real, complex(z).imag))


@dataclass(frozen=True)
class PunctureRigging:
    """Local coordinate phi at marked point ``point`` (an index).

    phi is the Möbius ``chart`` (domain chart^{-1}(D), point -> 0) optionally
    followed by a boundary ``distortion`` on S^1.  A non-Möbius conformal
    chart is given instead by ``embedding``, the inverse map D -> surface.
    """

    point: int
    chart: Mobius | None = None
    distortion: CircleMap | None = None
    embedding: object = field(default=None, compare=False)

    def __post_init__(self):
        if (self.chart is None) == (self.embedding is None):
            raise InvalidSurface("a puncture rigging needs exactly one of chart or embedding")

    def __call__(self, z):
        if self.chart is None:
            raise NotImplementedError("evaluation of embedded charts needs their inverse")
        return self.chart(np.asarray(z, dtype=complex))

    def domain_boundary(self, n: int = 256) -> np.ndarray:
        circle = np.exp(1j * nodes(n))
        if self.chart is not None:
            return self.chart.inverse()(circle)
        return np.asarray(self.embedding(circle))

    def contains(self, z) -> bool:
        if self.chart is not None:
            w = self.chart(np.array([complex(z)]))[0]
            return bool(not is_inf(w) and abs(w) < 1)
        if is_inf(z):
            return False
        from shapely.geometry import Point, Polygon

        pts = self.domain_boundary(512)
        return Polygon(np.column_stack([pts.real, pts.imag])).contains(Point(complex(z).real, complex(z).imag))


@dataclass(frozen=True)
class ModuliVector:
    values: tuple = ()

    def __len__(self):
        return len(self.values)

    def distance(self, other: "ModuliVector") -> float:
        if len(self) != len(other):
            raise ValueError("moduli vectors of different length")
        if not self.values:
            return 0.0
        return float(max(abs(a - b) for a, b in zip(self.values, other.values)))

    def to_list(self):
        return [[float(v.real), float(v.imag)] for v in self.values]


@dataclass(frozen=True)
class RiggedSphere:
    model: str
    marked: tuple
    boundaries: tuple = ()
    punctures: tuple = ()
    io_labels: tuple = ()

    def __post_init__(self):
        if self.model not in MODELS:
            raise InvalidSurface(f"unknown model {self.model!r}")
        object.__setattr__(self, "marked", tuple(_pt(p) for p in self.marked))
        object.__setattr__(self, "boundaries", tuple(self.boundaries))
        object.__setattr__(self, "punctures", tuple(self.punctures))
        object.__setattr__(self, "io_labels", tuple(self.io_labels))
        self.validate()

    def validate(self):
        pts = self.marked
        for a in range(len(pts)):
            for b in range(a):
                if _same(pts[a], pts[b]):
                    raise CoincidentPoints(f"marked points {b} and {a} coincide")
        bs = self.boundaries
        if self.model == "puncture" and any(isinstance(b, Boundary) for b in bs) and self.punctures == ():
            pass
        round_b = [b for b in bs if isinstance(b, Boundary)]
        for a in range(len(round_b)):
            for b in range(a):
                A, B = round_b[a], round_b[b]
                if abs(A.center - B.center) <= A.radius + B.radius:
                    raise InvalidSurface("boundary disks overlap")
        for b in bs:
            for p in pts:
                if b.contains(p):
                    raise InvalidSurface(f"marked point {p} lies in a removed disk")
        for r in self.punctures:
            if not 0 <= r.point < len(pts):
                raise InvalidSurface("puncture index out of range")
            for k, p in enumerate(pts):
                if k != r.point and r.contains(p):
                    raise InvalidSurface(f"marked point {k} lies in the chart domain of puncture {r.point}")
        self._check_chart_overlap()

    def _check_chart_overlap(self, n: int = 128):
        ps = self.punctures
        for a in range(len(ps)):
            for b in range(a):
                A, B = ps[a], ps[b]
                if any(A.contains(z) for z in B.domain_boundary(n)) or \
                        any(B.contains(z) for z in A.domain_boundary(n)):
                    raise InvalidSurface("puncture chart domains overlap")

    # -- convenience --------------------------------------------------------------
    @classmethod
    def standard_piece(cls, marked=(INF,), rigging: CircleMap | None = None) -> "RiggedSphere":
        """{|z| >= 1} with one rigged boundary, the unit circle."""
        return cls("border", marked, (Boundary(0j, 1.0, rigging or CircleMap.identity()),))

    def to_json(self) -> str:
        return json.dumps(surface_to_dict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RiggedSphere":
        return surface_from_dict(json.loads(text))


def cross_ratio(q, q1, q2, q3) -> complex:
    """Image of q under the Möbius map sending (q1, q2, q3) to (0, 1, inf)."""
    try:
        m = Mobius.to_zero_one_inf(_pt(q1), _pt(q2), _pt(q3))
    except DegenerateMobius as exc:
        raise CoincidentPoints(str(exc)) from exc
    return complex(m(np.array([_pt(q)]))[0])


def moduli(s: RiggedSphere) -> ModuliVector:
    pts = s.marked
    if len(pts) < 4:
        return ModuliVector(())
    return ModuliVector(tuple(cross_ratio(q, *pts[:3]) for q in pts[3:]))


def transport_boundary(b: Boundary, m: Mobius) -> Boundary:
    """Carry a round boundary by Möbius m: new circle, rigging Psi o tau with tau = T o m^{-1} o T'^{-1}."""
    pole = m.pole()
    if not is_inf(pole) and b.contains(pole):
        raise InvalidSurface("the Möbius map has its pole in a removed disk")
    img = circle_image(m, b.center, b.radius)
    if img is None:
        raise InvalidSurface("boundary circle maps to a line")
    c2, r2 = img
    new = Boundary(c2, r2, b.rigging, b.label)
    tau = b.preparation @ m.inverse() @ new.preparation.inverse()
    rig = b.rigging if _is_identity(tau) else compose(b.rigging, CircleMap.mobius(tau, b.rigging.n))
    return replace(new, rigging=rig)


def _is_identity(m: Mobius) -> bool:
    return m.is_close(Mobius.identity(), 1e-15)


def apply_mobius(s: RiggedSphere, sigma: Mobius) -> RiggedSphere:
    """Transport all data of s by sigma; riggings are precomposed with sigma^{-1}."""
    marked = tuple(complex(sigma(np.array([p]))[0]) for p in s.marked)
    bounds = []
    for b in s.boundaries:
        if isinstance(b, CurveBoundary):
            t = b.transport
            bounds.append(CurveBoundary(b.original, lambda z, t=t: sigma(np.asarray(t(z))), b.label))
        else:
            bounds.append(transport_boundary(b, sigma))
    punct = []
    for r in s.punctures:
        if r.chart is not None:
            punct.append(replace(r, chart=r.chart @ sigma.inverse()))
        else:
            e = r.embedding
            punct.append(replace(r, embedding=lambda z, e=e: sigma(np.asarray(e(z)))))
    return RiggedSphere(s.model, marked, tuple(bounds), tuple(punct), s.io_labels)


def caps_to_punctures(s: RiggedSphere, **sew_options) -> RiggedSphere:
    """Sew the standard punctured cap onto every boundary of a border-model sphere.

    Each cap's puncture is appended to the marked points, and its chart
    is the cap coordinate carried into the result.
    """
    from .sewing import sew

    if s.model != "border":
        raise InvalidSurface("caps_to_punctures needs a border-model surface")
    cur = s
    punct = list(s.punctures)
    while cur.boundaries:
        cap = RiggedSphere.standard_piece((INF,))
        sewn = sew(cur, 0, cap, 0, **sew_options)
        res = sewn.result
        idx = len(res.marked) - 1
        parts = sewn.welding.mobius_parts
        moved = []
        for r in punct:
            moved.append(_transport_puncture(r, sewn.left, sewn.left_mobius))
        if parts is not None:
            chart = sewn.right_mobius.inverse()
            # cap coordinate 1/w composed with the inverse cap transport
            moved.append(PunctureRigging(idx, Mobius(0, 1, 1, 0) @ chart))
        else:
            pair = sewn.welding
            moved.append(PunctureRigging(idx, embedding=lambda z, pair=pair: pair.f_at(z)))
        punct = moved
        cur = RiggedSphere("border", res.marked, res.boundaries, (), res.io_labels)
    return RiggedSphere("puncture", cur.marked, (), tuple(punct), s.io_labels)


def _transport_puncture(r: PunctureRigging, transport, mob: Mobius | None) -> PunctureRigging:
    if r.chart is not None and mob is not None:
        return replace(r, chart=r.chart @ mob.inverse())
    if r.chart is not None:
        inv = r.chart.inverse()
        return PunctureRigging(r.point, embedding=lambda z, inv=inv: transport(inv(np.asarray(z))))
    e = r.embedding
    return replace(r, embedding=lambda z, e=e: transport(np.asarray(e(z))))


# -- JSON -------------------------------------------------------------------------

def _enc_point(p):
    return "inf" if is_inf(p) else [float(p.real), float(p.imag)]


def _dec_point(v):
    if v == "inf":
        return INF
    return complex(v[0], v[1])


def _enc_mobius(m: Mobius):
    return [[float(v.real), float(v.imag)] for v in (m.a, m.b, m.c, m.d)]


def _enc_rigging(m: CircleMap) -> dict:
    mob = m.as_mobius()
    if m.kind == "identity":
        return {"kind": "identity", "n": m.n}
    if mob is not None:
        return {"kind": "mobius", "n": m.n, "coefficients": _enc_mobius(mob)}
    return {"kind": "sampled", "csv": to_csv(m if m.kind == "sampled" else _resampled(m))}


def _resampled(m):
    from .circle_maps import resample

    return resample(m)


def _dec_rigging(d: dict, base_dir=None) -> CircleMap:
    kind = d["kind"]
    if kind == "identity":
        return CircleMap.identity(int(d.get("n", 1024)))
    if kind == "mobius":
        a, b, c, dd = (complex(x, y) for x, y in d["coefficients"])
        return CircleMap.mobius(Mobius(a, b, c, dd), int(d.get("n", 1024)))
    if kind == "sampled":
        if "csv" in d:
            return from_csv(d["csv"])
        from pathlib import Path

        path = Path(d["file"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return from_csv(path.read_text())
    raise InvalidSurface(f"unknown rigging kind {kind!r}")


def surface_to_dict(s: RiggedSphere) -> dict:
    bounds = []
    for b in s.boundaries:
        if isinstance(b, CurveBoundary):
            pts = b.samples(256)
            bounds.append({"curve": [[float(p.real), float(p.imag)] for p in pts], "label": b.label})
        else:
            bounds.append({"center": [float(b.center.real), float(b.center.imag)], "radius": float(b.radius),
                           "rigging": _enc_rigging(b.rigging), "label": b.label})
    punct = []
    for r in s.punctures:
        entry = {"point": r.point}
        if r.chart is not None:
            entry["chart"] = _enc_mobius(r.chart)
        else:
            pts = r.domain_boundary(256)
            entry["domain_boundary"] = [[float(p.real), float(p.imag)] for p in pts]
        punct.append(entry)
    return {"model": s.model, "marked": [_enc_point(p) for p in s.marked], "boundaries": bounds,
            "punctures": punct, "io_labels": list(s.io_labels)}


def surface_from_dict(d: dict, base_dir=None) -> RiggedSphere:
    bounds = []
    for b in d.get("boundaries", []):
        if "curve" in b:
            raise NonRoundBoundary("curve boundaries are export-only")
        rig = _dec_rigging(b.get("rigging", {"kind": "identity"}), base_dir)
        bounds.append(Boundary(complex(*b["center"]), float(b["radius"]), rig, b.get("label")))
    punct = []
    for r in d.get("punctures", []):
        if "chart" not in r:
            raise InvalidSurface("only Möbius puncture charts can be read back")
        a, b, c, dd = (complex(x, y) for x, y in r["chart"])
        punct.append(PunctureRigging(int(r["point"]), Mobius(a, b, c, dd)))
    return RiggedSphere(d.get("model", "border"), tuple(_dec_point(p) for p in d["marked"]), tuple(bounds),
                        tuple(punct), tuple(d.get("io_labels", ())))
