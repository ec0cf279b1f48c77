"""weldlab: conformal welding, Beltrami solves and sewing of rigged genus-zero surfaces."""
__version__ = "0.1.0"

from .kernels import BACKEND
from .mobius import INF, Mobius
from .circle_maps import CircleMap, compose, invert, qs_constant, reciprocal_conjugate
from .plane import BeltramiField, PlaneMap, PolarGrid, RectGrid
from .beltrami_solver import renormalize, residual, solve_beltrami
from .ba_extension import ba_extend, disk_extend
from .welding import WeldingPair, synthesize_h, weld
from .rigged_spheres import Boundary, ModuliVector, RiggedSphere, apply_mobius, caps_to_punctures, moduli
from .sewing import SewnSurface, identification_map, sew
from .holomorphy_lab import CRReport, FamilySpec, family_eval, holomorphy_report, wirtinger_residual

__all__ = [
    "BACKEND", "INF", "Mobius", "CircleMap", "compose", "invert", "qs_constant", "reciprocal_conjugate",
    "BeltramiField", "PlaneMap", "PolarGrid", "RectGrid", "renormalize", "residual", "solve_beltrami",
    "ba_extend", "disk_extend", "WeldingPair", "synthesize_h", "weld", "Boundary", "ModuliVector",
    "RiggedSphere", "apply_mobius", "caps_to_punctures", "moduli", "SewnSurface", "identification_map",
    "sew", "CRReport", "FamilySpec", "family_eval", "holomorphy_report", "wirtinger_residual",
]
