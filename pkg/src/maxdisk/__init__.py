"""Numerical construction of weakly complete maximal disks in Lorentz-Minkowski space."""

from .deform import DeformConfig, LemmaInput, lemma_step
from .driver import iterate, limit_report, make_alpha_seq, make_radius_seq, seed
from .holo import HoloFn
from .labyrinth import Labyrinth, build_labyrinth
from .lorentz3 import Frame, Region
from .metricdist import MetricField, distance_field, extract_Q
from .polygon import Polygon
from .runge import RungeRequest, build_runge, certify
from .weierstrass import Immersion, WData, flat_disk, lopez_ros, phi_from_gf

__version__ = "0.1.0"

__all__ = [
    "DeformConfig", "LemmaInput", "lemma_step", "iterate", "limit_report", "make_alpha_seq",
    "make_radius_seq", "seed", "HoloFn", "Labyrinth", "build_labyrinth", "Frame", "Region",
    "MetricField", "distance_field", "extract_Q", "Polygon", "RungeRequest", "build_runge",
    "certify", "Immersion", "WData", "flat_disk", "lopez_ros", "phi_from_gf",
]
