"""Exact-arithmetic verification of genus<=3 universal relations between
Gromov-Witten correlators, evaluated against a point and a projective-line
oracle.
"""
from .exact import AffineForm, Fraction, InconsistentSystem, LinearSystem, Rational, rat
from .point import PointOracle, intersection_number
from .p1 import P1Oracle, gw_invariant_p1

__all__ = [
    "AffineForm",
    "Fraction",
    "InconsistentSystem",
    "LinearSystem",
    "P1Oracle",
    "PointOracle",
    "Rational",
    "gw_invariant_p1",
    "intersection_number",
    "rat",
]

__version__ = "0.1.0"
