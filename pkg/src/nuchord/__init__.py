"""
nuchord

Chordal gap-type distances between plants over stable rings, stability
margins and robust-stabilization certificates, computed from plain coprime
factorizations for rational and delay systems.
"""

from .boundary_algebra import BoundaryExpression, Rational, StableElement
from .factorization import CoprimeFactorization, Fraction, coprime_factorize, normalized_cf_rational
from .index import index_of, is_invertible, winding_number
from .metric import d_cr, d_nu
from .stability import certify_robust, margin, stabilizes
from .types import AlgebraInstance, InstanceKind

__version__ = "1.0.0"
__author__ = "Nuchord Team"

__all__ = [
    "AlgebraInstance",
    "BoundaryExpression",
    "CoprimeFactorization",
    "Fraction",
    "InstanceKind",
    "Rational",
    "StableElement",
    "certify_robust",
    "coprime_factorize",
    "d_cr",
    "d_nu",
    "index_of",
    "is_invertible",
    "margin",
    "normalized_cf_rational",
    "stabilizes",
    "winding_number",
]
