"""Exact arithmetic kernel: polynomials, rational functions, identities."""

from .identity import IdentityResult, SingularSample, check_pointwise, identity_check
from .linalg import adjugate, det, det_bareiss, det_minors, nullspace, rank, row_reduce, solve
from .poly import MultiPoly, PolyRing, UnboundVariable, as_rational, poly_eval
from .ratfunc import Factored, RatFunc
from .unipoly import unipoly_gcd

__all__ = [
    "Factored",
    "IdentityResult",
    "MultiPoly",
    "PolyRing",
    "RatFunc",
    "SingularSample",
    "UnboundVariable",
    "adjugate",
    "as_rational",
    "check_pointwise",
    "det",
    "det_bareiss",
    "det_minors",
    "identity_check",
    "nullspace",
    "poly_eval",
    "rank",
    "row_reduce",
    "solve",
    "unipoly_gcd",
]
