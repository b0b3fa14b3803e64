"""Exact polynomial arithmetic, symmetric functions and Gröbner normal forms."""

from qkflag.algebra.groebner import MonomialOrder, ReducedBasis, groebner, normal_form, standard_monomials
from qkflag.algebra.poly import MultiPoly, TruncationPolicy, VarTag, divide_exact, poly_arith
from qkflag.algebra.symmetric import complete_homogeneous, elementary_symmetric

__all__ = [
    "MonomialOrder",
    "MultiPoly",
    "ReducedBasis",
    "TruncationPolicy",
    "VarTag",
    "complete_homogeneous",
    "divide_exact",
    "elementary_symmetric",
    "groebner",
    "normal_form",
    "poly_arith",
    "standard_monomials",
]
