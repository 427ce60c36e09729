"""Compile and verify rate-independent chemical reaction networks."""

from fractions import Fraction

from .crn import Crc, Crn, Reaction, parse_crc, parse_crn, serialize_crn, stoich_matrix
from .exact import lp_solve, LinearProgram, Optimal, Infeasible, Unbounded

__all__ = [
    "Fraction", "Crc", "Crn", "Reaction", "parse_crc", "parse_crn", "serialize_crn",
    "stoich_matrix", "lp_solve", "LinearProgram", "Optimal", "Infeasible", "Unbounded",
]
