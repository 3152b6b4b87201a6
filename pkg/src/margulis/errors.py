"""Exception types shared across the package.

Every error carries a stable ``code`` string so the CLI can map failures
to diagnostics without string matching on messages.
"""

from __future__ import annotations


class MargulisError(Exception):
    code = "ERROR"


class NonConvergence(MargulisError):
    code = "NON_CONVERGENCE"


class NotDivisible(MargulisError):
    code = "NOT_DIVISIBLE"


class NotLoxodromic(MargulisError):
    code = "NOT_LOXODROMIC"


class ComplexEigendata(MargulisError):
    code = "COMPLEX_EIGENDATA"


class Degenerate(MargulisError):
    code = "DEGENERATE"


class LengthMismatch(MargulisError):
    code = "LENGTH_MISMATCH"


class ZeroInput(MargulisError):
    code = "ZERO_INPUT"


class GenerationFailed(MargulisError):
    code = "GENERATION_FAILED"
