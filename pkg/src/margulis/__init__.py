"""Margulis-Smilga invariants for affine adjoint actions of PSL(n, R).

An affine representation of a free group acts on sl(n, R) by
``Y -> g Y g^-1 + X``.  For every group word with loxodromic linear part this
package computes the invariant vector in the zero weight space, its value
under the Killing form, and compares or certifies such marked spectra.
"""

from .errors import (
    ComplexEigendata,
    Degenerate,
    GenerationFailed,
    LengthMismatch,
    MargulisError,
    NonConvergence,
    NotDivisible,
    NotLoxodromic,
    ZeroInput,
)
from .invariant import (
    AffineElement,
    InvariantForm,
    deflated_poly,
    invariant_form,
    invariant_q,
    margulis_invariant,
    margulis_invariant_via_projector,
    shifted_char_poly,
    unit_projector,
)
from .liegroup import (
    JordanFrame,
    ModelSpec,
    adjoint_rep,
    group_element,
    is_loxodromic,
    jordan_decompose,
    jordan_projection,
    pi0,
    weight_table,
)
from .spectrum import (
    AffineRep,
    CompareReport,
    FreeWord,
    MarkedSpectrum,
    Verdict,
    certify_conjugacy,
    coboundary_solve,
    compare_spectra,
    conjugate_rep,
    evaluate,
    marked_spectrum,
    orbit_span_check,
    random_loxodromic_rep,
    reduce_word,
)

__version__ = "0.1.0"
