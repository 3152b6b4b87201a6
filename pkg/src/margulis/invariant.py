"""Margulis-Smilga invariants of affine maps ``Y -> g Y g^-1 + X``.

Two independent routes compute the invariant of a loxodromic affine element:

* :func:`margulis_invariant` reads it off a Jordan frame ``h`` of the linear
  part, as the zero-weight part of ``h^-1 X h``.
* :func:`margulis_invariant_via_projector` first applies the unit-eigenspace
  projector, built as a polynomial in ``I - Ad_g`` from the characteristic
  polynomial alone, and only then changes frame.

The polynomial route is evaluated exactly by default.  The float matrix g is
read as an exact rational matrix, ``Ad_g`` is formed exactly, and the
characteristic polynomial, the division by x^(n-1) and the Horner evaluation
all run in rational arithmetic; the result is rounded once.  Because the exact
``Ad_g`` has an exactly (n-1)-dimensional unit eigenspace, nothing is
truncated.  Pass ``exact=False`` for plain float64 evaluation, which loses
accuracy quickly as the spectrum of ``Ad_g`` spreads out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import linalg
from .errors import Degenerate, NotLoxodromic
from .liegroup import (
    LOX_TOL,
    ModelSpec,
    JordanFrame,
    ad_matrix,
    basis,
    from_coords,
    is_loxodromic,
    jordan_decompose,
    pi0,
    to_coords,
)

__all__ = [
    "AffineElement",
    "InvariantForm",
    "shifted_char_poly",
    "deflated_poly",
    "deflated_system",
    "unit_projector",
    "apply_unit_projector",
    "margulis_invariant",
    "margulis_invariant_via_projector",
    "invariant_form",
    "invariant_q",
    "framed_q",
]

DEFLATE_TOL = 1e-9
DEGENERATE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class AffineElement:
    """The affine map ``Y -> linear @ Y @ inv(linear) + translation`` of sl(n)."""

    linear: np.ndarray
    translation: np.ndarray
    # inverse of the linear part, carried through products so that long words
    # never invert an ill-conditioned product
    linear_inv: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def identity(cls, n: int) -> AffineElement:
        return cls(np.eye(n), np.zeros((n, n)), np.eye(n))

    @property
    def n(self) -> int:
        return self.linear.shape[0]

    @property
    def inv_linear(self) -> np.ndarray:
        if self.linear_inv is None:
            return np.linalg.inv(self.linear)
        return self.linear_inv

    def __mul__(self, other: AffineElement) -> AffineElement:
        g, X = self.linear, self.translation
        h, Y = other.linear, other.translation
        gi = self.inv_linear
        return AffineElement(g @ h, X + g @ Y @ gi, other.inv_linear @ gi)

    def inverse(self) -> AffineElement:
        gi = self.inv_linear
        return AffineElement(gi, -gi @ self.translation @ self.linear, self.linear)

    def act(self, Y) -> np.ndarray:
        return self.linear @ np.asarray(Y, dtype=float) @ self.inv_linear + self.translation

    def allclose(self, other: AffineElement, atol: float) -> bool:
        return bool(
            np.max(np.abs(self.linear - other.linear)) <= atol
            and np.max(np.abs(self.translation - other.translation)) <= atol
        )

    def __repr__(self):
        return f"AffineElement(linear={self.linear.tolist()}, translation={self.translation.tolist()})"


def _shifted_operator(g, exact: bool):
    Ad = ad_matrix(g, exact=exact)
    N = Ad.shape[0]
    if exact:
        A = -Ad
        for i in range(N):
            A[i, i] += 1
        return A
    return np.eye(N) - Ad


def shifted_char_poly(g, exact: bool = False) -> linalg.Poly:
    """Characteristic polynomial of ``I - Ad_g``, monic of degree n^2 - 1.

    With ``exact=True`` the coefficients are Fractions, computed from the
    exact rational value of the float matrix g.
    """
    return linalg.char_poly(_shifted_operator(g, exact))


def deflated_system(g, tol: float = LOX_TOL, exact: bool = True):
    """``(I - Ad_g, P_g, P_g(0))``, exact (object arrays, Fractions) or float."""
    if not is_loxodromic(g, tol):
        raise NotLoxodromic(f"linear part is not loxodromic at tolerance {tol}")
    n = np.shape(g)[0]
    A = _shifted_operator(g, exact)
    P = linalg.poly_deflate(linalg.char_poly(A), n - 1, DEFLATE_TOL)
    P0 = P.coeffs[0]
    if abs(P0) <= DEGENERATE_TOL * P.max_abs_coeff():
        raise Degenerate(f"|P_g(0)| = {abs(float(P0)):.3e} is below the degeneracy threshold")
    return A, P, P0


def deflated_poly(g, tol: float = LOX_TOL, exact: bool = False) -> tuple[linalg.Poly, float]:
    """``(P_g, P_g(0))`` with ``P_g`` the shifted characteristic polynomial divided by x^(n-1)."""
    _, P, P0 = deflated_system(g, tol, exact)
    return P, P0


def unit_projector(g, tol: float = LOX_TOL, exact: bool = True) -> np.ndarray:
    """Projector onto the unit eigenspace of ``Ad_g`` along the other eigenspaces.

    Computed as ``P_g(I - Ad_g) / P_g(0)``, with no eigenvector computation.
    """
    A, P, P0 = deflated_system(g, tol, exact)
    R = linalg.poly_apply(P, A)
    if exact:
        return linalg.to_float(R / P0)
    return R / P0


def apply_unit_projector(g, v, tol: float = LOX_TOL, exact: bool = True) -> np.ndarray:
    """``unit_projector(g) @ v`` via Horner on vectors, v in coordinates."""
    A, P, P0 = deflated_system(g, tol, exact)
    if exact:
        return linalg.to_float(linalg.poly_apply(P, A, linalg.exact(v)) / P0)
    return linalg.poly_apply(P, A, v) / P0


def margulis_invariant(a: AffineElement, tol: float = LOX_TOL, frame: JordanFrame | None = None) -> np.ndarray:
    """Zero-weight part of ``h^-1 X h`` for a Jordan frame h of the linear part.

    Returns the coordinates in the basis H_1..H_{n-1}.  Any valid frame may be
    supplied; the result does not depend on the choice.
    """
    if frame is None:
        frame = jordan_decompose(a.linear, tol)
    h = frame.h
    return pi0(np.linalg.solve(h, a.translation) @ h)


def margulis_invariant_via_projector(
    a: AffineElement, tol: float = LOX_TOL, exact: bool = True, frame: JordanFrame | None = None
) -> np.ndarray:
    v = apply_unit_projector(a.linear, to_coords(a.translation), tol, exact)
    if frame is None:
        frame = jordan_decompose(a.linear, tol)
    h = frame.h
    return pi0(np.linalg.solve(h, from_coords(v, a.n)) @ h)


@dataclass(frozen=True, eq=False)
class InvariantForm:
    """Killing form ``B(X, Y) = 2n tr(XY)`` as a Gram matrix on coordinates."""

    n: int
    gram: np.ndarray

    def __call__(self, x, y) -> float:
        return float(np.asarray(x) @ self.gram @ np.asarray(y))

    @property
    def zero_block(self) -> np.ndarray:
        k = self.n * self.n - self.n
        return self.gram[k:, k:]

    def q_zero_weight(self, m) -> float:
        """B(M, M) for M given by its H-basis coordinates."""
        m = np.asarray(m, dtype=float)
        return float(m @ self.zero_block @ m)


@lru_cache(maxsize=None)
def _gram(n: int) -> np.ndarray:
    B = basis(n)
    G = np.array([[2 * n * np.trace(X @ Y) for Y in B] for X in B])
    G.setflags(write=False)
    return G


def invariant_form(model: ModelSpec | int) -> InvariantForm:
    n = model.n if isinstance(model, ModelSpec) else int(model)
    return InvariantForm(n, _gram(n))


def invariant_q(a: AffineElement, tol: float = LOX_TOL, exact: bool = True) -> float:
    """``B(M, M)`` computed without a Jordan frame.

    With ``v = P_g(I - Ad_g) X`` we have ``v = P_g(0) Ad_h M``, and B is
    Ad-invariant, so ``B(M, M) = B(v, v) / P_g(0)^2``.
    """
    A, P, P0 = deflated_system(a.linear, tol, exact)
    x = to_coords(a.translation)
    if exact:
        v = linalg.poly_apply(P, A, linalg.exact(x))
        G = linalg.exact(_gram(a.n))
        return float(Fraction(v @ G.dot(v)) / (P0 * P0))
    v = linalg.poly_apply(P, A, x)
    return float(v @ _gram(a.n) @ v) / float(P0) ** 2


def framed_q(a: AffineElement, tol: float = LOX_TOL) -> float:
    """``B(M, M)`` with M from the Jordan-frame algorithm."""
    return invariant_form(a.n).q_zero_weight(margulis_invariant(a, tol))
