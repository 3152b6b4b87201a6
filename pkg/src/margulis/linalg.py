"""Dense linear algebra and polynomial arithmetic.

Matrices are plain numpy arrays.  A float64 array selects the floating-point
path; an object array of :class:`fractions.Fraction` (or ``int``) selects the
exact rational path.  ``char_poly``, ``poly_deflate`` and ``poly_apply`` work
on either; ``eigen_decompose`` is floating point only.

Any finite float matrix is an exact dyadic rational, so :func:`exact` lifts it
without loss.  Running a polynomial identity on the lifted matrix and rounding
once at the end avoids the cancellation that monomial evaluation suffers in
float64 when the spectrum is spread out.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from numbers import Rational
from typing import NamedTuple, Sequence

import numpy as np

from .errors import NonConvergence, NotDivisible

__all__ = [
    "Poly",
    "EigenData",
    "SolveResult",
    "exact",
    "exact_inverse",
    "to_float",
    "is_exact",
    "eigen_decompose",
    "char_poly",
    "poly_deflate",
    "poly_apply",
    "min_norm_solve",
]


def is_exact(A) -> bool:
    return isinstance(A, np.ndarray) and A.dtype == object


def exact(A) -> np.ndarray:
    """Lift a real array to an object array of Fractions, without rounding."""
    A = np.asarray(A)
    if A.dtype == object:
        return np.vectorize(Fraction, otypes=[object])(A)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return np.vectorize(lambda x: Fraction(float(x)), otypes=[object])(A)


def to_float(A) -> np.ndarray:
    return np.asarray(A, dtype=object).astype(float) if is_exact(A) else np.asarray(A, dtype=float)


def exact_inverse(A) -> np.ndarray:
    """Inverse of a rational square matrix by Gauss-Jordan elimination over Fractions."""
    M = exact(A)
    N = M.shape[0]
    aug = np.concatenate([M, exact(np.eye(N))], axis=1)
    for c in range(N):
        nz = [r for r in range(c, N) if aug[r, c] != 0]
        if not nz:
            raise ZeroDivisionError("matrix is singular")
        p = nz[0]
        if p != c:
            aug[[c, p]] = aug[[p, c]]
        aug[c] = aug[c] / aug[c, c]
        for r in range(N):
            if r != c and aug[r, c] != 0:
                aug[r] = aug[r] - aug[r, c] * aug[c]
    return aug[:, N:]


def _integer_scale(A: np.ndarray) -> tuple[np.ndarray, int]:
    """Write a rational array as ``Ai / L`` with ``Ai`` integral and ``L`` a positive int."""
    flat = [Fraction(x) for x in A.ravel()]
    L = lcm(*(f.denominator for f in flat)) if flat else 1
    Ai = np.array([f.numerator * (L // f.denominator) for f in flat], dtype=object)
    return Ai.reshape(A.shape), L


@dataclass(frozen=True)
class Poly:
    """Univariate polynomial, coefficients in ascending degree.

    Trailing zero coefficients are stripped so that the leading coefficient
    is nonzero; the zero polynomial keeps the single coefficient ``0`` and
    has degree -1.
    """

    coeffs: tuple

    def __post_init__(self):
        c = list(self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        if not c:
            c = [0]
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def from_roots(cls, roots: Sequence) -> Poly:
        p = cls((1,))
        for r in roots:
            p = p * cls((-r, 1))
        return p

    @property
    def degree(self) -> int:
        if len(self.coeffs) == 1 and self.coeffs[0] == 0:
            return -1
        return len(self.coeffs) - 1

    @property
    def exact(self) -> bool:
        return all(isinstance(c, Rational) for c in self.coeffs)

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __mul__(self, other: Poly) -> Poly:
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Poly(tuple(out))

    def to_float(self) -> Poly:
        return Poly(tuple(float(c) for c in self.coeffs))

    def max_abs_coeff(self):
        return max(abs(c) for c in self.coeffs)

    def __repr__(self):
        return f"Poly({list(self.coeffs)!r})"


class EigenData(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray  # columns pair with ``values``


class SolveResult(NamedTuple):
    x: np.ndarray
    residual: float


def eigen_decompose(A, tol: float = 1e-10) -> EigenData:
    """Eigenpairs of a real square matrix, counted with multiplicity.

    Raises NonConvergence if LAPACK fails or any pair violates
    ``|A v - l v| <= tol |A| |v|``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    try:
        values, vectors = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(str(exc)) from exc
    scale = np.linalg.norm(A, 2)
    for lam, v in zip(values, vectors.T):
        res = np.linalg.norm(A @ v - lam * v)
        if res > tol * max(scale, np.finfo(float).tiny) * np.linalg.norm(v):
            raise NonConvergence(f"eigenpair residual {res:.3e} exceeds tolerance for eigenvalue {lam}")
    return EigenData(values, vectors)


def _berkowitz(A: np.ndarray) -> list:
    """Characteristic polynomial coefficients of A, descending degree.

    Division free, so it runs unchanged on float or integer arrays.
    """
    N = A.shape[0]
    if N == 0:
        return [1]
    one = A.dtype.type(1) if A.dtype != object else 1
    C = [one, -A[0, 0]]
    for r in range(1, N):
        R, S, a, Ar = A[r, :r], A[:r, r], A[r, r], A[:r, :r]
        col = [one, -a]
        v = S
        for _ in range(r):
            col.append(-R.dot(v))
            v = Ar.dot(v)
        # multiply by the (r+2) x (r+1) lower triangular Toeplitz matrix of col
        C = [sum(col[i - j] * C[j] for j in range(max(0, i - r - 1), min(i, r) + 1)) for i in range(r + 2)]
    return C


def char_poly(A) -> Poly:
    """Monic characteristic polynomial det(xI - A), ascending coefficients.

    Float input gives float coefficients.  Rational (object) input gives
    exact Fraction coefficients.
    """
    A = np.asarray(A) if not isinstance(A, np.ndarray) else A
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    N = A.shape[0]
    if is_exact(A):
        Ai, L = _integer_scale(A)
        desc = _berkowitz(Ai)
        # det(xI - Ai/L) = L^-N det(L x I - Ai)
        asc = [Fraction(int(desc[N - k]), L ** (N - k)) for k in range(N + 1)]
        return Poly(tuple(asc))
    desc = _berkowitz(np.asarray(A, dtype=float))
    return Poly(tuple(float(c) for c in reversed(desc)))


def poly_deflate(p: Poly, k: int, tol: float = 1e-9) -> Poly:
    """Divide by x**k after discarding the k lowest coefficients.

    Each discarded coefficient must be at most ``tol * max|coeff|``; pass
    ``tol=0`` in rational mode to demand exact divisibility.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return p
    coeffs = list(p.coeffs) + [0] * max(0, k + 1 - len(p.coeffs))
    bound = tol * p.max_abs_coeff()
    for i, c in enumerate(coeffs[:k]):
        if abs(c) > bound:
            raise NotDivisible(f"coefficient of x^{i} is {float(c):.3e}, above tolerance {float(bound):.3e}")
    return Poly(tuple(coeffs[k:]))


def poly_apply(p: Poly, A, x=None):
    """Evaluate p(A) by Horner's rule, or p(A) @ x when a vector x is given.

    If A is rational and p exact, the evaluation is exact.  Mixing a rational
    matrix with a float polynomial falls back to float arithmetic.
    """
    N = A.shape[0]
    if is_exact(A) and p.exact:
        return _poly_apply_exact(p, A, x)
    A = to_float(A)
    coeffs = [float(c) for c in p.coeffs]
    if x is None:
        R = np.zeros((N, N))
        eye = np.eye(N)
        for c in reversed(coeffs):
            R = R @ A + c * eye
        return R
    x = to_float(x)
    r = np.zeros_like(x)
    for c in reversed(coeffs):
        r = A @ r + c * x
    return r


def _poly_apply_exact(p: Poly, A: np.ndarray, x):
    Ai, L = _integer_scale(A)
    d = len(p.coeffs) - 1
    D = lcm(*(Fraction(c).denominator for c in p.coeffs))
    # sum_k p_k (Ai/L)^k = (sum_k q_k Ai^k) / (D L^d),  q_k = p_k D L^(d-k)
    q = [int(Fraction(c) * D) * L ** (d - k) for k, c in enumerate(p.coeffs)]
    denom = D * L**d
    if x is None:
        N = A.shape[0]
        eye = np.zeros((N, N), dtype=object)
        for i in range(N):
            eye[i, i] = 1
        R = np.zeros((N, N), dtype=object) + 0
        for c in reversed(q):
            R = R.dot(Ai) + c * eye
    else:
        xi, Lx = _integer_scale(np.asarray(x, dtype=object))
        denom *= Lx
        R = np.zeros(xi.shape, dtype=object) + 0
        for c in reversed(q):
            R = Ai.dot(R) + c * xi
    return np.vectorize(lambda v: Fraction(int(v), denom), otypes=[object])(R)


def min_norm_solve(constraints: Sequence[tuple[np.ndarray, np.ndarray]], tol: float = 1e-12) -> SolveResult:
    """Minimum-norm least-squares solution of the stacked blocks ``M_i y = b_i``.

    ``tol`` is the relative singular-value cutoff.  The residual norm of the
    stacked system is returned alongside; judging it is the caller's job.
    """
    if not constraints:
        raise ValueError("at least one constraint block is required")
    M = np.vstack([np.atleast_2d(np.asarray(m, dtype=float)) for m, _ in constraints])
    b = np.concatenate([np.ravel(np.asarray(v, dtype=float)) for _, v in constraints])
    y, *_ = np.linalg.lstsq(M, b, rcond=tol)
    return SolveResult(y, float(np.linalg.norm(M @ y - b)))
