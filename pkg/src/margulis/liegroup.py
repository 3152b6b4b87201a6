"""The split model PSL(n, R) acting on sl(n, R) by the adjoint representation.

Conventions
-----------
A group element is an ``n x n`` float array with determinant +1.  For even
``n`` it is one of the two lifts of a PSL element; the adjoint image does not
depend on the choice.

A Lie algebra element is a traceless ``n x n`` array.  Its coordinate vector
(length ``n**2 - 1``) lists the off-diagonal entries ``E_ij`` (``i != j``) in
row-major order, then the coefficients of ``H_k = E_kk - E_{k+1,k+1}`` for
``k = 1..n-1``.  The zero weight space is the span of the ``H_k`` and is
always the last ``n - 1`` coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import linalg
from .errors import ComplexEigendata, NotLoxodromic

__all__ = [
    "ModelSpec",
    "JordanFrame",
    "WeightTable",
    "group_element",
    "basis",
    "to_coords",
    "from_coords",
    "is_loxodromic",
    "jordan_projection",
    "jordan_decompose",
    "adjoint_rep",
    "ad_matrix",
    "pi0",
    "weight_table",
    "random_group_element",
    "random_loxodromic",
    "one_parameter",
    "ad_lie",
]

DET_TOL = 1e-9
LOX_TOL = 1e-6


@dataclass(frozen=True)
class ModelSpec:
    n: int
    family: str = "adjoint_sl"

    def __post_init__(self):
        if self.family != "adjoint_sl":
            raise ValueError(f"unsupported model family {self.family!r}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")

    @property
    def rep_dim(self) -> int:
        return self.n * self.n - 1

    @property
    def zero_weight_dim(self) -> int:
        return self.n - 1


def group_element(mat, tol: float = DET_TOL) -> np.ndarray:
    """Validate a unimodular matrix; a det of -1 is flipped to +1 for odd n.

    For odd ``n``, ``-g`` has determinant -1 and the same adjoint image, so a
    determinant within ``tol`` of -1 is normalized by negation.
    """
    g = np.array(mat, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 2:
        raise ValueError(f"expected an n x n matrix with n >= 2, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise ValueError("group element has non-finite entries")
    det = np.linalg.det(g)
    if abs(det - 1) <= tol:
        return g
    if g.shape[0] % 2 == 1 and abs(det + 1) <= tol:
        return -g
    raise ValueError(f"determinant {det!r} is not +1 within {tol}")


@lru_cache(maxsize=None)
def _offdiag_index(n: int) -> tuple[tuple[int, int], ...]:
    return tuple((i, j) for i in range(n) for j in range(n) if i != j)


def basis(n: int) -> list[np.ndarray]:
    """The fixed basis of sl(n): E_ij (i != j, row-major), then H_1..H_{n-1}."""
    out = []
    for i, j in _offdiag_index(n):
        E = np.zeros((n, n))
        E[i, j] = 1.0
        out.append(E)
    for k in range(n - 1):
        H = np.zeros((n, n))
        H[k, k], H[k + 1, k + 1] = 1.0, -1.0
        out.append(H)
    return out


@lru_cache(maxsize=None)
def _coord_maps(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Matrices ``C`` (coords <- row-major vec) and ``V`` (vec <- coords)."""
    V = np.column_stack([B.ravel() for B in basis(n)])
    C = np.zeros((n * n - 1, n * n))
    for a, (i, j) in enumerate(_offdiag_index(n)):
        C[a, i * n + j] = 1.0
    # H coefficient c_k is the partial sum d_1 + ... + d_k of the diagonal
    off = n * n - n
    for k in range(n - 1):
        for m in range(k + 1):
            C[off + k, m * n + m] = 1.0
    V.setflags(write=False)
    C.setflags(write=False)
    return C, V


def to_coords(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    C, _ = _coord_maps(n)
    return C @ X.ravel()


def from_coords(v, n: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if n is None:
        n = int(round(np.sqrt(v.shape[0] + 1)))
    _, V = _coord_maps(n)
    return (V @ v).reshape(n, n)


def _sorted_eigs(g: np.ndarray):
    vals, vecs = np.linalg.eig(g)
    order = np.lexsort((-vals.real, -np.abs(vals)))
    return vals[order], vecs[:, order]


def jordan_projection(g) -> np.ndarray:
    """Log-moduli of the eigenvalues, in decreasing order."""
    vals = np.linalg.eigvals(np.asarray(g, dtype=float))
    return np.sort(np.log(np.abs(vals)))[::-1]


def is_loxodromic(g, tol: float = LOX_TOL) -> bool:
    """True when consecutive sorted log eigenvalue moduli differ by more than tol."""
    jd = jordan_projection(g)
    return bool(np.all(-np.diff(jd) > tol))


@dataclass(frozen=True)
class JordanFrame:
    """``g = h @ diag(signs) @ diag(exp(jd)) @ inv(h)``.

    The columns of ``h`` are eigenvectors of ``g`` ordered by decreasing
    eigenvalue modulus.  ``h`` is determined only up to right multiplication
    by an invertible diagonal matrix.
    """

    h: np.ndarray
    signs: tuple[int, ...]
    jd: np.ndarray

    def reconstruct(self) -> np.ndarray:
        d = np.asarray(self.signs) * np.exp(self.jd)
        return self.h @ np.diag(d) @ np.linalg.inv(self.h)

    def rescaled(self, scales) -> JordanFrame:
        """Same decomposition with the columns of h multiplied by ``scales``."""
        return JordanFrame(self.h * np.asarray(scales, dtype=float)[None, :], self.signs, self.jd)


def jordan_decompose(g, tol: float = LOX_TOL) -> JordanFrame:
    g = np.asarray(g, dtype=float)
    if not is_loxodromic(g, tol):
        raise NotLoxodromic(f"eigenvalue moduli are not separated by more than {tol}")
    vals, vecs = _sorted_eigs(g)
    if np.any(np.abs(vals.imag) > tol * np.abs(vals)):
        raise ComplexEigendata(f"eigenvalues {vals} are not real")
    h = vecs.real.copy()
    for j in range(h.shape[1]):
        col = h[:, j] / np.linalg.norm(h[:, j])
        lead = np.flatnonzero(np.abs(col) > 1e-12)[0]
        h[:, j] = col * np.sign(col[lead])
    h[:, -1] /= np.linalg.det(h)
    signs = tuple(int(s) for s in np.sign(vals.real))
    return JordanFrame(h, signs, np.log(np.abs(vals.real)))


def ad_matrix(g, exact: bool = False) -> np.ndarray:
    """Matrix of X -> g X g^-1 in the fixed basis (g need not be unimodular).

    With ``exact=True`` the float entries of g are taken as exact rationals
    and the result is an object array of Fractions.  Its unit eigenspace then
    has dimension exactly n - 1 whenever g has distinct eigenvalues.
    """
    n = np.shape(g)[0]
    if exact:
        return _exact_ad_matrix(g)
    C, V = _coord_maps(n)
    g = np.asarray(g, dtype=float)
    # row-major vec(g X g^-1) = kron(g, g^-T) vec(X)
    return C @ np.kron(g, np.linalg.inv(g).T) @ V


def _exact_ad_matrix(g) -> np.ndarray:
    n = np.shape(g)[0]
    G, _ = linalg._integer_scale(linalg.exact(g))
    Ginv = linalg.exact_inverse(G)
    det = _int_det(G)
    adj = np.vectorize(lambda v: int(v * det), otypes=[object])(Ginv)
    # g X g^-1 = G X adj(G) / det(G); work with the integer matrix kron(G, adj(G)^T)
    K = np.kron(G, adj.T)
    off = _offdiag_index(n)
    diag = [m * n + m for m in range(n)]
    cols = [K[:, i * n + j] for i, j in off] + [K[:, diag[k]] - K[:, diag[k + 1]] for k in range(n - 1)]
    KV = np.column_stack(cols)
    rows = [KV[i * n + j] for i, j in off]
    acc = np.zeros(KV.shape[1], dtype=object) + 0
    for k in range(n - 1):
        acc = acc + KV[diag[k]]
        rows.append(acc)
    M = np.vstack(rows)
    return np.vectorize(lambda v: Fraction(v, det), otypes=[object])(M)


def _int_det(G: np.ndarray) -> int:
    """Determinant of an integer matrix by fraction-free Bareiss elimination."""
    M = [[int(x) for x in row] for row in G]
    n = len(M)
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if M[r][k] != 0), None)
            if swap is None:
                return 0
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def adjoint_rep(g) -> np.ndarray:
    return ad_matrix(g)


def pi0(X) -> np.ndarray:
    """Zero-weight component of X, as coordinates in the H basis.

    Accepts a traceless matrix or a coordinate vector.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        return np.cumsum(np.diag(X))[:-1]
    n = int(round(np.sqrt(X.shape[0] + 1)))
    return X[n * n - n:].copy()


@dataclass(frozen=True)
class WeightTable:
    n: int
    weights: tuple[tuple[int, int], ...]  # (i, j) stands for a -> a_i - a_j
    zero_multiplicity: int

    def evaluate(self, a) -> np.ndarray:
        """Values of every nonzero weight on the diagonal vector ``a``."""
        a = np.asarray(a, dtype=float)
        return np.array([a[i] - a[j] for i, j in self.weights])

    @property
    def dim(self) -> int:
        return len(self.weights) + self.zero_multiplicity


def weight_table(model: ModelSpec) -> WeightTable:
    """Restricted weights of the adjoint model, in basis order.

    The weight attached to ``E_ij`` is ``a_i - a_j``; the ``H_k`` span the
    zero weight space.
    """
    return WeightTable(model.n, _offdiag_index(model.n), model.n - 1)


def one_parameter(a, t: float = 1.0) -> np.ndarray:
    """exp(t diag(a)) for a traceless diagonal vector a."""
    return np.diag(np.exp(t * np.asarray(a, dtype=float)))


def ad_lie(X) -> np.ndarray:
    """Matrix of Y -> [X, Y] in the fixed basis."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    C, V = _coord_maps(n)
    eye = np.eye(n)
    return C @ (np.kron(X, eye) - np.kron(eye, X.T)) @ V


def random_group_element(n: int, rng: np.random.Generator, max_cond: float = 50.0) -> np.ndarray:
    """Random unimodular matrix with condition number below ``max_cond``."""
    while True:
        u = rng.normal(size=(n, n))
        if np.linalg.cond(u) < max_cond:
            break
    det = np.linalg.det(u)
    if det < 0:
        u[:, 0] = -u[:, 0]
    return u / abs(det) ** (1.0 / n)


def random_loxodromic(
    n: int,
    rng: np.random.Generator,
    gap_range: tuple[float, float] = (0.3, 1.0),
    max_cond: float = 20.0,
) -> np.ndarray:
    """``u diag(s exp(jd)) u^-1`` with consecutive gaps of jd drawn from gap_range.

    The sign pattern ``s`` is random with product +1.
    """
    u = random_group_element(n, rng, max_cond)
    gaps = rng.uniform(*gap_range, size=n - 1)
    jd = np.concatenate([[0.0], -np.cumsum(gaps)])
    jd -= jd.mean()
    signs = rng.choice([-1.0, 1.0], size=n)
    if np.prod(signs) < 0:
        signs[rng.integers(n)] *= -1
    return u @ np.diag(signs * np.exp(jd)) @ np.linalg.inv(u)

