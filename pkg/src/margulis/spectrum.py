"""Free-group words, marked invariant spectra, coboundaries and conjugators.

The group acting is the free group on ``k`` generators.  A letter is a
nonzero int: ``i`` is the i-th generator (1-based), ``-i`` its inverse.
Words are always stored reduced and are ordered length-lexicographically
with ``1 < -1 < 2 < -2 < ...``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import total_ordering
from typing import Iterator, Sequence

import numpy as np

from . import linalg
from .errors import Degenerate, GenerationFailed, LengthMismatch, NotDivisible, NotLoxodromic, ZeroInput
from .invariant import AffineElement, invariant_q, margulis_invariant
from .liegroup import (
    LOX_TOL,
    ModelSpec,
    ad_matrix,
    from_coords,
    is_loxodromic,
    jordan_projection,
    random_group_element,
    random_loxodromic,
    to_coords,
)

__all__ = [
    "FreeWord",
    "reduce_word",
    "enumerate_words",
    "AffineRep",
    "SpectrumEntry",
    "MarkedSpectrum",
    "Verdict",
    "CompareReport",
    "evaluate",
    "marked_spectrum",
    "compare_spectra",
    "spectrum_discrepancy",
    "coboundary_solve",
    "conjugate_rep",
    "certify_conjugacy",
    "orbit_span_check",
    "random_loxodromic_rep",
    "coboundary_rep",
]

GENERATOR_NAMES = "abcdefghijklmnopqrstuvwxyz"


def _letter_rank(letter: int) -> int:
    return 2 * (abs(letter) - 1) + (letter < 0)


@total_ordering
@dataclass(frozen=True)
class FreeWord:
    letters: tuple[int, ...] = ()

    def __post_init__(self):
        out: list[int] = []
        for x in self.letters:
            x = int(x)
            if x == 0:
                raise ValueError("0 is not a letter")
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
        object.__setattr__(self, "letters", tuple(out))

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: FreeWord) -> FreeWord:
        return FreeWord(self.letters + other.letters)

    def inverse(self) -> FreeWord:
        return FreeWord(tuple(-x for x in reversed(self.letters)))

    def sort_key(self) -> tuple:
        return (len(self.letters), tuple(_letter_rank(x) for x in self.letters))

    def __lt__(self, other: FreeWord) -> bool:
        return self.sort_key() < other.sort_key()

    def render(self) -> str:
        """ASCII form, e.g. ``ab'a`` for a b^-1 a; the empty word renders as ``e``."""
        if not self.letters:
            return "e"
        return "".join(GENERATOR_NAMES[abs(x) - 1] + ("'" if x < 0 else "") for x in self.letters)

    @classmethod
    def parse(cls, text: str) -> FreeWord:
        text = text.strip()
        if text in ("", "e"):
            return cls()
        letters: list[int] = []
        for ch in text:
            if ch == "'":
                if not letters or letters[-1] < 0:
                    raise ValueError(f"misplaced inverse mark in {text!r}")
                letters[-1] = -letters[-1]
            elif ch in GENERATOR_NAMES:
                letters.append(GENERATOR_NAMES.index(ch) + 1)
            elif not ch.isspace():
                raise ValueError(f"unexpected character {ch!r} in {text!r}")
        return cls(tuple(letters))

    def __str__(self):
        return self.render()


def reduce_word(letters: Sequence[int] | FreeWord) -> FreeWord:
    if isinstance(letters, FreeWord):
        return letters
    return FreeWord(tuple(letters))


def _alphabet(k: int) -> list[int]:
    return [x for i in range(1, k + 1) for x in (i, -i)]


def enumerate_words(k: int, max_len: int, min_len: int = 1) -> Iterator[FreeWord]:
    """Reduced words with ``min_len <= length <= max_len`` in length-lex order."""
    layer = [()]
    alphabet = _alphabet(k)
    if min_len <= 0:
        yield FreeWord()
    for length in range(1, max_len + 1):
        layer = [w + (x,) for w in layer for x in alphabet if not (w and w[-1] == -x)]
        if length >= min_len:
            for w in layer:
                yield FreeWord(w)


@dataclass(frozen=True, eq=False)
class AffineRep:
    """A representation of the free group, given on generators."""

    model: ModelSpec
    generators: tuple[AffineElement, ...]

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        for gen in self.generators:
            if gen.linear.shape != (self.model.n, self.model.n):
                raise ValueError("generator shape does not match the model")

    @property
    def k(self) -> int:
        return len(self.generators)

    def letter(self, x: int) -> AffineElement:
        gen = self.generators[abs(x) - 1]
        return gen if x > 0 else gen.inverse()


def evaluate(rep: AffineRep, w: FreeWord) -> AffineElement:
    """Left-to-right product of the letters of w under the semidirect law."""
    out = AffineElement.identity(rep.model.n)
    for x in w.letters:
        out = out * rep.letter(x)
    return out


@dataclass(frozen=True)
class SpectrumEntry:
    m: np.ndarray  # invariant in the H basis
    q: float
    jd: np.ndarray  # Jordan projection of the linear part


@dataclass
class MarkedSpectrum:
    model: ModelSpec
    max_len: int
    entries: dict[FreeWord, SpectrumEntry] = field(default_factory=dict)
    skipped: list[FreeWord] = field(default_factory=list)

    def max_abs_m(self) -> float:
        return max((float(np.max(np.abs(e.m))) for e in self.entries.values()), default=0.0)

    def max_abs_q(self) -> float:
        return max((abs(e.q) for e in self.entries.values()), default=0.0)


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("MARGULIS_THREADS", "1")))
    except ValueError:
        return 1


def marked_spectrum(rep: AffineRep, max_len: int, tol: float = LOX_TOL, exact: bool = True) -> MarkedSpectrum:
    """Invariant vector and Q value of every reduced word of length 1..max_len.

    Words whose linear part is not loxodromic at ``tol`` (or numerically
    degenerate) are recorded in ``skipped``.  Parallelism is capped by the
    ``MARGULIS_THREADS`` environment variable; the result order is fixed.
    """
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    words = list(enumerate_words(rep.k, max_len))
    cache: dict[tuple[int, ...], AffineElement] = {(): AffineElement.identity(rep.model.n)}
    elements = []
    for w in words:
        el = cache[w.letters[:-1]] * rep.letter(w.letters[-1])
        cache[w.letters] = el
        elements.append(el)

    def one(el: AffineElement):
        if not is_loxodromic(el.linear, tol):
            return None
        try:
            return SpectrumEntry(margulis_invariant(el, tol), invariant_q(el, tol, exact), jordan_projection(el.linear))
        except (NotLoxodromic, NotDivisible, Degenerate):
            return None

    threads = _thread_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, elements))
    else:
        results = [one(el) for el in elements]

    spec = MarkedSpectrum(rep.model, max_len)
    for w, res in zip(words, results):
        if res is None:
            spec.skipped.append(w)
        else:
            spec.entries[w] = res
    return spec


class Verdict(str, Enum):
    EQUAL = "EQUAL"
    Q_EQUAL_ONLY = "Q_EQUAL_ONLY"
    DIFFER = "DIFFER"


@dataclass(frozen=True)
class CompareReport:
    verdict: Verdict
    witness: FreeWord | None
    magnitude: float | None
    tol: float

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "witness": None if self.witness is None else self.witness.render(),
            # a word skipped on one side only has no finite magnitude
            "magnitude": self.magnitude if self.magnitude is None or np.isfinite(self.magnitude) else None,
            "tol": self.tol,
        }


def compare_spectra(s1: MarkedSpectrum, s2: MarkedSpectrum, tol: float = 1e-8) -> CompareReport:
    """Compare two marked spectra word by word.

    Invariant vectors are compared with absolute tolerance
    ``tol * (1 + sqrt(max |Q|))`` and Q values with ``tol * (1 + max |Q|)``,
    the maxima taken over both spectra.  A word evaluated in one spectrum but
    skipped in the other counts as a discrepancy of infinite size.
    """
    if s1.model != s2.model or s1.max_len != s2.max_len:
        raise LengthMismatch("spectra must share model and max_len")
    qmax = max(s1.max_abs_q(), s2.max_abs_q())
    m_tol = tol * (1 + np.sqrt(qmax))
    q_tol = tol * (1 + qmax)
    words = sorted(set(s1.entries) | set(s2.entries) | set(s1.skipped) | set(s2.skipped))
    m_equal = True
    for w in words:
        e1, e2 = s1.entries.get(w), s2.entries.get(w)
        if e1 is None and e2 is None:
            continue
        if e1 is None or e2 is None:
            return CompareReport(Verdict.DIFFER, w, float("inf"), tol)
        dq = abs(e1.q - e2.q)
        if dq > q_tol:
            return CompareReport(Verdict.DIFFER, w, float(dq), tol)
        if float(np.max(np.abs(e1.m - e2.m))) > m_tol:
            m_equal = False
    if m_equal:
        return CompareReport(Verdict.EQUAL, None, None, tol)
    return CompareReport(Verdict.Q_EQUAL_ONLY, None, None, tol)


def spectrum_discrepancy(s1: MarkedSpectrum, s2: MarkedSpectrum) -> float:
    """Smallest tol at which :func:`compare_spectra` would report EQUAL.

    Infinite when some word is skipped in exactly one of the spectra.
    """
    if s1.model != s2.model or s1.max_len != s2.max_len:
        raise LengthMismatch("spectra must share model and max_len")
    if set(s1.entries) != set(s2.entries):
        return float("inf")
    qmax = max(s1.max_abs_q(), s2.max_abs_q())
    worst = 0.0
    for w, e1 in s1.entries.items():
        e2 = s2.entries[w]
        worst = max(
            worst,
            float(np.max(np.abs(e1.m - e2.m))) / (1 + np.sqrt(qmax)),
            abs(e1.q - e2.q) / (1 + qmax),
        )
    return worst


def _cocycle_residual(rep: AffineRep, Y: np.ndarray, max_len: int) -> float:
    """Largest ``|T(w) - (Y - Ad_L(w) Y)| / (1 + |T(w)|)`` over words up to max_len."""
    worst = 0.0
    for w in enumerate_words(rep.k, max_len):
        el = evaluate(rep, w)
        expected = Y - el.linear @ Y @ np.linalg.inv(el.linear)
        err = np.max(np.abs(el.translation - expected))
        worst = max(worst, float(err / (1 + np.max(np.abs(el.translation)))))
    return worst


def coboundary_solve(rep: AffineRep, tol: float = 1e-8) -> np.ndarray | None:
    """Find Y with ``X_i = Y - g_i Y g_i^-1`` for every generator, or None.

    The minimum-norm least-squares solution is accepted when the stacked
    residual is at most ``tol * (1 + max |X_i|)`` and the relation also holds
    on all words of length 2.
    """
    blocks = []
    for gen in rep.generators:
        Ad = ad_matrix(gen.linear)
        blocks.append((np.eye(Ad.shape[0]) - Ad, to_coords(gen.translation)))
    sol = linalg.min_norm_solve(blocks)
    scale = 1 + max(float(np.linalg.norm(b)) for _, b in blocks)
    if sol.residual > tol * scale:
        return None
    Y = from_coords(sol.x, rep.model.n)
    if _cocycle_residual(rep, Y, 2) > tol * scale:
        return None
    return Y


def coboundary_residual(rep: AffineRep) -> float:
    """Relative residual of the least-squares coboundary fit, for reports."""
    blocks = []
    for gen in rep.generators:
        Ad = ad_matrix(gen.linear)
        blocks.append((np.eye(Ad.shape[0]) - Ad, to_coords(gen.translation)))
    sol = linalg.min_norm_solve(blocks)
    return sol.residual / (1 + max(float(np.linalg.norm(b)) for _, b in blocks))


def conjugate_rep(rep: AffineRep, c: AffineElement) -> AffineRep:
    """Generator-wise ``c g c^-1``."""
    ci = c.inverse()
    return AffineRep(rep.model, tuple(c * gen * ci for gen in rep.generators))


def certify_conjugacy(
    rep1: AffineRep, rep2: AffineRep, max_len: int = 2, tol: float = 1e-8
) -> AffineElement | None:
    """Find ``(e, Y)`` with ``(e, Y) rep2 (e, Y)^-1 = rep1``, or None.

    Only representations with equal linear parts are handled.  The recovered
    conjugator is verified on every word of length at most ``max_len``.
    """
    if rep1.model != rep2.model or rep1.k != rep2.k:
        return None
    for g1, g2 in zip(rep1.generators, rep2.generators):
        if np.max(np.abs(g1.linear - g2.linear)) > tol * (1 + np.max(np.abs(g1.linear))):
            return None
    diff = AffineRep(
        rep1.model,
        tuple(AffineElement(g1.linear, g1.translation - g2.translation) for g1, g2 in zip(rep1.generators, rep2.generators)),
    )
    Y = coboundary_solve(diff, tol)
    if Y is None:
        return None
    n = rep1.model.n
    c = AffineElement(np.eye(n), Y)
    back = conjugate_rep(rep2, c)
    for w in enumerate_words(rep1.k, max(1, max_len)):
        a1, a2 = evaluate(rep1, w), evaluate(back, w)
        scale = 1 + max(np.max(np.abs(a1.translation)), np.max(np.abs(a1.linear)))
        if not a1.allclose(a2, tol * scale):
            return None
    return c


def orbit_span_check(model: ModelSpec, X, samples: int, seed: int) -> bool:
    """Whether ``samples`` random conjugates of X span sl(n) (rank test at 1e-8)."""
    x = to_coords(X)
    if not np.any(x):
        raise ZeroInput("X must be nonzero")
    rng = np.random.default_rng(seed)
    vecs = np.column_stack([ad_matrix(random_group_element(model.n, rng)) @ x for _ in range(samples)])
    sv = np.linalg.svd(vecs, compute_uv=False)
    rank = int(np.sum(sv > 1e-8 * sv[0]))
    return rank == model.rep_dim


def _words_loxodromic(linears: Sequence[np.ndarray], max_len: int, min_gap: float) -> bool:
    k = len(linears)
    mats = {x: (linears[x - 1] if x > 0 else np.linalg.inv(linears[-x - 1])) for x in _alphabet(k)}
    layer: list[tuple[tuple[int, ...], np.ndarray]] = [((), np.eye(linears[0].shape[0]))]
    for _ in range(max_len):
        nxt = []
        for w, g in layer:
            for x in _alphabet(k):
                if w and w[-1] == -x:
                    continue
                gx = g @ mats[x]
                if not is_loxodromic(gx, min_gap):
                    return False
                nxt.append((w + (x,), gx))
        layer = nxt
    return True


def random_loxodromic_rep(
    model: ModelSpec,
    k: int,
    max_len: int,
    seed: int,
    translation_scale: float = 1.0,
    gap_range: tuple[float, float] = (1.0, 2.0),
    min_gap: float = 0.05,
    max_cond: float = 4.0,
    max_tries: int = 500,
) -> AffineRep:
    """Seeded random representation whose reduced words up to max_len are all loxodromic.

    Linear parts are conjugates of dominant diagonal matrices (with random
    sign patterns) by well-conditioned random matrices.  Candidates are
    rejected until every word of length at most ``max_len`` has log eigenvalue
    moduli separated by more than ``min_gap``.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    rng = np.random.default_rng(seed)
    n = model.n
    for _ in range(max_tries):
        linears = [random_loxodromic(n, rng, gap_range, max_cond) for _ in range(k)]
        if not _words_loxodromic(linears, max_len, min_gap):
            continue
        gens = tuple(
            AffineElement(g, translation_scale * from_coords(rng.normal(size=model.rep_dim), n)) for g in linears
        )
        return AffineRep(model, gens)
    raise GenerationFailed(f"no loxodromic representation found in {max_tries} tries")


def coboundary_rep(rep: AffineRep, Y) -> AffineRep:
    """Linear parts of rep with translations ``Y - g_i Y g_i^-1``."""
    Y = np.asarray(Y, dtype=float)
    gens = tuple(
        AffineElement(gen.linear, Y - gen.linear @ Y @ np.linalg.inv(gen.linear)) for gen in rep.generators
    )
    return AffineRep(rep.model, gens)
