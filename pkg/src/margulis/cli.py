"""Command-line front end.

Commands::

    margulis spectrum SPEC [--max-word-len L] [--format csv|json]
    margulis compare SPEC1 SPEC2 [--max-word-len L] [--tol T]
    margulis coboundary SPEC [--tol T]
    margulis certify SPEC1 SPEC2 [--max-word-len L] [--tol T]
    margulis check (SPEC | --random N K SEED) [--max-word-len L] [--rational]

Exit codes:

    0   success
    2   parse or validation failure
    3   a generator is not loxodromic
    4   the two specs use different models
    5   linear parts differ (certify)
    10  spectra agree in Q only
    11  spectra differ
    12  no coboundary at the given tolerance
    13  conjugacy certification failed
    14  a property check failed

Error exits (2-5) write only a diagnostic to stderr.  Verdict exits (10-14)
write their complete report to stdout, like a success.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import linalg
from .errors import GenerationFailed, MargulisError
from .invariant import (
    AffineElement,
    margulis_invariant,
    margulis_invariant_via_projector,
    deflated_system,
    unit_projector,
)
from .liegroup import LOX_TOL, ModelSpec, ad_matrix, from_coords, is_loxodromic, jordan_decompose, pi0
from .spectrum import (
    AffineRep,
    Verdict,
    certify_conjugacy,
    coboundary_residual,
    coboundary_solve,
    compare_spectra,
    conjugate_rep,
    enumerate_words,
    evaluate,
    marked_spectrum,
    random_loxodromic_rep,
    spectrum_discrepancy,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_LOXODROMIC = 3
EXIT_MODEL_MISMATCH = 4
EXIT_LINEAR_DIFFER = 5
EXIT_Q_EQUAL_ONLY = 10
EXIT_DIFFER = 11
EXIT_NO_COBOUNDARY = 12
EXIT_CERTIFY_FAILED = 13
EXIT_CHECK_FAILED = 14

DET_INPUT_TOL = 1e-6
TRACE_INPUT_TOL = 1e-8


class SpecError(Exception):
    """Invalid input file; ``where`` names the offending line or field."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


class _Exit(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class RepSpec:
    rep: AffineRep
    metadata: dict = field(default_factory=dict)
    source: str = "<memory>"


def _matrix(value: Any, n: int, where: str) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(where, f"not a numeric matrix ({exc})") from None
    if arr.shape != (n, n):
        raise SpecError(where, f"expected shape ({n}, {n}), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise SpecError(where, "entries must be finite")
    return arr


def parse_rep_spec(data: Any, source: str = "<memory>") -> RepSpec:
    """Validate a decoded spec document.  Loxodromy is checked separately."""
    if not isinstance(data, dict):
        raise SpecError(source, "top level must be an object")
    model = data.get("model")
    if not isinstance(model, dict):
        raise SpecError(f"{source}: model", "missing or not an object")
    family = model.get("family", "adjoint_sl")
    n = model.get("n")
    if family != "adjoint_sl":
        raise SpecError(f"{source}: model.family", f"unsupported family {family!r}")
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        raise SpecError(f"{source}: model.n", f"must be an integer >= 2, got {n!r}")
    gens = data.get("generators")
    if not isinstance(gens, list) or not gens:
        raise SpecError(f"{source}: generators", "must be a nonempty list")
    out = []
    for i, gen in enumerate(gens):
        where = f"{source}: generators[{i}]"
        if not isinstance(gen, dict) or "g" not in gen or "X" not in gen:
            raise SpecError(where, "each generator needs fields g and X")
        g = _matrix(gen["g"], n, where + ".g")
        X = _matrix(gen["X"], n, where + ".X")
        det = float(np.linalg.det(g))
        if abs(det - 1) <= DET_INPUT_TOL:
            pass
        elif abs(det + 1) <= DET_INPUT_TOL and n % 2 == 1:
            g = -g
            det = -det
        else:
            raise SpecError(where + ".g", f"determinant {det!r} is not +-1 within {DET_INPUT_TOL}")
        g = g / det ** (1.0 / n)
        tr = float(np.trace(X))
        if abs(tr) > TRACE_INPUT_TOL:
            raise SpecError(where + ".X", f"trace {tr!r} is not 0 within {TRACE_INPUT_TOL}")
        X = X - (tr / n) * np.eye(n)
        out.append(AffineElement(g, X))
    meta = data.get("metadata", {})
    if not isinstance(meta, dict):
        raise SpecError(f"{source}: metadata", "must be an object")
    return RepSpec(AffineRep(ModelSpec(n), tuple(out)), dict(meta), source)


def load_rep_spec(path: str | Path) -> RepSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(str(path), f"cannot read ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}:{exc.lineno}:{exc.colno}", f"malformed JSON ({exc.msg})") from None
    return parse_rep_spec(data, str(path))


def rep_to_dict(rep: AffineRep, metadata: dict | None = None) -> dict:
    out: dict[str, Any] = {
        "model": {"family": rep.model.family, "n": rep.model.n},
        "generators": [{"g": gen.linear.tolist(), "X": gen.translation.tolist()} for gen in rep.generators],
    }
    if metadata:
        out["metadata"] = dict(metadata)
    return out


def write_rep_spec(path: str | Path, rep: AffineRep, metadata: dict | None = None) -> None:
    Path(path).write_text(json.dumps(rep_to_dict(rep, metadata), indent=2) + "\n")


def _check_loxodromic(spec: RepSpec, tol: float) -> None:
    for i, gen in enumerate(spec.rep.generators):
        if not is_loxodromic(gen.linear, tol):
            raise _Exit(EXIT_NOT_LOXODROMIC, f"{spec.source}: generators[{i}].g is not loxodromic at tolerance {tol}")


def _load(path: str, lox_tol: float) -> RepSpec:
    spec = load_rep_spec(path)
    _check_loxodromic(spec, lox_tol)
    return spec


def _load_pair(p1: str, p2: str, lox_tol: float) -> tuple[RepSpec, RepSpec]:
    s1, s2 = load_rep_spec(p1), load_rep_spec(p2)
    if s1.rep.model != s2.rep.model:
        raise _Exit(EXIT_MODEL_MISMATCH, f"model mismatch: n={s1.rep.model.n} vs n={s2.rep.model.n}")
    _check_loxodromic(s1, lox_tol)
    _check_loxodromic(s2, lox_tol)
    return s1, s2


def _clean(x: float) -> float:
    return float(x) + 0.0  # folds -0.0 into 0.0


def _num(x: float) -> float | None:
    x = float(x)
    return _clean(x) if math.isfinite(x) else None


def _fmt17(x: float) -> str:
    return format(_clean(x), ".16e")


def _json(obj: Any) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _spectrum_output(spec: RepSpec, max_len: int, lox_tol: float, fmt: str) -> tuple[str, int]:
    rep = spec.rep
    n = rep.model.n
    s = marked_spectrum(rep, max_len, lox_tol)
    if fmt == "json":
        entries = [
            {
                "word": w.render(),
                "len": len(w),
                "m": [_num(v) for v in e.m],
                "q": _num(e.q),
                "jd": [_num(v) for v in e.jd],
            }
            for w, e in sorted(s.entries.items())
        ]
        doc = {
            "model": {"family": rep.model.family, "n": n},
            "max_len": max_len,
            "entries": entries,
            "skipped": [w.render() for w in sorted(s.skipped)],
        }
        return _json(doc), len(s.skipped)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["word", "len"] + [f"m_{i + 1}" for i in range(n - 1)] + ["q"] + [f"jd_{i + 1}" for i in range(n)]
    )
    for w, e in sorted(s.entries.items()):
        writer.writerow([w.render(), len(w)] + [_fmt17(v) for v in e.m] + [_fmt17(e.q)] + [_fmt17(v) for v in e.jd])
    return buf.getvalue(), len(s.skipped)


def cmd_spectrum(args) -> tuple[int, str]:
    spec = _load(args.spec, args.lox_tol)
    fmt = args.format or "csv"
    out, skipped = _spectrum_output(spec, args.max_word_len, args.lox_tol, fmt)
    if skipped:
        print(f"note: {skipped} word(s) skipped as non-loxodromic or degenerate", file=sys.stderr)
    return EXIT_OK, out


def cmd_compare(args) -> tuple[int, str]:
    s1, s2 = _load_pair(args.spec1, args.spec2, args.lox_tol)
    sp1 = marked_spectrum(s1.rep, args.max_word_len, args.lox_tol)
    sp2 = marked_spectrum(s2.rep, args.max_word_len, args.lox_tol)
    report = compare_spectra(sp1, sp2, args.tol)
    doc = report.to_dict()
    doc["max_len"] = args.max_word_len
    code = {Verdict.EQUAL: EXIT_OK, Verdict.Q_EQUAL_ONLY: EXIT_Q_EQUAL_ONLY, Verdict.DIFFER: EXIT_DIFFER}[report.verdict]
    return code, _json(doc)


def cmd_coboundary(args) -> tuple[int, str]:
    spec = _load(args.spec, args.lox_tol)
    Y = coboundary_solve(spec.rep, args.tol)
    residual = coboundary_residual(spec.rep)
    if Y is None:
        doc = {"coboundary": False, "relative_residual": residual, "tol": args.tol}
        return EXIT_NO_COBOUNDARY, _json(doc)
    doc = {"coboundary": True, "Y": [[_num(v) for v in row] for row in Y], "relative_residual": residual, "tol": args.tol}
    return EXIT_OK, _json(doc)


def cmd_certify(args) -> tuple[int, str]:
    s1, s2 = _load_pair(args.spec1, args.spec2, args.lox_tol)
    r1, r2 = s1.rep, s2.rep
    if r1.k != r2.k:
        raise _Exit(EXIT_LINEAR_DIFFER, f"generator counts differ: {r1.k} vs {r2.k}")
    for i, (a, b) in enumerate(zip(r1.generators, r2.generators)):
        if np.max(np.abs(a.linear - b.linear)) > args.tol * (1 + np.max(np.abs(a.linear))):
            raise _Exit(EXIT_LINEAR_DIFFER, f"linear parts of generator {i} differ")
    c = certify_conjugacy(r1, r2, args.max_word_len, args.tol)
    if c is None:
        doc = {"certified": False, "max_len": args.max_word_len, "tol": args.tol}
        return EXIT_CERTIFY_FAILED, _json(doc)
    doc = {
        "certified": True,
        "conjugator": {
            "g": c.linear.tolist(),
            "X": [[_num(v) for v in row] for row in c.translation],
        },
        "max_len": args.max_word_len,
        "tol": args.tol,
    }
    return EXIT_OK, _json(doc)


def _rel(err: float, scale: float) -> float:
    return float(err) / max(1.0, float(scale))


def run_checks(rep: AffineRep, max_len: int, tol: float, seed: int, lox_tol: float = LOX_TOL, rational: bool = False) -> list[dict]:
    """Property suite on one representation.  Each entry has name, residual, threshold, passed."""
    n = rep.model.n
    rng = np.random.default_rng(seed)
    sample = [evaluate(rep, w) for w in enumerate_words(rep.k, min(max_len, 2))]
    sample = [a for a in sample if is_loxodromic(a.linear, lox_tol)]
    results: list[dict] = []

    def record(name: str, residual: float, threshold: float):
        results.append({"name": name, "residual": _num(residual), "threshold": threshold, "passed": bool(residual <= threshold)})

    worst = 0.0
    for a in sample:
        A, P, _ = deflated_system(a.linear, lox_tol, True)
        R = linalg.to_float(linalg.poly_apply(P, A))
        Af = linalg.to_float(A)
        Ad = ad_matrix(a.linear)
        bound = np.linalg.norm(Ad, 2) ** Ad.shape[0]
        worst = max(worst, np.linalg.norm(Af @ R, 2) / bound)
    record("annihilation", worst, tol)

    worst = 0.0
    for a in sample:
        Pi = unit_projector(a.linear, lox_tol)
        Ad = ad_matrix(a.linear)
        worst = max(
            worst,
            np.max(np.abs(Pi @ Pi - Pi)),
            abs(np.trace(Pi) - (n - 1)),
            np.max(np.abs(Pi @ Ad - Ad @ Pi)),
        )
    record("projector_laws", worst, tol)

    worst = 0.0
    for a in sample:
        m1 = margulis_invariant(a, lox_tol)
        m2 = margulis_invariant_via_projector(a, lox_tol)
        worst = max(worst, _rel(np.max(np.abs(m1 - m2)), np.max(np.abs(m1))))
    record("algorithm_agreement", worst, tol)

    worst = 0.0
    for a in sample:
        frame = jordan_decompose(a.linear, lox_tol)
        m = margulis_invariant(a, lox_tol, frame)
        for _ in range(5):
            scales = rng.choice([-1.0, 1.0], n) * np.exp(rng.uniform(-2, 2, n))
            m2 = margulis_invariant(a, lox_tol, frame.rescaled(scales))
            worst = max(worst, _rel(np.max(np.abs(m - m2)), np.max(np.abs(m))))
    record("frame_ambiguity", worst, tol / 10)

    worst = 0.0
    for a in sample:
        h = jordan_decompose(a.linear, lox_tol).h
        m = margulis_invariant(a, lox_tol)
        Y = from_coords(rng.normal(size=rep.model.rep_dim), n)
        D = a.act(Y) - Y
        m2 = pi0(np.linalg.solve(h, D) @ h)
        worst = max(worst, _rel(np.max(np.abs(m - m2)), np.max(np.abs(m))))
    record("displacement", worst, tol / 10)

    u = np.linalg.qr(rng.normal(size=(n, n)))[0]
    if np.linalg.det(u) < 0:
        u[:, 0] = -u[:, 0]
    c = AffineElement(u, from_coords(rng.normal(size=rep.model.rep_dim), n))
    s1 = marked_spectrum(rep, max_len, lox_tol)
    s2 = marked_spectrum(conjugate_rep(rep, c), max_len, lox_tol)
    record("conjugation_invariance", spectrum_discrepancy(s1, s2), tol)

    if rational:
        worst = 0.0
        for gen in rep.generators:
            A, P, _ = deflated_system(gen.linear, lox_tol, True)
            R = A.dot(linalg.poly_apply(P, A))
            worst = max(worst, max(abs(Fraction(v)) for v in R.ravel()))
        record("exact_annihilation", float(worst), 0.0)
    return results


def cmd_check(args) -> tuple[int, str]:
    if (args.spec is None) == (args.random is None):
        raise SpecError("arguments", "give exactly one of SPEC or --random N K SEED")
    if args.random is not None:
        n, k, seed = args.random
        try:
            rep = random_loxodromic_rep(ModelSpec(n), k, args.max_word_len, seed)
        except (ValueError, GenerationFailed) as exc:
            raise SpecError("--random", str(exc)) from None
        source = {"random": [n, k, seed]}
    else:
        rep = _load(args.spec, args.lox_tol).rep
        source = {"spec": args.spec}
    results = run_checks(rep, args.max_word_len, args.tol, args.seed, args.lox_tol, args.rational)
    failed = [r["name"] for r in results if not r["passed"]]
    doc = {"source": source, "max_len": args.max_word_len, "tol": args.tol, "checks": results, "passed": not failed}
    if failed:
        print(f"check failed: {failed[0]}", file=sys.stderr)
        return EXIT_CHECK_FAILED, _json(doc)
    return EXIT_OK, _json(doc)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--max-word-len", type=int, default=4, help="longest word in spectra (default 4)")
    common.add_argument("--tol", type=float, default=1e-8, help="comparison tolerance (default 1e-8)")
    common.add_argument("--lox-tol", type=float, default=LOX_TOL, help="loxodromy gap tolerance (default 1e-6)")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    common.add_argument("--rational", action="store_true", help="add exact rational spot checks (check only)")

    parser = argparse.ArgumentParser(prog="margulis", description="Margulis-Smilga invariant spectra of affine adjoint actions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="marked invariant spectrum of one spec")
    p.add_argument("spec")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("compare", parents=[common], help="compare the spectra of two specs")
    p.add_argument("spec1")
    p.add_argument("spec2")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("coboundary", parents=[common], help="solve for Y with X_i = Y - g_i Y g_i^-1")
    p.add_argument("spec")
    p.set_defaults(func=cmd_coboundary)

    p = sub.add_parser("certify", parents=[common], help="find a translation conjugating spec2 to spec1")
    p.add_argument("spec1")
    p.add_argument("spec2")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("check", parents=[common], help="run the property suite on a spec or a random rep")
    p.add_argument("spec", nargs="?")
    p.add_argument("--random", nargs=3, type=int, metavar=("N", "K", "SEED"))
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.format == "csv" and args.command != "spectrum":
        print("error: --format csv is only available for spectrum", file=sys.stderr)
        return EXIT_INVALID
    if args.max_word_len < 1:
        print("error: --max-word-len must be at least 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        code, out = args.func(args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except _Exit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except MargulisError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    sys.stdout.write(out)
    sys.stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
