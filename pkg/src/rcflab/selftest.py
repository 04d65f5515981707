"""Fast oracle table: every pair of independent computations that must agree."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .canonical import is_similar, rcf
from .fp import Poly, factor, irreducibles, poly_product
from .matrix import MatFp, charpoly, inverse, mat_poly_eval, random_invertible
from .measures import aut_cardinality, mu, nu
from .moduletype import enumerate_module_types, parse_module_type
from .modules import aut_count_generators, aut_count_oracle, exact_moment, realize, sur_count_from_matrix
from .partitions import partitions_of
from .sampler import validate_dist
from .snf import type_at, type_at_rank_oracle


@dataclass
class CheckResult:
    name: str
    passed: bool
    cases: int
    seconds: float
    detail: str = ""


def _aut_formula_vs_enumeration() -> tuple[int, str]:
    cache: dict = {}
    n = 0
    for p, dim in ((2, 6), (3, 4)):
        for tau in enumerate_module_types(p, dim):
            count, _ = aut_count_oracle(tau, cache=cache)
            formula = math.prod(aut_cardinality(f, lam) for f, lam in tau.items())
            if count != formula:
                return -1, f"{tau}: oracle {count} vs formula {formula}"
            n += 1
    return n, ""


def _aut_generators_vs_formula() -> tuple[int, str]:
    n = 0
    for p, dim in ((2, 7), (3, 4), (5, 3)):
        for tau in enumerate_module_types(p, dim):
            g = aut_count_generators(realize(tau))
            formula = math.prod(aut_cardinality(f, lam) for f, lam in tau.items())
            if g != formula:
                return -1, f"{tau}: generators {g} vs formula {formula}"
            n += 1
    return n, ""


def _snf_vs_rank(rng: np.random.Generator) -> tuple[int, str]:
    n = 0
    for p in (2, 3, 5):
        fs = [f for d in (1, 2) for f in irreducibles(p, d)]
        for _ in range(60):
            size = int(rng.integers(1, 7))
            A = MatFp(rng.integers(0, p, (size, size)), p)
            for f in fs:
                if type_at(A, f) != type_at_rank_oracle(A, f):
                    return -1, f"{A} at {f}"
                n += 1
    return n, ""


def _exact_moments() -> tuple[int, str]:
    uniform = validate_dist([Fraction(1, 2)] * 2)
    G = realize(parse_module_type("t:1", 2))
    for n in (1, 2, 3):
        got = exact_moment(n, uniform, G)
        if got != 1 - Fraction(1, 2**n):
            return -1, f"n={n}: {got}"
    return 3, ""


def _sur_strategies(rng: np.random.Generator) -> tuple[int, str]:
    n = 0
    for p, text in ((2, "t:1"), (2, "t:2"), (2, "t:1+1"), (3, "t+1:1"), (2, "t:1;t+1:1")):
        G = realize(parse_module_type(text, p))
        for _ in range(15):
            A = MatFp(rng.integers(0, p, (3, 3)), p)
            a = sur_count_from_matrix(A, G, strategy="enumerate")
            b = sur_count_from_matrix(A, G, strategy="mobius")
            if a != b:
                return -1, f"{text}: {a} vs {b}"
            n += 1
    return n, ""


def _measure_identity() -> tuple[int, str]:
    n = 0
    for p in (2, 3):
        for f in (irreducibles(p, 1)[0], irreducibles(p, 2)[0]):
            for j in range(5):
                s = sum(mu(f, lam).value for lam in partitions_of(j))
                bound = sum(mu(f, lam).truncation_error_bound for lam in partitions_of(j))
                v = nu(f, j)
                if abs(s - v.value) > bound + v.truncation_error_bound:
                    return -1, f"{f}, j={j}: {s} vs {v.value}"
                n += 1
    return n, ""


def _structural(rng: np.random.Generator) -> tuple[int, str]:
    n = 0
    for p in (2, 3, 5):
        for _ in range(25):
            size = int(rng.integers(1, 6))
            A = MatFp(rng.integers(0, p, (size, size)), p)
            if np.any(mat_poly_eval(charpoly(A), A).data):
                return -1, f"Cayley-Hamilton fails for {A}"
            P = random_invertible(size, p, rng)
            B = P @ A @ inverse(P)
            R, tau = rcf(A)
            if not is_similar(A, B) or rcf(B)[0] != R or rcf(R)[0] != R:
                return -1, f"rcf/similarity fails for {A}"
            g = charpoly(A)
            if poly_product([f**e for f, e in factor(g)], p) != g:
                return -1, f"factor round trip fails for {g}"
            n += 1
    return n, ""


def run_selftest(seed: int = 20240101) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    checks: list[tuple[str, Callable[[], tuple[int, str]]]] = [
        ("aut formula = enumeration (|G| <= 2^6, 3^4)", _aut_formula_vs_enumeration),
        ("aut formula = generator count", _aut_generators_vs_formula),
        ("type_at (SNF) = rank oracle", lambda: _snf_vs_rank(rng)),
        ("exact moment = 1 - 2^-n, n <= 3", _exact_moments),
        ("sur: enumeration = Moebius", lambda: _sur_strategies(rng)),
        ("sum mu over |lambda|=j = nu(j)", _measure_identity),
        ("Cayley-Hamilton, rcf, similarity, factor", lambda: _structural(rng)),
    ]
    out = []
    for name, fn in checks:
        t0 = time.perf_counter()
        try:
            cases, detail = fn()
            passed = cases >= 0
        except Exception as exc:  # report, do not abort the table
            cases, detail, passed = -1, f"{type(exc).__name__}: {exc}", False
        out.append(CheckResult(name, passed, max(cases, 0), time.perf_counter() - t0, detail))
    return out


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  cases  seconds"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.name:<{width}}  {status:<6}  {r.cases:>5}  {r.seconds:7.2f}")
        if r.detail:
            lines.append(f"  {r.detail}")
    return "\n".join(lines)
