"""Cohen-Lenstra measures mu_f and nu_f and their ingredients."""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import ConsistencyError, DomainError
from .fp import IrreduciblePoly, Poly
from .partitions import Partition

TRUNCATION_TOL = 1e-12
# float rounding slack folded into every reported bound (ulps per factor)
_ROUND = 4 * sys.float_info.epsilon


@dataclass(frozen=True)
class MeasureValue:
    """A probability together with a bound on |value - exact|."""

    value: float
    truncation_error_bound: float

    def __float__(self):
        return self.value

    def to_json(self) -> dict[str, float]:
        return {"value": self.value, "truncation_error_bound": self.truncation_error_bound}


@dataclass(frozen=True)
class _Product:
    value: float
    error: float
    factors: int


def _infinite_product(a: float, q: float) -> _Product:
    # (a; q)_inf, stopping once |a q^k| < TRUNCATION_TOL; the remaining factors
    # satisfy |prod(1 + y_k) - 1| <= expm1(sum |y_k|) with sum |y_k| <= |a q^k| / (1 - |q|).
    value, term, k = 1.0, a, 0
    while abs(term) >= TRUNCATION_TOL:
        value *= 1.0 - term
        term *= q
        k += 1
    tail = abs(term) / (1.0 - abs(q))
    err = abs(value) * (math.expm1(tail) + _ROUND * (k + 1))
    return _Product(value, err, k)


def pochhammer(a: float, q: float, m: int | float) -> float:
    """``(a; q)_m = (1-a)(1-aq)...(1-aq^(m-1))``; ``m = math.inf`` allowed when |q| < 1."""
    return pochhammer_bounded(a, q, m).value


def pochhammer_bounded(a: float, q: float, m: int | float) -> MeasureValue:
    if m == math.inf:
        if abs(q) >= 1:
            raise DomainError(f"(a; q)_inf diverges for |q| = {abs(q)} >= 1")
        prod = _infinite_product(a, q)
        return MeasureValue(prod.value, prod.error)
    if m < 0 or int(m) != m:
        raise DomainError(f"Pochhammer length must be a nonnegative integer or inf, got {m}")
    value, term = 1.0, a
    for _ in range(int(m)):
        value *= 1.0 - term
        term *= q
    return MeasureValue(value, abs(value) * _ROUND * (int(m) + 1))


def pochhammer_exact(a: Fraction, q: Fraction, m: int) -> Fraction:
    value, term = Fraction(1), Fraction(a)
    for _ in range(m):
        value *= 1 - term
        term *= q
    return value


def _qdeg(f: Poly) -> tuple[int, int]:
    if f.degree < 1:
        raise DomainError(f"expected a nonconstant polynomial, got {f}")
    d = len(f.coeffs) - 1
    return d, f.p**d


def aut_cardinality(f: IrreduciblePoly, lam: Partition) -> int:
    """``#Aut`` of ``(+)_j F_p[t]/(f^lambda_j)`` in exact arithmetic."""
    d, q = _qdeg(f)
    inv_q = Fraction(1, q)
    val = Fraction(q) ** (lam.size() + 2 * lam.weighted_index())
    for m in lam.multiplicities().values():
        val *= pochhammer_exact(inv_q, inv_q, m)
    if val.denominator != 1 or val < 1:
        raise ConsistencyError(f"non-integral automorphism count {val} for {f}, {lam}")
    return int(val)


def mu(f: IrreduciblePoly, lam: Partition) -> MeasureValue:
    """Cohen-Lenstra probability of type ``lam`` at ``f``."""
    _, q = _qdeg(f)
    prod = _infinite_product(1.0 / q, 1.0 / q)
    aut = aut_cardinality(f, lam)
    return MeasureValue(prod.value / aut, prod.error / aut + _ROUND * prod.value / aut)


def nu(f: IrreduciblePoly, j: int) -> MeasureValue:
    """Limit probability that ``f`` divides the characteristic polynomial exactly ``j`` times."""
    if j < 0:
        raise DomainError("multiplicity must be nonnegative")
    _, q = _qdeg(f)
    scale = float(q) ** -j
    prod = _infinite_product(float(q) ** -(j + 1), 1.0 / q)
    value = scale * prod.value
    return MeasureValue(value, scale * prod.error + _ROUND * value)


def product_measure(fs: Sequence[IrreduciblePoly], lams: Sequence[Partition]) -> MeasureValue:
    """``prod_i mu(f_i, lambda^(i))`` for pairwise distinct ``f_i``."""
    if len(fs) != len(lams):
        raise DomainError(f"{len(fs)} polynomials but {len(lams)} partitions")
    if len(set(fs)) != len(fs):
        raise DomainError("product measure needs pairwise distinct polynomials")
    return _product([mu(f, lam) for f, lam in zip(fs, lams)])


def product_nu(fs: Sequence[IrreduciblePoly], js: Sequence[int]) -> MeasureValue:
    if len(fs) != len(js):
        raise DomainError(f"{len(fs)} polynomials but {len(js)} multiplicities")
    if len(set(fs)) != len(fs):
        raise DomainError("product measure needs pairwise distinct polynomials")
    return _product([nu(f, j) for f, j in zip(fs, js)])


def _product(parts: Sequence[MeasureValue]) -> MeasureValue:
    value, err = 1.0, 0.0
    for mv in parts:
        # |xy - x'y'| <= |x||y - y'| + |y'||x - x'|, all quantities <= 1 in magnitude
        err = value * mv.truncation_error_bound + (mv.value + mv.truncation_error_bound) * err
        value *= mv.value
    return MeasureValue(value, err + _ROUND * value * len(parts))
