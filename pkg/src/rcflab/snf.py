"""Smith normal form over F_p[t] and cokernel types.

Invariant factors are reported largest first, ``g_n | ... | g_2 | g_1``
(the reverse of the usual SNF convention).  ``InvariantFactors.ascending``
gives the conventional order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AmbientMismatchError, ConsistencyError, ShapeError, SingularityError
from .fp import (
    IrreduciblePoly,
    Poly,
    _add,
    _divmod,
    _mul,
    _scale,
    _submul,
    _val,
    check_prime,
    factor,
    parse_poly,
)
from .matrix import MatFp, mat_poly_eval, rank_batch
from .moduletype import ModuleType
from .partitions import Partition


class MatPoly:
    """Immutable rows x cols matrix over F_p[t]."""

    __slots__ = ("p", "rows", "cols", "entries")

    def __init__(self, entries: Sequence[Sequence[Poly | Sequence[int]]], p: int):
        check_prime(p)
        rows = [list(r) for r in entries]
        if not rows or not rows[0] or any(len(r) != len(rows[0]) for r in rows):
            raise ShapeError("MatPoly needs a nonempty rectangular array")
        flat = []
        for r in rows:
            for e in r:
                if isinstance(e, Poly):
                    if e.p != p:
                        raise AmbientMismatchError(f"entry over F_{e.p}, matrix over F_{p}")
                    flat.append(e)
                else:
                    flat.append(Poly(e, p))
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "rows", len(rows))
        object.__setattr__(self, "cols", len(rows[0]))
        object.__setattr__(self, "entries", tuple(flat))

    def __setattr__(self, name, value):
        raise AttributeError("MatPoly is immutable")

    def __reduce__(self):
        return (_matpoly_from_flat, (self.p, self.rows, self.cols, self.entries))

    def __getitem__(self, ij: tuple[int, int]) -> Poly:
        i, j = ij
        return self.entries[i * self.cols + j]

    def raw(self) -> list[list[list[int]]]:
        return [[list(self.entries[i * self.cols + j].coeffs) for j in range(self.cols)] for i in range(self.rows)]

    @classmethod
    def diagonal(cls, polys: Sequence[Poly], p: int) -> "MatPoly":
        n = len(polys)
        zero = Poly.zero(p)
        return cls([[polys[i] if i == j else zero for j in range(n)] for i in range(n)], p)

    def __eq__(self, other):
        if not isinstance(other, MatPoly):
            return NotImplemented
        return (self.p, self.rows, self.cols, self.entries) == (other.p, other.rows, other.cols, other.entries)

    def __hash__(self):
        return hash((self.p, self.rows, self.cols, self.entries))

    def __repr__(self):
        return f"MatPoly({self.rows}x{self.cols}, p={self.p})"


def _matpoly_from_flat(p, rows, cols, entries):
    return MatPoly([entries[i * cols:(i + 1) * cols] for i in range(rows)], p)


def char_matrix(A: MatFp) -> MatPoly:
    """``tI - A``."""
    if not A.is_square():
        raise ShapeError(f"characteristic matrix of a non-square {A.shape} matrix")
    return MatPoly(_char_raw(A.as_int(), A.p), A.p)


def _char_raw(a: np.ndarray, p: int) -> list[list[list[int]]]:
    n = a.shape[0]
    neg = ((-a) % p).tolist()
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            c = neg[i][j]
            if i == j:
                row.append([c, 1])
            else:
                row.append([c] if c else [])
        out.append(row)
    return out


@dataclass(frozen=True)
class InvariantFactors:
    """Monic invariant factors ``g_1, ..., g_n`` with ``g_{i+1} | g_i``."""

    factors: tuple[Poly, ...]

    @property
    def p(self) -> int:
        return self.factors[0].p

    def ascending(self) -> tuple[Poly, ...]:
        return tuple(reversed(self.factors))

    def nontrivial(self) -> tuple[Poly, ...]:
        return tuple(g for g in self.factors if g.degree > 0)

    def product(self) -> Poly:
        acc = [1]
        for g in self.factors:
            acc = _mul(acc, list(g.coeffs), g.p)
        return Poly._raw(acc, self.p)

    def __len__(self):
        return len(self.factors)

    def __iter__(self):
        return iter(self.factors)


def _snf_raw(work: list[list[list[int]]], p: int) -> list[list[int]]:
    """Diagonal of the SNF in ascending divisibility order; consumes ``work``."""
    diag: list[list[int]] = []
    while work:
        k = len(work)
        best_len, r0, c0 = 0, -1, -1
        for r, row in enumerate(work):
            for c, e in enumerate(row):
                if e and (best_len == 0 or len(e) < best_len):
                    best_len, r0, c0 = len(e), r, c
                    if best_len == 1:
                        break
            if best_len == 1:
                break
        if best_len == 0:
            raise SingularityError("polynomial matrix is singular; its cokernel is infinite")

        prow = work[r0]
        lead = prow[c0][-1]
        if lead != 1:
            inv = pow(lead, -1, p)
            prow = [_scale(e, inv, p) for e in prow]
            work[r0] = prow
        piv = prow[c0]

        if best_len == 1:
            # unit pivot: clearing the column clears the row too
            for r in range(k):
                if r == r0:
                    continue
                row = work[r]
                q = row[c0]
                if q:
                    work[r] = [_submul(row[c], q, prow[c], p) if prow[c] else row[c] for c in range(k)]
            del work[r0]
            for row in work:
                del row[c0]
            diag.append([1])
            continue

        dirty = False
        for r in range(k):
            if r == r0:
                continue
            row = work[r]
            e = row[c0]
            if e:
                q, rem = _divmod(e, piv, p)
                if q:
                    work[r] = [_submul(row[c], q, prow[c], p) if prow[c] else row[c] for c in range(k)]
                if rem:
                    dirty = True
        if dirty:
            continue
        for c in range(k):
            if c == c0:
                continue
            e = prow[c]
            if e:
                rem = _divmod(e, piv, p)[1]
                prow[c] = rem
                if rem:
                    dirty = True
        if dirty:
            continue
        for r in range(k):
            if r == r0:
                continue
            row = work[r]
            if any(e and _divmod(e, piv, p)[1] for e in row):
                work[r0] = [_add(a, b, p) for a, b in zip(prow, row)]
                dirty = True
                break
        if dirty:
            continue
        diag.append(piv)
        del work[r0]
        for row in work:
            del row[c0]
    return diag


def char_invariant_factors_raw(a: np.ndarray, p: int) -> list[list[int]]:
    """Ascending invariant factors of ``tI - a`` as raw coefficient lists."""
    return _snf_raw(_char_raw(np.asarray(a, dtype=np.int64), p), p)


def smith_normal_form(A: MatPoly) -> InvariantFactors:
    """Invariant factors of a square nonsingular matrix over F_p[t].

    Deterministic: the pivot is a minimal-degree entry, ties broken by the
    lowest (row, col).
    """
    if A.rows != A.cols:
        raise ShapeError(f"Smith normal form needs a square matrix, got {A.rows}x{A.cols}")
    diag = _snf_raw(A.raw(), A.p)
    return InvariantFactors(tuple(Poly._raw(g, A.p) for g in reversed(diag)))


def char_invariant_factors(A: MatFp) -> InvariantFactors:
    """Invariant factors of ``tI - A``."""
    if not A.is_square() or A.rows == 0:
        raise ShapeError(f"characteristic matrix needs a nonempty square matrix, got {A.shape}")
    diag = char_invariant_factors_raw(A.as_int(), A.p)
    return InvariantFactors(tuple(Poly._raw(g, A.p) for g in reversed(diag)))


def _type_from_factors(factors: Sequence[Poly], p: int) -> ModuleType:
    top = factors[0] if factors else Poly.one(p)
    if top.degree < 1:
        return ModuleType({}, p)
    entries = {}
    for f, _ in factor(top):
        fc = list(f.coeffs)
        entries[f] = Partition(_val(list(g.coeffs), fc, p) for g in factors)
    return ModuleType(entries, p)


def cokernel_type(A: MatPoly) -> ModuleType:
    """Type of ``Cok(A)`` at every f: the partition of ``val_f(g_i)``."""
    return _type_from_factors(smith_normal_form(A).factors, A.p)


def char_type(A: MatFp) -> ModuleType:
    """Type of ``Cok(tI - A)``, i.e. the full rational canonical data of A."""
    return _type_from_factors(char_invariant_factors(A).factors, A.p)


def _check_target(A: MatFp, f: Poly) -> None:
    if not A.is_square():
        raise ShapeError(f"type of a non-square {A.shape} matrix")
    if f.p != A.p:
        raise AmbientMismatchError(f"polynomial over F_{f.p}, matrix over F_{A.p}")


def partition_at(factors_raw: Sequence[list[int]], f: Poly, p: int) -> Partition:
    fc = list(f.coeffs)
    return Partition.from_multiset(_val(g, fc, p) for g in factors_raw if len(g) >= len(fc))


def type_at(A: MatFp, f: IrreduciblePoly) -> Partition:
    """``lambda^(f)(A)``: the type of ``Cok(tI - A)`` at ``f``."""
    _check_target(A, f)
    if A.rows == 0:
        return Partition()
    return partition_at(char_invariant_factors_raw(A.as_int(), A.p), f, A.p)


def type_at_rank_oracle(A: MatFp, f: IrreduciblePoly) -> Partition:
    """SNF-free cross-check: conjugate parts from the rank drops of ``f(A)^k``."""
    _check_target(A, f)
    p, n = A.p, A.rows
    d = len(f.coeffs) - 1
    fa = mat_poly_eval(f, A).as_int()
    power = np.eye(n, dtype=np.int64)
    prev = n
    conj = []
    while prev > 0:
        power = power @ fa % p
        cur = int(rank_batch(power[None], p)[0])
        drop = prev - cur
        if drop == 0:
            break
        if drop % d:
            raise ConsistencyError(f"rank drop {drop} not divisible by deg f = {d}")
        conj.append(drop // d)
        prev = cur
    return Partition(conj).conjugate()


def parse_poly_matrix(text: str, p: int | None = None) -> MatPoly:
    """Header ``p rows cols``, then rows of quoted coefficient lists, e.g. ``"1,1" "1"``."""
    import shlex

    from .errors import DomainError

    lines = [ln for ln in (s.strip() for s in text.splitlines()) if ln and not ln.startswith("#")]
    if not lines:
        raise DomainError("empty matrix text")
    try:
        hp, rows, cols = (int(x) for x in lines[0].split())
    except ValueError:
        raise DomainError("malformed header; expected 'p rows cols'") from None
    if p is not None and p != hp:
        raise AmbientMismatchError(f"--p {p} disagrees with matrix header p={hp}")
    body = [shlex.split(ln) for ln in lines[1:]]
    if len(body) != rows or any(len(r) != cols for r in body):
        raise ShapeError(f"matrix body does not match header {rows}x{cols}")
    return MatPoly([[parse_poly(e, hp) for e in r] for r in body], hp)
