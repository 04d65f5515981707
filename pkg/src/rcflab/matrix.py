"""Dense matrices over F_p: rank, row reduction, evaluation g(A), charpoly.

Elimination is written once, vectorised over a leading batch axis
(:func:`rank_batch`); single-matrix calls go through the same code.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import AmbientMismatchError, DomainError, ShapeError
from .fp import Poly, check_prime


def _storage_dtype(p: int):
    return np.uint8 if p < 256 else np.int64


class MatFp:
    """Immutable rows x cols matrix over F_p (bytes for p < 256)."""

    __slots__ = ("p", "data")

    def __init__(self, entries, p: int):
        check_prime(p)
        arr = np.asarray(entries, dtype=np.int64)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, 0)
        if arr.ndim != 2:
            raise ShapeError(f"expected a 2-d matrix, got shape {arr.shape}")
        arr = (arr % p).astype(_storage_dtype(p))
        arr.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("MatFp is immutable")

    def __reduce__(self):
        return (MatFp, (self.data, self.p))

    @classmethod
    def identity(cls, n: int, p: int) -> "MatFp":
        return cls(np.eye(n, dtype=np.int64), p)

    @classmethod
    def zeros(cls, rows: int, cols: int, p: int) -> "MatFp":
        return cls(np.zeros((rows, cols), dtype=np.int64), p)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def is_square(self) -> bool:
        return self.rows == self.cols

    def as_int(self) -> np.ndarray:
        """Writable int64 copy of the entries."""
        return self.data.astype(np.int64)

    def tolist(self) -> list[list[int]]:
        return self.data.astype(np.int64).tolist()

    def transpose(self) -> "MatFp":
        return MatFp(self.data.T, self.p)

    T = property(transpose)

    def _other(self, other: "MatFp") -> "MatFp":
        if not isinstance(other, MatFp):
            raise TypeError(f"expected MatFp, got {type(other).__name__}")
        if other.p != self.p:
            raise AmbientMismatchError(f"matrices over F_{self.p} and F_{other.p}")
        return other

    def __matmul__(self, other: "MatFp") -> "MatFp":
        other = self._other(other)
        if self.cols != other.rows:
            raise ShapeError(f"cannot multiply {self.shape} by {other.shape}")
        return MatFp(self.as_int() @ other.as_int(), self.p)

    def __add__(self, other: "MatFp") -> "MatFp":
        other = self._other(other)
        if self.shape != other.shape:
            raise ShapeError(f"cannot add {self.shape} and {other.shape}")
        return MatFp(self.as_int() + other.as_int(), self.p)

    def __sub__(self, other: "MatFp") -> "MatFp":
        other = self._other(other)
        if self.shape != other.shape:
            raise ShapeError(f"cannot subtract {self.shape} and {other.shape}")
        return MatFp(self.as_int() - other.as_int(), self.p)

    def __mul__(self, c: int) -> "MatFp":
        return MatFp(self.as_int() * int(c), self.p)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, MatFp):
            return NotImplemented
        return self.p == other.p and self.shape == other.shape and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.p, self.shape, self.data.tobytes()))

    def __repr__(self):
        return f"MatFp({self.tolist()}, p={self.p})"


def block_diag(blocks: Sequence[MatFp], p: int) -> MatFp:
    n = sum(b.rows for b in blocks)
    out = np.zeros((n, n), dtype=np.int64)
    k = 0
    for b in blocks:
        out[k:k + b.rows, k:k + b.cols] = b.data
        k += b.rows
    return MatFp(out, p)


# ---------------------------------------------------------------------------
# elimination


def _inverse_table(p: int) -> np.ndarray:
    tbl = np.zeros(p, dtype=np.int64)
    for a in range(1, p):
        tbl[a] = pow(a, -1, p)
    return tbl


def rank_batch(stack: np.ndarray, p: int) -> np.ndarray:
    """Ranks over F_p of every matrix in a ``(B, m, n)`` stack."""
    M = np.asarray(stack)
    if M.ndim != 3:
        raise ShapeError(f"expected a (B, m, n) stack, got shape {M.shape}")
    B, m, n = M.shape
    rank = np.zeros(B, dtype=np.int64)
    if B == 0 or m == 0 or n == 0:
        return rank
    if p == 2 and n <= 64:
        return _rank_gf2_packed(M, rank)
    rows = np.arange(m)
    if p == 2:
        M = (M % 2).astype(bool)
    else:
        M = (M.astype(np.int64) % p).astype(np.int32)
        inv = _inverse_table(p).astype(np.int32)
    for c in range(n):
        col = M[:, :, c]
        cand = (col != 0) & (rows[None, :] >= rank[:, None])
        has = cand.any(axis=1)
        if not has.any():
            continue
        sel = np.nonzero(has)[0]
        r = rank[sel]
        piv = cand[sel].argmax(axis=1)
        swap = piv != r
        if swap.any():
            s, rs, ps = sel[swap], r[swap], piv[swap]
            tmp = M[s, rs].copy()
            M[s, rs] = M[s, ps]
            M[s, ps] = tmp
        sub = M[sel, :, c:]
        prow = sub[np.arange(len(sel)), r]
        below = rows[None, :] > r[:, None]
        if p == 2:
            fac = sub[:, :, 0] & below
            sub ^= fac[:, :, None] & prow[:, None, :]
        else:
            prow = prow * inv[prow[:, 0]][:, None] % p
            fac = sub[:, :, 0] * below
            sub = (sub - fac[:, :, None] * prow[:, None, :]) % p
            sub[np.arange(len(sel)), r] = prow
        M[sel, :, c:] = sub
        rank[sel] += 1
        if rank.min() >= m:
            break
    return rank


def pack_gf2(M: np.ndarray) -> np.ndarray:
    """``(..., m, n)`` bit matrices -> ``(..., m)`` uint64 row masks (n <= 64)."""
    n = M.shape[-1]
    weights = np.left_shift(np.uint64(1), np.arange(n, dtype=np.uint64))
    return ((M % 2).astype(np.uint64) * weights).sum(axis=-1, dtype=np.uint64)


def rank_gf2_rows(R: np.ndarray) -> np.ndarray:
    """Ranks of a ``(B, m)`` stack of packed GF(2) rows; ``R`` is overwritten."""
    # each row pivots on its own lowest set bit, so no swaps are needed
    # and the rank is the number of rows left nonzero
    m = R.shape[1]
    zero = np.uint64(0)
    for i in range(m - 1):
        row = R[:, i]
        low = row & (~row + np.uint64(1))
        tail = R[:, i + 1:]
        tail ^= np.where((tail & low[:, None]) != zero, row[:, None], zero)
    return np.count_nonzero(R, axis=1).astype(np.int64)


def _rank_gf2_packed(M: np.ndarray, rank: np.ndarray) -> np.ndarray:
    return rank + rank_gf2_rows(pack_gf2(M))


def rref(arr: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of a single matrix and its pivot columns."""
    A = np.array(arr, dtype=np.int64) % p
    m, n = A.shape
    pivots: list[int] = []
    r = 0
    for c in range(n):
        if r == m:
            break
        nz = np.nonzero(A[r:, c])[0]
        if nz.size == 0:
            continue
        i = r + nz[0]
        if i != r:
            A[[r, i]] = A[[i, r]]
        A[r] = A[r] * pow(int(A[r, c]), -1, p) % p
        f = A[:, c].copy()
        f[r] = 0
        A = (A - f[:, None] * A[r][None, :]) % p
        pivots.append(c)
        r += 1
    return A, pivots


def rank(A: MatFp) -> int:
    """Rank over F_p."""
    return int(rank_batch(A.data[None], A.p)[0])


def nullspace(arr: np.ndarray, p: int) -> np.ndarray:
    """Basis (as rows) of ``{x : arr @ x = 0}`` over F_p."""
    A = np.asarray(arr, dtype=np.int64)
    n = A.shape[1]
    R, piv = rref(A, p)
    free = [c for c in range(n) if c not in set(piv)]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for i, pc in enumerate(piv):
            basis[k, pc] = (-R[i, fc]) % p
    return basis


def row_space(arr: np.ndarray, p: int) -> np.ndarray:
    """Canonical basis (nonzero RREF rows) of the row space."""
    R, piv = rref(np.asarray(arr, dtype=np.int64), p)
    return R[: len(piv)]


def inverse(A: MatFp) -> MatFp:
    if not A.is_square():
        raise ShapeError("inverse of a non-square matrix")
    n = A.rows
    R, piv = rref(np.hstack([A.as_int(), np.eye(n, dtype=np.int64)]), A.p)
    if piv[:n] != list(range(n)):
        raise DomainError("matrix is singular over F_p")
    return MatFp(R[:, n:], A.p)


def random_invertible(n: int, p: int, rng: np.random.Generator) -> MatFp:
    while True:
        cand = rng.integers(0, p, size=(n, n))
        if rank_batch(cand[None], p)[0] == n:
            return MatFp(cand, p)


def mat_poly_eval(g: Poly, A: MatFp) -> MatFp:
    """``g(A)`` by Horner's rule."""
    if not A.is_square():
        raise ShapeError(f"g(A) needs a square matrix, got {A.shape}")
    if g.p != A.p:
        raise AmbientMismatchError(f"polynomial over F_{g.p}, matrix over F_{A.p}")
    p, n = A.p, A.rows
    a = A.as_int()
    acc = np.zeros((n, n), dtype=np.int64)
    eye = np.eye(n, dtype=np.int64)
    for c in reversed(g.coeffs):
        acc = (acc @ a + c * eye) % p
    return MatFp(acc, p)


def charpoly(A: MatFp) -> Poly:
    """``det(tI - A)`` as the product of the invariant factors of ``tI - A``."""
    if not A.is_square() or A.rows == 0:
        raise ShapeError(f"charpoly needs a nonempty square matrix, got {A.shape}")
    from .snf import char_invariant_factors_raw
    from .fp import _mul

    acc = [1]
    for g in char_invariant_factors_raw(A.as_int(), A.p):
        acc = _mul(acc, g, A.p)
    return Poly._raw(acc, A.p)


# ---------------------------------------------------------------------------
# text format: "p rows cols" header, then whitespace-separated rows


def parse_matrix(text: str, p: int | None = None) -> MatFp:
    lines = [ln for ln in (s.strip() for s in text.splitlines()) if ln and not ln.startswith("#")]
    if not lines:
        raise DomainError("empty matrix text")
    try:
        hp, rows, cols = (int(x) for x in lines[0].split())
        body = [[int(x) for x in ln.split()] for ln in lines[1:]]
    except ValueError:
        raise DomainError("malformed matrix text; expected 'p rows cols' then integer rows") from None
    if p is not None and p != hp:
        raise AmbientMismatchError(f"--p {p} disagrees with matrix header p={hp}")
    if len(body) != rows or any(len(r) != cols for r in body):
        raise ShapeError(f"matrix body does not match header {rows}x{cols}")
    return MatFp(np.array(body, dtype=np.int64).reshape(rows, cols), hp)


def format_matrix(A: MatFp) -> str:
    lines = [f"{A.p} {A.rows} {A.cols}"]
    lines += [" ".join(str(x) for x in row) for row in A.tolist()]
    return "\n".join(lines) + "\n"


def stack(mats: Iterable[MatFp]) -> np.ndarray:
    return np.stack([m.as_int() for m in mats])
