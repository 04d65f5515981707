"""Concrete finite F_p[t]-modules and exact hom / sur / aut counting.

A module is always an F_p vector space ``F_p^d`` with ``t`` acting by a
d x d matrix; abstract :class:`ModuleType` values are derived from it.
Vectors are rows throughout, so ``t . v`` is ``v @ T.T``.

``Cok(tI - A)`` is the module ``(F_p^n, A)``, hence a homomorphism to G is
a tuple ``(g_1, ..., g_n)`` in ``G^n`` with ``T_G g_j = sum_i a_ij g_i``.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .canonical import rcf_of_type
from .errors import AmbientMismatchError, ResourceGuardError, ShapeError
from .fp import Poly, check_prime
from .matrix import MatFp, mat_poly_eval, nullspace, pack_gf2, rank_batch, rank_gf2_rows, row_space
from .moduletype import ModuleType
from .snf import char_type, type_at_rank_oracle

SUBMODULE_BOUND_EXP = 6  # submodules() refuses |G| > p^6 by default
AUT_BOUND = 2**12
AUT_ENUM_LIMIT = 2**20
ENUM_THRESHOLD = 2**16
EXACT_BOUND = 10**8


class FiniteModule:
    """``F_p^d`` with ``t`` acting by ``t_action``."""

    __slots__ = ("t_action",)

    def __init__(self, t_action: MatFp):
        if not t_action.is_square():
            raise ShapeError(f"t-action must be square, got {t_action.shape}")
        object.__setattr__(self, "t_action", t_action)

    def __setattr__(self, name, value):
        raise AttributeError("FiniteModule is immutable")

    def __reduce__(self):
        return (FiniteModule, (self.t_action,))

    @classmethod
    def zero(cls, p: int) -> "FiniteModule":
        return cls(MatFp.zeros(0, 0, p))

    @property
    def p(self) -> int:
        return self.t_action.p

    @property
    def dim(self) -> int:
        return self.t_action.rows

    def order(self) -> int:
        return self.p**self.dim

    def __eq__(self, other):
        return isinstance(other, FiniteModule) and self.t_action == other.t_action

    def __hash__(self):
        return hash(self.t_action)

    def __repr__(self):
        return f"FiniteModule(dim={self.dim}, p={self.p})"


def realize(tau: ModuleType) -> FiniteModule:
    """Block-diagonal companion realisation of a module type."""
    return FiniteModule(rcf_of_type(tau))


def type_of(M: FiniteModule) -> ModuleType:
    if M.dim == 0:
        return ModuleType({}, M.p)
    return char_type(M.t_action)


def _same_prime(a: int, b: int) -> int:
    if a != b:
        raise AmbientMismatchError(f"modules over F_{a} and F_{b}")
    return a


# ---------------------------------------------------------------------------
# hom spaces


def hom_system(t_source: np.ndarray, t_target: np.ndarray) -> np.ndarray:
    """Matrix of ``X -> T_G X - X T_M`` on column-major ``vec(X)``."""
    dm, dg = t_source.shape[0], t_target.shape[0]
    return np.kron(np.eye(dm, dtype=np.int64), t_target) - np.kron(t_source.T, np.eye(dg, dtype=np.int64))


def hom_basis(M: FiniteModule, G: FiniteModule) -> np.ndarray:
    """Basis of Hom(M, G) as rows of column-major ``vec(X)``, X of shape (d_G, d_M)."""
    p = _same_prime(M.p, G.p)
    if M.dim == 0 or G.dim == 0:
        return np.zeros((0, M.dim * G.dim), dtype=np.int64)
    return nullspace(hom_system(M.t_action.as_int(), G.t_action.as_int()) % p, p)


def hom_count(M: FiniteModule, G: FiniteModule) -> int:
    """``|Hom_{F_p[t]}(M, G)|``."""
    return G.p ** hom_basis(M, G).shape[0]


def hom_dims_batch(a_stack: np.ndarray, t_target: np.ndarray, p: int) -> np.ndarray:
    """``dim Hom((F_p^n, A_b), (F_p^h, T))`` for every matrix ``A_b`` of a stack."""
    A = np.asarray(a_stack, dtype=np.int64)
    B, n, _ = A.shape
    h = t_target.shape[0]
    if h == 0:
        return np.zeros(B, dtype=np.int64)
    eye_h = np.eye(h, dtype=np.int64)
    L = -np.einsum("bij,ac->bjaic", A, eye_h).reshape(B, n * h, n * h)
    L += np.kron(np.eye(n, dtype=np.int64), t_target)[None]
    return n * h - rank_batch(L % p, p)


# ---------------------------------------------------------------------------
# submodule lattice


@dataclass(frozen=True)
class Submodule:
    """t-invariant subspace spanned by the RREF rows of ``basis``."""

    basis: np.ndarray
    maximal: bool = False

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def key(self) -> bytes:
        return self.basis.astype(np.int64).tobytes() + bytes([self.dim])

    def restricted_action(self, T: np.ndarray, p: int) -> np.ndarray:
        """Matrix of t on this subspace in the RREF basis."""
        if self.dim == 0:
            return np.zeros((0, 0), dtype=np.int64)
        piv = [int(np.nonzero(row)[0][0]) for row in self.basis]
        images = self.basis @ T.T % p  # row k = t . basis_k
        return images[:, piv].T % p


def _span_closure(vectors: np.ndarray, T: np.ndarray, p: int) -> np.ndarray:
    basis = row_space(vectors, p)
    while True:
        grown = row_space(np.vstack([basis, basis @ T.T % p]), p) if basis.size else basis
        if grown.shape[0] == basis.shape[0]:
            return basis
        basis = grown


def _contains(big: np.ndarray, small: np.ndarray, p: int) -> bool:
    if small.shape[0] == 0:
        return True
    if small.shape[0] > big.shape[0]:
        return False
    return row_space(np.vstack([big, small]), p).shape[0] == big.shape[0]


def submodules(G: FiniteModule, bound: int | None = None) -> list[Submodule]:
    """All t-invariant subspaces of G, smallest first, maximal ones flagged."""
    p, d = G.p, G.dim
    bound = p**SUBMODULE_BOUND_EXP if bound is None else bound
    if G.order() > bound:
        raise ResourceGuardError(f"|G| = {G.order()} exceeds the submodule bound {bound}")
    T = G.t_action.as_int()
    zero = Submodule(np.zeros((0, d), dtype=np.int64))
    if d == 0:
        return [zero]
    vectors = np.array(list(itertools.product(range(p), repeat=d)), dtype=np.int64)[1:]
    cyclic: dict[bytes, np.ndarray] = {}
    for v in vectors:
        c = _span_closure(v[None], T, p)
        cyclic.setdefault(Submodule(c).key(), c)
    found: dict[bytes, np.ndarray] = {zero.key(): zero.basis}
    frontier = [zero.basis]
    while frontier:
        nxt = []
        for S in frontier:
            for C in cyclic.values():
                if _contains(S, C, p):
                    continue
                U = row_space(np.vstack([S, C]), p)
                k = Submodule(U).key()
                if k not in found:
                    found[k] = U
                    nxt.append(U)
        frontier = nxt
    subs = sorted(found.values(), key=lambda b: (b.shape[0], b.tobytes()))
    proper = [b for b in subs if b.shape[0] < d]
    out = []
    for b in subs:
        is_max = b.shape[0] < d and not any(
            c.shape[0] > b.shape[0] and _contains(c, b, p) for c in proper
        )
        out.append(Submodule(b, is_max))
    return out


@dataclass(frozen=True)
class MobiusTerm:
    mu: int
    submodule: Submodule
    action: np.ndarray  # t restricted to the submodule


def mobius_terms(G: FiniteModule, bound: int | None = None) -> list[MobiusTerm]:
    """Submodules H with ``mu(H, G) != 0`` and their Moebius values.

    Only H above the radical (intersection of maximal submodules) can have
    nonzero ``mu(H, G)``, so the recursion runs on that interval.
    """
    p = G.p
    T = G.t_action.as_int()
    subs = submodules(G, bound)
    top = subs[-1]
    maximal = [s for s in subs if s.maximal]
    if not maximal:
        return [MobiusTerm(1, top, top.restricted_action(T, p))]
    rad = maximal[0].basis
    for s in maximal[1:]:
        rad = _intersect(rad, s.basis, p)
    interval = [s for s in subs if _contains(s.basis, rad, p)]
    interval.sort(key=lambda s: -s.dim)
    mu: list[int] = []
    for i, h in enumerate(interval):
        if i == 0:
            mu.append(1)
            continue
        mu.append(-sum(mu[j] for j in range(i) if interval[j].dim > h.dim and _contains(interval[j].basis, h.basis, p)))
    return [MobiusTerm(m, h, h.restricted_action(T, p)) for m, h in zip(mu, interval) if m]


def _intersect(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((0, a.shape[1]), dtype=np.int64)
    # x a = y b  <=>  (x, y) in the left kernel of [a; -b]
    ker = nullspace(np.vstack([a, -b]).T % p, p)
    if ker.shape[0] == 0:
        return np.zeros((0, a.shape[1]), dtype=np.int64)
    return row_space(ker[:, : a.shape[0]] @ a % p, p)


# ---------------------------------------------------------------------------
# surjections


def _check_matrix_module(A: MatFp, G: FiniteModule) -> int:
    if not A.is_square():
        raise ShapeError(f"expected a square matrix, got {A.shape}")
    return _same_prime(A.p, G.p)


def sur_count_from_matrix(
    A: MatFp,
    G: FiniteModule,
    strategy: str = "auto",
    enum_threshold: int = ENUM_THRESHOLD,
    submodule_bound: int | None = None,
) -> int:
    """``#Sur_{F_p[t]}(Cok(tI - A), G)``.

    Solves ``T_G g_j = sum_i a_ij g_i`` for the hom space, then counts
    generating solutions either by enumerating the solution space
    (``p^k <= enum_threshold``) or by Moebius inversion over submodules of G.
    """
    p = _check_matrix_module(A, G)
    if G.dim == 0:
        return 1
    n, d = A.rows, G.dim
    a = A.as_int()
    T = G.t_action.as_int()
    basis = nullspace(hom_system(a, T) % p, p)
    k = basis.shape[0]
    if strategy == "auto":
        strategy = "enumerate" if p**k <= enum_threshold else "mobius"
    if strategy == "enumerate":
        if p**k > max(enum_threshold, ENUM_THRESHOLD):
            raise ResourceGuardError(f"hom space of size {p}^{k} too large to enumerate")
        if k == 0:
            return 0
        coeffs = np.array(list(itertools.product(range(p), repeat=k)), dtype=np.int64)
        sols = (coeffs @ basis % p).reshape(-1, n, d)
        krylov = [sols]
        for _ in range(d - 1):
            krylov.append(krylov[-1] @ T.T % p)
        return int(np.count_nonzero(rank_batch(np.concatenate(krylov, axis=1), p) == d))
    if strategy == "mobius":
        terms = mobius_terms(G, submodule_bound)
        return int(sur_counts_batch(a[None], G, terms)[0])
    raise ValueError(f"unknown strategy {strategy!r}")


def sur_counts_batch(a_stack: np.ndarray, G: FiniteModule, terms: Sequence[MobiusTerm] | None = None) -> np.ndarray:
    """Vectorised ``#Sur(Cok(tI - A_b), G)`` via ``sum_H mu(H, G) |Hom(Cok, H)|``."""
    p = G.p
    A = np.asarray(a_stack, dtype=np.int64)
    if G.dim == 0:
        return np.ones(A.shape[0], dtype=np.int64)
    if terms is None:
        terms = mobius_terms(G)
    n = A.shape[1]
    big = n * G.dim * math.log2(p) > 62
    total = np.zeros(A.shape[0], dtype=object if big else np.int64)
    for term in terms:
        dims = hom_dims_batch(A, term.action, p)
        if big:
            total = total + term.mu * np.array([p ** int(x) for x in dims], dtype=object)
        else:
            total += term.mu * np.power(p, dims, dtype=np.int64)
    return total


# ---------------------------------------------------------------------------
# automorphisms


def aut_count_bruteforce(G: FiniteModule, bound: int = AUT_BOUND, enum_limit: int = AUT_ENUM_LIMIT) -> int:
    """Count invertible endomorphisms by enumerating ``End(G)``."""
    if G.order() > bound:
        raise ResourceGuardError(f"|G| = {G.order()} exceeds the automorphism bound {bound}")
    p, d = G.p, G.dim
    if d == 0:
        return 1
    basis = hom_basis(G, G)
    k = basis.shape[0]
    if p**k > enum_limit:
        raise ResourceGuardError(f"End(G) has {p}^{k} elements, above the enumeration limit {enum_limit}")
    count = 0
    total = p**k
    if p == 2 and d <= 64:
        return _aut_count_gf2(basis, d, k)
    chunk = max(1, 2**18 // max(1, d))
    powers = (p ** np.arange(k, dtype=np.int64))[None, :]
    fbasis = basis.astype(np.float64)  # BLAS matmul; sums stay far below 2^53
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        digits = (idx[:, None] // powers) % p
        X = (digits.astype(np.float64) @ fbasis).astype(np.int64) % p
        X = X.reshape(-1, d, d)  # column-major vec -> X^T, same rank
        count += int(np.count_nonzero(rank_batch(X, p) == d))
    return count


def _aut_count_gf2(basis: np.ndarray, d: int, k: int) -> int:
    # endomorphisms as XOR combinations of packed basis matrices
    packed = pack_gf2(basis.reshape(k, d, d))
    count = 0
    chunk = 2**18
    zero = np.uint64(0)
    for start in range(0, 2**k, chunk):
        idx = np.arange(start, min(2**k, start + chunk), dtype=np.int64)
        R = np.zeros((len(idx), d), dtype=np.uint64)
        for i in range(k):
            R ^= np.where(((idx >> i) & 1).astype(bool)[:, None], packed[i][None, :], zero)
        count += int(np.count_nonzero(rank_gf2_rows(R) == d))
    return count


def _matpow(a: np.ndarray, e: int, p: int) -> np.ndarray:
    out = np.eye(a.shape[0], dtype=np.int64)
    for _ in range(e):
        out = out @ a % p
    return out


def aut_count_generators(G: FiniteModule) -> int:
    """Count automorphisms as generator tuples, using only ranks of ``f(T)^k``.

    For each f-primary part with conjugate data read from rank drops, an
    automorphism is a choice of images ``g_i in ker f(T)^{lambda_i}`` whose
    classes in ``G/fG`` are independent; choosing from the smallest kernel
    upwards gives ``prod_i (|K_i| - |K_i cap fG| q^(s-i))``.
    """
    p, d = G.p, G.dim
    if d == 0:
        return 1
    T = G.t_action
    total = 1
    for f in type_of(G):
        deg = len(f.coeffs) - 1
        q = p**deg
        # f-primary component and t restricted to it
        fT = mat_poly_eval(f, T).as_int()
        prim = nullspace(_matpow(fT, d, p), p)  # rows span ker f(T)^d
        sub = Submodule(row_space(prim, p))
        Tf = sub.restricted_action(T.as_int(), p)
        Mf = MatFp(Tf, p)
        lam = type_at_rank_oracle(Mf, f)
        fTf = mat_poly_eval(f, Mf).as_int()
        image = row_space(fTf.T, p)  # column space of f(T_f) as rows
        s = len(lam)
        for i, part in enumerate(lam, start=1):
            ker = nullspace(_matpow(fTf, part, p), p)
            dk = ker.shape[0]
            dint = _intersect(row_space(ker, p), image, p).shape[0]
            total *= p**dk - p**dint * q ** (s - i)
    return total


def _end_dim(f: Poly, lam) -> int:
    return (len(f.coeffs) - 1) * sum(min(a, b) for a in lam for b in lam)


def aut_count_oracle(
    tau: ModuleType, enum_limit: int = AUT_ENUM_LIMIT, cache: dict | None = None
) -> tuple[int, str]:
    """Formula-free ``#Aut`` of a type, as ``(count, method)``.

    ``Aut(G)`` is the product of the automorphism groups of its primary
    parts, and a degree-one part at ``t - c`` has the same commutant as the
    part at ``t``, so each distinct ``(f, lambda)`` is enumerated once.  Parts
    whose endomorphism ring exceeds ``enum_limit`` fall back to
    :func:`aut_count_generators`; ``method`` is ``"enumerate"``,
    ``"generators"`` or ``"mixed"``.
    """
    cache = {} if cache is None else cache
    p = tau.p
    total, used = 1, set()
    for f, lam in tau.items():
        if len(f.coeffs) == 2:
            f = Poly._raw([0, 1], p)
        key = (f.coeffs, lam.parts, p)
        if key not in cache:
            G = realize(ModuleType({f: lam}, p))
            if p ** _end_dim(f, lam) <= enum_limit:
                cache[key] = (aut_count_bruteforce(G, bound=G.order(), enum_limit=enum_limit), "enumerate")
            else:
                cache[key] = (aut_count_generators(G), "generators")
        count, how = cache[key]
        total *= count
        used.add(how)
    method = "enumerate" if used <= {"enumerate"} else ("generators" if used == {"generators"} else "mixed")
    return total, method


# ---------------------------------------------------------------------------
# exact moments


def _exact_chunk(args) -> dict[int, int]:
    start, stop, n, p, support, G_action, terms_data = args
    s = len(support)
    idx = np.arange(start, stop, dtype=np.int64)
    N = n * n
    digits = (idx[:, None] // (np.int64(s) ** np.arange(N, dtype=np.int64))[None, :]) % s
    mats = np.asarray(support, dtype=np.int64)[digits].reshape(-1, n, n)
    G = FiniteModule(MatFp(G_action, p))
    terms = [MobiusTerm(m, Submodule(b), a) for m, b, a in terms_data]
    surs = sur_counts_batch(mats, G, terms)
    base = N + 1
    comp = np.zeros(len(idx), dtype=np.int64)
    for a in range(s):
        comp += np.count_nonzero(digits == a, axis=1) * base**a
    order = np.argsort(comp, kind="stable")
    comp, surs = comp[order], surs[order]
    keys, first = np.unique(comp, return_index=True)
    sums = np.add.reduceat(surs, first) if len(surs) else surs
    return {int(k): int(v) for k, v in zip(keys, sums)}


def exact_moment(
    n: int,
    dist,
    G: FiniteModule,
    bound: int = EXACT_BOUND,
    workers: int = 1,
    chunk: int = 2**15,
) -> Fraction:
    """``E[#Sur(Cok(tI - A_n), G)]`` by exhaustive weighted enumeration.

    ``dist`` is an :class:`rcflab.sampler.EntryDist` (i.i.d. entries).  Sums
    of surjection counts are grouped by how often each support value occurs,
    then weighted in exact rational arithmetic.
    """
    p = _same_prime(dist.p, G.p)
    support = [a for a in range(p) if dist.pmf[a] > 0]
    s = len(support)
    total = s ** (n * n)
    if total > bound:
        raise ResourceGuardError(
            f"exhaustive moment needs {total} matrix evaluations (bound {bound}); use the sampled estimator"
        )
    terms = mobius_terms(G) if G.dim else []
    terms_data = [(t.mu, t.submodule.basis, t.action) for t in terms]
    jobs = [
        (lo, min(total, lo + chunk), n, p, support, G.t_action.as_int(), terms_data)
        for lo in range(0, total, chunk)
    ]
    acc: dict[int, int] = {}
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_exact_chunk, jobs))
    else:
        parts = [_exact_chunk(j) for j in jobs]
    for part in parts:
        for k, v in part.items():
            acc[k] = acc.get(k, 0) + v
    probs = [Fraction(dist.pmf[a]) for a in support]
    base = n * n + 1
    result = Fraction(0)
    for key, ssum in acc.items():
        w = Fraction(1)
        for a in range(s):
            w *= probs[a] ** ((key // base**a) % base)
        result += ssum * w
    return result


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("RCFLAB_WORKERS", "1")))
    except ValueError:
        return 1
