"""Companion matrices, rational canonical form and similarity."""
from __future__ import annotations

import numpy as np

from .errors import AmbientMismatchError, DomainError, ShapeError
from .fp import Poly
from .matrix import MatFp, block_diag
from .moduletype import ModuleType
from .snf import char_invariant_factors, char_type


def companion(f: Poly) -> MatFp:
    """Superdiagonal ones, last row ``(-a_0, ..., -a_{r-1})``."""
    if not f.is_monic() or f.degree < 1:
        raise DomainError(f"companion matrix needs a monic nonconstant polynomial, got {f}")
    r = len(f.coeffs) - 1
    c = np.zeros((r, r), dtype=np.int64)
    c[np.arange(r - 1), np.arange(1, r)] = 1
    c[r - 1] = [-a for a in f.coeffs[:-1]]
    return MatFp(c, f.p)


def rcf_of_type(tau: ModuleType) -> MatFp:
    """Block diagonal of ``companion(f^part)``, f canonical, parts largest first."""
    blocks = [companion(f ** part) for f, lam in tau.items() for part in lam]
    return block_diag(blocks, tau.p)


def rcf(A: MatFp) -> tuple[MatFp, ModuleType]:
    """The rational canonical form of A together with its module type."""
    if not A.is_square():
        raise ShapeError(f"rational canonical form of a non-square {A.shape} matrix")
    tau = char_type(A)
    return rcf_of_type(tau), tau


def is_similar(A: MatFp, B: MatFp) -> bool:
    """True iff ``tI - A`` and ``tI - B`` have equal invariant factors."""
    if A.p != B.p:
        raise AmbientMismatchError(f"matrices over F_{A.p} and F_{B.p}")
    if not (A.is_square() and B.is_square()) or A.shape != B.shape:
        raise ShapeError(f"similarity needs equal square shapes, got {A.shape} and {B.shape}")
    return char_invariant_factors(A).factors == char_invariant_factors(B).factors
