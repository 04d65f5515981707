"""Isomorphism types of finite F_p[t]-modules: finite maps S -> partitions."""
from __future__ import annotations

from collections.abc import Mapping
from typing import Iterator

from .errors import AmbientMismatchError, DomainError
from .fp import IrreduciblePoly, Poly, check_prime, format_poly, parse_irreducible
from .partitions import Partition, format_partition, parse_partition


class ModuleType(Mapping):
    """Immutable map ``f -> lambda^(f)`` with zero partitions dropped.

    Iteration follows the canonical order on irreducibles (degree, then
    coefficients).  A ``Poly`` key is accepted on lookup if it equals a
    stored irreducible.
    """

    __slots__ = ("p", "_items")

    def __init__(self, entries: Mapping[Poly, Partition] | None = None, p: int | None = None):
        entries = dict(entries or {})
        if p is None:
            if not entries:
                raise DomainError("an empty ModuleType needs an explicit prime")
            p = next(iter(entries)).p
        check_prime(p)
        items = []
        for f, lam in entries.items():
            if f.p != p:
                raise AmbientMismatchError(f"key {f} is over F_{f.p}, expected F_{p}")
            if not isinstance(f, IrreduciblePoly):
                f = IrreduciblePoly(f)
            lam = lam if isinstance(lam, Partition) else Partition(lam)
            if lam:
                items.append((f, lam))
        items.sort(key=lambda kv: kv[0].sort_key())
        self.p = p
        self._items = tuple(items)

    def __getitem__(self, f):
        for g, lam in self._items:
            if g == f:
                return lam
        raise KeyError(f)

    def get(self, f, default=None):
        try:
            return self[f]
        except KeyError:
            return Partition() if default is None else default

    def __iter__(self) -> Iterator[IrreduciblePoly]:
        return (f for f, _ in self._items)

    def __len__(self):
        return len(self._items)

    def __eq__(self, other):
        if isinstance(other, ModuleType):
            return self.p == other.p and self._items == other._items
        return NotImplemented

    def __hash__(self):
        return hash((self.p, self._items))

    def dim(self) -> int:
        """Dimension over F_p: sum of deg f * |lambda^(f)|."""
        return sum((len(f.coeffs) - 1) * lam.size() for f, lam in self._items)

    def order(self) -> int:
        return self.p ** self.dim()

    def to_json(self) -> dict[str, str]:
        return {format_poly(f): format_partition(lam) for f, lam in self._items}

    def __str__(self):
        return format_module_type(self)

    def __repr__(self):
        return f"ModuleType({format_module_type(self)!r}, p={self.p})"


def format_module_type(tau: ModuleType) -> str:
    """``"t:2+1;t+1:1"``; the empty type is ``""``."""
    return ";".join(f"{format_poly(f)}:{format_partition(lam)}" for f, lam in tau.items())


def parse_module_type(text: str, p: int) -> ModuleType:
    entries: dict[Poly, Partition] = {}
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        if ":" not in chunk:
            raise DomainError(f"module type entry {chunk!r} lacks ':'")
        fs, ls = chunk.rsplit(":", 1)
        f = parse_irreducible(fs, p)
        if f in entries:
            raise DomainError(f"duplicate polynomial {format_poly(f)} in module type")
        entries[f] = parse_partition(ls)
    return ModuleType(entries, p)


def enumerate_module_types(p: int, max_dim: int) -> list[ModuleType]:
    """Every type with ``dim <= max_dim`` (so ``|G| <= p^max_dim``), smallest first."""
    from .fp import irreducibles
    from .partitions import partitions_of

    polys = [f for d in range(1, max_dim + 1) for f in irreducibles(p, d)]
    out: list[ModuleType] = []

    def rec(i: int, budget: int, acc: dict) -> None:
        if i == len(polys):
            out.append(ModuleType(acc, p))
            return
        f = polys[i]
        d = len(f.coeffs) - 1
        rec(i + 1, budget, acc)
        for size in range(1, budget // d + 1):
            for lam in partitions_of(size):
                acc[f] = lam
                rec(i + 1, budget - d * size, acc)
                del acc[f]

    rec(0, max_dim, {})
    out.sort(key=lambda tau: (tau.dim(), format_module_type(tau)))
    return out
