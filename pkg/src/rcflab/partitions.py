"""Integer partitions and the statistics used by the measure formulas."""
from __future__ import annotations

from functools import total_ordering
from typing import Iterable, Iterator

from .errors import DomainError


@total_ordering
class Partition:
    """Weakly decreasing tuple of positive parts; ``Partition()`` is the zero partition.

    Ordered by size, then reverse-lexicographically, so ``(2) < (1, 1)``.
    """

    __slots__ = ("parts",)

    def __init__(self, parts: Iterable[int] = ()):
        ps = tuple(int(x) for x in parts)
        if any(x < 0 for x in ps):
            raise DomainError(f"negative part in {ps}")
        ps = tuple(x for x in ps if x)
        if any(a < b for a, b in zip(ps, ps[1:])):
            raise DomainError(f"parts must be weakly decreasing: {ps}")
        object.__setattr__(self, "parts", ps)

    def __setattr__(self, name, value):
        raise AttributeError("Partition is immutable")

    def __reduce__(self):
        return (Partition, (self.parts,))

    @classmethod
    def from_multiset(cls, parts: Iterable[int]) -> "Partition":
        return cls(sorted((x for x in parts if x), reverse=True))

    def size(self) -> int:
        return sum(self.parts)

    def weighted_index(self) -> int:
        """n(lambda) = sum (i-1) * lambda_i."""
        return sum(i * x for i, x in enumerate(self.parts))

    def multiplicity(self, k: int) -> int:
        if k < 1:
            raise DomainError("multiplicity is defined for k >= 1")
        return self.parts.count(k)

    def multiplicities(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for x in self.parts:
            out[x] = out.get(x, 0) + 1
        return out

    def conjugate(self) -> "Partition":
        if not self.parts:
            return self
        return Partition(sum(1 for x in self.parts if x > j) for j in range(self.parts[0]))

    def length(self) -> int:
        return len(self.parts)

    def _key(self):
        return (self.size(), tuple(-x for x in self.parts))

    def __lt__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self._key() < other._key()

    def __eq__(self, other):
        if isinstance(other, Partition):
            return self.parts == other.parts
        if isinstance(other, tuple):
            return self.parts == Partition(other).parts
        return NotImplemented

    def __hash__(self):
        return hash(self.parts)

    def __iter__(self) -> Iterator[int]:
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)

    def __bool__(self):
        return bool(self.parts)

    def __getitem__(self, i):
        return self.parts[i]

    def __str__(self):
        return format_partition(self)

    def __repr__(self):
        return f"Partition({self.parts})"


def size(lam: Partition) -> int:
    return lam.size()


def weighted_index(lam: Partition) -> int:
    return lam.weighted_index()


def multiplicity(lam: Partition, k: int) -> int:
    return lam.multiplicity(k)


def conjugate(lam: Partition) -> Partition:
    return lam.conjugate()


def partitions_of(n: int, max_part: int | None = None) -> Iterator[Partition]:
    """Partitions of exactly ``n`` in reverse-lexicographic order."""
    if max_part is None:
        max_part = n

    def rec(rest: int, cap: int) -> Iterator[tuple[int, ...]]:
        if rest == 0:
            yield ()
            return
        for first in range(min(rest, cap), 0, -1):
            for tail in rec(rest - first, first):
                yield (first,) + tail

    for parts in rec(n, max_part):
        yield Partition(parts)


def enumerate_partitions(max_size: int) -> list[Partition]:
    """All partitions with ``|lambda| <= max_size``, by size then reverse-lex."""
    if max_size < 0:
        raise DomainError("max_size must be nonnegative")
    return [lam for n in range(max_size + 1) for lam in partitions_of(n)]


def format_partition(lam: Partition) -> str:
    return "+".join(str(x) for x in lam.parts) or "0"


def parse_partition(text: str) -> Partition:
    s = text.strip()
    if s in ("", "0", "()", "empty"):
        return Partition()
    try:
        return Partition.from_multiset(int(x) for x in s.replace(",", "+").split("+"))
    except ValueError:
        raise DomainError(f"cannot parse partition {text!r}") from None
