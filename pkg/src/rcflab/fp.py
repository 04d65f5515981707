"""Arithmetic in F_p and F_p[t], irreducibility testing and factorization.

Polynomials are dense, lowest degree first.  The private ``_``-prefixed
helpers work on plain ``list[int]`` coefficient vectors (trimmed, reduced
mod p); the hot loops in :mod:`rcflab.snf` call them directly to avoid
object churn.  :class:`Poly` is the immutable public wrapper.
"""
from __future__ import annotations

import math
import random
import re
from functools import lru_cache
from typing import Iterable, Sequence

from .errors import AmbientMismatchError, DomainError

NEG_INF = -math.inf


@lru_cache(maxsize=None)
def check_prime(p: int) -> int:
    """Return ``p`` if it is prime, else raise :class:`DomainError`."""
    if not isinstance(p, int) or isinstance(p, bool) or p < 2:
        raise DomainError(f"{p!r} is not a prime")
    d = 2
    while d * d <= p:
        if p % d == 0:
            raise DomainError(f"{p} is not a prime (divisible by {d})")
        d += 1
    return p


def prime_divisors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


# ---------------------------------------------------------------------------
# raw coefficient-list kernels


def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _add(a: list[int], b: list[int], p: int) -> list[int]:
    if len(a) < len(b):
        a, b = b, a
    out = a[:]
    for i, y in enumerate(b):
        out[i] = (out[i] + y) % p
    return _trim(out)


def _sub(a: list[int], b: list[int], p: int) -> list[int]:
    n = max(len(a), len(b))
    out = a + [0] * (n - len(a))
    for i, y in enumerate(b):
        out[i] = (out[i] - y) % p
    return _trim(out)


def _scale(a: list[int], c: int, p: int) -> list[int]:
    c %= p
    if c == 0:
        return []
    if c == 1:
        return a[:]
    return [x * c % p for x in a]


def _mul(a: list[int], b: list[int], p: int) -> list[int]:
    if not a or not b:
        return []
    if len(a) < len(b):
        a, b = b, a
    if len(b) == 1:
        return _scale(a, b[0], p)
    out = [0] * (len(a) + len(b) - 1)
    for j, y in enumerate(b):
        if y:
            for i, x in enumerate(a, j):
                out[i] += x * y
    return _trim([v % p for v in out])


def _submul(a: list[int], q: list[int], b: list[int], p: int) -> list[int]:
    """Return ``a - q*b``."""
    if not q or not b:
        return a[:]
    if len(q) == 1 and len(b) == 1:
        v = (a[0] if a else 0) - q[0] * b[0]
        out = a[:] if a else [0]
        out[0] = v % p
        return _trim(out)
    n = max(len(a), len(q) + len(b) - 1)
    out = a + [0] * (n - len(a))
    for j, y in enumerate(q):
        if y:
            for i, x in enumerate(b, j):
                out[i] -= x * y
    return _trim([v % p for v in out])


def _divmod(a: list[int], b: list[int], p: int) -> tuple[list[int], list[int]]:
    if not b:
        raise DomainError("polynomial division by zero")
    db = len(b) - 1
    if len(a) - 1 < db:
        return [], a[:]
    inv = pow(b[-1], -1, p)
    r = a[:]
    q = [0] * (len(a) - db)
    for k in range(len(a) - 1 - db, -1, -1):
        c = r[k + db] * inv % p
        q[k] = c
        if c:
            for i in range(db + 1):
                r[k + i] = (r[k + i] - c * b[i]) % p
    del r[db:]
    return _trim(q), _trim(r)


def _mod(a: list[int], b: list[int], p: int) -> list[int]:
    return _divmod(a, b, p)[1]


def _monic(a: list[int], p: int) -> list[int]:
    if not a or a[-1] == 1:
        return a[:]
    return _scale(a, pow(a[-1], -1, p), p)


def _gcd(a: list[int], b: list[int], p: int) -> list[int]:
    while b:
        a, b = b, _mod(a, b, p)
    return _monic(a, p)


def _mulmod(a: list[int], b: list[int], m: list[int], p: int) -> list[int]:
    return _mod(_mul(a, b, p), m, p)


def _powmod(base: list[int], e: int, m: list[int], p: int) -> list[int]:
    result = _mod([1], m, p)
    base = _mod(base, m, p)
    while e:
        if e & 1:
            result = _mulmod(result, base, m, p)
        e >>= 1
        if e:
            base = _mulmod(base, base, m, p)
    return result


def _derivative(a: list[int], p: int) -> list[int]:
    return _trim([(i * c) % p for i, c in enumerate(a)][1:])


# ---------------------------------------------------------------------------
# public polynomial type


class Poly:
    """Immutable polynomial over F_p, coefficients lowest degree first."""

    __slots__ = ("p", "coeffs")

    def __init__(self, coeffs: Iterable[int], p: int):
        check_prime(p)
        c = [int(x) % p for x in coeffs]
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "coeffs", tuple(_trim(c)))

    def __setattr__(self, name, value):
        raise AttributeError("Poly is immutable")

    def __reduce__(self):
        return (type(self)._raw, (list(self.coeffs), self.p))

    @classmethod
    def _raw(cls, coeffs: list[int], p: int) -> "Poly":
        obj = object.__new__(cls)
        object.__setattr__(obj, "p", p)
        object.__setattr__(obj, "coeffs", tuple(coeffs))
        return obj

    @classmethod
    def zero(cls, p: int) -> "Poly":
        return cls((), p)

    @classmethod
    def one(cls, p: int) -> "Poly":
        return cls((1,), p)

    @classmethod
    def t(cls, p: int) -> "Poly":
        return cls((0, 1), p)

    @property
    def degree(self) -> float | int:
        """Degree; the zero polynomial has degree ``-inf``."""
        return len(self.coeffs) - 1 if self.coeffs else NEG_INF

    @property
    def lead(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_monic(self) -> bool:
        return bool(self.coeffs) and self.coeffs[-1] == 1

    def sort_key(self) -> tuple:
        return (len(self.coeffs), self.coeffs)

    def _check(self, other) -> "Poly":
        if isinstance(other, int):
            return Poly((other,), self.p)
        if not isinstance(other, Poly):
            return NotImplemented
        if other.p != self.p:
            raise AmbientMismatchError(f"polynomials over F_{self.p} and F_{other.p}")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return Poly._raw(_add(list(self.coeffs), list(other.coeffs), self.p), self.p)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return Poly._raw(_sub(list(self.coeffs), list(other.coeffs), self.p), self.p)

    def __rsub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return other - self

    def __neg__(self):
        return Poly._raw(_scale(list(self.coeffs), -1, self.p), self.p)

    def __mul__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return Poly._raw(_mul(list(self.coeffs), list(other.coeffs), self.p), self.p)

    __rmul__ = __mul__

    def __divmod__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        q, r = _divmod(list(self.coeffs), list(other.coeffs), self.p)
        return Poly._raw(q, self.p), Poly._raw(r, self.p)

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def __pow__(self, e: int):
        if e < 0:
            raise DomainError("negative polynomial power")
        result, base = [1], list(self.coeffs)
        while e:
            if e & 1:
                result = _mul(result, base, self.p)
            e >>= 1
            if e:
                base = _mul(base, base, self.p)
        return Poly._raw(result, self.p)

    def __call__(self, x: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % self.p
        return acc

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.p == other.p and self.coeffs == other.coeffs
        if isinstance(other, int):
            return self.coeffs == Poly((other,), self.p).coeffs
        return NotImplemented

    def __hash__(self):
        return hash((self.p, self.coeffs))

    def __bool__(self):
        return bool(self.coeffs)

    def derivative(self) -> "Poly":
        return Poly._raw(_derivative(list(self.coeffs), self.p), self.p)

    def monic(self) -> "Poly":
        return make_monic(self)

    def __str__(self):
        return format_poly(self)

    def __repr__(self):
        return f"Poly({format_poly(self)!r}, p={self.p})"


class IrreduciblePoly(Poly):
    """A certified element of S: monic, nonconstant and irreducible."""

    __slots__ = ()

    def __init__(self, coeffs: Iterable[int] | Poly, p: int | None = None):
        if isinstance(coeffs, Poly):
            p = coeffs.p if p is None else p
            coeffs = coeffs.coeffs
        if p is None:
            raise DomainError("prime required")
        super().__init__(coeffs, p)
        if not self.is_monic() or self.degree < 1:
            raise DomainError(f"{format_poly(self)} is not monic nonconstant")
        if not is_irreducible(self):
            raise DomainError(f"{format_poly(self)} is reducible over F_{p}")

    @classmethod
    def _certified(cls, coeffs, p: int) -> "IrreduciblePoly":
        return cls._raw(list(coeffs), p)

    def __repr__(self):
        return f"IrreduciblePoly({format_poly(self)!r}, p={self.p})"


# ---------------------------------------------------------------------------
# poly_arith


def _same(a: Poly, b: Poly) -> int:
    if a.p != b.p:
        raise AmbientMismatchError(f"polynomials over F_{a.p} and F_{b.p}")
    return a.p


def divrem(a: Poly, b: Poly) -> tuple[Poly, Poly]:
    """Return ``(q, r)`` with ``a = q*b + r`` and ``deg r < deg b``."""
    _same(a, b)
    return divmod(a, b)


def gcd(a: Poly, b: Poly) -> Poly:
    """Monic gcd; ``gcd(0, 0) = 0``."""
    p = _same(a, b)
    return Poly._raw(_gcd(list(a.coeffs), list(b.coeffs), p), p)


def make_monic(a: Poly) -> Poly:
    return Poly._raw(_monic(list(a.coeffs), a.p), a.p)


# ---------------------------------------------------------------------------
# irreducibility and factorization


def is_irreducible(g: Poly) -> bool:
    """Rabin's test: ``t^(p^d) = t mod g`` and no proper subfield roots."""
    if g.is_zero():
        raise DomainError("irreducibility of the zero polynomial")
    d = len(g.coeffs) - 1
    if d < 1:
        return False
    if d == 1:
        return True
    p = g.p
    m = _monic(list(g.coeffs), p)
    t = [0, 1]
    if _powmod(t, p**d, m, p) != _mod(t, m, p):
        return False
    for q in prime_divisors(d):
        h = _sub(_powmod(t, p ** (d // q), m, p), t, p)
        if len(_gcd(m, h, p)) != 1:
            return False
    return True


def _pth_root(a: list[int], p: int) -> list[int]:
    # Frobenius is the identity on F_p, so only exponents shrink.
    return [a[i] for i in range(0, len(a), p)]


def squarefree_decomposition(g: Poly) -> list[tuple[Poly, int]]:
    """Pairs ``(h, e)`` with squarefree coprime ``h`` and ``prod h^e = g``."""
    if not g.is_monic():
        raise DomainError("squarefree decomposition needs a monic polynomial")
    p = g.p
    out: list[tuple[list[int], int]] = []

    def rec(f: list[int], mult: int) -> None:
        if len(f) <= 1:
            return
        df = _derivative(f, p)
        if not df:
            rec(_pth_root(f, p), mult * p)
            return
        c = _gcd(f, df, p)
        w = _divmod(f, c, p)[0]
        i = 1
        while len(w) > 1:
            y = _gcd(w, c, p)
            fac = _divmod(w, y, p)[0]
            if len(fac) > 1:
                out.append((fac, i * mult))
            i += 1
            w = y
            c = _divmod(c, y, p)[0]
        if len(c) > 1:
            rec(_pth_root(c, p), mult * p)

    rec(list(g.coeffs), 1)
    return [(Poly._raw(h, p), e) for h, e in out]


def _distinct_degree(f: list[int], p: int) -> list[tuple[list[int], int]]:
    out = []
    t = [0, 1]
    h = t
    i = 1
    while len(f) - 1 >= 2 * i:
        h = _powmod(h, p, f, p)
        g = _gcd(f, _sub(h, t, p), p)
        if len(g) > 1:
            out.append((g, i))
            f = _divmod(f, g, p)[0]
            h = _mod(h, f, p)
        i += 1
    if len(f) > 1:
        out.append((f, len(f) - 1))
    return out


class _SubSeeds:
    """Deterministic stream of sub-seeded generators for split attempts."""

    def __init__(self, seed: int):
        self.seed = seed
        self.attempt = 0

    def next(self) -> random.Random:
        self.attempt += 1
        return random.Random(f"{self.seed}:{self.attempt}")


def _equal_degree(f: list[int], d: int, p: int, seeds: _SubSeeds) -> list[list[int]]:
    n = len(f) - 1
    if n == d:
        return [f]
    while True:
        rng = seeds.next()
        a = _trim([rng.randrange(p) for _ in range(n)])
        if len(a) <= 1:
            continue
        if p == 2:
            # absolute trace F_{2^d} -> F_2
            b, acc = a, a
            for _ in range(d - 1):
                b = _mulmod(b, b, f, p)
                acc = _add(acc, b, p)
        else:
            acc = _sub(_powmod(a, (p**d - 1) // 2, f, p), [1], p)
        g = _gcd(f, acc, p)
        if 1 < len(g) < len(f):
            break
    return _equal_degree(g, d, p, seeds) + _equal_degree(_divmod(f, g, p)[0], d, p, seeds)


def factor(g: Poly, seed: int = 0) -> list[tuple[IrreduciblePoly, int]]:
    """Factor a monic nonconstant ``g`` into ``[(f_i, e_i)]`` in canonical order.

    Squarefree decomposition, distinct-degree splitting, then Cantor-Zassenhaus
    (trace map for p = 2).  ``seed`` drives the random splitting only; the
    result does not depend on it.
    """
    if not g.is_monic() or g.degree < 1:
        raise DomainError(f"factor needs a monic nonconstant polynomial, got {g}")
    p = g.p
    seeds = _SubSeeds(seed)
    mult: dict[tuple[int, ...], int] = {}
    for h, e in squarefree_decomposition(g):
        for block, d in _distinct_degree(list(h.coeffs), p):
            for f in _equal_degree(block, d, p, seeds):
                key = tuple(_monic(f, p))
                mult[key] = mult.get(key, 0) + e
    items = sorted(mult.items(), key=lambda kv: (len(kv[0]), kv[0]))
    return [(IrreduciblePoly._certified(k, p), e) for k, e in items]


def val_f(g: Poly, f: Poly) -> int:
    """Largest ``e`` with ``f^e | g``."""
    _same(g, f)
    if g.is_zero():
        raise DomainError("valuation of the zero polynomial is infinite")
    if f.degree < 1:
        raise DomainError("valuation needs a nonconstant polynomial")
    return _val(list(g.coeffs), list(f.coeffs), g.p)


def _val(g: list[int], f: list[int], p: int) -> int:
    e = 0
    while len(g) >= len(f):
        q, r = _divmod(g, f, p)
        if r:
            break
        g = q
        e += 1
    return e


def irreducibles(p: int, degree: int) -> list[IrreduciblePoly]:
    """All monic irreducibles of the given degree, canonical order."""
    check_prime(p)
    out = []
    for idx in range(p**degree):
        c, x = [], idx
        for _ in range(degree):
            c.append(x % p)
            x //= p
        poly = Poly._raw(c + [1], p)
        if is_irreducible(poly):
            out.append(IrreduciblePoly._certified(poly.coeffs, p))
    return out


# ---------------------------------------------------------------------------
# text forms


def format_poly(g: Poly) -> str:
    """Human form, highest degree first: ``t^2+t+1``, ``2t+3``, ``0``."""
    if not g.coeffs:
        return "0"
    terms = []
    for i in range(len(g.coeffs) - 1, -1, -1):
        c = g.coeffs[i]
        if not c:
            continue
        if i == 0:
            terms.append(str(c))
        else:
            mono = "t" if i == 1 else f"t^{i}"
            terms.append(mono if c == 1 else f"{c}{mono}")
    return "+".join(terms)


def format_coeffs(g: Poly) -> str:
    """Comma-separated coefficient list, lowest degree first (``0`` for zero)."""
    return ",".join(str(c) for c in g.coeffs) or "0"


_TERM = re.compile(r"^(\d*)\*?(t(?:\^(\d+))?)?$")


def parse_poly(text: str, p: int) -> Poly:
    """Parse ``"1,0,1"`` (coefficients, lowest first) or ``"t^2+1"``."""
    check_prime(p)
    s = text.strip().replace(" ", "")
    if not s:
        raise DomainError("empty polynomial")
    if "t" not in s:
        try:
            coeffs = [int(x) for x in s.split(",")]
        except ValueError:
            raise DomainError(f"cannot parse polynomial {text!r}") from None
        return Poly(coeffs, p)
    s = s.replace("-", "+-")
    coeffs: dict[int, int] = {}
    for term in filter(None, s.split("+")):
        sign = 1
        if term.startswith("-"):
            sign, term = -1, term[1:]
        m = _TERM.match(term)
        if not m or not (m.group(1) or m.group(2)):
            raise DomainError(f"cannot parse polynomial {text!r}")
        c = int(m.group(1)) if m.group(1) else 1
        e = 0 if not m.group(2) else int(m.group(3) or 1)
        coeffs[e] = coeffs.get(e, 0) + sign * c
    top = max(coeffs)
    return Poly([coeffs.get(i, 0) for i in range(top + 1)], p)


def parse_irreducible(text: str, p: int) -> IrreduciblePoly:
    return IrreduciblePoly(parse_poly(text, p))


def poly_product(polys: Sequence[Poly], p: int) -> Poly:
    acc = [1]
    for f in polys:
        acc = _mul(acc, list(f.coeffs), p)
    return Poly._raw(acc, p)
