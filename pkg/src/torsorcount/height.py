"""Projective points of P^4(K), their Weil height and a canonical key."""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Sequence

from .qfield import DomainError, Element, FieldCtx, Idl


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


class ProjPoint:
    """A point (x0 : ... : x4) of P^4(K) with exact coordinates.

    Coordinates may be non-integral; they are cleared to a common
    denominator once, at construction.
    """

    __slots__ = ("K", "coords", "_ints", "_content", "_height")

    def __init__(self, K: FieldCtx, coords: Sequence):
        els = tuple(Element.coerce(K, x) for x in coords)
        if len(els) != 5:
            raise DomainError("a point of P^4 needs five coordinates")
        if all(e.is_zero() for e in els):
            raise DomainError("all coordinates are zero")
        D = 1
        for e in els:
            D = _lcm(D, e.den)
        self.K = K
        self.coords = els
        self._ints = tuple((e.a * (D // e.den), e.b * (D // e.den)) for e in els)
        self._content = None
        self._height = None

    @classmethod
    def from_pairs(cls, K: FieldCtx, pairs: Sequence[tuple[int, int]]) -> "ProjPoint":
        return cls(K, [Element(K, a, b) for a, b in pairs])

    @property
    def integral_coords(self) -> tuple[tuple[int, int], ...]:
        return self._ints

    def content(self) -> Idl:
        if self._content is None:
            self._content = Idl.from_pairs(self.K, self._ints)
        return self._content

    def height(self) -> Fraction:
        if self._height is None:
            m = max(self.K.norm(v) for v in self._ints)
            self._height = Fraction(m, self.content().norm())
        return self._height

    def key(self) -> tuple:
        return canonical_key(self)

    def __eq__(self, other) -> bool:
        return isinstance(other, ProjPoint) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return "(" + " : ".join(map(repr, self.coords)) + ")"


def content_ideal(p: ProjPoint) -> Idl:
    """The ideal generated by the (denominator-cleared) coordinates."""
    return p.content()


def weil_height(p: ProjPoint) -> Fraction:
    """max_i N(x_i) / N(x_0 O_K + ... + x_4 O_K), exact."""
    return p.height()


def key_from_pairs(K: FieldCtx, v: Sequence[tuple[int, int]]) -> tuple:
    """Canonical key of an integral coordinate vector, without building a point."""
    for f, pf in enumerate(v):
        if pf != (0, 0):
            break
    else:
        raise DomainError("all coordinates are zero")
    nf = K.norm(pf)
    cf = K.conj(pf)
    out = []
    for i, x in enumerate(v):
        if i <= f:
            continue
        if x == (0, 0):
            out.append((0, 0, 1))
            continue
        a, b = K.mul(x, cf)
        g = gcd(gcd(a, b), nf)
        out.append((a // g, b // g, nf // g))
    return (f, *out)


def canonical_key(p: ProjPoint) -> tuple:
    """Equal for two points iff they are proportional over K.

    The first nonzero coordinate is scaled to 1 and the rest are stored as
    reduced fractions (a, b, den).
    """
    return key_from_pairs(p.K, p.integral_coords)


def proportional(p: ProjPoint, q: ProjPoint) -> bool:
    """Direct cross-multiplication test x_i y_j == x_j y_i."""
    K = p.K
    u, v = p.integral_coords, q.integral_coords
    for i in range(5):
        for j in range(i + 1, 5):
            if K.mul(u[i], v[j]) != K.mul(u[j], v[i]):
                return False
    return True
