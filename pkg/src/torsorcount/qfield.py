"""Exact arithmetic in imaginary quadratic fields K = Q(sqrt(d)).

Elements of O_K are stored on the integral basis (1, w) with
w = sqrt(d) when d != 1 (mod 4) and w = (1 + sqrt(d))/2 otherwise, so that
w^2 = t*w + n for small integers t, n.  Ideals are Z-lattices kept in
Hermite normal form ``(a, b, c)``, meaning ``aZ + (b + c*w)Z`` with
``c | a``, ``c | b`` and ``0 <= b < a``.

The hot loops of the counters work directly on integer pairs ``(x, y)``
through the module-level helpers; :class:`Element`, :class:`Idl` and
:class:`FracIdl` are the user-facing immutable wrappers.
"""

from __future__ import annotations

from fractions import Fraction
from functools import cached_property
from math import gcd, isqrt
from typing import Iterable, Iterator, NamedTuple, Sequence

MAX_ABS_DISC = 1000


class DomainError(ValueError):
    """Raised for arguments outside an operation's domain."""


def is_squarefree(m: int) -> bool:
    m = abs(m)
    if m == 0:
        return False
    p = 2
    while p * p <= m:
        if m % (p * p) == 0:
            return False
        p += 1
    return True


def egcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, s, u) with s*a + u*b = g = gcd(a, b) >= 0."""
    s0, s1, u0, u1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        s0, s1 = s1, s0 - q * s1
        u0, u1 = u1, u0 - q * u1
    if a < 0:
        return -a, -s0, -u0
    return a, s0, u0


def iroot(x: int, k: int) -> int:
    """Largest integer r >= 0 with r**k <= x (x >= 0)."""
    if x < 0:
        raise DomainError("iroot of a negative number")
    if x < 2 or k == 1:
        return x
    if k == 2:
        return isqrt(x)
    r = int(round(x ** (1.0 / k))) if x < 1 << 1000 else 1 << (x.bit_length() // k + 1)
    while r ** k > x:
        r -= 1
    while (r + 1) ** k <= x:
        r += 1
    return r


def kronecker(D: int, p: int) -> int:
    """Kronecker symbol (D/p) for a prime p."""
    if p == 2:
        if D % 2 == 0:
            return 0
        return 1 if D % 8 in (1, 7) else -1
    r = D % p
    if r == 0:
        return 0
    return 1 if pow(r, (p - 1) // 2, p) == 1 else -1


# --- raw HNF helpers on Z-lattices inside Z + Zw ---------------------------

def hnf(vecs: Iterable[tuple[int, int]]) -> tuple[int, int, int] | None:
    """HNF (a, b, c) of the Z-span of ``vecs``; None if the rank is below 2."""
    a = 0
    px = py = 0
    for x, y in vecs:
        if y == 0:
            a = gcd(a, x)
        elif py == 0:
            px, py = x, y
        else:
            g, s, u = egcd(py, y)
            # [[s, u], [-y/g, py/g]] is unimodular
            qy, qp = y // g, py // g
            a = gcd(a, qp * x - qy * px)
            px, py = s * px + u * x, g
    if py < 0:
        px, py = -px, -py
    if a == 0 or py == 0:
        return None
    return a, px % a, py


class FieldCtx:
    """An imaginary quadratic field Q(sqrt(d)) with d < 0 squarefree."""

    def __init__(self, d: int):
        d = int(d)
        if d >= 0 or not is_squarefree(d):
            raise DomainError(f"d={d} is not a negative squarefree integer")
        self.d = d
        if d % 4 == 1:
            self.disc = d
            self.t, self.n = 1, (d - 1) // 4
        else:
            self.disc = 4 * d
            self.t, self.n = 0, d
        if abs(self.disc) > MAX_ABS_DISC:
            raise DomainError(f"|disc| = {abs(self.disc)} exceeds {MAX_ABS_DISC}")
        self.omega_count = {-1: 4, -3: 6}.get(d, 2)

    def __repr__(self) -> str:
        return f"FieldCtx(d={self.d})"

    def __eq__(self, other) -> bool:
        return isinstance(other, FieldCtx) and other.d == self.d

    def __hash__(self) -> int:
        return hash(("FieldCtx", self.d))

    def __reduce__(self):
        return (FieldCtx, (self.d,))

    # raw arithmetic on integral pairs
    def mul(self, x: tuple[int, int], y: tuple[int, int]) -> tuple[int, int]:
        a, b = x
        c, e = y
        be = b * e
        return a * c + self.n * be, a * e + b * c + self.t * be

    def norm(self, x: tuple[int, int]) -> int:
        a, b = x
        return a * a + self.t * a * b - self.n * b * b

    def conj(self, x: tuple[int, int]) -> tuple[int, int]:
        a, b = x
        return a + self.t * b, -b

    def complex(self, x: tuple[int, int]) -> complex:
        a, b = x
        if self.t:
            return complex(a + b / 2, b * (-self.d) ** 0.5 / 2)
        return complex(a, b * (-self.d) ** 0.5)

    @cached_property
    def units(self) -> tuple[tuple[int, int], ...]:
        """All torsion units, starting with 1 and then a generator's powers."""
        gen = None
        cands = [v for v in disk_points(self, (1, 0, 1), 1, 1) if v != (0, 0)]
        for u in cands:
            p, k = u, 1
            while p != (1, 0):
                p, k = self.mul(p, u), k + 1
            if k == self.omega_count:
                gen = u
                break
        out = [(1, 0)]
        while len(out) < self.omega_count:
            out.append(self.mul(out[-1], gen))
        assert sorted(out) == sorted(cands)
        return tuple(out)

    @cached_property
    def class_reps(self) -> tuple["Idl", ...]:
        return tuple(class_reps(self))

    @property
    def class_number(self) -> int:
        return len(self.class_reps)

    def elem(self, a: int, b: int = 0, den: int = 1) -> "Element":
        return Element(self, a, b, den)

    @property
    def unit_ideal(self) -> "Idl":
        return Idl(self, (1, 0, 1))


# --- elements --------------------------------------------------------------

class Element:
    """The field element (a + b*w)/den, kept reduced with den > 0."""

    __slots__ = ("K", "a", "b", "den")

    def __init__(self, K: FieldCtx, a: int, b: int = 0, den: int = 1):
        if den == 0:
            raise ZeroDivisionError("zero denominator")
        if den < 0:
            a, b, den = -a, -b, -den
        g = gcd(gcd(a, b), den)
        if g > 1:
            a, b, den = a // g, b // g, den // g
        self.K, self.a, self.b, self.den = K, a, b, den

    @classmethod
    def coerce(cls, K: FieldCtx, x) -> "Element":
        if isinstance(x, Element):
            return x
        if isinstance(x, Fraction):
            return cls(K, x.numerator, 0, x.denominator)
        if isinstance(x, tuple):
            return cls(K, *x)
        return cls(K, int(x))

    @property
    def pair(self) -> tuple[int, int]:
        return self.a, self.b

    def is_integral(self) -> bool:
        return self.den == 1

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def __add__(self, other):
        o = Element.coerce(self.K, other)
        return Element(self.K, self.a * o.den + o.a * self.den,
                       self.b * o.den + o.b * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return Element(self.K, -self.a, -self.b, self.den)

    def __sub__(self, other):
        return self + (-Element.coerce(self.K, other))

    def __rsub__(self, other):
        return Element.coerce(self.K, other) - self

    def __mul__(self, other):
        o = Element.coerce(self.K, other)
        a, b = self.K.mul((self.a, self.b), (o.a, o.b))
        return Element(self.K, a, b, self.den * o.den)

    __rmul__ = __mul__

    def conj(self) -> "Element":
        a, b = self.K.conj((self.a, self.b))
        return Element(self.K, a, b, self.den)

    def inverse(self) -> "Element":
        nn = self.K.norm((self.a, self.b))
        if nn == 0:
            raise ZeroDivisionError("inverse of zero")
        a, b = self.K.conj((self.a, self.b))
        return Element(self.K, a * self.den, b * self.den, nn)

    def __truediv__(self, other):
        return self * Element.coerce(self.K, other).inverse()

    def __rtruediv__(self, other):
        return Element.coerce(self.K, other) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        r = Element(self.K, 1)
        for _ in range(k):
            r = r * self
        return r

    def norm(self) -> Fraction:
        return Fraction(self.K.norm((self.a, self.b)), self.den * self.den)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Element.coerce(self.K, other)
        if not isinstance(other, Element):
            return NotImplemented
        return (self.a, self.b, self.den) == (other.a, other.b, other.den) and self.K == other.K

    def __hash__(self) -> int:
        return hash((self.a, self.b, self.den))

    def key(self) -> tuple[int, int, int]:
        return self.a, self.b, self.den

    def __complex__(self) -> complex:
        return self.K.complex((self.a, self.b)) / self.den

    def __repr__(self) -> str:
        s = f"{self.a}{self.b:+d}w"
        return s if self.den == 1 else f"({s})/{self.den}"


def elem_norm(x: Element) -> Fraction:
    """Norm of x, equal to its squared complex modulus."""
    return x.norm()


# --- ideals ----------------------------------------------------------------

class Idl:
    """An integral ideal of O_K in HNF; ``hnf is None`` encodes the zero ideal."""

    __slots__ = ("K", "hnf")

    def __init__(self, K: FieldCtx, hnf_triple: tuple[int, int, int] | None):
        self.K = K
        self.hnf = hnf_triple

    @classmethod
    def from_pairs(cls, K: FieldCtx, gens: Iterable[tuple[int, int]]) -> "Idl":
        vecs = []
        for g in gens:
            vecs.append(g)
            vecs.append(K.mul(g, (0, 1)))
        return cls(K, hnf(vecs))

    def is_zero(self) -> bool:
        return self.hnf is None

    def norm(self) -> int:
        if self.hnf is None:
            return 0
        a, _, c = self.hnf
        return a * c

    def basis(self) -> tuple[tuple[int, int], tuple[int, int]]:
        a, b, c = self.hnf
        return (a, 0), (b, c)

    def contains(self, x: tuple[int, int]) -> bool:
        if self.hnf is None:
            return x == (0, 0)
        a, b, c = self.hnf
        X, Y = x
        if Y % c:
            return False
        return (X - (Y // c) * b) % a == 0

    def __mul__(self, other: "Idl") -> "Idl":
        if self.hnf is None or other.hnf is None:
            return Idl(self.K, None)
        m = self.K.mul
        return Idl(self.K, hnf(m(u, v) for u in self.basis() for v in other.basis()))

    def __add__(self, other: "Idl") -> "Idl":
        if self.hnf is None:
            return other
        if other.hnf is None:
            return self
        return Idl(self.K, hnf(self.basis() + other.basis()))

    def conj(self) -> "Idl":
        if self.hnf is None:
            return self
        return Idl(self.K, hnf(self.K.conj(v) for v in self.basis()))

    def scale(self, x: tuple[int, int]) -> "Idl":
        """The ideal x * self for an integral element x."""
        if self.hnf is None or x == (0, 0):
            return Idl(self.K, None)
        return Idl(self.K, hnf(self.K.mul(x, v) for v in self.basis()))

    def content(self) -> int:
        """Largest integer k with self contained in k*O_K."""
        a, b, c = self.hnf
        return gcd(gcd(a, b), c)

    def divide_int(self, k: int) -> "Idl":
        a, b, c = self.hnf
        assert a % k == 0 and b % k == 0 and c % k == 0
        return Idl(self.K, (a // k, b // k, c // k))

    def __pow__(self, e: int) -> "Idl":
        r = self.K.unit_ideal
        for _ in range(e):
            r = r * self
        return r

    def is_unit(self) -> bool:
        return self.hnf == (1, 0, 1)

    def __eq__(self, other) -> bool:
        return isinstance(other, Idl) and self.hnf == other.hnf and self.K == other.K

    def __hash__(self) -> int:
        return hash(self.hnf)

    def __lt__(self, other: "Idl") -> bool:
        return (self.norm(), self.hnf) < (other.norm(), other.hnf)

    def __repr__(self) -> str:
        return f"Idl{self.hnf}" if self.hnf else "Idl(0)"


def ideal_from_generators(K: FieldCtx, gens: Sequence) -> Idl:
    """HNF of the O_K-module generated by integral elements ``gens``."""
    pairs = []
    for g in gens:
        e = Element.coerce(K, g)
        if not e.is_integral():
            raise DomainError("generators must be integral; use frac_ideal_from_generators")
        pairs.append(e.pair)
    return Idl.from_pairs(K, pairs)


class FracIdl:
    """The fractional ideal num/den with num integral, den > 0 minimal."""

    __slots__ = ("num", "den")

    def __init__(self, num: Idl, den: int = 1):
        if num.is_zero():
            raise DomainError("zero fractional ideal")
        g = gcd(num.content(), den)
        if g > 1:
            num, den = num.divide_int(g), den // g
        self.num, self.den = num, den

    @property
    def K(self) -> FieldCtx:
        return self.num.K

    @classmethod
    def from_generators(cls, K: FieldCtx, gens: Sequence) -> "FracIdl":
        els = [Element.coerce(K, g) for g in gens]
        D = 1
        for e in els:
            D = D * e.den // gcd(D, e.den)
        pairs = [(e.a * (D // e.den), e.b * (D // e.den)) for e in els]
        return cls(Idl.from_pairs(K, pairs), D)

    def norm(self) -> Fraction:
        return Fraction(self.num.norm(), self.den * self.den)

    def __mul__(self, other: "FracIdl") -> "FracIdl":
        return FracIdl(self.num * other.num, self.den * other.den)

    def __add__(self, other: "FracIdl") -> "FracIdl":
        g = gcd(self.den, other.den)
        D = self.den // g * other.den
        a = self.num.scale((D // self.den, 0))
        b = other.num.scale((D // other.den, 0))
        return FracIdl(a + b, D)

    def inverse(self) -> "FracIdl":
        n = self.num.norm()
        # num^-1 = conj(num)/N(num)
        return FracIdl(self.num.conj().scale((self.den, 0)), n)

    def __pow__(self, e: int) -> "FracIdl":
        base = self if e >= 0 else self.inverse()
        r = FracIdl(self.K.unit_ideal)
        for _ in range(abs(e)):
            r = r * base
        return r

    def contains(self, x) -> bool:
        e = Element.coerce(self.K, x)
        # e in num/den  <=>  den*e in num
        if (self.den * e.a) % e.den or (self.den * e.b) % e.den:
            return False
        return self.num.contains((self.den * e.a // e.den, self.den * e.b // e.den))

    def is_integral(self) -> bool:
        return self.den == 1

    def key(self):
        return self.num.hnf, self.den

    def __eq__(self, other) -> bool:
        return isinstance(other, FracIdl) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"FracIdl({self.num.hnf}/{self.den})"

    def min_element(self) -> Element:
        """A nonzero element of minimal norm."""
        K = self.K
        x, y = shortest_vector(K, self.num.hnf)
        return Element(K, x, y, self.den)

    def min_norm(self) -> Fraction:
        return self.min_element().norm()

    def is_principal(self) -> bool:
        return self.min_norm() == self.norm()

    def generator(self) -> Element | None:
        mu = self.min_element()
        return mu if mu.norm() == self.norm() else None

    def ideal_class(self) -> int:
        """Index into ``K.class_reps`` of the class of this ideal."""
        for i, r in enumerate(self.K.class_reps):
            if (self * FracIdl(r).inverse()).is_principal():
                return i
        raise AssertionError("class representatives do not cover all classes")


def as_frac(I: Idl | FracIdl) -> FracIdl:
    return I if isinstance(I, FracIdl) else FracIdl(I)


def frac_ideal_ops(I: FracIdl, J: FracIdl) -> dict:
    """Bundle of the binary/unary fractional-ideal operations on I, J."""
    return {
        "product": I * J,
        "sum": I + J,
        "inverse_I": I.inverse(),
        "equal": I == J,
    }


# --- lattice enumeration ---------------------------------------------------

def _form(K: FieldCtx, hnf_triple):
    """Gram data of the norm form on the HNF basis: N(p*v1 + q*v2) = A p^2 + Bpq + C q^2."""
    a, b, c = hnf_triple
    A = K.norm((a, 0))
    C = K.norm((b, c))
    B = K.norm((a + b, c)) - A - C
    return A, B, C


def shortest_vector(K: FieldCtx, hnf_triple) -> tuple[int, int]:
    """A shortest nonzero vector of the lattice (integral coordinates)."""
    a, b, c = hnf_triple
    v1, v2 = (a, 0), (b, c)
    # Lagrange-Gauss reduction, exact over the integers
    n1, n2 = K.norm(v1), K.norm(v2)
    if n1 > n2:
        v1, v2, n1, n2 = v2, v1, n2, n1
    while True:
        ip2 = K.norm((v1[0] + v2[0], v1[1] + v2[1])) - n1 - n2  # 2<v1,v2>
        # round(<v1,v2>/n1) = round(ip2 / (2 n1))
        q = (2 * ip2 + 2 * n1) // (4 * n1)
        if q:
            v2 = (v2[0] - q * v1[0], v2[1] - q * v1[1])
            n2 = K.norm(v2)
        if n2 >= n1:
            return v1
        v1, v2, n1, n2 = v2, v1, n2, n1


def disk_points(K: FieldCtx, hnf_triple, X_num: int, X_den: int = 1) -> Iterator[tuple[int, int]]:
    """Integral lattice vectors v with N(v) <= X_num/X_den, in a fixed order."""
    if X_num < 0:
        return
    a, b, c = hnf_triple
    t = K.t
    absD = -K.disc
    # N(x + y w) = ((2x + t y)^2 + |D| y^2) / 4 with y = q c, x = p a + q b
    # condition: (2x + t y)^2 + |D| y^2 <= 4 X
    M4 = (4 * X_num) // X_den
    qmax = isqrt(M4 // (absD * c * c)) if M4 >= 0 else -1
    for q in range(-qmax, qmax + 1):
        y = q * c
        rem = M4 - absD * y * y
        if rem < 0:
            continue
        r = isqrt(rem)
        off = 2 * q * b + t * y
        # -r <= 2 p a + off <= r
        plo = -((r + off) // (2 * a))
        phi = (r - off) // (2 * a)
        for p in range(plo, phi + 1):
            yield p * a + q * b, y


def lattice_points_in_disk(L: Idl | FracIdl, X) -> list[Element]:
    """All v in L with norm(v) <= X (X rational), including 0."""
    F = as_frac(L)
    X = Fraction(X)
    K = F.K
    D = F.den
    bound = X * D * D
    if bound < 0:
        return []
    return [Element(K, x, y, D) for x, y in disk_points(K, F.num.hnf, bound.numerator, bound.denominator)]


# --- primes and class group ------------------------------------------------

class PrimeIdl(NamedTuple):
    ideal: Idl
    p: int
    norm: int
    kind: str  # "split" | "inert" | "ramified"


def primes_up_to(n: int) -> list[int]:
    if n < 2:
        return []
    import numpy as np

    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, isqrt(n) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    return [int(p) for p in np.flatnonzero(sieve)]


def _roots_mod_p(K: FieldCtx, p: int) -> list[int]:
    # roots of x^2 + t x - n, i.e. N(x + w) = 0 mod p
    if p < 50000:
        return [x for x in range(p) if (x * x + K.t * x - K.n) % p == 0]
    raise DomainError("prime too large for root search")


def prime_ideals_up_to(K: FieldCtx, P: int) -> list[PrimeIdl]:
    """All nonzero prime ideals of norm <= P, sorted by (norm, HNF)."""
    out = []
    for p in primes_up_to(P):
        k = kronecker(K.disc, p)
        if k == -1:
            if p * p <= P:
                out.append(PrimeIdl(Idl(K, (p, 0, p)), p, p * p, "inert"))
            continue
        roots = _roots_mod_p(K, p)
        kind = "split" if k == 1 else "ramified"
        assert len(roots) == (2 if k == 1 else 1), (p, roots)
        for r in roots:
            out.append(PrimeIdl(Idl(K, (p, r, 1)), p, p, kind))
    out.sort(key=lambda q: (q.norm, q.ideal.hnf))
    return out


def prime_norms_up_to(K: FieldCtx, P: int) -> list[int]:
    """Norms (with multiplicity) of prime ideals of norm <= P; no ideal data."""
    out = []
    for p in primes_up_to(P):
        k = kronecker(K.disc, p)
        if k == 1:
            out += [p, p]
        elif k == 0:
            out.append(p)
        elif p * p <= P:
            out.append(p * p)
    out.sort()
    return out


def reduced_forms(disc: int) -> list[tuple[int, int, int]]:
    """Reduced primitive positive definite forms (A, B, C) of discriminant disc."""
    out = []
    A = 1
    while 3 * A * A <= -disc:
        for B in range(-A + 1, A + 1):
            if (B - disc) % 2:
                continue
            num = B * B - disc
            if num % (4 * A):
                continue
            C = num // (4 * A)
            if C < A or (C == A and B < 0):
                continue
            if gcd(gcd(A, B), C) != 1:
                continue
            out.append((A, B, C))
        A += 1
    return out


def class_reps(K: FieldCtx) -> list[Idl]:
    """One reduced integral ideal per class: O_K first, then by (norm, HNF)."""
    reps = []
    for A, B, _ in reduced_forms(K.disc):
        # ideal A Z + ((-B + sqrt(disc))/2) Z
        if K.t:
            b = (-B - 1) // 2
        else:
            b = -B // 2
        reps.append(Idl(K, (A, b % A, 1)))
    reps.sort()
    assert reps[0].is_unit()
    return reps
