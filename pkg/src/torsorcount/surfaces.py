"""The quartic del Pezzo surfaces S0..S4 in P^4, their rational
parameterizations psi, and an oracle search for the lines on them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt
from typing import Sequence

import numpy as np

from .height import ProjPoint
from .qfield import DomainError, Element, FieldCtx

# quadric: tuple of (coeff, i, j) meaning coeff * x_i * x_j
Quadric = tuple[tuple[int, int, int], ...]
# polynomial in y0, y1, y2: tuple of (coeff, (e0, e1, e2))
Cubic = tuple[tuple[int, tuple[int, int, int]], ...]


@dataclass(frozen=True)
class SurfaceSpec:
    id: str
    quadrics: tuple[Quadric, Quadric]
    singularity: str
    psi: tuple[Cubic, ...] | None = None
    equation: str = field(default="", compare=False)

    def __repr__(self) -> str:
        return f"SurfaceSpec({self.id}, {self.singularity})"


def _q(*terms) -> Quadric:
    return tuple(terms)


def _c(*terms) -> Cubic:
    return tuple((c, tuple(e)) for c, e in terms)


SURFACES: dict[str, SurfaceSpec] = {
    "S0": SurfaceSpec(
        "S0",
        (_q((1, 0, 1), (-1, 2, 3)), _q((1, 0, 3), (1, 1, 3), (1, 2, 4))),
        "A3",
        equation="x0*x1 - x2*x3 = x0*x3 + x1*x3 + x2*x4 = 0",
    ),
    "S1": SurfaceSpec(
        "S1",
        (_q((1, 0, 3), (-1, 2, 4)), _q((1, 0, 1), (1, 1, 3), (1, 2, 2))),
        "A3+A1",
        psi=(
            _c((1, (2, 1, 0)), (1, (1, 1, 1))),   # y0 y1 (y0 + y2)
            _c((-1, (0, 3, 0)),),                 # -y1^3
            _c((1, (1, 2, 0)), (1, (0, 2, 1))),   # y1^2 (y0 + y2)
            _c((1, (1, 1, 1)), (1, (0, 1, 2))),   # y1 y2 (y0 + y2)
            _c((1, (2, 0, 1)), (1, (1, 0, 2))),   # y0 y2 (y0 + y2)
        ),
        equation="x0*x3 - x2*x4 = x0*x1 + x1*x3 + x2^2 = 0",
    ),
    "S2": SurfaceSpec(
        "S2",
        (_q((1, 0, 1), (-1, 2, 3)), _q((1, 0, 4), (1, 1, 2), (1, 3, 3))),
        "A4",
        psi=(
            _c((1, (3, 0, 0)),),
            _c((1, (1, 1, 1)),),
            _c((1, (2, 1, 0)),),
            _c((1, (2, 0, 1)),),
            _c((-1, (0, 2, 1)), (-1, (1, 0, 2))),  # -y2 (y1^2 + y0 y2)
        ),
        equation="x0*x1 - x2*x3 = x0*x4 + x1*x2 + x3^2 = 0",
    ),
    "S3": SurfaceSpec(
        "S3",
        (_q((1, 0, 3), (-1, 1, 4)), _q((1, 0, 1), (1, 1, 3), (1, 2, 2))),
        "D4",
        psi=(
            _c((1, (1, 2, 0)),),
            _c((1, (0, 3, 0)),),
            _c((1, (0, 2, 1)),),
            _c((-1, (1, 2, 0)), (-1, (0, 1, 2))),  # -y1 (y0 y1 + y2^2)
            _c((-1, (2, 1, 0)), (-1, (1, 0, 2))),  # -y0 (y0 y1 + y2^2)
        ),
        equation="x0*x3 - x1*x4 = x0*x1 + x1*x3 + x2^2 = 0",
    ),
    "S4": SurfaceSpec(
        "S4",
        (_q((1, 0, 1), (-1, 2, 2)), _q((1, 3, 3), (1, 0, 4), (1, 1, 2))),
        "D5",
        psi=(
            _c((1, (3, 0, 0)),),
            _c((1, (1, 2, 0)),),
            _c((1, (2, 1, 0)),),
            _c((1, (2, 0, 1)),),
            _c((-1, (1, 0, 2)), (-1, (0, 3, 0))),  # -(y0 y2^2 + y1^3)
        ),
        equation="x0*x1 - x2^2 = x3^2 + x0*x4 + x1*x2 = 0",
    ),
}

COUNTABLE = ("S1", "S2", "S3", "S4")


def get_surface(name: str) -> SurfaceSpec:
    key = name.upper()
    if key not in SURFACES:
        raise DomainError(f"unknown surface {name!r}")
    return SURFACES[key]


# --- evaluation ------------------------------------------------------------

def quadric_value(K: FieldCtx, Q: Quadric, v: Sequence[tuple[int, int]]) -> tuple[int, int]:
    X = Y = 0
    for c, i, j in Q:
        a, b = K.mul(v[i], v[j])
        X += c * a
        Y += c * b
    return X, Y


def on_surface_pairs(K: FieldCtx, S: SurfaceSpec, v: Sequence[tuple[int, int]]) -> bool:
    return all(quadric_value(K, Q, v) == (0, 0) for Q in S.quadrics)


def on_surface(S: SurfaceSpec, p: ProjPoint) -> bool:
    """True iff both defining quadrics vanish at p."""
    return on_surface_pairs(p.K, S, p.integral_coords)


def _eval_cubic(K: FieldCtx, F: Cubic, y: Sequence[Element]) -> Element:
    total = Element(K, 0)
    for c, e in F:
        term = Element(K, c)
        for yi, k in zip(y, e):
            for _ in range(k):
                term = term * yi
        total = total + term
    return total


def psi_eval(S: SurfaceSpec, K: FieldCtx, y: Sequence) -> ProjPoint | None:
    """Image of (y0 : y1 : y2) under psi; None on the base locus."""
    if S.psi is None:
        raise DomainError(f"{S.id} has no stored parameterization")
    ys = [Element.coerce(K, v) for v in y]
    if all(v.is_zero() for v in ys):
        raise DomainError("(0, 0, 0) is not a point of P^2")
    xs = [_eval_cubic(K, F, ys) for F in S.psi]
    if all(x.is_zero() for x in xs):
        return None
    return ProjPoint(K, xs)


# --- lines -----------------------------------------------------------------

@dataclass(frozen=True)
class Line:
    """A line in P^4 spanned by two integer points, cut out by three linear forms."""

    p: tuple[int, ...] = field(compare=False)
    q: tuple[int, ...] = field(compare=False)
    forms: tuple[tuple[int, ...], ...] = ()

    def contains_pairs(self, K: FieldCtx, v: Sequence[tuple[int, int]]) -> bool:
        for f in self.forms:
            X = sum(c * x[0] for c, x in zip(f, v))
            Y = sum(c * x[1] for c, x in zip(f, v))
            if X or Y:
                return False
        return True

    def contains(self, pt: ProjPoint) -> bool:
        return self.contains_pairs(pt.K, pt.integral_coords)

    def contains_int(self, v: Sequence[int]) -> bool:
        return all(sum(c * x for c, x in zip(f, v)) == 0 for f in self.forms)

    def describe(self) -> list[str]:
        names = [f"x{i}" for i in range(5)]
        out = []
        for f in self.forms:
            terms = []
            for c, nm in zip(f, names):
                if c == 0:
                    continue
                if c == 1:
                    terms.append(f"+{nm}")
                elif c == -1:
                    terms.append(f"-{nm}")
                else:
                    terms.append(f"{c:+d}*{nm}")
            out.append("".join(terms).lstrip("+") + " = 0")
        return out


def _rref(rows: list[list[Fraction]]) -> list[list[Fraction]]:
    m = [r[:] for r in rows]
    ncols = len(m[0])
    piv_row = 0
    for col in range(ncols):
        sel = next((r for r in range(piv_row, len(m)) if m[r][col] != 0), None)
        if sel is None:
            continue
        m[piv_row], m[sel] = m[sel], m[piv_row]
        pv = m[piv_row][col]
        m[piv_row] = [x / pv for x in m[piv_row]]
        for r in range(len(m)):
            if r != piv_row and m[r][col] != 0:
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[piv_row])]
        piv_row += 1
        if piv_row == len(m):
            break
    return [r for r in m if any(x != 0 for x in r)]


def _integral_row(row: Sequence[Fraction]) -> tuple[int, ...]:
    den = 1
    for x in row:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in row]
    g = 0
    for x in ints:
        g = gcd(g, x)
    ints = [x // g for x in ints]
    first = next(x for x in ints if x)
    if first < 0:
        ints = [-x for x in ints]
    return tuple(ints)


def _nullspace(span: list[list[Fraction]]) -> list[tuple[int, ...]]:
    """Integer basis (RREF-derived) of linear forms vanishing on the row span."""
    r = _rref(span)
    pivots = [next(j for j, x in enumerate(row) if x != 0) for row in r]
    free = [j for j in range(5) if j not in pivots]
    basis = []
    for fj in free:
        vec = [Fraction(0)] * 5
        vec[fj] = Fraction(1)
        for row, pj in zip(r, pivots):
            vec[pj] = -row[fj]
        basis.append(vec)
    return [_integral_row(v) for v in _rref(basis)]


def rational_points(S: SurfaceSpec, H0: int) -> list[tuple[int, ...]]:
    """Primitive integer points of S (up to sign) with max x_i^2 <= H0."""
    r = isqrt(H0)
    rng = np.arange(-r, r + 1, dtype=np.int64)
    grids = np.meshgrid(*([rng] * 5), indexing="ij")
    X = np.stack([g.ravel() for g in grids], axis=1)
    ok = np.ones(len(X), dtype=bool)
    for Q in S.quadrics:
        val = np.zeros(len(X), dtype=np.int64)
        for c, i, j in Q:
            val += c * X[:, i] * X[:, j]
        ok &= val == 0
    out = []
    for row in X[ok]:
        v = [int(x) for x in row]
        g = 0
        for x in v:
            g = gcd(g, x)
        if g != 1:
            continue
        first = next(x for x in v if x)
        if first < 0:
            continue
        out.append(tuple(v))
    return out


def _int_on_surface(S: SurfaceSpec, v: Sequence[int]) -> bool:
    return all(sum(c * v[i] * v[j] for c, i, j in Q) == 0 for Q in S.quadrics)


@lru_cache(maxsize=None)
def find_lines(S: SurfaceSpec, H0: int = 20) -> tuple[Line, ...]:
    """All lines through two rational points of S of height <= H0.

    A candidate line through P and Q is kept when P + Q also lies on S:
    a quadric vanishing at three points of a line vanishes on all of it.
    """
    pts = rational_points(S, H0)
    found: dict[tuple, Line] = {}
    for P, Q in itertools.combinations(pts, 2):
        if any(ln.contains_int(P) and ln.contains_int(Q) for ln in found.values()):
            continue
        mid = tuple(a + b for a, b in zip(P, Q))
        if not _int_on_surface(S, mid):
            continue
        span = [[Fraction(x) for x in P], [Fraction(x) for x in Q]]
        key = tuple(tuple(r) for r in _rref(span))
        if key not in found:
            found[key] = Line(P, Q, tuple(_nullspace(span)))
    return tuple(sorted(found.values(), key=lambda ln: ln.forms))


def line_is_contained(S: SurfaceSpec, ln: Line) -> bool:
    """Exact three-point containment check for a line."""
    pts = [ln.p, ln.q, tuple(a + b for a, b in zip(ln.p, ln.q))]
    return all(_int_on_surface(S, v) for v in pts)


def in_U_pairs(K: FieldCtx, S: SurfaceSpec, v: Sequence[tuple[int, int]], lines=None) -> bool:
    lines = find_lines(S) if lines is None else lines
    return not any(ln.contains_pairs(K, v) for ln in lines)


def in_U(S: SurfaceSpec, p: ProjPoint, lines=None) -> bool:
    """True iff p (which must lie on S) lies on none of the lines of S."""
    if not on_surface(S, p):
        raise DomainError("point does not lie on the surface")
    return in_U_pairs(p.K, S, p.integral_coords, lines)
