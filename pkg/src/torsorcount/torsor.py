"""Universal torsor data for S1..S4 and exact enumeration of M_C(B).

Variables eta_1..eta_9 are indexed 0..8 throughout the code.  An element
eta_j of the fractional ideal O_j(C) = N_j / D_j is carried as an integral
pair v_j in N_j, with eta_j = v_j / D_j.

The unit group mu_K^6 acts on M_C(B) by eta_j -> prod_k u_k^{e_jk} eta_j
where e_jk are the exponents of O_j.  Because the exponent rows of
eta_1..eta_6 form an invertible matrix mod |mu_K| and those six variables
are never zero, the action is free and every orbit has exactly one element
whose first six coordinates are normalised associates.  ``enumerate_M``
walks either the literal set or these orbit representatives.
"""

from __future__ import annotations

import bisect
import itertools
import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt, prod
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .height import ProjPoint, key_from_pairs
from .qfield import DomainError, FieldCtx, FracIdl, Idl, disk_points, hnf, iroot
from .surfaces import SurfaceSpec, get_surface, on_surface_pairs

log = logging.getLogger(__name__)

NVAR = 9


class ConsistencyError(RuntimeError):
    """An internal identity failed (points to a bug in the data tables)."""


class Monomial(NamedTuple):
    sign: int
    exps: tuple[int, ...]  # length 9


class HeightCondition(NamedTuple):
    """|sum(terms) / den| <= factor * B."""

    name: str
    terms: tuple[Monomial, ...]
    den: tuple[int, ...]
    factor: int = 1
    derived: bool = False

    @property
    def is_monomial(self) -> bool:
        return len(self.terms) == 1 and not any(self.den)


def _m(sign: int, *exps: int) -> Monomial:
    e = tuple(exps) + (0,) * (NVAR - len(exps))
    return Monomial(sign, e)


def _e(*exps: int) -> tuple[int, ...]:
    return tuple(exps) + (0,) * (NVAR - len(exps))


@dataclass(frozen=True)
class TorsorSpec:
    surface: str
    oj_exponents: tuple[tuple[int, ...], ...]
    height_conditions: tuple[HeightCondition, ...]
    torsor_equation: tuple[Monomial, Monomial, Monomial]
    zero_allowed: frozenset[int]
    nonzero_product: frozenset[int]
    adjacency: frozenset[frozenset[int]]
    psi_reference: tuple[Monomial, ...]
    bounding: dict = field(compare=False)
    u_exponents: tuple[int, ...] = (3, -1, -1, -1, -1, -1)

    @property
    def mandatory(self) -> tuple[int, ...]:
        return tuple(j for j in range(NVAR) if j not in self.zero_allowed)

    def nonadjacent_pairs(self) -> list[tuple[int, int]]:
        return [(j, k) for j, k in itertools.combinations(range(NVAR), 2)
                if frozenset((j, k)) not in self.adjacency]

    @property
    def eta9_term(self) -> int:
        return next(i for i, t in enumerate(self.torsor_equation) if t.exps[8])

    def monomial_conditions(self) -> list[HeightCondition]:
        return [c for c in self.height_conditions if c.is_monomial]

    @property
    def psi_monomials(self) -> tuple[Monomial, ...]:
        return calibrated_psi(self)


def _edges(*pairs: tuple[int, int]) -> frozenset[frozenset[int]]:
    return frozenset(frozenset((a - 1, b - 1)) for a, b in pairs)


def _set(*idx: int) -> frozenset[int]:
    return frozenset(i - 1 for i in idx)


_SPECS = {
    "S1": dict(
        oj_exponents=(
            (0, 0, 0, 0, 0, 1), (0, 0, 0, 0, 1, 0), (1, -1, 0, 0, -1, -1),
            (0, 1, -1, 0, 0, 0), (0, 0, 0, 1, 0, 0), (0, 0, 1, -1, 0, 0),
            (1, -1, -1, -1, 0, 0), (1, 0, 0, 0, -1, 0), (1, 0, 0, 0, 0, -1),
        ),
        height_conditions=(
            HeightCondition("h1", (_m(1, 0, 1, 1, 1, 1, 1, 1, 1),), _e()),
            HeightCondition("h2", (_m(1, 2, 2, 3, 2, 0, 1),), _e()),
            HeightCondition("h3", (_m(1, 1, 1, 2, 2, 2, 2, 1),), _e()),
            HeightCondition("h4", (_m(1, 0, 0, 1, 2, 4, 3, 2), _m(1, 0, 1, 1, 1, 1, 1, 1, 1)), _e()),
            HeightCondition("h5", (_m(1, 0, 1, 0, 0, 0, 0, 1, 2), _m(1, 0, 0, 0, 1, 3, 2, 2, 1)), _e(1)),
            HeightCondition("h4'", (_m(1, 0, 0, 1, 2, 4, 3, 2),), _e(), factor=4, derived=True),
        ),
        torsor_equation=(_m(1, 0, 0, 0, 1, 3, 2, 1), _m(1, 0, 1, 0, 0, 0, 0, 0, 1), _m(1, 1, 0, 0, 0, 0, 0, 0, 0, 1)),
        zero_allowed=_set(8, 9),
        nonzero_product=_set(1),
        adjacency=_edges((1, 3), (1, 9), (2, 3), (2, 8), (3, 4), (4, 6), (5, 6), (5, 7), (7, 8), (7, 9), (8, 9)),
        psi_reference=(
            _m(1, 0, 1, 1, 1, 1, 1, 1, 1),
            _m(-1, 2, 2, 3, 2, 0, 1),
            _m(1, 1, 1, 2, 2, 2, 2, 1),
            _m(1, 1, 0, 1, 1, 1, 1, 1, 0, 1),
            _m(1, 0, 0, 0, 0, 0, 0, 1, 1, 1),
        ),
        bounding={0: ("h2",), 1: ("h2",), 2: ("h2",), 3: ("h2",), 5: ("h2",),
                  4: ("h3", "h4'"), 6: ("h3", "h4'"), 7: ("h1",)},
    ),
    "S2": dict(
        oj_exponents=(
            (0, 0, 0, 1, -1, 0), (0, 0, 0, 0, 1, -1), (1, -1, 0, -1, -1, 0),
            (0, 1, -1, 0, 0, 0), (0, 0, 0, 0, 0, 1), (0, 0, 1, 0, 0, 0),
            (1, -1, -1, 0, 0, 0), (1, 0, 0, -1, 0, 0), (2, 0, 0, -1, -1, -1),
        ),
        height_conditions=(
            HeightCondition("h1", (_m(1, 2, 4, 3, 2, 3, 1),), _e()),
            HeightCondition("h2", (_m(1, 1, 1, 1, 1, 0, 1, 1, 1),), _e()),
            HeightCondition("h3", (_m(1, 2, 3, 2, 1, 2, 0, 0, 1),), _e()),
            HeightCondition("h4", (_m(1, 1, 2, 2, 2, 1, 2, 1),), _e()),
            HeightCondition("h5", (_m(1, 1, 0, 0, 0, 0, 0, 1, 2), _m(1, 0, 0, 1, 2, 0, 3, 2)), _e(0, 0, 0, 0, 1)),
        ),
        torsor_equation=(_m(1, 0, 0, 1, 2, 0, 3, 1), _m(1, 1, 0, 0, 0, 0, 0, 0, 2), _m(1, 0, 0, 0, 0, 1, 0, 0, 0, 1)),
        zero_allowed=_set(8, 9),
        nonzero_product=_set(5),
        adjacency=_edges((1, 2), (1, 8), (2, 3), (2, 5), (3, 4), (4, 6), (5, 9), (6, 7), (7, 8), (7, 9), (8, 9)),
        psi_reference=(
            _m(1, 2, 4, 3, 2, 3, 1),
            _m(1, 1, 1, 1, 1, 0, 1, 1, 1),
            _m(1, 2, 3, 2, 1, 2, 0, 0, 1),
            _m(1, 1, 2, 2, 2, 1, 2, 1),
            _m(1, 0, 0, 0, 0, 0, 0, 1, 0, 1),
        ),
        bounding={0: ("h1",), 1: ("h1",), 2: ("h1",), 3: ("h1",), 4: ("h1",), 5: ("h1",),
                  6: ("h4",), 7: ("h3",)},
    ),
    "S3": dict(
        oj_exponents=(
            (0, 0, 1, -1, 0, 0), (0, 1, -1, 0, 0, 0), (1, -1, -1, 0, 0, -1),
            (0, 0, 0, 1, -1, 0), (0, 0, 0, 0, 0, 1), (0, 0, 0, 0, 1, 0),
            (1, -1, 0, 0, 0, 0), (1, 0, 0, 0, 0, -1), (2, -1, -1, -1, -1, 0),
        ),
        height_conditions=(
            HeightCondition("h1", (_m(1, 2, 1, 2, 1, 2, 0, 0, 1),), _e()),
            HeightCondition("h2", (_m(1, 4, 2, 3, 3, 2, 2),), _e()),
            HeightCondition("h3", (_m(1, 3, 2, 2, 2, 1, 1, 1),), _e()),
            HeightCondition("h4", (_m(1, 2, 1, 2, 1, 2, 0, 0, 1), _m(1, 2, 2, 1, 1, 0, 0, 2)), _e()),
            HeightCondition("h5", (_m(1, 0, 0, 1, 0, 2, 0, 0, 2), _m(1, 0, 1, 0, 0, 0, 0, 2, 1)), _e(0, 0, 0, 1, 0, 2)),
        ),
        torsor_equation=(_m(1, 0, 1, 0, 0, 0, 0, 2), _m(1, 0, 0, 1, 0, 2, 0, 0, 1), _m(1, 0, 0, 0, 1, 0, 2, 0, 0, 1)),
        zero_allowed=_set(7, 8, 9),
        nonzero_product=_set(4, 6),
        adjacency=_edges((1, 2), (1, 3), (1, 4), (2, 7), (3, 5), (4, 6), (5, 8), (6, 9), (7, 8), (7, 9), (8, 9)),
        psi_reference=(
            _m(1, 2, 1, 2, 1, 2, 0, 0, 1),
            _m(1, 4, 2, 3, 3, 2, 2),
            _m(1, 3, 2, 2, 2, 1, 1, 1),
            _m(1, 2, 1, 1, 2, 0, 2, 0, 0, 1),
            _m(1, 0, 0, 0, 0, 0, 0, 0, 1, 1),
        ),
        bounding={0: ("h2",), 1: ("h2",), 2: ("h2",), 3: ("h2",), 4: ("h2",), 5: ("h2",),
                  6: ("h3",), 7: ("h1",)},
    ),
    "S4": dict(
        oj_exponents=(
            (0, 0, 0, 1, -1, 0), (0, 0, 0, 0, 1, -1), (1, -1, -1, -1, 0, 0),
            (0, 0, 1, -1, 0, 0), (0, 1, -1, 0, 0, 0), (0, 0, 0, 0, 0, 1),
            (1, -1, 0, 0, 0, 0), (1, 0, 0, 0, 0, 0), (3, -1, -1, -1, -1, -1),
        ),
        height_conditions=(
            HeightCondition("h1", (_m(1, 6, 5, 3, 4, 2, 4),), _e()),
            HeightCondition("h2", (_m(1, 2, 1, 1, 2, 2, 0, 2),), _e()),
            HeightCondition("h3", (_m(1, 4, 3, 2, 3, 2, 2, 1),), _e()),
            HeightCondition("h4", (_m(1, 3, 2, 2, 2, 1, 1, 0, 1),), _e()),
            HeightCondition("h5", (_m(1, 0, 0, 1, 0, 0, 0, 0, 2), _m(1, 0, 0, 0, 1, 2, 0, 3)), _e(0, 1, 0, 0, 0, 2)),
        ),
        torsor_equation=(_m(1, 0, 0, 1, 0, 0, 0, 0, 2), _m(1, 0, 1, 0, 0, 0, 2, 0, 0, 1), _m(1, 0, 0, 0, 1, 2, 0, 3)),
        zero_allowed=_set(7, 8, 9),
        nonzero_product=_set(2, 6),
        adjacency=_edges((1, 2), (1, 3), (1, 4), (2, 6), (3, 8), (4, 5), (5, 7), (6, 9), (7, 8), (7, 9), (8, 9)),
        psi_reference=(
            _m(1, 6, 5, 3, 4, 2, 4),
            _m(1, 2, 1, 1, 2, 2, 0, 2),
            _m(1, 4, 3, 2, 3, 2, 2, 1),
            _m(1, 3, 2, 2, 2, 1, 1, 0, 1),
            _m(1, 0, 0, 0, 0, 0, 0, 0, 0, 1),
        ),
        bounding={0: ("h1",), 1: ("h1",), 2: ("h1",), 3: ("h1",), 4: ("h1",), 5: ("h1",),
                  6: ("h3",), 7: ("h4",)},
    ),
}


@lru_cache(maxsize=None)
def build_torsor_spec(S: SurfaceSpec | str) -> TorsorSpec:
    """Per-surface torsor tables; validated for homogeneity on construction."""
    sid = S if isinstance(S, str) else S.id
    sid = sid.upper()
    if sid not in _SPECS:
        raise DomainError(f"no torsor data for surface {sid}")
    spec = TorsorSpec(surface=sid, **_SPECS[sid])
    check_spec(spec)
    return spec


# --- structural validation -------------------------------------------------

def degree(spec: TorsorSpec, exps: Sequence[int]) -> tuple[int, ...]:
    """Class-group degree (exponent vector over C_0..C_5) of a monomial."""
    return tuple(sum(exps[j] * spec.oj_exponents[j][k] for j in range(NVAR)) for k in range(6))


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def check_spec(spec: TorsorSpec) -> None:
    """Raise ConsistencyError unless the tables are internally coherent.

    Checks: torsor equation homogeneous; every height condition and every
    Psi monomial has the anticanonical degree; eta_9 appears linearly;
    the first six exponent rows are unimodular.
    """
    degs = {degree(spec, t.exps) for t in spec.torsor_equation}
    if len(degs) != 1:
        raise ConsistencyError(f"{spec.surface}: torsor equation not homogeneous: {degs}")
    u = spec.u_exponents
    for c in spec.height_conditions:
        for t in c.terms:
            if _sub(degree(spec, t.exps), degree(spec, c.den)) != u:
                raise ConsistencyError(f"{spec.surface}: condition {c.name} has wrong degree")
        if any(t.exps[8] for t in c.terms) or c.den[8]:
            raise ConsistencyError(f"{spec.surface}: condition {c.name} involves eta_9")
    for t in spec.psi_reference:
        if degree(spec, t.exps) != u:
            raise ConsistencyError(f"{spec.surface}: Psi monomial has wrong degree")
    e9 = [t.exps[8] for t in spec.torsor_equation]
    if sorted(e9) != [0, 0, 1]:
        raise ConsistencyError(f"{spec.surface}: eta_9 must appear linearly in one term")
    det = round(np.linalg.det(np.array(spec.oj_exponents[:6], dtype=float)))
    if abs(det) != 1:
        raise ConsistencyError(f"{spec.surface}: exponent rows 1..6 not unimodular (det {det})")
    if any(j < 6 for j in spec.zero_allowed):
        raise ConsistencyError(f"{spec.surface}: eta_1..eta_6 must be nonzero")
    for j, names in spec.bounding.items():
        conds = {c.name: c for c in spec.height_conditions}
        for nm in names:
            c = conds[nm]
            if not c.is_monomial or not c.terms[0].exps[j]:
                raise ConsistencyError(f"{spec.surface}: bad bounding condition {nm} for eta_{j+1}")


# --- Psi and its sign calibration ------------------------------------------

def _eval_mono_frac(m: Monomial, eta: Sequence[Fraction]) -> Fraction:
    v = Fraction(m.sign)
    for x, e in zip(eta, m.exps):
        if e:
            v *= x ** e
    return v


def random_torsor_solutions(spec: TorsorSpec, n: int, seed: int = 0) -> list[list[Fraction]]:
    """Rational solutions of the torsor equation with random nonzero eta_1..eta_8."""
    rng = random.Random(seed)
    out = []
    t9 = spec.eta9_term
    others = [t for i, t in enumerate(spec.torsor_equation) if i != t9]
    coef = spec.torsor_equation[t9]
    while len(out) < n:
        eta = [Fraction(rng.choice([-1, 1]) * rng.randint(1, 9)) for _ in range(8)] + [Fraction(0)]
        rest = sum(_eval_mono_frac(t, eta) for t in others)
        c = _eval_mono_frac(Monomial(coef.sign, coef.exps[:8] + (0,)), eta)
        eta[8] = -rest / c
        out.append(eta)
    return out


def _quadrics_vanish(S: SurfaceSpec, x: Sequence[Fraction]) -> bool:
    return all(sum(c * x[i] * x[j] for c, i, j in Q) == 0 for Q in S.quadrics)


@lru_cache(maxsize=None)
def calibrated_psi(spec: TorsorSpec, samples: int = 100) -> tuple[Monomial, ...]:
    """Psi monomials with signs chosen so that images lie on the surface.

    Every sign vector is tried on ``samples`` random torsor solutions.  Of
    the survivors (closed under negation) the unique one closest to the
    reference signs is returned.
    """
    S = get_surface(spec.surface)
    sols = random_torsor_solutions(spec, samples, seed=12345)
    base = [Monomial(1, m.exps) for m in spec.psi_reference]
    vals = [[_eval_mono_frac(m, eta) for m in base] for eta in sols]
    good = []
    for signs in itertools.product((1, -1), repeat=5):
        if all(_quadrics_vanish(S, [s * x for s, x in zip(signs, row)]) for row in vals):
            good.append(signs)
    # survivors come in +-pairs; S1 has a further sign symmetry of its quadrics
    if not good or any(tuple(-x for x in g) not in good for g in good):
        raise ConsistencyError(f"{spec.surface}: sign calibration failed: {good}")
    ref_signs = tuple(m.sign for m in spec.psi_reference)
    dist = [sum(a != b for a, b in zip(g, ref_signs)) for g in good]
    if dist.count(min(dist)) != 1:
        raise ConsistencyError(f"{spec.surface}: sign calibration ambiguous: {good}")
    best = good[dist.index(min(dist))]
    if best != ref_signs:
        log.info("%s: Psi signs calibrated from %s to %s", spec.surface, ref_signs, best)
    return tuple(Monomial(s, m.exps) for s, m in zip(best, spec.psi_reference))


# --- class-tuple instantiation ---------------------------------------------

class ClassData:
    """O_j(C) for a fixed class tuple C, with the lattice data the walk needs."""

    def __init__(self, spec: TorsorSpec, K: FieldCtx, C: Sequence[Idl]):
        self.K, self.C = K, tuple(C)
        fr = [FracIdl(c) for c in C]
        self.O: list[FracIdl] = []
        for row in spec.oj_exponents:
            I = FracIdl(K.unit_ideal)
            for F, e in zip(fr, row):
                if e:
                    I = I * (F ** e)
            self.O.append(I)
        self.u = Fraction(C[0].norm() ** 3, prod(c.norm() for c in C[1:]))
        self.num = [I.num for I in self.O]
        self.den = [I.den for I in self.O]
        self.num_norm = [I.num.norm() for I in self.O]
        # N_j^{-1} * N(N_j) = conj(N_j): basis for building I_j
        self.conj_basis = [I.num.conj().basis() for I in self.O]
        # minimum of N(v) over nonzero v in N_j (numerator lattice)
        self.min_num = []
        for I in self.num:
            mu = I.K.norm(_shortest(K, I.hnf))
            self.min_num.append(mu)

    def eta(self, j: int, v: tuple[int, int]):
        from .qfield import Element

        return Element(self.K, v[0], v[1], self.den[j])

    def I_norm(self, j: int, v: tuple[int, int]) -> int:
        return self.K.norm(v) // self.num_norm[j]

    def I_ideal(self, j: int, v: tuple[int, int]) -> Idl:
        """eta_j O_j^{-1} = v_j N_j^{-1}, an integral ideal."""
        K = self.K
        if v == (0, 0):
            return Idl(K, None)
        J = Idl(K, hnf(K.mul(v, b) for b in self.conj_basis[j]))
        return J.divide_int(self.num_norm[j])


def _shortest(K, h):
    from .qfield import shortest_vector

    return shortest_vector(K, h)


def coprime(cd: ClassData, j: int, vj, k: int, vk) -> bool:
    nj = cd.I_norm(j, vj) if vj != (0, 0) else 0
    nk = cd.I_norm(k, vk) if vk != (0, 0) else 0
    g = gcd(nj, nk)
    if g == 1:
        return True
    if nj == 0 or nk == 0:
        return False
    return (cd.I_ideal(j, vj) + cd.I_ideal(k, vk)).is_unit()


# --- exact evaluation helpers ----------------------------------------------

class _Mono:
    """A monomial evaluated to (X, Y) / D with integral X + Yw."""

    __slots__ = ()

    @staticmethod
    def value(K: FieldCtx, cd: ClassData, m: Monomial, vs) -> tuple[tuple[int, int], int]:
        x = (m.sign, 0)
        D = 1
        for j, e in enumerate(m.exps):
            if e:
                v = vs[j]
                for _ in range(e):
                    x = K.mul(x, v)
                D *= cd.den[j] ** e
        return x, D


def _frac_sum(K, terms):
    """Sum of (element, den) pairs as (element, den)."""
    X = Y = 0
    D = 1
    for (a, b), d in terms:
        X, Y = X * d + a * D, Y * d + b * D
        D *= d
    return (X, Y), D


def condition_holds(K: FieldCtx, cd: ClassData, c: HeightCondition, vs, bound: Fraction) -> bool:
    """Exact test of |sum(terms)/den| <= factor*bound for the given eta."""
    num, D = _frac_sum(K, [_Mono.value(K, cd, t, vs) for t in c.terms])
    nn = K.norm(num)
    if nn == 0:
        return True
    # |num/D| / |den_m| with den_m = (Xd + Yd w)/Dd
    dm, Dd = _Mono.value(K, cd, Monomial(1, c.den), vs)
    # |num|/D^2 * Dd^2/|dm| <= f*bound
    lhs = nn * Dd * Dd * bound.denominator
    rhs = c.factor * bound.numerator * D * D * K.norm(dm)
    return lhs <= rhs


class TorsorPoint(NamedTuple):
    eta: tuple  # nine Elements
    C: tuple


def solve_eta9(spec: TorsorSpec, K: FieldCtx, cd: ClassData, vs) -> tuple[int, int] | None:
    """Numerator v_9 of eta_9 from the torsor equation, or None if eta_9 not in O_9."""
    t9 = spec.eta9_term
    rest = [_Mono.value(K, cd, t, vs) for i, t in enumerate(spec.torsor_equation) if i != t9]
    (RX, RY), RD = _frac_sum(K, rest)
    m9 = spec.torsor_equation[t9]
    cm, CD = _Mono.value(K, cd, Monomial(m9.sign, m9.exps[:8] + (0,)), vs)
    # eta9 = -(R/RD) / (cm/CD);  v9 = D9 * eta9
    n = K.norm(cm)
    W = K.mul((-RX * CD * cd.den[8], -RY * CD * cd.den[8]), K.conj(cm))
    E = RD * n
    if W[0] % E or W[1] % E:
        return None
    v9 = (W[0] // E, W[1] // E)
    return v9 if cd.num[8].contains(v9) else None


def torsor_equation_holds(spec: TorsorSpec, K: FieldCtx, cd: ClassData, vs) -> bool:
    (X, Y), _ = _frac_sum(K, [_Mono.value(K, cd, t, vs) for t in spec.torsor_equation])
    return X == 0 and Y == 0


def in_M(spec: TorsorSpec, K: FieldCtx, cd: ClassData, vs, B) -> bool:
    """Independent membership test for M_C(B), directly from the definition."""
    B = Fraction(B)
    bound = cd.u * B
    for j in range(NVAR):
        if vs[j] == (0, 0):
            if j not in spec.zero_allowed:
                return False
        elif not cd.num[j].contains(vs[j]):
            return False
    if not torsor_equation_holds(spec, K, cd, vs):
        return False
    for c in spec.height_conditions:
        if c.derived:
            continue
        if any(e and vs[j] == (0, 0) for j, e in enumerate(c.den)):
            return False
        if not condition_holds(K, cd, c, vs, bound):
            return False
    for j, k in spec.nonadjacent_pairs():
        if not coprime(cd, j, vs[j], k, vs[k]):
            return False
    return True


def psi_pairs(spec: TorsorSpec, K: FieldCtx, cd: ClassData, vs) -> list[tuple[int, int]]:
    """Integral coordinates of Psi(eta) after clearing the common denominator."""
    vals = [_Mono.value(K, cd, m, vs) for m in spec.psi_monomials]
    L = 1
    for _, D in vals:
        L = L * D // gcd(L, D)
    return [(x * (L // D), y * (L // D)) for (x, y), D in vals]


def psi_torsor(spec: TorsorSpec, K: FieldCtx, cd: ClassData, vs) -> ProjPoint:
    v = psi_pairs(spec, K, cd, vs)
    if all(c == (0, 0) for c in v):
        raise ConsistencyError("Psi image is degenerate")
    return ProjPoint.from_pairs(K, v)


# --- enumeration -----------------------------------------------------------

def canonical_associate(K: FieldCtx, v: tuple[int, int]) -> tuple[int, int]:
    return min(K.mul(u, v) for u in K.units)


class _Walker:
    """Nested lattice walk over eta_1..eta_8 for one class tuple."""

    def __init__(self, spec: TorsorSpec, K: FieldCtx, cd: ClassData, B: Fraction, reduced: bool,
                 compiled: bool = True):
        self.spec, self.K, self.cd = spec, K, cd
        self.B = B
        self.bound = cd.u * B
        self.reduced = reduced
        self.compiled = compiled
        mono = [c for c in spec.height_conditions if c.is_monomial]
        # conditions usable as bounds: every other variable is mandatory or assigned earlier
        self.bounders = {}
        self.checks_at = {j: [] for j in range(8)}
        for c in mono:
            e = c.terms[0].exps
            last = max(j for j in range(8) if e[j])
            if not c.derived:
                self.checks_at[last].append(c)
            for j in range(8):
                if not e[j]:
                    continue
                later_zero = [i for i in range(j + 1, 8) if e[i] and i in spec.zero_allowed]
                if later_zero:
                    continue
                self.bounders.setdefault(j, []).append(c)
        for j, names in spec.bounding.items():
            have = {c.name for c in self.bounders.get(j, [])}
            assert set(names) <= have, (j, names, have)
        self.pairs_at = {k: [(j, k) for j, kk in spec.nonadjacent_pairs() if kk == k] for k in range(NVAR)}
        self.full_checks = [c for c in spec.height_conditions if not c.is_monomial]
        self.stats = {"nodes": 0, "leaves": 0}
        self._prepare_lists()
        if compiled:
            self._prepare_plan()

    def _max_norm(self, j: int, norms: list[Fraction | None]) -> int:
        """Largest integral N(v_j) allowed by the bounding conditions; -1 if none."""
        cd = self.cd
        best = None
        for c in self.bounders[j]:
            e = c.terms[0].exps
            rest = Fraction(1)
            dead = False
            for i in range(8):
                if i == j or not e[i]:
                    continue
                if norms[i] is not None:
                    if norms[i] == 0:
                        dead = True
                        break
                    rest *= norms[i] ** e[i]
                else:
                    rest *= Fraction(cd.min_num[i], cd.den[i] ** 2) ** e[i]
            if dead:
                continue
            lim = c.factor * self.bound / rest * cd.den[j] ** (2 * e[j])
            if lim < 0:
                return -1
            k = iroot(lim.numerator // lim.denominator, e[j])
            best = k if best is None else min(best, k)
        if best is None:
            raise ConsistencyError(f"no usable bound for eta_{j+1}")
        return best

    def _prepare_lists(self):
        K, cd = self.K, self.cd
        norms = [None] * 8
        self.lists = []
        self.list_norms = []
        for j in range(8):
            kmax = self._max_norm(j, norms)
            pts = [v for v in disk_points(K, cd.num[j].hnf, kmax, 1) if v != (0, 0)]
            if self.reduced and j < 6:
                pts = [v for v in pts if canonical_associate(K, v) == v]
            pts.sort(key=lambda v: (K.norm(v), v))
            self.lists.append(pts)
            self.list_norms.append([K.norm(v) for v in pts])
        # eta_8 candidates as exact integer arrays, a zero entry in front
        last = [(0, 0)] + self.lists[7]
        self.last_x = np.array([v[0] for v in last], dtype=object)
        self.last_y = np.array([v[1] for v in last], dtype=object)

    def walk(self) -> Iterator[tuple]:
        vs = [None] * NVAR
        norms: list = [None] * 8
        yield from self._level(0, vs, norms)

    def _level(self, j: int, vs, norms):
        K, cd, spec = self.K, self.cd, self.spec
        if j == 8:
            self.stats["leaves"] += 1
            v9 = solve_eta9(spec, K, cd, vs)
            if v9 is None:
                return
            vs[8] = v9
            for c in self.full_checks:
                if not condition_holds(K, cd, c, vs, self.bound):
                    break
            else:
                for a, b in self.pairs_at[8]:
                    if not coprime(cd, a, vs[a], b, vs[b]):
                        break
                else:
                    yield tuple(vs)
            vs[8] = None
            return
        if j == 6 and self.compiled:
            yield from self._compiled_tail(vs, norms)
            return
        if j == 7:
            yield from self._last_level(vs, norms)
            return
        kmax = self._max_norm(j, norms)
        cands = self.lists[j]
        hi = bisect.bisect_right(self.list_norms[j], kmax)
        options = cands[:hi]
        if j in spec.zero_allowed:
            options = [(0, 0)] + options
        den2 = cd.den[j] ** 2
        for v in options:
            self.stats["nodes"] += 1
            vs[j] = v
            norms[j] = Fraction(K.norm(v), den2)
            ok = True
            for c in self.checks_at[j]:
                if not condition_holds(K, cd, c, vs, self.bound):
                    ok = False
                    break
            if ok:
                for a, b in self.pairs_at[j]:
                    if not coprime(cd, a, vs[a], b, vs[b]):
                        ok = False
                        break
            if ok:
                yield from self._level(j + 1, vs, norms)
        vs[j] = None
        norms[j] = None


    def _assign_last(self, vs, norms, v):
        K, cd = self.K, self.cd
        self.stats["nodes"] += 1
        vs[7] = v
        norms[7] = Fraction(K.norm(v), cd.den[7] ** 2)
        ok = all(condition_holds(K, cd, c, vs, self.bound) for c in self.checks_at[7]) and all(
            coprime(cd, a, vs[a], b, vs[b]) for a, b in self.pairs_at[7])
        if ok:
            yield from self._level(8, vs, norms)
        vs[7] = None
        norms[7] = None

    def _prefix_mono(self, m: Monomial, vs) -> tuple[tuple[int, int], int]:
        """Part of a monomial over eta_1..eta_7 (numerator pair, denominator)."""
        K, cd = self.K, self.cd
        x, d = (m.sign, 0), 1
        for i in range(7):
            e = m.exps[i]
            if e:
                v = vs[i]
                for _ in range(e):
                    x = K.mul(x, v)
                d *= cd.den[i] ** e
        return x, d

    def _vec_terms(self, terms, vs, pw):
        """Sum of monomials (eta_8 varying) as exact object arrays over a common denominator."""
        K, cd = self.K, self.cd
        parts = []
        for t in terms:
            (px, py), d = self._prefix_mono(t, vs)
            e8 = t.exps[7]
            qx, qy = pw(e8)
            parts.append((px, py, qx, qy, d * cd.den[7] ** e8))
        D = prod(p[4] for p in parts)
        X = Y = 0
        n, tt = K.n, K.t
        for px, py, qx, qy, d in parts:
            f = D // d
            X = X + f * (px * qx + n * py * qy)
            Y = Y + f * (px * qy + py * qx + tt * py * qy)
        return X, Y, D

    def _last_level(self, vs, norms):
        """eta_8 loop, vectorised over exact integer arrays.

        The array pass applies necessary conditions (eta_9 in O_9, the
        non-monomial height conditions, a coprimality test on norms); the
        survivors are re-verified one by one on the exact scalar path.
        """
        K, cd, spec = self.K, self.cd, self.spec
        kmax = self._max_norm(7, norms)
        hi = bisect.bisect_right(self.list_norms[7], kmax)
        zero = 7 in spec.zero_allowed
        if hi == 0 and not zero:
            return
        lo = 0 if zero else 1
        X8 = self.last_x[lo:hi + 1]
        Y8 = self.last_y[lo:hi + 1]
        hi = len(X8)
        n, t = K.n, K.t
        sq = (X8 * X8 + n * Y8 * Y8, 2 * X8 * Y8 + t * Y8 * Y8)
        one = (np.ones(hi, dtype=object), np.zeros(hi, dtype=object))

        def pw(e):
            if e > 2:
                raise ConsistencyError("eta_8 exponent above 2")
            return (one, (X8, Y8), sq)[e]

        idx = np.arange(hi)
        # eta_9 from the torsor equation
        t9 = spec.eta9_term
        rest = [tm for i, tm in enumerate(spec.torsor_equation) if i != t9]
        RX, RY, RD = self._vec_terms(rest, vs, pw)
        m9 = spec.torsor_equation[t9]
        (cx, cy), CD = self._prefix_mono(Monomial(m9.sign, m9.exps[:8] + (0,)), vs)
        ccx, ccy = K.conj((cx, cy))
        s = -CD * cd.den[8]
        WX = s * (RX * ccx + n * RY * ccy)
        WY = s * (RX * ccy + RY * ccx + t * RY * ccy)
        E = RD * K.norm((cx, cy))
        ok = (WX % E == 0) & (WY % E == 0)
        V9X, V9Y = WX // E, WY // E
        a9, b9, c9 = cd.num[8].hnf
        ok &= (V9Y % c9 == 0)
        ok &= ((V9X - b9 * (V9Y // c9)) % a9 == 0)
        # non-monomial height conditions
        bn, bd = self.bound.numerator, self.bound.denominator
        for c in self.full_checks:
            NX, NY, ND = self._vec_terms(c.terms, vs, pw)
            dm, Dd = self._prefix_mono(Monomial(1, c.den), vs)
            nn = NX * NX + t * NX * NY - n * NY * NY
            ok &= nn * (Dd * Dd * bd) <= (c.factor * bn * K.norm(dm)) * ND * ND
        if 8 not in spec.zero_allowed:
            ok &= (V9X != 0) | (V9Y != 0)
        # coprimality through norms; gcd > 1 with both sides nonzero needs ideals
        amb = np.zeros(hi, dtype=bool)
        if ok.any():
            n8 = (X8 * X8 + t * X8 * Y8 - n * Y8 * Y8) // cd.num_norm[7]
            n9 = (V9X * V9X + t * V9X * V9Y - n * V9Y * V9Y) // cd.num_norm[8]
            for j, k in self.pairs_at[7] + self.pairs_at[8]:
                if j == 7 or k == 7:
                    other = j if k == 7 else k
                    if other == 8:
                        continue
                    nj = cd.I_norm(other, vs[other]) if vs[other] != (0, 0) else 0
                    g = _gcd_vec(n8, nj)
                    ok &= (g == 1) | ((n8 != 0) & (nj != 0))
                    amb |= (g != 1) & (n8 != 0) & (nj != 0)
                else:
                    nj = cd.I_norm(j, vs[j]) if vs[j] != (0, 0) else 0
                    g = _gcd_vec(n9, nj)
                    # a zero eta_9 is coprime only to the unit ideal
                    ok &= (g == 1) | ((n9 != 0) & (nj != 0))
                    amb |= (g != 1) & (n9 != 0) & (nj != 0)
        ok = ok.astype(bool)
        surv = idx[ok].tolist()
        self.stats["filtered"] = self.stats.get("filtered", 0) + hi - len(surv)
        for i in surv:
            v8 = (X8[i], Y8[i])
            if amb[i]:
                yield from self._assign_last(vs, norms, v8)
            else:
                self.stats["leaves"] += 1
                yield (*vs[:7], v8, (V9X[i], V9Y[i]))


    # --- compiled tail -------------------------------------------------------

    def _prepare_plan(self):
        """Static tables for the compiled eta_7/eta_8/eta_9 scan."""
        spec, cd = self.spec, self.cd
        monos: list[Monomial] = []

        def idx(m: Monomial) -> int:
            if m not in monos:
                monos.append(m)
            return monos.index(m)

        kinds, t1, t2, dens, facs = [], [], [], [], []
        for c in self.checks_at[6] + self.checks_at[7]:
            kinds.append(0 if c in self.checks_at[6] else 1)
            t1.append(idx(c.terms[0]))
            t2.append(-1)
            dens.append(-1)
            facs.append(float(c.factor))
        for c in self.full_checks:
            if len(c.terms) != 2 or c.den[6] or c.den[7]:
                raise ConsistencyError(f"condition {c.name} does not fit the compiled scan")
            kinds.append(2)
            t1.append(idx(c.terms[0]))
            t2.append(idx(c.terms[1]))
            dens.append(idx(Monomial(1, c.den)))
            facs.append(float(c.factor))
        b8 = [(idx(c.terms[0]), float(c.factor)) for c in self.bounders.get(7, [])]
        t9 = spec.eta9_term
        rest = [t for i, t in enumerate(spec.torsor_equation) if i != t9]
        m9 = spec.torsor_equation[t9]
        self.k_tor = (idx(rest[0]), idx(rest[1]))
        self.k_cm = Monomial(m9.sign, m9.exps[:8] + (0,))
        if self.k_cm.exps[6] or self.k_cm.exps[7]:
            raise ConsistencyError("eta_9 coefficient must depend on eta_1..eta_6 only")
        self.k_monos = monos
        self.k_e7 = np.array([m.exps[6] for m in monos], dtype=np.int64)
        self.k_e8 = np.array([m.exps[7] for m in monos], dtype=np.int64)
        self.k_D = [prod(cd.den[i] ** m.exps[i] for i in range(8)) for m in monos]
        self.k_Darr = np.array(self.k_D, dtype=np.int64)
        self.k_kind = np.array(kinds, dtype=np.int64)
        self.k_t1 = np.array(t1, dtype=np.int64)
        self.k_t2 = np.array(t2, dtype=np.int64)
        self.k_den = np.array(dens, dtype=np.int64)
        self.k_fac = np.array(facs, dtype=np.float64)
        self.k_b8m = np.array([m for m, _ in b8], dtype=np.int64)
        self.k_b8f = np.array([f for _, f in b8], dtype=np.float64)
        self.k_cp = [np.array([j for j, _ in self.pairs_at[k]], dtype=np.int64) for k in (6, 7, 8)]
        l8 = self.lists[7]
        self.k_x8 = np.array([v[0] for v in l8], dtype=np.int64)
        self.k_y8 = np.array([v[1] for v in l8], dtype=np.int64)
        self.k_n8 = np.array(self.list_norms[7], dtype=np.int64)
        self.k_hnf9 = cd.num[8].hnf
        self.k_cb = [np.array([c for b in cd.conj_basis[j] for c in b], dtype=np.int64) for j in (6, 7, 8)]

    def _compiled_tail(self, vs, norms):
        from ._kernel import PASS, walk_tail

        K, cd, spec = self.K, self.cd, self.spec
        lim = 2**60
        npx, npy, nnorm = [], [], []
        for m in self.k_monos:
            (x, y), _ = self._prefix6(m, vs)
            npx.append(x)
            npy.append(y)
            nnorm.append(float(K.norm((x, y))))
        (cx, cy), CD = self._prefix6(self.k_cm, vs)
        ia, ib = self.k_tor
        s = -CD * cd.den[8]
        Ba = K.mul((npx[ia] * s * self.k_D[ib], npy[ia] * s * self.k_D[ib]), K.conj((cx, cy)))
        Bb = K.mul((npx[ib] * s * self.k_D[ia], npy[ib] * s * self.k_D[ia]), K.conj((cx, cy)))
        E = self.k_D[ia] * self.k_D[ib] * K.norm((cx, cy))
        big = [abs(v) for v in npx + npy + list(Ba) + list(Bb)] + [E] + self.k_D
        kmax = self._max_norm(6, norms)
        hi = bisect.bisect_right(self.list_norms[6], kmax)
        c7 = ([(0, 0)] if 6 in spec.zero_allowed else []) + self.lists[6][:hi]
        if not c7:
            return
        if max(big) >= lim:
            yield from self._python_tail(vs, norms, c7)
            return
        pre_inorm = np.array([cd.I_norm(j, vs[j]) for j in range(6)], dtype=np.int64)
        pre_basis = []
        for j in range(6):
            row = []
            for b in cd.conj_basis[j]:
                x, y = K.mul(vs[j], b)
                row += [x // cd.num_norm[j], y // cd.num_norm[j]]
            pre_basis.append(row)
        if max(abs(x) for r in pre_basis for x in r) >= lim:
            yield from self._python_tail(vs, norms, c7)
            return
        a9, b9, c9 = self.k_hnf9
        rows, overflow = walk_tail(
            K.t, K.n, float(self.bound),
            np.array(npx, dtype=np.int64), np.array(npy, dtype=np.int64), np.array(nnorm),
            self.k_e7, self.k_e8, self.k_Darr, np.zeros(len(npx), dtype=np.bool_),
            self.k_kind, self.k_t1, self.k_t2, self.k_den, self.k_fac,
            self.k_b8m, self.k_b8f,
            np.array([v[0] for v in c7], dtype=np.int64), np.array([v[1] for v in c7], dtype=np.int64),
            np.array([K.norm(v) for v in c7], dtype=np.int64), cd.num_norm[6],
            self.k_x8, self.k_y8, self.k_n8, cd.num_norm[7], 7 in spec.zero_allowed,
            ia, ib, Ba[0], Ba[1], Bb[0], Bb[1], E,
            a9, b9, c9, cd.num_norm[8], 8 in spec.zero_allowed,
            pre_inorm, np.array(pre_basis, dtype=np.int64), *self.k_cb, *self.k_cp,
        )
        if overflow:
            self.stats["overflow"] = self.stats.get("overflow", 0) + 1
            yield from self._python_tail(vs, norms, c7)
            return
        self.stats["nodes"] += len(c7)
        l8 = self.lists[7]
        for i7, i8, st, v9x, v9y in rows:
            v7 = c7[i7]
            v8 = (0, 0) if i8 < 0 else l8[i8]
            if st == PASS:
                self.stats["leaves"] += 1
                yield (*vs[:6], v7, v8, (int(v9x), int(v9y)))
                continue
            self.stats["unsure"] = self.stats.get("unsure", 0) + 1
            full = [*vs[:6], v7, v8, None]
            v9 = solve_eta9(spec, K, cd, full)
            if v9 is None:
                continue
            full[8] = v9
            if in_M(spec, K, cd, full, self.B):
                self.stats["leaves"] += 1
                yield tuple(full)

    def _prefix6(self, m: Monomial, vs):
        K, cd = self.K, self.cd
        x, d = (m.sign, 0), 1
        for i in range(6):
            e = m.exps[i]
            if e:
                for _ in range(e):
                    x = K.mul(x, vs[i])
                d *= cd.den[i] ** e
        return x, d

    def _python_tail(self, vs, norms, c7):
        """Exact fallback for one prefix: the eta_7 loop in Python."""
        K, cd = self.K, self.cd
        den2 = cd.den[6] ** 2
        for v in c7:
            self.stats["nodes"] += 1
            vs[6] = v
            norms[6] = Fraction(K.norm(v), den2)
            ok = all(condition_holds(K, cd, c, vs, self.bound) for c in self.checks_at[6]) and all(
                coprime(cd, a, vs[a], b, vs[b]) for a, b in self.pairs_at[6])
            if ok:
                yield from self._last_level(vs, norms)
        vs[6] = None
        norms[6] = None


_gcd_vec = np.frompyfunc(gcd, 2, 1)


def class_tuples(K: FieldCtx):
    return itertools.product(K.class_reps, repeat=6)


def enumerate_M(spec: TorsorSpec, K: FieldCtx, C: Sequence[Idl], B, reduced: bool = False,
                stats: dict | None = None) -> Iterator[tuple]:
    """Yield numerator tuples (v_1..v_9) of the points of M_C(B).

    With ``reduced`` only orbit representatives (eta_1..eta_6 normalised
    associates) are produced.
    """
    B = Fraction(B)
    if B < 0:
        return
    cd = ClassData(spec, K, C)
    w = _Walker(spec, K, cd, B, reduced)
    yield from w.walk()
    if stats is not None:
        for k, v in w.stats.items():
            stats[k] = stats.get(k, 0) + v


def enumerate_M_points(spec: TorsorSpec, K: FieldCtx, C: Sequence[Idl], B, reduced: bool = False) -> list[TorsorPoint]:
    cd = ClassData(spec, K, C)
    return [TorsorPoint(tuple(cd.eta(j, v) for j, v in enumerate(vs)), tuple(C))
            for vs in enumerate_M(spec, K, C, B, reduced)]


# --- unit action -------------------------------------------------------------

def unit_action(spec: TorsorSpec, K: FieldCtx, g: Sequence[int], vs) -> tuple:
    """Apply g in (Z/w)^6 via u_k = zeta^{g_k}, with zeta a generator of mu_K."""
    units = K.units  # units[i] = zeta^i
    w = K.omega_count
    out = []
    for j in range(NVAR):
        k = sum(e * gi for e, gi in zip(spec.oj_exponents[j], g)) % w
        out.append(K.mul(units[k], vs[j]))
    return tuple(out)


@lru_cache(maxsize=None)
def stabilizer_size(spec: TorsorSpec, w: int, nonzero: tuple[int, ...]) -> int:
    """Number of g in (Z/w)^6 acting trivially on the given nonzero coordinates."""
    E = np.array([spec.oj_exponents[j] for j in nonzero], dtype=np.int64)
    grid = np.array(list(itertools.product(range(w), repeat=6)), dtype=np.int64)
    fixed = np.all((grid @ E.T) % w == 0, axis=1)
    return int(fixed.sum())


def orbit_size(spec: TorsorSpec, K: FieldCtx, vs) -> int:
    w = K.omega_count
    nz = tuple(j for j in range(NVAR) if vs[j] != (0, 0))
    return w ** 6 // stabilizer_size(spec, w, nz)


# --- counting ------------------------------------------------------------------

@dataclass
class TorsorResult:
    surface: str
    d: int
    bound: Fraction
    total: int                       # sum over C of |M_C(B)|
    count: int                       # total / w^6
    per_class: dict = field(default_factory=dict)
    keys: dict = field(default_factory=dict)   # canonical key -> multiplicity
    reps: int = 0
    stats: dict = field(default_factory=dict)


def torsor_enumerate(S, K: FieldCtx, B, reduced: bool = True, collect_keys: bool = False,
                     check_points: bool = False, compiled: bool = True) -> TorsorResult:
    """Walk M_C(B) for every class tuple and aggregate.

    With ``reduced`` each representative contributes its orbit size.  With
    ``check_points`` every produced point is re-verified against ``in_M``
    and its Psi image against the surface, U and the height bound.
    """
    spec = build_torsor_spec(S)
    surf = get_surface(spec.surface)
    B = Fraction(B)
    w6 = K.omega_count ** 6
    res = TorsorResult(spec.surface, K.d, B, 0, 0)
    lines = None
    if check_points or collect_keys:
        from .surfaces import find_lines, in_U_pairs

        lines = find_lines(surf)
    for C in class_tuples(K):
        cd = ClassData(spec, K, C)
        sub = 0
        w = _Walker(spec, K, cd, B, reduced, compiled)
        for vs in w.walk():
            mult = orbit_size(spec, K, vs) if reduced else 1
            sub += mult
            res.reps += 1
            if check_points or collect_keys:
                x = psi_pairs(spec, K, cd, vs)
                if check_points:
                    if not in_M(spec, K, cd, vs, B):
                        raise ConsistencyError(f"walk produced a point outside M_C(B): {vs}")
                    if not on_surface_pairs(K, surf, x):
                        raise ConsistencyError(f"Psi image off the surface: {vs}")
                    if not in_U_pairs(K, surf, x, lines):
                        raise ConsistencyError(f"Psi image on a line: {vs}")
                    if ProjPoint.from_pairs(K, x).height() > B:
                        raise ConsistencyError(f"Psi image too high: {vs}")
                if collect_keys:
                    key = key_from_pairs(K, x)
                    res.keys[key] = res.keys.get(key, 0) + mult
        for k, v in w.stats.items():
            res.stats[k] = res.stats.get(k, 0) + v
        if sub:
            res.per_class[tuple(c.hnf for c in C)] = sub
        res.total += sub
    if res.total % w6:
        raise ConsistencyError(f"sum of |M_C(B)| = {res.total} not divisible by w^6 = {w6}")
    res.count = res.total // w6
    return res


def torsor_count(S, K: FieldCtx, B) -> int:
    """N_{U,H}(B) = (1/w^6) * sum over class tuples of |M_C(B)|."""
    B = Fraction(B)
    if B < 0:
        return 0
    return torsor_enumerate(S, K, B).count
