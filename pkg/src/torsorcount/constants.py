"""Numerical factors of the leading constant c = alpha * (2pi)^6 h^6 / (Delta^4 w^6) * theta0 * omega_inf."""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt, prod

import mpmath
import numpy as np
from scipy.optimize import linprog

from .qfield import DomainError, FieldCtx, prime_norms_up_to
from .surfaces import SurfaceSpec, get_surface

# --- alpha -------------------------------------------------------------------


@dataclass(frozen=True)
class AlphaPolytope:
    """{t in R_{>=0}^5 : A t <= 1}, coordinates (t1, t2, t4, t5, t6)."""

    surface: str
    rows: tuple[tuple[int, ...], ...]
    reference: Fraction

    def contains(self, t: np.ndarray) -> np.ndarray:
        A = np.array(self.rows, dtype=float)
        return np.all(t >= 0, axis=-1) & np.all(t @ A.T <= 1, axis=-1)

    def bounding_box(self) -> np.ndarray:
        """Per-coordinate maxima, from one LP per coordinate."""
        A = np.array(self.rows, dtype=float)
        hi = []
        for j in range(5):
            c = np.zeros(5)
            c[j] = -1
            r = linprog(c, A_ub=A, b_ub=np.ones(len(A)), bounds=[(0, None)] * 5, method="highs")
            if r.status != 0:
                raise DomainError(f"{self.surface}: alpha polytope is unbounded")
            hi.append(-r.fun)
        return np.array(hi)


ALPHA_POLYTOPES = {
    "S1": AlphaPolytope("S1", ((2, 2, 2, 0, 1), (-1, -1, 2, 6, 4)), Fraction(1, 8640)),
    "S2": AlphaPolytope("S2", ((2, 4, 2, 3, 1), (-1, -2, 2, -3, 4)), Fraction(1, 21600)),
    "S3": AlphaPolytope("S3", ((4, 2, 3, 2, 2),), Fraction(1, 34560)),
    "S4": AlphaPolytope("S4", ((6, 5, 4, 2, 4),), Fraction(1, 345600)),
}


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    samples: int = 0
    seed: int | None = None


def _sid(S) -> str:
    return (S if isinstance(S, str) else S.id).upper()


def alpha_polytope(S, mode: str = "exact", samples: int = 10**7, seed: int = 0) -> Fraction | Estimate:
    """alpha = vol(polytope) / 3.

    ``exact`` uses the simplex volume 1/(5! * prod a_j) and is available only
    for single-inequality polytopes; ``mc`` samples the LP bounding box.
    """
    sid = _sid(S)
    if sid not in ALPHA_POLYTOPES:
        raise DomainError(f"no alpha polytope for {sid}")
    P = ALPHA_POLYTOPES[sid]
    if mode == "exact":
        if len(P.rows) != 1 or any(a <= 0 for a in P.rows[0]):
            raise DomainError(f"exact alpha unsupported for {sid} (not a simplex)")
        return Fraction(1, 3 * math.factorial(5) * prod(P.rows[0]))
    if mode != "mc":
        raise ValueError(f"unknown mode {mode!r}")
    if samples < 10**4:
        raise DomainError("Monte Carlo alpha needs at least 10^4 samples")
    box = P.bounding_box()
    rng = np.random.Generator(np.random.Philox(seed))
    hits = 0
    done = 0
    while done < samples:
        m = min(10**6, samples - done)
        t = rng.random((m, 5)) * box
        hits += int(P.contains(t).sum())
        done += m
    p = hits / samples
    vol_box = float(np.prod(box))
    return Estimate(vol_box * p / 3, vol_box * math.sqrt(p * (1 - p) / samples) / 3, samples, seed)


# --- theta0 ------------------------------------------------------------------


@dataclass(frozen=True)
class Theta0:
    value: mpmath.mpf
    prime_bound: int
    tail: float  # upper bound for theta0(P) - theta0


def euler_factor(q) -> mpmath.mpf:
    x = mpmath.mpf(1) / q
    return (1 - x) ** 6 * (1 + 6 * x + x * x)


# -log f(x) <= TAIL_COEFF * x^2 for 0 < x <= 1/2 (sup of the ratio is the
# limit at 0, where f = 1 - 20x^2 + 64x^3 + ...)
TAIL_COEFF = 20


def theta0_tail_log(P: int) -> float:
    """Bound for -log of the product over prime ideals of norm > P.

    Norm-p ideals: at most two per p > P, sum 1/n^2 over n > P is <= 1/P.
    Norm-p^2 (inert): p > sqrt(P), sum 1/n^4 over n > m is <= 1/(3 m^3).
    """
    m = isqrt(P)
    return TAIL_COEFF * (2 / P + 1 / (3 * m**3))


def theta0(K: FieldCtx | int, P: int, dps: int = 30) -> Theta0:
    """Truncated Euler product over prime ideals of norm <= P."""
    if not isinstance(K, FieldCtx):
        K = FieldCtx(K)
    if P < 2:
        raise DomainError("prime bound must be >= 2")
    with mpmath.workdps(dps):
        val = mpmath.mpf(1)
        for q, mult in sorted(Counter(prime_norms_up_to(K, P)).items()):
            val *= euler_factor(q) ** mult
        T = theta0_tail_log(P)
        tail = float(val * -mpmath.expm1(-T))
        return Theta0(+val, P, tail)


# --- omega_infinity ------------------------------------------------------------
#
# Each region {|f_j(z)| <= 1} is invariant under a two-dimensional torus of
# phase rotations, so the volume reduces to an integral over the radii
# (r0, r1, r2) times the fraction of the one remaining relative phase psi
# satisfying the single binomial condition |A e^{i psi} + B| <= R.  That
# fraction is closed form.  log r_i are drawn from a Cauchy law; the radius
# entering the binomial is drawn from a defensive mixture with a uniform
# component on the window where |A - B| <= R, which keeps weights bounded
# on the thin part of the region.

OMEGA_PREFACTOR = 12 / math.pi
CHUNK = 1 << 18
_CAUCHY_SCALE = 1.0
_MIX = 0.5


def _phase_fraction(A, B, R):
    """Fraction of psi in [0, 2pi) with |A e^{i psi} + B| <= R."""
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (R * R - A * A - B * B) / (2 * A * B)
    t = np.where(A * B == 0, np.where(np.abs(A - B) <= R, 1.0, -1.0), t)
    return 1 - np.arccos(np.clip(t, -1, 1)) / np.pi


def _min(*xs):
    return np.minimum.reduce(xs)


@dataclass(frozen=True)
class OmegaRegion:
    """Reduced description of {z in C^3 : |f_j(z)| <= 1, j = 1..5}."""

    surface: str
    polys: tuple[str, ...]
    monomials: tuple[tuple[int, int, int], ...]  # radius exponents of monomial conditions
    binomial: object        # r -> (A, B, R)
    solved: int             # radius index entering the binomial window
    window: object          # r -> (lo, hi) for r[solved]

    def f_values(self, z0, z1, z2) -> list:
        return _POLY_FNS[self.surface](z0, z1, z2)


_POLY_FNS = {
    "S1": lambda a, b, c: [a * b * (a + c), b**3, b * b * (a + c), b * c * (a + c), a * c * (a + c)],
    "S2": lambda a, b, c: [a**3, a * b * c, a * a * b, a * a * c, c * (b * b + a * c)],
    "S3": lambda a, b, c: [a * b * b, b**3, b * b * c, b * (a * b + c * c), a * (a * b + c * c)],
    "S4": lambda a, b, c: [a**3, a * b * b, a * a * b, a * a * c, a * c * c + b**3],
}


def _s1_halfwidth(r):
    return _min(1 / r[1] ** 2, 1 / (r[0] * r[1]), 2 / r[0] ** 2)


def _s3_R(r):
    return np.minimum(1 / r[0], 1 / r[1])


OMEGA_REGIONS = {
    "S1": OmegaRegion(
        "S1",
        ("z0*z1*(z0+z2)", "z1^3", "z1^2*(z0+z2)", "z1*z2*(z0+z2)", "z0*z2*(z0+z2)"),
        ((0, 3, 0),),
        lambda r: (r[2], r[0], _min(1 / (r[0] * r[1]), 1 / r[1] ** 2, 1 / (r[1] * r[2]), 1 / (r[0] * r[2]))),
        2,
        lambda r: (np.maximum(r[0] - _s1_halfwidth(r), 0), r[0] + _s1_halfwidth(r)),
    ),
    "S2": OmegaRegion(
        "S2",
        ("z0^3", "z0*z1*z2", "z0^2*z1", "z0^2*z2", "z2*(z1^2+z0*z2)"),
        ((3, 0, 0), (1, 1, 1), (2, 1, 0), (2, 0, 1)),
        lambda r: (r[0] * r[2], r[1] ** 2, 1 / r[2]),
        0,
        lambda r: (np.maximum(r[1] ** 2 - 1 / r[2], 0) / r[2], (r[1] ** 2 + 1 / r[2]) / r[2]),
    ),
    "S3": OmegaRegion(
        "S3",
        ("z0*z1^2", "z1^3", "z1^2*z2", "z1*(z0*z1+z2^2)", "z0*(z0*z1+z2^2)"),
        ((1, 2, 0), (0, 3, 0), (0, 2, 1)),
        lambda r: (r[2] ** 2, r[0] * r[1], _s3_R(r)),
        2,
        lambda r: (np.sqrt(np.maximum(r[0] * r[1] - _s3_R(r), 0)), np.sqrt(r[0] * r[1] + _s3_R(r))),
    ),
    "S4": OmegaRegion(
        "S4",
        ("z0^3", "z0*z1^2", "z0^2*z1", "z0^2*z2", "z0*z2^2+z1^3"),
        ((3, 0, 0), (1, 2, 0), (2, 1, 0), (2, 0, 1)),
        lambda r: (r[0] * r[2] ** 2, r[1] ** 3, np.ones_like(r[0])),
        2,
        lambda r: (np.sqrt(np.maximum(r[1] ** 3 - 1, 0) / r[0]), np.sqrt((r[1] ** 3 + 1) / r[0])),
    ),
}


def _cauchy_pdf(s):
    c = _CAUCHY_SCALE
    return 1 / (math.pi * c * (1 + (s / c) ** 2))


def _omega_chunk(reg: OmegaRegion, seed: int, index: int, n: int, part: str | None) -> tuple[float, float]:
    """Sum and sum of squares of volume weights for one counter block."""
    bitgen = np.random.Philox(key=seed).advance(index * 8 * CHUNK)  # disjoint counter ranges
    rng = np.random.Generator(bitgen)
    u = rng.random((3, n))
    pick = rng.random(n) < _MIX
    v = rng.random(n)
    k = reg.solved
    with np.errstate(over="ignore", divide="ignore", invalid="ignore", under="ignore"):
        s = _CAUCHY_SCALE * np.tan(np.pi * (u - 0.5))
        r = np.exp(s)
        lo, hi = reg.window(r)
        ok_w = np.isfinite(lo) & np.isfinite(hi) & (hi > lo)
        r[k] = np.where(pick & ok_w, lo + v * (hi - lo), r[k])
        in_w = ok_w & (r[k] >= lo) & (r[k] <= hi)
        qk = np.where(
            ok_w,
            (1 - _MIX) * _cauchy_pdf(np.log(r[k])) / r[k] + _MIX * np.where(in_w, 1 / (hi - lo), 0.0),
            _cauchy_pdf(np.log(r[k])) / r[k],
        )
        q = qk
        for i in range(3):
            if i != k:
                q = q * _cauchy_pdf(np.log(r[i])) / r[i]
        ok = np.ones(n, dtype=bool)
        for e in reg.monomials:
            ok &= r[0] ** e[0] * r[1] ** e[1] * r[2] ** e[2] <= 1
        if part == "inner":
            ok &= r[0] <= 1
        elif part == "outer":
            ok &= r[0] > 1
        A, B, R = reg.binomial(r)
        F = _phase_fraction(A, B, R)
        w = (2 * math.pi) ** 3 * r[0] * r[1] * r[2] * F / q
        # non-finite weights only arise on the measure-zero boundary of the sampler
        w = np.where(ok & np.isfinite(w), w, 0.0)
    return float(w.sum()), float((w * w).sum())


def _chunks(samples: int):
    i = 0
    while samples > 0:
        n = min(CHUNK, samples)
        yield i, n
        samples -= n
        i += 1


def omega_volume(S, samples: int = 10**6, seed: int = 0, threads: int = 1, part: str | None = None) -> Estimate:
    """Volume of the region, with standard error; deterministic in (samples, seed)."""
    sid = _sid(S)
    if sid not in OMEGA_REGIONS:
        raise DomainError(f"no omega region for {sid}")
    if part not in (None, "inner", "outer"):
        raise ValueError(f"unknown part {part!r}")
    reg = OMEGA_REGIONS[sid]
    jobs = list(_chunks(samples))
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            res = list(ex.map(lambda j: _omega_chunk(reg, seed, j[0], j[1], part), jobs))
    else:
        res = [_omega_chunk(reg, seed, i, n, part) for i, n in jobs]
    # ordered reduction keeps the result independent of the thread count
    s1 = math.fsum(a for a, _ in res)
    s2 = math.fsum(b for _, b in res)
    mean = s1 / samples
    var = max(s2 / samples - mean * mean, 0.0)
    return Estimate(mean, math.sqrt(var / samples), samples, seed)


def omega_infinity(S, samples: int = 10**6, seed: int = 0, threads: int = 1, part: str | None = None) -> Estimate:
    """(12/pi) * vol{z in C^3 : |f_j(z)| <= 1}."""
    if samples < 10**5:
        raise DomainError("omega_infinity needs at least 10^5 samples")
    v = omega_volume(S, samples, seed, threads, part)
    return Estimate(OMEGA_PREFACTOR * v.value, OMEGA_PREFACTOR * v.stderr, samples, seed)


def omega_volume_polydisk(S, samples: int, seed: int = 0, truncate: float | None = None) -> Estimate:
    """Naive estimator: z_i = w_i / (1 - |w_i|) with w_i uniform in the unit disk.

    Unbiased, but its variance is infinite on the full region (the weight
    (1-|w|)^-3 is not square integrable there).  With ``truncate`` the
    region is cut to |z_i| <= truncate, where it is a usable cross-check.
    """
    reg = OMEGA_REGIONS[_sid(S)]
    rng = np.random.Generator(np.random.Philox(key=seed))
    s1 = s2 = 0.0
    for _, n in _chunks(samples):
        rad = np.sqrt(rng.random((3, n)))
        th = rng.random((3, n)) * 2 * math.pi
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            rho = rad / (1 - rad)
            z = rho * np.exp(1j * th)
            J = np.prod(1 / (1 - rad) ** 3, axis=0)
            ok = np.isfinite(J)
            for f in reg.f_values(*z):
                ok &= np.abs(f) <= 1
            if truncate is not None:
                ok &= np.all(rho <= truncate, axis=0)
            w = np.where(ok, J * math.pi**3, 0.0)
        s1 += float(w.sum())
        s2 += float((w * w).sum())
    mean = s1 / samples
    return Estimate(mean, math.sqrt(max(s2 / samples - mean * mean, 0.0) / samples), samples, seed)


def omega_volume_truncated(S, samples: int, seed: int, truncate: float) -> Estimate:
    """Reduced-phase estimator restricted to |z_i| <= truncate (test oracle pairing)."""
    reg = OMEGA_REGIONS[_sid(S)]
    s1 = s2 = 0.0
    for i, n in _chunks(samples):
        a, b = _omega_chunk_trunc(reg, seed, i, n, truncate)
        s1 += a
        s2 += b
    mean = s1 / samples
    return Estimate(mean, math.sqrt(max(s2 / samples - mean * mean, 0.0) / samples), samples, seed)


def _omega_chunk_trunc(reg, seed, index, n, T):
    bitgen = np.random.Philox(key=seed).advance(index * 8 * CHUNK)
    rng = np.random.Generator(bitgen)
    u = rng.random((3, n))
    with np.errstate(over="ignore", divide="ignore", invalid="ignore", under="ignore"):
        r = T * np.sqrt(u)  # radii of uniform points in the disk of radius T
        ok = np.ones(n, dtype=bool)
        for e in reg.monomials:
            ok &= r[0] ** e[0] * r[1] ** e[1] * r[2] ** e[2] <= 1
        A, B, R = reg.binomial(r)
        F = _phase_fraction(A, B, R)
        w = np.where(ok, (math.pi * T * T) ** 3 * F, 0.0)
    return float(w.sum()), float((w * w).sum())


# --- the constant ----------------------------------------------------------------


def peyre_constant(K: FieldCtx | int, alpha, theta0_value, omega_inf) -> float:
    """alpha * (2 pi)^6 h^6 / (|Delta|^4 w^6) * theta0 * omega_inf."""
    if not isinstance(K, FieldCtx):
        K = FieldCtx(K)
    vals = [float(alpha), float(theta0_value), float(omega_inf)]
    if any(not (v > 0) for v in vals):
        raise DomainError("alpha, theta0 and omega_inf must be positive")
    a, t, o = vals
    h, w, D = K.class_number, K.omega_count, abs(K.disc)
    return a * (2 * math.pi) ** 6 * h**6 / (D**4 * w**6) * t * o


def predicted_N(c: float, B: float) -> float:
    """Leading term c * B * (log B)^5."""
    return c * B * math.log(B) ** 5


@dataclass(frozen=True)
class Constants:
    surface: str
    field_d: int
    alpha: float
    theta0: float
    theta0_prime_bound: int
    theta0_tail: float
    omega_inf: float
    omega_inf_stderr: float
    c: float
    seed: int


def compute_constants(S, K: FieldCtx | int, prime_bound: int = 10**5, samples: int = 10**6,
                      seed: int = 0, threads: int = 1) -> Constants:
    """All factors of c.  alpha uses the reference rational value (reproduced
    exactly for S3/S4 and by Monte Carlo for S1/S2 in the test suite)."""
    if not isinstance(K, FieldCtx):
        K = FieldCtx(K)
    sid = _sid(S)
    get_surface(sid)
    alpha = ALPHA_POLYTOPES[sid].reference
    th = theta0(K, prime_bound)
    om = omega_infinity(sid, samples, seed, threads)
    c = peyre_constant(K, alpha, th.value, om.value)
    return Constants(sid, K.d, float(alpha), float(th.value), prime_bound, th.tail,
                     om.value, om.stderr, c, seed)
