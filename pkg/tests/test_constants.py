import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull, HalfspaceIntersection

from torsorcount import constants as C
from torsorcount.qfield import DomainError, FieldCtx

NAMES = ["S1", "S2", "S3", "S4"]


# --- alpha ---------------------------------------------------------------------

def hull_alpha(name):
    """Exact polytope volume from its vertices (independent of sampling)."""
    P = C.ALPHA_POLYTOPES[name]
    A = np.array(P.rows, dtype=float)
    hs = np.vstack([np.hstack([A, -np.ones((len(A), 1))]),
                    np.hstack([-np.eye(5), np.zeros((5, 1))])])
    interior = np.full(5, 1e-3)
    return ConvexHull(HalfspaceIntersection(hs, interior).intersections).volume / 3


def test_alpha_exact():
    assert C.alpha_polytope("S4") == Fraction(1, 345600)
    assert C.alpha_polytope("S3") == Fraction(1, 34560)
    for s in ("S1", "S2"):
        with pytest.raises(DomainError):
            C.alpha_polytope(s)


@pytest.mark.parametrize("name", NAMES)
def test_alpha_hull_matches_reference(name):
    assert hull_alpha(name) == pytest.approx(float(C.ALPHA_POLYTOPES[name].reference), rel=1e-9)


@pytest.mark.parametrize("name", NAMES)
def test_alpha_mc(name):
    est = C.alpha_polytope(name, "mc", samples=10**6, seed=3)
    ref = float(C.ALPHA_POLYTOPES[name].reference)
    assert abs(est.value - ref) < 4 * est.stderr
    assert C.alpha_polytope(name, "mc", samples=10**5, seed=3) == C.alpha_polytope(name, "mc", samples=10**5, seed=3)


def test_alpha_errors():
    with pytest.raises(DomainError):
        C.alpha_polytope("S1", "mc", samples=10)
    with pytest.raises(DomainError):
        C.alpha_polytope("S0")


# --- theta0 --------------------------------------------------------------------

def test_theta0_examples():
    with mpmath.workdps(30):
        assert C.theta0(-1, 2).value == pytest.approx(mpmath.mpf(17) / 256, rel=1e-25)
        assert C.theta0(-3, 3).value == pytest.approx(mpmath.mpf(1792) / 6561, rel=1e-25)
    assert C.theta0(-1, 10).value < C.theta0(-1, 2).value


def test_theta0_empty_product():
    # no prime ideal of norm 2 in Q(sqrt -3): 2 is inert
    assert C.theta0(-3, 2).value == 1


@pytest.mark.parametrize("d", [-1, -2, -3, -7, -11, -5, -23])
def test_theta0_tail_covers_change(d):
    a, b = C.theta0(d, 2000), C.theta0(d, 20000)
    assert 0 < a.value - b.value < a.tail
    assert b.value > 0


@settings(max_examples=200, deadline=None)
@given(x=st.floats(1e-6, 0.5))
def test_tail_coefficient(x):
    with mpmath.workdps(40):
        f = (1 - mpmath.mpf(x)) ** 6 * (1 + 6 * mpmath.mpf(x) + mpmath.mpf(x) ** 2)
        assert -mpmath.log(f) <= C.TAIL_COEFF * mpmath.mpf(x) ** 2


def test_tail_coefficient_is_sharp():
    # the ratio -log f(x) / x^2 tends to 20 at 0, so no smaller constant works
    with mpmath.workdps(40):
        x = mpmath.mpf("1e-8")
        assert -mpmath.log(C.euler_factor(1 / x)) / x**2 == pytest.approx(20, rel=1e-6)


# --- omega_infinity ------------------------------------------------------------

def brute_polydisk(name, samples, T, seed):
    """Uniform points in the radius-T polydisk, all five conditions checked directly."""
    reg = C.OMEGA_REGIONS[name]
    rng = np.random.default_rng(seed)
    r = T * np.sqrt(rng.random((3, samples)))
    z = r * np.exp(2j * np.pi * rng.random((3, samples)))
    ok = np.ones(samples, dtype=bool)
    for f in reg.f_values(*z):
        ok &= np.abs(f) <= 1
    vol = (math.pi * T * T) ** 3
    p = ok.mean()
    return vol * p, vol * math.sqrt(p * (1 - p) / samples)


@pytest.mark.parametrize("name", NAMES)
def test_phase_reduction_matches_brute_force(name):
    v, e = brute_polydisk(name, 2 * 10**6, 1.5, 11)
    red = C.omega_volume_truncated(name, 10**6, 5, 1.5)
    assert abs(v - red.value) < 4 * math.hypot(e, red.stderr)


def test_sampler_on_known_region():
    # {|z0| <= 1, |z1| <= 1, |z2 + z0| <= 1} has volume pi^3
    reg = C.OmegaRegion(
        "T", (), ((1, 0, 0), (0, 1, 0)),
        lambda r: (r[2], r[0], np.ones_like(r[0])), 2,
        lambda r: (np.maximum(r[0] - 1, 0), r[0] + 1),
    )
    n = 10**6
    s1, s2 = C._omega_chunk(reg, 4, 0, n, None)
    mean = s1 / n
    se = math.sqrt((s2 / n - mean**2) / n)
    assert abs(mean - math.pi**3) < 4 * se
    assert se < 0.02 * math.pi**3


@settings(max_examples=200, deadline=None)
@given(A=st.floats(0.01, 5), B=st.floats(0.01, 5), R=st.floats(0.01, 5))
def test_phase_fraction(A, B, R):
    psi = np.linspace(0, 2 * np.pi, 20001)[:-1]
    frac = float(np.mean(np.abs(A * np.exp(1j * psi) + B) <= R))
    assert abs(float(C._phase_fraction(np.array(A), np.array(B), np.array(R))) - frac) < 2e-3


@pytest.mark.parametrize("name", NAMES)
def test_omega_two_seeds(name):
    a = C.omega_infinity(name, 10**6, seed=1)
    b = C.omega_infinity(name, 10**6, seed=2)
    assert a.value > 0 and b.value > 0
    assert abs(a.value - b.value) < 3 * math.hypot(a.stderr, b.stderr)


def test_omega_deterministic_across_threads():
    a = C.omega_infinity("S4", 10**6, seed=7, threads=1)
    b = C.omega_infinity("S4", 10**6, seed=7, threads=4)
    assert a == b


def test_omega_error_scaling():
    a = C.omega_infinity("S1", 10**6, seed=9)
    b = C.omega_infinity("S1", 4 * 10**6, seed=9)
    assert 0.8 <= (a.stderr / b.stderr) / 2 <= 1.2


def test_omega_parts_add_up():
    full = C.omega_volume("S2", 10**6, seed=3)
    inner = C.omega_volume("S2", 10**6, seed=3, part="inner")
    outer = C.omega_volume("S2", 10**6, seed=3, part="outer")
    assert inner.value + outer.value == pytest.approx(full.value, rel=1e-12)


def test_omega_errors():
    with pytest.raises(DomainError):
        C.omega_infinity("S1", 1000)
    with pytest.raises(DomainError):
        C.omega_volume("S0", 10**5)


# --- the constant --------------------------------------------------------------

def test_peyre_arithmetic():
    want = (2 * math.pi) ** 6 / (3**4 * 6**6)
    assert C.peyre_constant(-3, 1, 1, 1) == pytest.approx(want, rel=1e-14)
    assert want == pytest.approx(0.01628121, rel=1e-6)
    # h = 2, w = 2, |Delta| = 20
    assert C.peyre_constant(-5, 1, 1, 1) == pytest.approx((2 * math.pi) ** 6 * 2**6 / (20**4 * 2**6))


@settings(max_examples=50, deadline=None)
@given(a=st.floats(1e-8, 1), t=st.floats(1e-3, 1), o=st.floats(1, 1e3))
def test_peyre_linear(a, t, o):
    K = FieldCtx(-7)
    c = C.peyre_constant(K, a, t, o)
    assert c > 0
    assert C.peyre_constant(K, a, t, 2 * o) == pytest.approx(2 * c, rel=1e-12)


def test_peyre_rejects_nonpositive():
    for bad in [(0, 1, 1), (1, -1, 1), (1, 1, float("nan"))]:
        with pytest.raises(DomainError):
            C.peyre_constant(-1, *bad)


def test_compute_constants_fields():
    c = C.compute_constants("S4", -1, prime_bound=1000, samples=10**5, seed=2)
    assert c.surface == "S4" and c.field_d == -1 and c.seed == 2
    assert c.alpha == 1 / 345600
    assert c.c == pytest.approx(C.peyre_constant(-1, c.alpha, c.theta0, c.omega_inf))
    assert C.predicted_N(c.c, math.e) == pytest.approx(c.c * math.e)
