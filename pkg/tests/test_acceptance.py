"""Acceptance criteria 1-9, each reported as one PASS/FAIL line at the end of the run."""

import math
import random
import time

import pytest
from conftest import record

from torsorcount.constants import alpha_polytope, compute_constants, omega_infinity, theta0
from torsorcount.enumeration import direct_points
from torsorcount.height import ProjPoint
from torsorcount.qfield import FieldCtx
from torsorcount.surfaces import find_lines, get_surface, line_is_contained
from torsorcount.torsor import torsor_enumerate

pytestmark = pytest.mark.slow

NAMES = ["S1", "S2", "S3", "S4"]
FIELDS = [-1, -3, -5]
BOUNDS = [1, 2, 5, 10, 20]


@pytest.fixture(scope="module")
def grid():
    """Torsor walk and exhaustive search on the 60-case grid."""
    out = {}
    t0 = time.perf_counter()
    for d in FIELDS:
        K = FieldCtx(d)
        for s in NAMES:
            S = get_surface(s)
            for B in BOUNDS:
                out[d, s, B] = (torsor_enumerate(s, K, B, collect_keys=True), direct_points(S, K, B))
    return out, time.perf_counter() - t0


def test_criterion_1_bijection(grid):
    res, secs = grid
    bad = [(k, t.count, len(p)) for k, (t, p) in res.items() if t.count != len(p)]
    ok = not bad and len(res) == 60 and secs < 600
    record(1, ok, f"{60 - len(bad)}/60 torsor counts equal the exhaustive count ({secs:.0f}s)")
    assert ok, bad


def test_criterion_2_divisibility(grid):
    res, _ = grid
    bad = [k for k, (t, _) in res.items() if t.total % FieldCtx(k[0]).omega_count ** 6]
    record(2, not bad, f"sum |M_C(B)| divisible by w^6 in {60 - len(bad)}/60 cases")
    assert not bad


def test_criterion_3_covering(grid):
    res, _ = grid
    bad = []
    for k, (t, pts) in res.items():
        w6 = FieldCtx(k[0]).omega_count ** 6
        if set(t.keys) != set(pts) or any(m != w6 for m in t.keys.values()):
            bad.append(k)
    record(3, not bad, f"Psi images cover each point exactly w^6 times in {60 - len(bad)}/60 cases")
    assert not bad


def test_criterion_4_alpha():
    e3, e4 = alpha_polytope("S3"), alpha_polytope("S4")
    m1 = alpha_polytope("S1", "mc", samples=10**7, seed=0)
    m2 = alpha_polytope("S2", "mc", samples=10**7, seed=0)
    r1, r2 = m1.value * 8640 - 1, m2.value * 21600 - 1
    ok = str(e3) == "1/34560" and str(e4) == "1/345600" and abs(r1) < 0.02 and abs(r2) < 0.02
    record(4, ok, f"exact S3={e3}, S4={e4}; MC S1 rel.err {r1:+.4f}, S2 rel.err {r2:+.4f}")
    assert ok


def test_criterion_5_theta0():
    lines, ok = [], True
    for d in (-1, -2, -3, -7, -11):
        a, b = theta0(d, 10**5), theta0(d, 2 * 10**5)
        delta = float(abs(a.value - b.value))
        ok &= delta < 1e-5 and a.tail > delta
        lines.append(f"d={d}: {delta:.1e}<{a.tail:.1e}")
    record(5, ok, "change P=1e5->2e5 below 1e-5 and below tail bound; " + ", ".join(lines))
    assert ok


def test_criterion_6_omega():
    parts, ok = [], True
    for s in NAMES:
        a = omega_infinity(s, 10**7, seed=1, threads=4)
        b = omega_infinity(s, 10**7, seed=2, threads=4)
        c = omega_infinity(s, 4 * 10**7, seed=1, threads=4)
        z = abs(a.value - b.value) / math.hypot(a.stderr, b.stderr)
        halving = a.stderr / c.stderr / 2
        ok &= z < 3 and 0.8 <= halving <= 1.2
        parts.append(f"{s}: {a.value:.2f} z={z:.2f} se ratio/2={halving:.3f}")
    record(6, ok, "; ".join(parts))
    assert ok


def test_criterion_7_height(grid):
    res, _ = grid
    rng = random.Random(2024)
    fails = 0
    for _ in range(10**4):
        K = FieldCtx(rng.choice([-1, -2, -3, -5, -6, -7, -15, -23]))
        v = [(rng.randint(-50, 50), rng.randint(-50, 50)) for _ in range(5)]
        lam = (rng.randint(-50, 50), rng.randint(-50, 50))
        if lam == (0, 0) or all(x == (0, 0) for x in v):
            continue
        p = ProjPoint.from_pairs(K, v)
        q = ProjPoint.from_pairs(K, [K.mul(lam, x) for x in v])
        fails += p.height() != q.height()
    low = sum(p.height() < 1 for _, pts in res.values() for p in pts.values())
    npts = sum(len(pts) for _, pts in res.values())
    ok = fails == 0 and low == 0
    record(7, ok, f"{fails} scaling failures in 10^4 trials; H >= 1 on all {npts} enumerated points")
    assert ok


@pytest.mark.xfail(reason="non-gating growth diagnostic, expected to miss at desk scale", strict=False)
def test_criterion_8_growth():
    K = FieldCtx(-1)
    c = compute_constants("S4", K, samples=10**7, seed=0, threads=4).c
    rows = []
    for B in (10**3, 10**4, 10**5):
        n = torsor_enumerate("S4", K, B).count
        rows.append((B, n, n / (B * math.log(B) ** 5)))
    last = rows[-1][2]
    ok = 0 < last < math.inf and 0.1 <= last / c <= 10
    table = ", ".join(f"N({B:.0e})={n} ratio={r:.3e}" for B, n, r in rows)
    record(8, ok, f"(non-gating) c={c:.3e}; {table}; ratio/c={last / c:.0f}")
    assert ok


def test_criterion_9_lines():
    parts, ok = [], True
    for s in NAMES:
        S = get_surface(s)
        a, b = find_lines(S, 20), find_lines(S, 40)
        good = a == b and all(line_is_contained(S, ln) for ln in a)
        ok &= good
        parts.append(f"{s}: {len(a)}")
    record(9, ok, "line sets equal at H0=20 and 40, all contained; " + ", ".join(parts))
    assert ok
