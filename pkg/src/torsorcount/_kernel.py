"""Compiled inner loops for the torsor walk (eta_7, eta_8, eta_9 for a fixed prefix).

Element arithmetic is exact int64 with every product checked against 2^60;
any overflow aborts the prefix so the caller can use the exact Python path.
Norm comparisons run in float64 and return "uncertain" inside a relative
margin, so every pair reported as certain is decided exactly.
"""

from __future__ import annotations

import numpy as np
from numba import njit

LIMIT = float(2**60)
MARGIN = 1e-9

PASS, FAIL, UNSURE = 0, 1, 2


@njit(cache=True)
def _mul(a, b, c, d, t, n):
    # (a + b w)(c + d w), w^2 = t w + n; returns ok flag
    p1 = float(a) * float(c)
    p2 = float(b) * float(d)
    p3 = float(a) * float(d)
    p4 = float(b) * float(c)
    if abs(p1) > LIMIT or abs(p2) * (abs(n) + abs(t) + 1) > LIMIT or abs(p3) > LIMIT or abs(p4) > LIMIT:
        return 0, 0, False
    bd = b * d
    return a * c + n * bd, a * d + b * c + t * bd, True


@njit(cache=True)
def _pow_mul(x, y, vx, vy, e, t, n):
    ok = True
    for _ in range(e):
        x, y, ok = _mul(x, y, vx, vy, t, n)
        if not ok:
            return 0, 0, False
    return x, y, True


@njit(cache=True)
def _normf(x, y, t, n):
    fx = float(x)
    fy = float(y)
    return fx * fx + t * fx * fy - n * fy * fy


@njit(cache=True)
def _cmp(lhs, rhs):
    if lhs <= rhs * (1 - MARGIN):
        return PASS
    if lhs > rhs * (1 + MARGIN):
        return FAIL
    return UNSURE


@njit(cache=True)
def _gcd(a, b):
    while b:
        a, b = b, a % b
    return abs(a)


@njit(cache=True)
def _copr(na, nb):
    # na, nb: ideal norms (0 for the zero ideal)
    g = _gcd(na, nb)
    if g == 1:
        return PASS
    if na == 0 or nb == 0:
        return FAIL
    return UNSURE


@njit(cache=True)
def _ibasis(vx, vy, cb, nn, t, n, out):
    # Z-basis of v * conj(N) / N(N) written into out[0:4]; False on overflow
    for k in range(2):
        x, y, ok = _mul(vx, vy, cb[2 * k], cb[2 * k + 1], t, n)
        if not ok:
            return False
        out[2 * k] = x // nn
        out[2 * k + 1] = y // nn
    return True


@njit(cache=True)
def _lattice_unit(p, q):
    # do the four vectors p[0:2], p[2:4], q[0:2], q[2:4] span Z^2?
    g = 0
    vx = (p[0], p[2], q[0], q[2])
    vy = (p[1], p[3], q[1], q[3])
    for i in range(4):
        for j in range(i + 1, 4):
            a = float(vx[i]) * float(vy[j])
            b = float(vx[j]) * float(vy[i])
            if abs(a) > LIMIT or abs(b) > LIMIT:
                return UNSURE
            g = _gcd(g, vx[i] * vy[j] - vx[j] * vy[i])
            if g == 1:
                return PASS
    return FAIL


@njit(cache=True)
def walk_tail(t, n, bound_f,
              mono_px, mono_py, mono_npre, mono_e7, mono_e8, mono_D, mono_zero,
              c_kind, c_t1, c_t2, c_den, c_factor,
              b8_mono, b8_factor,
              x7, y7, n7, nn7,
              x8, y8, n8, nn8, zero8,
              tor_a, tor_b, Ba_x, Ba_y, Bb_x, Bb_y, E,
              a9, b9, c9, nn9, zero9_ok,
              pre_inorm, pre_basis, cb7, cb8, cb9,
              cp7, cp8, cp9):
    """Scan all (eta_7, eta_8) for one prefix.

    c_kind: 0 = monomial checked after eta_7, 1 = monomial checked after
    eta_8, 2 = two-term condition.  cp7/cp8/cp9: prefix indices j < 6 whose
    pair with eta_7 / eta_8 / eta_9 must be coprime; cp8 and cp9 may hold 6
    (eta_7) and cp9 may hold 7 (eta_8).
    Returns (i7, i8, status, v9x, v9y) rows and an overflow flag;
    i8 = -1 stands for eta_8 = 0.
    """
    out = []
    ncond = c_kind.shape[0]
    q7 = np.zeros(4, dtype=np.int64)
    q8 = np.zeros(4, dtype=np.int64)
    q9 = np.zeros(4, dtype=np.int64)
    for i7 in range(x7.shape[0]):
        vx7 = x7[i7]
        vy7 = y7[i7]
        N7 = n7[i7]
        z7 = N7 == 0
        st7 = PASS
        # monomial conditions closed by eta_7
        for c in range(ncond):
            if c_kind[c] != 0:
                continue
            m = c_t1[c]
            if mono_zero[m] or (z7 and mono_e7[m] > 0):
                continue
            lhs = mono_npre[m] * float(N7) ** mono_e7[m]
            r = _cmp(lhs, c_factor[c] * bound_f * float(mono_D[m]) ** 2)
            if r == FAIL:
                st7 = FAIL
                break
            if r == UNSURE:
                st7 = UNSURE
        if st7 == FAIL:
            continue
        I7 = N7 // nn7
        if not z7 and not _ibasis(vx7, vy7, cb7, nn7, t, n, q7):
            return out, True
        for j in cp7:
            r = _copr(pre_inorm[j], I7)
            if r == UNSURE:
                r = _lattice_unit(pre_basis[j], q7)
            if r == FAIL:
                st7 = FAIL
                break
            if r == UNSURE:
                st7 = UNSURE
        if st7 == FAIL:
            continue
        # bound on N(v_8) from the monomial conditions containing eta_8
        k8 = np.inf
        for q in range(b8_mono.shape[0]):
            m = b8_mono[q]
            if mono_zero[m] or (z7 and mono_e7[m] > 0):
                continue
            rest = mono_npre[m] * float(N7) ** mono_e7[m]
            lim = b8_factor[q] * bound_f * float(mono_D[m]) ** 2 / rest
            kk = lim ** (1.0 / mono_e8[m])
            if kk < k8:
                k8 = kk
        k8 = k8 * (1 + MARGIN) + 1
        for i8 in range(-1, x8.shape[0]):
            if i8 == -1:
                if not zero8:
                    continue
                vx8 = 0
                vy8 = 0
                N8 = 0
            else:
                N8 = n8[i8]
                if N8 > k8:
                    break
                vx8 = x8[i8]
                vy8 = y8[i8]
            z8 = N8 == 0
            st = st7
            # eta_9 from the torsor equation: v9 = (Ba eta7^.. eta8^.. + Bb ...) / E
            wx, wy, ok = _pow_mul(Ba_x, Ba_y, vx7, vy7, mono_e7[tor_a], t, n)
            if ok:
                wx, wy, ok = _pow_mul(wx, wy, vx8, vy8, mono_e8[tor_a], t, n)
            if not ok:
                return out, True
            ux, uy, ok = _pow_mul(Bb_x, Bb_y, vx7, vy7, mono_e7[tor_b], t, n)
            if ok:
                ux, uy, ok = _pow_mul(ux, uy, vx8, vy8, mono_e8[tor_b], t, n)
            if not ok:
                return out, True
            if abs(float(wx) + float(ux)) > LIMIT or abs(float(wy) + float(uy)) > LIMIT:
                return out, True
            wx += ux
            wy += uy
            if wx % E != 0 or wy % E != 0:
                continue
            v9x = wx // E
            v9y = wy // E
            if v9y % c9 != 0 or (v9x - b9 * (v9y // c9)) % a9 != 0:
                continue
            z9 = v9x == 0 and v9y == 0
            if z9 and not zero9_ok:
                continue
            fail = False
            for c in range(ncond):
                k = c_kind[c]
                if k == 0:
                    continue
                if k == 1:
                    m = c_t1[c]
                    if mono_zero[m] or (z7 and mono_e7[m] > 0) or (z8 and mono_e8[m] > 0):
                        continue
                    lhs = mono_npre[m] * float(N7) ** mono_e7[m] * float(N8) ** mono_e8[m]
                    r = _cmp(lhs, c_factor[c] * bound_f * float(mono_D[m]) ** 2)
                else:
                    # two-term condition |T1 + T2| / |den| <= factor * bound
                    sx = 0
                    sy = 0
                    for h in range(2):
                        m = c_t1[c] if h == 0 else c_t2[c]
                        mo = c_t2[c] if h == 0 else c_t1[c]
                        px, py, ok = _pow_mul(mono_px[m], mono_py[m], vx7, vy7, mono_e7[m], t, n)
                        if ok:
                            px, py, ok = _pow_mul(px, py, vx8, vy8, mono_e8[m], t, n)
                        if ok:
                            px, py, ok = _mul(px, py, mono_D[mo], 0, t, n)
                        if not ok:
                            return out, True
                        if abs(float(sx) + float(px)) > LIMIT or abs(float(sy) + float(py)) > LIMIT:
                            return out, True
                        sx += px
                        sy += py
                    dm = c_den[c]
                    lhs = _normf(sx, sy, t, n) * float(mono_D[dm]) ** 2
                    ND = float(mono_D[c_t1[c]]) * float(mono_D[c_t2[c]])
                    r = _cmp(lhs, c_factor[c] * bound_f * mono_npre[dm] * ND * ND)
                if r == FAIL:
                    fail = True
                    break
                if r == UNSURE:
                    st = UNSURE
            if fail:
                continue
            I8 = N8 // nn8
            if not z8 and not _ibasis(vx8, vy8, cb8, nn8, t, n, q8):
                return out, True
            for j in cp8:
                a = I7 if j == 6 else pre_inorm[j]
                r = _copr(a, I8)
                if r == UNSURE:
                    r = _lattice_unit(q7 if j == 6 else pre_basis[j], q8)
                if r == FAIL:
                    fail = True
                    break
                if r == UNSURE:
                    st = UNSURE
            if fail:
                continue
            if not z9 and not _ibasis(v9x, v9y, cb9, nn9, t, n, q9):
                return out, True
            for j in cp9:
                if j == 6:
                    a = I7
                elif j == 7:
                    a = I8
                else:
                    a = pre_inorm[j]
                if z9:
                    if a != 1:
                        fail = True
                        break
                    continue
                if a == 0:
                    fail = True
                    break
                if a == 1:
                    continue
                if j == 6:
                    r = _lattice_unit(q7, q9)
                elif j == 7:
                    r = _lattice_unit(q8, q9)
                else:
                    r = _lattice_unit(pre_basis[j], q9)
                if r == FAIL:
                    fail = True
                    break
                if r == UNSURE:
                    st = UNSURE
            if fail:
                continue
            out.append((i7, i8, st, v9x, v9y))
    return out, False
