from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsorcount.qfield import (
    DomainError,
    FieldCtx,
    FracIdl,
    Idl,
    disk_points,
    hnf,
    iroot,
    is_squarefree,
    prime_norms_up_to,
    reduced_forms,
)

FIELDS = [-1, -2, -3, -5, -7, -11, -14, -15, -23, -47]
small = st.integers(-40, 40)
pair = st.tuples(small, small)


def brute_disk(K, X):
    r = int(2 * (abs(X) + 1) ** 0.5) + 3
    return {(a, b) for a, b in product(range(-r, r + 1), repeat=2) if K.norm((a, b)) <= X}


class TestField:
    def test_norm_examples(self, Qi, Qw, Q5):
        assert Qi.norm((1, 1)) == 2
        assert Qw.norm((0, 1)) == 1
        assert Q5.norm((1, 1)) == 6

    @pytest.mark.parametrize("d", [0, 1, 5, -4, -12])
    def test_rejects_bad_d(self, d):
        with pytest.raises(DomainError):
            FieldCtx(d)

    def test_rejects_large_disc(self):
        with pytest.raises(DomainError):
            FieldCtx(-1001)
        assert FieldCtx(-995).disc == -995

    @pytest.mark.parametrize("d,w", [(-1, 4), (-3, 6), (-5, 2), (-7, 2)])
    def test_units(self, d, w):
        K = FieldCtx(d)
        assert len(K.units) == w == K.omega_count
        assert all(K.norm(u) == 1 for u in K.units)

    @pytest.mark.parametrize("d", FIELDS)
    @settings(max_examples=40, deadline=None)
    @given(x=pair, y=pair)
    def test_norm_multiplicative(self, d, x, y):
        K = FieldCtx(d)
        assert K.norm(K.mul(x, y)) == K.norm(x) * K.norm(y)
        assert K.mul(x, K.conj(x)) == (K.norm(x), 0)

    def test_iroot(self):
        assert [iroot(x, 3) for x in (0, 1, 7, 8, 26, 27)] == [0, 1, 1, 2, 2, 3]
        assert iroot(10**40, 2) == 10**20

    def test_squarefree(self):
        assert is_squarefree(-5) and not is_squarefree(-12) and not is_squarefree(18)


class TestIdeals:
    def test_from_generators(self, Qi, Q5):
        I = Idl.from_pairs(Qi, [(2, 0), (1, 1)])
        assert I == Idl.from_pairs(Qi, [(1, 1)]) and I.norm() == 2
        assert Idl.from_pairs(Qi, [(0, 0)]).is_zero()
        J = Idl.from_pairs(Q5, [(2, 0), (1, 1)])
        assert J.norm() == 2
        assert not FracIdl(J).is_principal()

    def test_products(self, Q5, Qi):
        J = Idl.from_pairs(Q5, [(2, 0), (1, 1)])
        assert J * J == Idl.from_pairs(Q5, [(2, 0)])
        assert J * Q5.unit_ideal == J
        inv = FracIdl(Idl.from_pairs(Qi, [(1, 1)])).inverse()
        assert inv.contains(Qi.elem(1, -1, 2))
        assert not inv.contains(Qi.elem(1, 0, 2))
        assert not inv.contains(Qi.elem(1, 0, 4))

    @pytest.mark.parametrize("d", [-1, -5, -6, -23])
    @settings(max_examples=30, deadline=None)
    @given(a=pair, b=pair, c=pair)
    def test_norm_multiplicative(self, d, a, b, c):
        K = FieldCtx(d)
        if (0, 0) in (a, c):
            return
        I = Idl.from_pairs(K, [a, b])
        J = Idl.from_pairs(K, [c])
        assert (I * J).norm() == I.norm() * J.norm()
        assert all((I * J).contains(K.mul(x, c)) for x in (a, b))
        # conj(I) * I = (N I)
        assert I * I.conj() == Idl.from_pairs(K, [(I.norm(), 0)])

    @settings(max_examples=40, deadline=None)
    @given(a=pair, b=pair)
    def test_hnf_membership(self, a, b):
        K = FieldCtx(-7)
        I = Idl.from_pairs(K, [a, b])
        if I.is_zero():
            return
        assert I.contains(a) and I.contains(b)
        x, y = I.basis()
        assert hnf([x, y]) == I.hnf


class TestPrimesAndClasses:
    def test_prime_norms(self):
        assert sorted(prime_norms_up_to(FieldCtx(-1), 10)) == [2, 5, 5, 9]
        assert sorted(prime_norms_up_to(FieldCtx(-5), 5)) == [2, 3, 3, 5]
        assert prime_norms_up_to(FieldCtx(-2), 1) == []

    @pytest.mark.parametrize("d,h", [(-1, 1), (-2, 1), (-3, 1), (-5, 2), (-6, 2), (-14, 4),
                                     (-15, 2), (-23, 3), (-47, 5), (-71, 7)])
    def test_class_numbers(self, d, h):
        K = FieldCtx(d)
        assert K.class_number == h == len(reduced_forms(K.disc))

    def test_class_reps_inequivalent(self, Q5):
        reps = Q5.class_reps
        assert reps[0] == Q5.unit_ideal and len(reps) == 2
        assert not FracIdl(reps[1]).is_principal()


class TestDisk:
    def test_examples(self, Qi, Qw):
        O = Qi.unit_ideal.hnf
        assert set(disk_points(Qi, O, 2)) == {(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1),
                                              (1, 1), (1, -1), (-1, 1), (-1, -1)}
        assert set(disk_points(Qi, O, 1, 2)) == {(0, 0)}
        assert len(set(disk_points(Qw, Qw.unit_ideal.hnf, 1))) == 7

    @pytest.mark.parametrize("d", [-1, -3, -5, -19])
    @settings(max_examples=25, deadline=None)
    @given(X=st.integers(0, 60), gens=st.lists(pair, min_size=1, max_size=2))
    def test_matches_brute_force(self, d, X, gens):
        K = FieldCtx(d)
        I = Idl.from_pairs(K, gens)
        if I.is_zero():
            return
        got = list(disk_points(K, I.hnf, X))
        assert len(got) == len(set(got))
        assert set(got) == {v for v in brute_disk(K, X) if I.contains(v)}

    def test_fractional_radius(self, Qi):
        O = Qi.unit_ideal.hnf
        assert set(disk_points(Qi, O, 5, 2)) == {v for v in brute_disk(Qi, 2) if Fraction(Qi.norm(v)) <= Fraction(5, 2)}
