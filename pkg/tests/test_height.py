from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from torsorcount.height import ProjPoint, canonical_key, key_from_pairs, proportional
from torsorcount.qfield import DomainError, FieldCtx, Idl

pair = st.tuples(st.integers(-30, 30), st.integers(-30, 30))
vec = st.lists(pair, min_size=5, max_size=5)
fields = st.sampled_from([-1, -2, -3, -5, -6, -15, -23])


def P(K, *pairs):
    return ProjPoint.from_pairs(K, pairs)


def test_content_examples(Qi, Q5):
    assert P(Qi, (1, 1), (1, 0), (0, 0), (0, 0), (0, 0)).content() == Qi.unit_ideal
    c = P(Qi, (2, 0), (0, 2), (0, 0), (0, 0), (0, 0)).content()
    assert c == Idl.from_pairs(Qi, [(2, 0)]) and c.norm() == 4
    assert P(Q5, (2, 0), (1, 1), (0, 0), (0, 0), (0, 0)).content().norm() == 2


def test_height_examples(Qi, Q5):
    assert P(Qi, (1, 0), (0, 0), (0, 0), (0, 0), (0, 0)).height() == 1
    assert P(Qi, (1, 1), (1, 0), (0, 0), (0, 0), (0, 0)).height() == 2
    assert P(Q5, (2, 0), (1, 1), (0, 0), (0, 0), (0, 0)).height() == 3


def test_key_examples(Qi):
    z = (0, 0)
    assert canonical_key(P(Qi, (2, 0), z, z, z, (2, 0))) == canonical_key(P(Qi, (1, 0), z, z, z, (1, 0)))
    assert canonical_key(P(Qi, (0, 1), (1, 0), z, z, z)) == canonical_key(P(Qi, (1, 0), (0, -1), z, z, z))
    a = P(Qi, (1, 0), (1, 0), (1, 0), (-2, 0), (-2, 0))
    b = P(Qi, (1, 0), (1, 0), (1, 0), (2, 0), (2, 0))
    assert canonical_key(a) != canonical_key(b)


def test_rational_coordinates(Qi):
    p = ProjPoint(Qi, [Qi.elem(1, 0, 2), 1, 0, 0, 0])
    assert p == P(Qi, (1, 0), (2, 0), (0, 0), (0, 0), (0, 0))
    assert p.height() == 4


def test_zero_point_rejected(Qi):
    with pytest.raises(DomainError):
        P(Qi, *[(0, 0)] * 5)


@settings(max_examples=300, deadline=None)
@given(d=fields, v=vec, lam=pair)
def test_scaling_invariance(d, v, lam):
    K = FieldCtx(d)
    assume(any(x != (0, 0) for x in v) and lam != (0, 0))
    p = ProjPoint.from_pairs(K, v)
    q = ProjPoint.from_pairs(K, [K.mul(lam, x) for x in v])
    assert p.height() == q.height()
    assert p.height() >= 1
    assert canonical_key(p) == canonical_key(q)


@settings(max_examples=200, deadline=None)
@given(d=fields, v=vec, w=vec)
def test_key_iff_proportional(d, v, w):
    K = FieldCtx(d)
    assume(any(x != (0, 0) for x in v) and any(x != (0, 0) for x in w))
    p, q = ProjPoint.from_pairs(K, v), ProjPoint.from_pairs(K, w)
    assert (key_from_pairs(K, v) == key_from_pairs(K, w)) == proportional(p, q)


@settings(max_examples=100, deadline=None)
@given(d=fields, v=vec)
def test_height_bounds(d, v):
    # N(content) <= min nonzero N(x_i), so H >= 1 and H <= max N(x_i)
    K = FieldCtx(d)
    assume(any(x != (0, 0) for x in v))
    h = ProjPoint.from_pairs(K, v).height()
    assert 1 <= h <= max(K.norm(x) for x in v)
    assert isinstance(h, Fraction)
