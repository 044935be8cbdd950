import random

import pytest

from torsorcount.height import ProjPoint
from torsorcount.qfield import DomainError, FieldCtx
from torsorcount.surfaces import (
    find_lines,
    get_surface,
    in_U,
    line_is_contained,
    on_surface,
    psi_eval,
)

NAMES = ["S1", "S2", "S3", "S4"]


def P(K, *xs):
    return ProjPoint.from_pairs(K, [(x, 0) for x in xs])


def test_membership_examples(Qi):
    assert on_surface(get_surface("S2"), P(Qi, 1, 0, 0, 0, 0))
    assert on_surface(get_surface("S1"), P(Qi, 1, 1, 1, -2, -2))
    assert not on_surface(get_surface("S1"), P(Qi, 1, 1, 1, 1, 1))


def test_psi_examples(Qi):
    p = psi_eval(get_surface("S1"), Qi, [1, 1, 1])
    assert p == P(Qi, 2, -1, 2, 2, 2) and on_surface(get_surface("S1"), p)
    assert psi_eval(get_surface("S2"), Qi, [1, 1, 1]) == P(Qi, 1, 1, 1, 1, -2)
    assert psi_eval(get_surface("S4"), Qi, [1, 0, 1]) == P(Qi, 1, 0, 0, 1, -1)


@pytest.mark.parametrize("name", NAMES)
@pytest.mark.parametrize("d", [-1, -3, -7])
def test_psi_lands_on_surface(name, d):
    K = FieldCtx(d)
    S = get_surface(name)
    rng = random.Random(d)
    for _ in range(50):
        y = [(rng.randint(-6, 6), rng.randint(-6, 6)) for _ in range(3)]
        if all(v == (0, 0) for v in y):
            continue
        p = psi_eval(S, K, [K.elem(*v) for v in y])
        if p is not None:
            assert on_surface(S, p)


def test_line_examples(Qi):
    L4 = find_lines(get_surface("S4"))
    assert any(ln.contains_int((0, 1, 0, 0, 0)) and ln.contains_int((0, 0, 0, 0, 1)) for ln in L4)
    L1 = find_lines(get_surface("S1"))
    assert any(ln.contains_int((0, 1, 0, 0, 0)) and ln.contains_int((0, 0, 0, 0, 1)) for ln in L1)
    assert {n: len(find_lines(get_surface(n))) for n in NAMES} == {"S1": 3, "S2": 3, "S3": 2, "S4": 1}


@pytest.mark.parametrize("name", NAMES)
def test_lines_saturate_and_contained(name):
    S = get_surface(name)
    a, b = find_lines(S, 20), find_lines(S, 40)
    assert a == b
    assert all(line_is_contained(S, ln) for ln in a)
    assert all(len(ln.forms) == 3 for ln in a)


def test_in_U_examples(Qi):
    assert not in_U(get_surface("S4"), P(Qi, 0, 1, 0, 0, 0))
    assert in_U(get_surface("S2"), P(Qi, 1, 1, 1, 1, -2))
    assert in_U(get_surface("S1"), P(Qi, 1, 1, 1, -2, -2))
    with pytest.raises(DomainError):
        in_U(get_surface("S1"), P(Qi, 1, 1, 1, 1, 1))


def test_unknown_surface():
    with pytest.raises(DomainError):
        get_surface("S9")
