import math

import pytest
from hypothesis import given, settings, strategies as st

from gzavg.errors import NotFundamental, NotNegative, NotOdd, TableSizeMismatch
from gzavg.quadratic_core import (
    IdealClassForm, chi_combination, class_group, divisors, kronecker,
    kronecker_epsilon, rep_number, rep_table, representation_count, validate_discriminant,
)

DISCS = (-3, -7, -11, -23, -47)


def brute_pairs(A, m):
    """Integer pairs with A(x, y) = m, from a box large enough for any such pair."""
    D = -A.discriminant
    ymax = math.isqrt(4 * A.a * m // D) + 1
    xmax = math.isqrt(4 * A.c * m // D) + 1
    return sum(1 for x in range(-xmax, xmax + 1) for y in range(-ymax, ymax + 1) if A(x, y) == m)


def legendre_symbol_oracle(a, p):
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def test_validate_examples():
    f = validate_discriminant(-7)
    assert (f.h, f.u) == (1, 1)
    f3 = validate_discriminant(-3)
    assert (f3.h, f3.u) == (1, 3)
    assert f3.flagged and not f.flagged


@pytest.mark.parametrize("D, exc", [(-4, NotOdd), (5, NotNegative), (0, NotNegative), (-5, NotFundamental), (-27, NotFundamental)])
def test_validate_errors(D, exc):
    with pytest.raises(exc):
        validate_discriminant(D)


def test_class_numbers():
    assert [validate_discriminant(D).h for D in DISCS] == [1, 1, 1, 3, 5]


def test_class_group_examples():
    assert [str(A) for A in class_group(validate_discriminant(-7)).classes] == ["(1,1,2)"]
    assert [str(A) for A in class_group(validate_discriminant(-3)).classes] == ["(1,1,1)"]
    g = class_group(validate_discriminant(-23))
    assert len(g) == 3 and g.principal == IdealClassForm(1, 1, 6)


def test_class_group_stable():
    f = validate_discriminant(-47)
    assert class_group(f).classes == class_group(f).classes
    assert all(A.is_reduced() and A.discriminant == -47 for A in class_group(f).classes)


def test_kronecker_examples():
    f = validate_discriminant(-7)
    assert kronecker_epsilon(f, 2) == 1
    assert kronecker_epsilon(f, 7) == 0
    assert kronecker_epsilon(f, 1) == 1


@pytest.mark.parametrize("D", DISCS)
def test_kronecker_matches_legendre_at_odd_primes(D):
    for p in (3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53):
        assert kronecker(D, p) == legendre_symbol_oracle(D, p)


@settings(max_examples=300)
@given(st.sampled_from(DISCS), st.integers(1, 10 ** 6), st.integers(1, 10 ** 6))
def test_kronecker_multiplicative(D, m, n):
    assert kronecker(D, m * n) == kronecker(D, m) * kronecker(D, n)


def test_rep_number_examples():
    f = validate_discriminant(-7)
    A = class_group(f).principal
    assert rep_number(A, f, 1) == 1
    assert rep_number(A, f, 2) == 2
    for q in (3, 5, 13, 17, 19):
        assert f.epsilon(q) == -1
        assert rep_number(A, f, q) == 0
    assert rep_number(A, f, 0) == 0


@pytest.mark.parametrize("D", DISCS)
def test_rep_number_brute_force(D):
    f = validate_discriminant(D)
    for A in class_group(f).classes:
        for m in range(1, 301):
            assert representation_count(A, m) == brute_pairs(A, m)
            assert rep_number(A, f, m) * 2 * f.u == brute_pairs(A, m)


@pytest.mark.parametrize("D", DISCS)
def test_class_sum_is_ideal_count(D):
    f = validate_discriminant(D)
    g = class_group(f)
    tables = [rep_table(A, f, 10_000) for A in g.classes]
    for m in range(1, 10_001):
        assert sum(int(t[m]) for t in tables) == sum(f.epsilon(d) for d in divisors(m))


def test_rep_table_matches_rep_number():
    f = validate_discriminant(-23)
    for A in class_group(f).classes:
        t = rep_table(A, f, 2000)
        assert t[0] == 0
        assert all(t[m] == rep_number(A, f, m) for m in range(1, 2001))
        assert not t.flags.writeable


def test_chi_combination():
    f = validate_discriminant(-23)
    g = class_group(f)
    trivial = [1, 1, 1]
    for m in range(1, 60):
        assert chi_combination(g, trivial, m) == f.ideal_count(m)
    w = complex(math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3))
    chi = {g.principal: 1, g[1]: w, g[2]: w.conjugate()}
    assert chi_combination(g, chi, 1) == 1
    with pytest.raises(TableSizeMismatch):
        chi_combination(g, [1, 1], 3)
    with pytest.raises(TableSizeMismatch):
        chi_combination(g, {g.principal: 1}, 3)


def test_chi_combination_single_class():
    f = validate_discriminant(-7)
    assert chi_combination(class_group(f), [1], 1) == 1


@given(st.integers(1, 5000))
def test_divisors(n):
    ds = divisors(n)
    assert ds == sorted(ds)
    assert ds == [d for d in range(1, n + 1) if n % d == 0]
