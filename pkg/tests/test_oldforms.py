import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gzavg.errors import MissingThetaParams, SingularGram
from gzavg.oldforms import (
    closed_form_report, default_theta_params, derivative_center, euler_transfer,
    even_log_derivative, gram, orthogonalize, closed_forms, ramanujan_ok, satake_from_ap,
)
from gzavg.special_fn import digamma_integer

PRIMES = [5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 97, 101, 997]


@st.composite
def admissible(draw, p_choices=PRIMES, k_max=10):
    p = draw(st.sampled_from(p_choices))
    k = draw(st.integers(1, k_max))
    bound = math.isqrt(4 * p ** (2 * k - 1))
    return p, k, draw(st.integers(-bound, bound))


def test_satake_examples():
    p, k = 7, 3
    s = satake_from_ap(p, k, 0)
    assert s.alpha == pytest.approx(1j * p ** (k - 0.5))
    assert s.beta == pytest.approx(-1j * p ** (k - 0.5))
    edge = 2 * p ** (k - 0.5)
    d = satake_from_ap(p, k, edge)
    assert d.alpha == pytest.approx(d.beta) and d.alpha.real == pytest.approx(p ** (k - 0.5))
    delta = satake_from_ap(2, 6, -24)
    assert delta.alpha * delta.beta == pytest.approx(2 ** 11)
    assert delta.alpha + delta.beta == pytest.approx(-24)


def test_ramanujan_ok_exact():
    assert ramanujan_ok(5, 1, 4)  # 16 <= 20
    assert not ramanujan_ok(5, 1, 5)
    assert ramanujan_ok(2, 6, -24)


def test_euler_transfer_examples():
    s = satake_from_ap(11, 2, 0)
    f = euler_transfer(s, "levelp_to_p2")
    assert f(0.3) == 0
    with pytest.raises(MissingThetaParams):
        euler_transfer(s, "level1_to_p2")
    with pytest.raises(ValueError):
        euler_transfer(s, "bogus")


@settings(max_examples=200)
@given(admissible())
def test_level1_to_p2_coefficients(pka):
    p, k, a = pka
    g, d = default_theta_params(1)
    f = euler_transfer(satake_from_ap(p, k, a, g, d), "level1_to_p2")
    pk = float(p) ** (2 * k - 1)
    assert f.numerator[4] == pk
    assert f.numerator[2] == pytest.approx(a * a - 2 * pk + 1, rel=1e-9, abs=1e-6 * pk)
    if a == 0:
        assert f.numerator[3] == 0


@settings(max_examples=100)
@given(admissible(k_max=6), st.floats(0.05, 20.0), st.sampled_from([3, 7, 11, 23]))
def test_odd_derivative_examples(pka, L, absD):
    p, k, a = pka
    s = satake_from_ap(p, k, a)
    value = derivative_center(s, "odd", L, absD)
    assert value == euler_transfer(s, "levelp_to_p2").at_s(p, k) * L
    assert value == pytest.approx(a * (p ** -k - p ** (-2 * k)) * L, rel=1e-9, abs=1e-300)
    if a == 0:
        assert value == 0


def test_even_log_derivative_from_gamma_factor():
    for p, k, absD in ((5, 2, 7), (13, 6, 23), (101, 1, 3)):
        h = 1e-5
        f = lambda s: s * math.log(p * absD) - 2 * s * math.log(2 * math.pi) + 2 * math.lgamma(s)
        assert even_log_derivative(k, p, absD) == pytest.approx(-(f(k + h) - f(k - h)) / (2 * h), rel=1e-7)
        assert even_log_derivative(k, p, absD) == pytest.approx(2 * math.log(2 * math.pi) - math.log(p * absD) - 2 * digamma_integer(k))


def test_derivative_center_bad_sign():
    with pytest.raises(ValueError):
        derivative_center(satake_from_ap(5, 2, 1), "neither", 1.0, 7)


def test_gram_examples():
    p, k, a = 7, 2, 3
    s = satake_from_ap(p, k, a)
    G1 = gram(1, s)
    assert G1[0, 0] == p * (p + 1)
    Gp = gram(p, s)
    assert Gp[1, 0] == Fraction(p) ** (1 - 2 * k) * a
    z = gram(1, satake_from_ap(p, k, 0))
    assert z[2, 0] == -Fraction(p) ** (1 - 2 * k)
    with pytest.raises(ValueError):
        gram(3, s)


@settings(max_examples=300, deadline=None)
@given(admissible())
def test_gram_positive_definite_and_orthogonal(pka):
    p, k, a = pka
    s = satake_from_ap(p, k, a)
    for level in (1, p):
        G = gram(level, s)
        assert G.is_positive_definite()
        assert np.all(np.linalg.eigvalsh(G.as_array() / np.sqrt(np.outer(np.diag(G.as_array()), np.diag(G.as_array())))) > 0)
        ob = orthogonalize(G, s)
        assert max(ob.residuals(G)) < 1e-10
        # exact orthogonality in rational arithmetic
        for i in range(G.size):
            for j in range(i + 1, G.size):
                assert G.inner(ob.vectors[i], ob.vectors[j]) == 0
        assert ob.closed_fp_coeff == ob.solved_fp_coeff
    ob1 = orthogonalize(gram(1, s), s)
    assert ob1.closed_Cp == ob1.solved_Cp


def test_orthogonalize_examples():
    p, k, a = 11, 2, 5
    s = satake_from_ap(p, k, a)
    P = Fraction(p)
    obp = orthogonalize(gram(p, s), s)
    assert obp.solved_fp_coeff == P ** (-2 * k) * a
    ob1 = orthogonalize(gram(1, s), s)
    assert ob1.solved_fp_coeff == P ** (2 - 2 * k) * a / (P * (P + 1))
    zero = satake_from_ap(p, k, 0)
    assert orthogonalize(gram(1, zero), zero).solved_Cp == 0


def test_c1_closed_form_discrepancy_reported():
    r = closed_form_report(7, 2, 3)
    assert r["Cp_match"] and r["levelp_fp_match"] and r["level1_fp_match"]
    assert not r["C1_match"]
    P, a = Fraction(7), Fraction(3)
    R = (P + 1) ** 2 - P ** (2 - 4) * a * a
    solved = (P ** (1 - 8) * a * a - P ** (-4) * (P + 1)) / R
    assert r["C1_solved"] == float(solved)
    assert closed_forms(7, 2, 3)["C1"] != solved


def test_singular_gram():
    # far outside the Ramanujan range the level-p Gram loses definiteness
    s = satake_from_ap(5, 1, 100)
    with pytest.raises(SingularGram):
        orthogonalize(gram(5, s), s)


def test_small_prime_level_p_gram_needs_ramanujan_margin():
    # det = p^(2-2k) (1 - a^2 p^(-2k)) > 0 iff a^2 < p^(2k); at p = 3 this is
    # stricter than the Ramanujan bound a^2 <= 4 p^(2k-1)
    p, k = 3, 1
    a = math.isqrt(4 * p ** (2 * k - 1))
    assert ramanujan_ok(p, k, a)
    assert not gram(p, satake_from_ap(p, k, a)).is_positive_definite()


def test_complex_satake_parameters_are_conjugate():
    s = satake_from_ap(13, 2, 7)
    assert s.alpha == pytest.approx(s.beta.conjugate())
    assert abs(s.alpha) == pytest.approx(13 ** 1.5)
    assert cmath.isclose(s.alpha * s.beta, 13 ** 3)
