"""Legendre functions, digamma at integers, and L(1, eps), L'(1, eps)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError, PrecisionNotReached
from .quadratic_core import FieldData

EULER_GAMMA_STR = "0.577215664901532860606512090082402431042159335939923598805767"
EULER_GAMMA = float(EULER_GAMMA_STR)

# x >= this uses the hypergeometric expansion of Q_n
_Q_SERIES_THRESHOLD = 1.5
_EPS = np.finfo(float).eps


def legendre_p(n: int, x):
    """P_n(x) by the three-term recurrence.

    Works on floats, Fractions and numpy arrays; a Fraction argument gives
    an exact rational result.
    """
    if n < 0:
        raise DomainError("degree must be nonnegative")
    p_prev, p = 1, x
    if n == 0:
        return x * 0 + 1
    for j in range(1, n):
        p_prev, p = p, ((2 * j + 1) * x * p - j * p_prev) / (j + 1)
    return p


@lru_cache(maxsize=None)
def _q_prefactor(n: int) -> float:
    # sqrt(pi) n! / (Gamma(n + 3/2) 2^(n+1)) = n! (n+1)! 2^(n+1) / (2n+2)!
    return float(Fraction(math.factorial(n) * math.factorial(n + 1) * 2 ** (n + 1), math.factorial(2 * n + 2)))


def _q_series(n: int, x: np.ndarray) -> np.ndarray:
    z = 1.0 / (x * x)
    a, b, c = (n + 1) / 2, (n + 2) / 2, n + 1.5
    term = np.ones_like(x)
    total = np.ones_like(x)
    j = 0
    while True:
        term = term * ((a + j) * (b + j) / ((c + j) * (j + 1))) * z
        total = total + term
        j += 1
        if j > a * b - c and float(np.max(term * z / (1 - z) / total)) < _EPS / 4:
            break
        if j > 5000:  # pragma: no cover - z <= 0.45 converges long before this
            raise PrecisionNotReached("hypergeometric series for Q_n did not converge")
    return _q_prefactor(n) * x ** (-(n + 1)) * total


def _q_scalar_small(n: int, x: float) -> float:
    # 1 < x < 1.5: forward recurrence when acosh(x) is tiny, Miller's
    # backward recurrence otherwise (Q_n is the minimal solution).
    q0 = 0.5 * math.log((x + 1) / (x - 1))
    if n == 0:
        return q0
    xi = math.acosh(x)
    if 20.0 / xi > 5000:
        q_prev, q = q0, x * q0 - 1
        for j in range(1, n):
            q_prev, q = q, ((2 * j + 1) * x * q - j * q_prev) / (j + 1)
        return q
    top = n + int(20.0 / xi) + 10
    q_next, q = 0.0, 1e-300
    value_n = None
    for j in range(top, 0, -1):
        # Q_{j-1} = ((2j+1) x Q_j - (j+1) Q_{j+1}) / j
        q_next, q = q, ((2 * j + 1) * x * q - (j + 1) * q_next) / j
        if j - 1 == n:
            value_n = q
        if abs(q) > 1e250:
            q_next /= 1e250
            q /= 1e250
            if value_n is not None:
                value_n /= 1e250
    return value_n * (q0 / q)


def legendre_q(n: int, x):
    """Legendre function of the second kind Q_n(x) for real x > 1.

    Accepts a scalar or a numpy array; raises DomainError unless every
    argument exceeds 1.
    """
    if n < 0:
        raise DomainError("degree must be nonnegative")
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 1)):
        raise DomainError("Q_n is evaluated only for x > 1")
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)
    big = arr >= _Q_SERIES_THRESHOLD
    if np.any(big):
        out[big] = _q_series(n, arr[big])
    for i in np.flatnonzero(~big):
        out[i] = _q_scalar_small(n, float(arr[i]))
    return float(out[0]) if scalar else out


def digamma_integer(k: int) -> float:
    """psi(k) = -gamma + H_{k-1} for a positive integer k."""
    if k < 1:
        raise DomainError("digamma_integer needs k >= 1")
    return math.fsum([-EULER_GAMMA] + [1.0 / j for j in range(1, k)])


@lru_cache(maxsize=None)
def _bernoulli_even(count: int) -> tuple[Fraction, ...]:
    # B_0..B_{2*count} via the standard recurrence; returns B_2, B_4, ...
    B = [Fraction(1)]
    for m in range(1, 2 * count + 1):
        B.append(-sum(math.comb(m + 1, j) * B[j] for j in range(m)) / (m + 1))
    return tuple(B[2 * r] for r in range(1, count + 1))


@dataclass(frozen=True)
class DirichletValues:
    field: FieldData
    l_one: float
    l_prime_one: float
    log_derivative: float
    error: float


def _em_sums(field: FieldData, blocks: int, terms: int) -> tuple[float, float, float]:
    """L(1) and L'(1) by residue-class Euler-Maclaurin tails.

    Sums n < blocks*q directly, then for each residue a the tail
    sum_{j >= blocks} f(jq + a) with f(x) = 1/x and f(x) = log(x)/x.
    Returns (L, L', a-posteriori error bound).
    """
    q = field.abs_D
    eps = [field.epsilon(a) for a in range(q)]
    n = np.arange(1, blocks * q, dtype=float)
    chi = np.array([eps[int(v) % q] for v in range(1, blocks * q)], dtype=float)
    head_l = [float(v) for v in chi / n]
    head_lp = [float(v) for v in -chi * np.log(n) / n]

    bern = _bernoulli_even(terms + 1)
    tail_l, tail_lp = [], []
    err = 0.0
    for a in range(1, q + 1):
        e = eps[a % q]
        if e == 0:
            continue
        x = blocks * q + a
        lx = math.log(x)
        # integral from x to infinity; the divergent constants cancel over a
        tail_l.append(e * (-lx / q))
        tail_lp.append(-e * (-(lx * lx) / 2 / q))
        tail_l.append(e * 0.5 / x)
        tail_lp.append(-e * 0.5 * lx / x)
        for r in range(1, terms + 2):
            m = 2 * r - 1
            harmonic = math.fsum(1.0 / j for j in range(1, m + 1))
            # f^(m)(x) for f = 1/x and f = log(x)/x with m odd
            d_inv = -math.factorial(m) / x ** (m + 1)
            d_log = -math.factorial(m) * (lx - harmonic) / x ** (m + 1)
            coef = float(bern[r - 1]) / math.factorial(2 * r) * q ** m
            if r <= terms:
                tail_l.append(-e * coef * d_inv)
                tail_lp.append(e * coef * d_log)
            else:
                err += abs(coef * d_inv) + abs(coef * d_log)
    L = math.fsum(head_l + tail_l)
    Lp = math.fsum(head_lp + tail_lp)
    rounding = 8 * _EPS * (math.fsum(abs(v) for v in head_lp) + sum(abs(v) for v in tail_lp) + 1.0)
    return L, Lp, err + rounding


def dirichlet_values(field: FieldData, precision: float = 1e-12) -> DirichletValues:
    """L(1, eps) and L'(1, eps) to absolute error at most ``precision``."""
    if precision <= 0:
        raise DomainError("precision must be positive")
    blocks = 8
    while blocks <= 4096:
        L, Lp, err = _em_sums(field, blocks, terms=8)
        if err <= precision:
            return DirichletValues(field, L, Lp, Lp / L, err)
        blocks *= 2
    raise PrecisionNotReached(f"error bound {err:.3g} above requested {precision:.3g}")


def check_l_log_bound(values: DirichletValues) -> bool:
    return abs(values.log_derivative) <= math.log(values.field.abs_D)
