"""Fourier coefficients of the kernel forms Phi_nu and of the level-N kernel g.

For nu with eps(nu) = +1 ("split" branch) the m-th coefficient is a
prefactor times

    a_{m,nu} = sum_{0 < n <= m|D|/nu} a_{m,n,nu} + a_{m,0,nu} + sum_{n >= 1} a_{m,-n,nu},

an infinite sum whose negative-index tail is truncated with a rigorous-in-form
bound.  For eps(nu) = -1 ("inert" branch) the sum is finite and evaluated in
exact rational arithmetic, then scaled by the log-multiplier of the even
functional equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import BranchError, CaseMismatch, RamifiedPrime, RangeError, TailDiverges
from .quadratic_core import (
    REP_TABLE_CAP,
    FieldData,
    IdealClassForm,
    divisors,
    rep_number,
    rep_table,
)
from .special_fn import digamma_integer, dirichlet_values, legendre_p, legendre_q

LOG_2PI = math.log(2 * math.pi)

SPLIT = "split"
INERT = "inert"


# ---------------------------------------------------------------- weights


class DivisorWeights:
    """Provider of the divisor weights sigma'_nu(n) and sigma_{nu,A}(n).

    ``split(n, nu)`` is used on the eps(nu) = +1 branch, ``inert(n, nu)`` on
    the eps(nu) = -1 branch.  Subclasses may override ``split_table`` with a
    vectorised version; the default loops over ``split``.
    """

    def split(self, n: int, nu: int) -> float:
        raise NotImplementedError

    def inert(self, n: int, nu: int):
        raise NotImplementedError

    def split_table(self, nmax: int, nu: int) -> np.ndarray:
        out = np.zeros(nmax + 1)
        for n in range(1, nmax + 1):
            out[n] = self.split(n, nu)
        return out


class FunctionWeights(DivisorWeights):
    """Wrap two plain callables ``(n, nu) -> value``."""

    def __init__(self, split: Callable[[int, int], float], inert: Callable[[int, int], float]):
        self._split = split
        self._inert = inert

    def split(self, n, nu):
        return self._split(n, nu)

    def inert(self, n, nu):
        return self._inert(n, nu)


@lru_cache(maxsize=16)
def _sigma_sieve(D: int, nmax: int) -> tuple[np.ndarray, np.ndarray]:
    # S0[n] = sum_{d|n} eps(d),  S1[n] = sum_{d|n} eps(d) log d
    from .quadratic_core import kronecker

    q = -D
    eps = [kronecker(D, a) for a in range(q)]
    s0 = np.zeros(nmax + 1)
    s1 = np.zeros(nmax + 1)
    for d in range(1, nmax + 1):
        e = eps[d % q]
        if e:
            s0[d::d] += e
            s1[d::d] += e * math.log(d)
    return s0, s1


class GrossZagierWeights(DivisorWeights):
    """Default weights.

    sigma'_nu(n)   = sum_{d | n} eps(d) log(n / d^2)
    sigma_{nu,A}(n) = sum_{d | n} eps(d)

    Both are independent of nu and A; they are the n-th coefficients of the
    derivative and the value of the weight-one Eisenstein series attached
    to eps.
    """

    def __init__(self, field: FieldData):
        self.field = field

    def __eq__(self, other):
        return isinstance(other, GrossZagierWeights) and other.field == self.field

    def __hash__(self):
        return hash(("gz", self.field))

    def split(self, n: int, nu: int) -> float:
        return math.fsum(self.field.epsilon(d) * math.log(n / (d * d)) for d in divisors(n))

    def inert(self, n: int, nu: int) -> int:
        return sum(self.field.epsilon(d) for d in divisors(n))

    def split_table(self, nmax: int, nu: int) -> np.ndarray:
        size = max(1024, 1 << (nmax - 1).bit_length())
        s0, s1 = _sigma_sieve(self.field.D, size)
        n = np.arange(nmax + 1, dtype=float)
        out = np.zeros(nmax + 1)
        out[1:] = np.log(n[1:]) * s0[1 : nmax + 1] - 2 * s1[1 : nmax + 1]
        return out


# ---------------------------------------------------------------- params


@dataclass(frozen=True)
class KernelParams:
    k: int
    field: FieldData
    A: IdealClassForm
    nu: int
    m: int
    divisor_weight: DivisorWeights | None = None
    tail_tol: float = 1e-9
    max_terms: int = 20_000

    def __post_init__(self):
        if self.k < 1 or self.nu < 1 or self.m < 1:
            raise ValueError("k, nu and m must be positive")
        if not self.tail_tol > 0:
            raise ValueError("tail_tol must be positive")
        if math.gcd(self.nu, self.field.abs_D) != 1:
            raise RamifiedPrime(f"nu={self.nu} is not prime to D={self.field.D}")
        if self.divisor_weight is None:
            object.__setattr__(self, "divisor_weight", GrossZagierWeights(self.field))

    @property
    def branch(self) -> str:
        return SPLIT if self.field.epsilon(self.nu) == 1 else INERT

    @property
    def mD(self) -> int:
        return self.m * self.field.abs_D


@dataclass(frozen=True)
class PhiCoefficient:
    m: int
    nu: int
    value: float | None
    raw_a: float
    tail_error: float
    branch: str
    exact: Fraction | None = None
    n_tail_terms: int = 0
    tail_converged: bool = True
    multiplier: float = 1.0
    prefactor: float = 1.0


@dataclass(frozen=True)
class KernelAssembly:
    N: int
    p: int | None
    k: int
    coefficients: dict[int, float]
    error_bounds: dict[int, float]
    weights: dict[int, Fraction] = dc_field(default_factory=dict)
    components: dict[int, dict[int, PhiCoefficient]] = dc_field(default_factory=dict)


@lru_cache(maxsize=64)
def log_derivative_L(field: FieldData) -> float:
    return dirichlet_values(field).log_derivative


def _constant_part(k: int, field: FieldData) -> float:
    # -2 log 2pi + 2 psi(k) + 2 L'/L(1, eps)
    return math.fsum([-2 * LOG_2PI, 2 * digamma_integer(k), 2 * log_derivative_L(field)])


def kernel_term(params: KernelParams, n: int) -> float:
    """a_{m,n,nu} on the split branch."""
    if params.branch != SPLIT:
        raise BranchError(f"eps({params.nu}) = -1: kernel_term is defined on the split branch only")
    k, field, A, nu, m = params.k, params.field, params.A, params.nu, params.m
    mD = params.mD
    w = params.divisor_weight
    if n > 0:
        if n * nu > mD:
            raise RangeError(f"n={n} exceeds m|D|/nu = {mD / nu}")
        r = rep_number(A, field, mD - n * nu)
        if r == 0:
            return 0.0
        return -legendre_p(k - 1, 1 - 2 * n * nu / mD) * w.split(n, nu) * r
    if n < 0:
        n = -n
        r = rep_number(A, field, n * nu + mD)
        if r == 0:
            return 0.0
        return 2 * legendre_q(k - 1, 1 + 2 * n * nu / mD) * w.split(n, nu) * r
    r = rep_number(A, field, m)
    if r == 0:
        return 0.0
    return field.h / field.u * r * (math.log(nu * field.abs_D / m) + _constant_part(k, field))


def tail_bound(params: KernelParams, n0: int) -> float:
    """Bound for sum_{n >= n0} |a_{m,-n,nu}|.

    Uses the per-term estimate |a_{m,-n,nu}| < 2^(8-2k) n^(1/2-k) nu^(1/4-k) (m|D|)^k
    and sum_{n >= n0} n^-s <= n0^-s + n0^(1-s)/(s-1).
    """
    k = params.k
    if k < 2:
        raise TailDiverges("the per-term tail estimate does not converge for k = 1")
    if n0 < 1:
        raise ValueError("n0 must be positive")
    s = k - 0.5
    scale = 2.0 ** (8 - 2 * k) * params.nu ** (0.25 - k) * float(params.mD) ** k
    return scale * (n0 ** -s + n0 ** (1 - s) / (s - 1))


def _tail_length(params: KernelParams) -> tuple[int, bool]:
    """Number of negative-index terms to sum explicitly."""
    cap = min(params.max_terms, (REP_TABLE_CAP - params.mD) // params.nu)
    if tail_bound(params, cap + 1) > params.tail_tol:
        return cap, False
    lo, hi = 0, cap
    while lo < hi:
        mid = (lo + hi) // 2
        if tail_bound(params, mid + 1) <= params.tail_tol:
            hi = mid
        else:
            lo = mid + 1
    return lo, True


def _split_coefficient(params: KernelParams) -> PhiCoefficient:
    k, field, A, nu, m = params.k, params.field, params.A, params.nu, params.m
    mD = params.mD
    terms = [kernel_term(params, n) for n in range(1, mD // nu + 1)]
    terms.append(kernel_term(params, 0))

    n_tail, converged = _tail_length(params)
    if n_tail:
        n = np.arange(1, n_tail + 1, dtype=np.int64)
        reps = rep_table(A, field, n_tail * nu + mD)[n * nu + mD]
        sig = params.divisor_weight.split_table(n_tail, nu)[1:]
        live = (reps != 0) & (sig != 0)
        x = 1.0 + 2.0 * n[live] * nu / mD
        tail = 2.0 * legendre_q(k - 1, x) * sig[live] * reps[live]
        terms.extend(tail.tolist())
    tail_error = tail_bound(params, n_tail + 1)
    return PhiCoefficient(
        m=m, nu=nu, value=None, raw_a=math.fsum(terms), tail_error=tail_error,
        branch=SPLIT, n_tail_terms=n_tail, tail_converged=converged,
    )


def _inert_coefficient(params: KernelParams) -> PhiCoefficient:
    k, field, A, nu, m = params.k, params.field, params.A, params.nu, params.m
    mD = params.mD
    total = Fraction(field.h * rep_number(A, field, m), field.u)
    exact = True
    for n in range(1, mD // nu + 1):
        r = rep_number(A, field, mD - n * nu)
        if r == 0:
            continue
        sigma = params.divisor_weight.inert(n, nu)
        if not isinstance(sigma, (int, Fraction)):
            exact = False
        total += legendre_p(k - 1, Fraction(mD - 2 * n * nu, mD)) * sigma * r
    return PhiCoefficient(
        m=m, nu=nu, value=None, raw_a=float(total), tail_error=0.0, branch=INERT,
        exact=total if exact else None,
    )


def kernel_coefficient(params: KernelParams) -> PhiCoefficient:
    """The bracketed sum a_{m,nu} (``value`` is left unset)."""
    if params.branch == SPLIT:
        if params.k < 2:
            raise TailDiverges("split branch needs k >= 2 for a convergent truncation bound")
        return _split_coefficient(params)
    return _inert_coefficient(params)


def phi_prefactor(k: int, field: FieldData, nu: int, m: int) -> float:
    """2^(2k-1) pi^k |D|^(-1/2) nu^(1-k) (k-1)!/(2k-2)! m^(k-1)."""
    ratio = math.factorial(k - 1) / math.factorial(2 * k - 2)
    return 2.0 ** (2 * k - 1) * math.pi ** k / math.sqrt(field.abs_D) * float(nu) ** (1 - k) * ratio * float(m) ** (k - 1)


def inert_multiplier(k: int, field: FieldData, nu: int, N: int) -> float:
    """2 log 2pi - log(N^2 |D| / nu) - 2 psi(k)."""
    return math.fsum([2 * LOG_2PI, -math.log(N * N * field.abs_D / nu), -2 * digamma_integer(k)])


_coefficient_cache: dict = {}


def _cached_coefficient(params: KernelParams) -> PhiCoefficient:
    try:
        return _coefficient_cache[params]
    except KeyError:
        pass
    except TypeError:  # unhashable custom weights
        return kernel_coefficient(params)
    value = kernel_coefficient(params)
    if len(_coefficient_cache) > 20_000:
        _coefficient_cache.clear()
    _coefficient_cache[params] = value
    return value


def phi_coefficient(params: KernelParams, N: int | None = None) -> PhiCoefficient:
    """Full m-th Fourier coefficient of Phi_nu."""
    base = _cached_coefficient(params)
    pre = phi_prefactor(params.k, params.field, params.nu, params.m)
    mult = 1.0
    if base.branch == INERT:
        if N is None:
            raise ValueError("the inert branch needs the level N")
        mult = inert_multiplier(params.k, params.field, params.nu, N)
    return PhiCoefficient(
        m=base.m, nu=base.nu, value=pre * mult * base.raw_a, raw_a=base.raw_a,
        tail_error=abs(pre * mult) * base.tail_error, branch=base.branch, exact=base.exact,
        n_tail_terms=base.n_tail_terms, tail_converged=base.tail_converged,
        multiplier=mult, prefactor=pre,
    )


# ---------------------------------------------------------------- assembly


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _mobius(n: int) -> int:
    result, f = 1, 2
    while f * f <= n:
        if n % f == 0:
            n //= f
            if n % f == 0:
                return 0
            result = -result
        f += 1
    return -result if n > 1 else result


def level_weights(field: FieldData, k: int, N: int) -> dict[int, Fraction]:
    """Weights mu(e) eps(e) N^(k-1) e^(-k) keyed by nu = N/e, zero weights dropped."""
    out = {}
    for e in divisors(N):
        mu = _mobius(e)
        if mu == 0:
            continue
        w = Fraction(mu * field.epsilon(e) * N ** (k - 1), e ** k)
        if w:
            out[N // e] = w
    return out


def g_normalizer(k: int) -> float:
    """(4 pi)^k / (k-1)!"""
    return (4 * math.pi) ** k / math.factorial(k - 1)


def _check_level(field: FieldData, p: int | None, N: int) -> None:
    if N == 1:
        return
    if p is None or not is_prime(p):
        raise ValueError(f"p={p} must be a prime")
    if N not in (p, p * p):
        raise ValueError(f"level must be 1, p or p^2; got N={N} with p={p}")
    if field.epsilon(p) == 0:
        raise RamifiedPrime(f"p={p} divides D={field.D}")


def coefficient_of_g(
    field: FieldData, A: IdealClassForm, k: int, p: int | None, N: int, m: int,
    tail_tol: float = 1e-9, divisor_weight: DivisorWeights | None = None,
    max_terms: int = 20_000,
) -> tuple[float, float, dict[int, PhiCoefficient]]:
    """a_m(g) with its error bound and the contributing Phi coefficients."""
    _check_level(field, p, N)
    norm = g_normalizer(k)
    parts, errs, comps = [], [], {}
    for nu, w in level_weights(field, k, N).items():
        params = KernelParams(k, field, A, nu, m, divisor_weight, tail_tol, max_terms)
        phi = phi_coefficient(params, N)
        comps[nu] = phi
        parts.append(norm * float(w) * phi.value)
        errs.append(norm * abs(float(w)) * phi.tail_error)
    return math.fsum(parts), math.fsum(errs), comps


def assemble_g(
    field: FieldData, A: IdealClassForm, k: int, p: int | None, N: int, M: int,
    tail_tol: float = 1e-9, divisor_weight: DivisorWeights | None = None,
    max_terms: int = 20_000,
) -> KernelAssembly:
    """Coefficients a_m(g), 1 <= m <= M, of the level-N kernel."""
    _check_level(field, p, N)
    coeffs, errors, comps = {}, {}, {}
    for m in range(1, M + 1):
        value, err, parts = coefficient_of_g(field, A, k, p, N, m, tail_tol, divisor_weight, max_terms)
        coeffs[m], errors[m], comps[m] = value, err, parts
    return KernelAssembly(
        N=N, p=None if N == 1 else p, k=k, coefficients=coeffs, error_bounds=errors,
        weights=level_weights(field, k, N), components=comps,
    )


# ---------------------------------------------------------------- asymptotics

CASES = ("N=1", "N=p split", "N=p inert", "N=p^2 split", "N=p^2 inert")


def g_scale(k: int, field: FieldData, m: int, with_factorial: bool = True) -> float:
    """2^(4k-1) pi^(2k) |D|^(-1/2) m^(k-1), divided by (2k-2)! when asked."""
    value = 2.0 ** (4 * k - 1) * math.pi ** (2 * k) / math.sqrt(field.abs_D) * float(m) ** (k - 1)
    if with_factorial:
        value /= math.factorial(2 * k - 2)
    return value


def asymptotic_estimate(
    case: str, field: FieldData, A: IdealClassForm, k: int, p: int | None, m: int,
    literal: bool = False,
) -> tuple[float, float]:
    """Predicted a_m(g) and its explicit error bound for one level case.

    With ``literal=True`` the displayed formulas are evaluated verbatim.  The
    default evaluates the same formulas after three repairs obtained by
    re-deriving them from the Phi_nu coefficients: the N = p^2 prefactor
    carries 1/(2k-2)! like the other cases, the N = p inert bracket keeps
    its -p^(-1) log m term, and the N = 1 error term is additive rather than
    multiplied by (h/u) r_A(m).
    """
    if case not in CASES:
        raise CaseMismatch(f"unknown case {case!r}")
    absD = field.abs_D
    mD = m * absD
    hr = field.h / field.u * rep_number(A, field, m)
    psi = digamma_integer(k)
    lld = log_derivative_L(field)
    e192 = 192.0 * mD ** 1.5 * (math.log(mD) + 1)

    if case == "N=1":
        K = g_scale(k, field, m)
        main = K * hr * math.fsum([math.log(absD / m), -2 * LOG_2PI, 2 * psi, 2 * lld])
        err = K * e192 * (hr if literal else 1.0)
        return main, err

    if p is None or not is_prime(p):
        raise CaseMismatch(f"case {case!r} needs a prime p")
    eps_p = field.epsilon(p)
    if eps_p == 0:
        raise RamifiedPrime(f"p={p} divides D={field.D}")
    if ("split" in case) != (eps_p == 1):
        raise CaseMismatch(f"case {case!r} does not match eps({p}) = {eps_p}")
    if p <= mD:
        raise RangeError(f"the stated error bounds need p > m|D| = {mD}")
    ip = 1.0 / p
    lp = math.log(p)

    if case == "N=p^2 split":
        K = g_scale(k, field, m, with_factorial=not literal)
        bracket = math.fsum([(2 - ip) * lp, (1 - ip) * math.fsum([math.log(absD / m), -2 * LOG_2PI, 2 * psi, 2 * lld])])
        err = 2.0 ** (10 - 2 * k) * float(mD) ** k * (p ** (-2 * k + 0.5) + p ** (-k - 0.75))
        return K * hr * bracket, K * err
    if case == "N=p^2 inert":
        K = g_scale(k, field, m, with_factorial=not literal)
        bracket = math.fsum([
            (2 - 3 * ip) * lp, (1 - ip) * math.log(absD), -math.log(m),
            -2 * (1 - ip) * LOG_2PI, 2 * (1 - ip) * psi, 2 * lld,
        ])
        err = 2.0 ** (10 - 2 * k) * p ** (-2 * k + 0.5) * float(mD) ** k
        return K * hr * bracket, K * err
    K = g_scale(k, field, m)
    if case == "N=p split":
        bracket = math.fsum([
            lp, (1 - ip) * math.log(absD / m), -2 * (1 - ip) * LOG_2PI,
            2 * (1 - ip) * psi, 2 * (1 - ip) * lld,
        ])
        err = 2.0 ** (10 - 2 * k) * p ** (-k + 0.25) * float(mD) ** k + e192 * ip
        return K * hr * bracket, K * err
    # N=p inert
    pieces = [
        2 * (1 - ip) * LOG_2PI, -lp, -(1 - ip) * math.log(absD),
        -2 * (1 - ip) * psi, 2 * ip * lld,
    ]
    if not literal:
        pieces.append(-ip * math.log(m))
    return K * hr * math.fsum(pieces), K * e192 * ip


def case_level(case: str, p: int | None) -> int:
    if case == "N=1":
        return 1
    return p if case.startswith("N=p ") else p * p


def case_for(field: FieldData, p: int, level: str) -> str:
    """Case label for level 'p' or 'p^2' given the splitting of p."""
    kind = "split" if field.epsilon(p) == 1 else "inert"
    return f"N={level} {kind}"
