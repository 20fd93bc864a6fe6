"""Oldform data in level p^2: Satake parameters, Euler-factor transfer of
twisted L-functions, Petersson Gram matrices and their Gram-Schmidt
orthogonalisation.

Gram entries are coefficients of the base inner product (g, h) computed in
the lower level.  They are kept as exact rationals whenever the inputs are
rational (a float a_p is converted exactly), so orthogonality and the
closed-form comparisons can be checked without rounding.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import MissingThetaParams, SingularGram
from .special_fn import digamma_integer

LOG_2PI = math.log(2 * math.pi)

SHIFTS = ("level1_to_p", "level1_to_p2", "levelp_to_p2")


def _rational(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class SatakeLocal:
    p: int
    k: int
    a_p: float
    alpha: complex
    beta: complex
    gamma: complex | None = None
    delta: complex | None = None

    @property
    def ramanujan_ok(self) -> bool:
        return ramanujan_ok(self.p, self.k, self.a_p)


def ramanujan_ok(p: int, k: int, a_p) -> bool:
    """|a_p| <= 2 p^((2k-1)/2), decided exactly as a_p^2 <= 4 p^(2k-1)."""
    return _rational(a_p) ** 2 <= 4 * p ** (2 * k - 1)


def satake_from_ap(p: int, k: int, a_p, gamma=None, delta=None) -> SatakeLocal:
    """Roots of X^2 - a_p X + p^(2k-1)."""
    disc = cmath.sqrt(float(a_p) ** 2 - 4.0 * float(p) ** (2 * k - 1))
    alpha = (a_p + disc) / 2
    beta = (a_p - disc) / 2
    return SatakeLocal(p, k, a_p, complex(alpha), complex(beta), gamma, delta)


def default_theta_params(epsilon_p: int) -> tuple[int, int]:
    # gamma * delta = eps(p): the local factor of a weight-one theta series
    return 1, epsilon_p


@dataclass(frozen=True)
class RationalFactor:
    """numerator(T) / denominator(T) with T = p^-s; coefficients by degree."""

    numerator: tuple[float, ...]
    denominator: tuple[float, ...]

    def __call__(self, T: float) -> float:
        num = 0.0
        for i, c in enumerate(self.numerator):
            num = num + c * T ** i if c else num
        den = 0.0
        for i, c in enumerate(self.denominator):
            den = den + c * T ** i if c else den
        return num / den

    def at_s(self, p: int, s: float) -> float:
        return self(float(p) ** -s)


def _real(z: complex, scale: float) -> float:
    if abs(z.imag) > 1e-9 * max(scale, 1.0):
        raise ValueError(f"expected a real coefficient, got {z}")
    return z.real


def euler_transfer(local: SatakeLocal, shift: str) -> RationalFactor:
    """Ratio L(s, g_q x Theta) / L(s, g x Theta) as a rational function of T = p^-s."""
    p, k, a_p = local.p, local.k, local.a_p
    pk = float(p) ** (2 * k - 1)
    s1 = _real(local.alpha + local.beta, abs(a_p))
    if shift == "level1_to_p":
        return RationalFactor((0.0, s1, -float(a_p)), (1.0, 0.0, -pk))
    if shift == "levelp_to_p2":
        return RationalFactor((0.0, s1, -float(a_p)), (1.0,))
    if shift == "level1_to_p2":
        if local.gamma is None or local.delta is None:
            raise MissingThetaParams("level1_to_p2 needs the theta-side parameters gamma, delta")
        c2 = _real(local.alpha ** 2 + 1 + local.beta ** 2, pk)
        c3 = s1 * float(a_p)
        c4 = pk
        abgd = _real(local.alpha * local.beta * local.gamma * local.delta, pk)
        return RationalFactor((0.0, 0.0, c2, -c3, c4), (1.0, 0.0, -abgd))
    raise ValueError(f"unknown shift {shift!r}; expected one of {SHIFTS}")


def even_log_derivative(k: int, p: int, abs_D: int) -> float:
    """L'/L(k) forced by an even functional equation: 2 log 2pi - log p|D| - 2 psi(k)."""
    return 2 * LOG_2PI - math.log(p * abs_D) - 2 * digamma_integer(k)


def derivative_center(local: SatakeLocal, fe_sign: str, L_at_k: float, abs_D: int) -> float:
    """Central derivative L'(k, g_p x Theta) from the level-below L-data.

    ``fe_sign`` is 'odd' (L(k, g x Theta) vanishes and ``L_at_k`` is the
    derivative it multiplies) or 'even'.
    """
    p, k = local.p, local.k
    s1 = _real(local.alpha + local.beta, abs(local.a_p))
    a_p = float(local.a_p)
    T = float(p) ** -k
    if fe_sign == "odd":
        return (0.0 + s1 * T + -a_p * T ** 2) * L_at_k
    if fe_sign == "even":
        lp = math.log(p)
        factor = s1 * T - a_p * T ** 2
        dfactor = -lp * (s1 * T - 2 * a_p * T ** 2)
        return L_at_k * (dfactor + even_log_derivative(k, p, abs_D) * factor)
    raise ValueError("fe_sign must be 'odd' or 'even'")


# ---------------------------------------------------------------- Gram data


@dataclass(frozen=True)
class GramMatrix:
    """Gram matrix of the oldforms (f_1, f_p[, f_{p^2}]) in units of (g, g)."""

    origin_level: int
    p: int
    k: int
    entries: tuple[tuple[Fraction, ...], ...]

    @property
    def size(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def as_array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.entries])

    def leading_minors(self) -> list[Fraction]:
        out = []
        for n in range(1, self.size + 1):
            out.append(_det([row[:n] for row in self.entries[:n]]))
        return out

    def is_positive_definite(self) -> bool:
        return all(v > 0 for v in self.leading_minors())

    def inner(self, u: Sequence, v: Sequence):
        return sum(u[i] * self.entries[i][j] * v[j] for i in range(self.size) for j in range(self.size))


def _det(rows) -> Fraction:
    n = len(rows)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    return sum((-1) ** j * rows[0][j] * _det([r[:j] + r[j + 1:] for r in rows[1:]]) for j in range(n))


def gram(origin_level: int, local: SatakeLocal) -> GramMatrix:
    p, k = local.p, local.k
    a = _rational(local.a_p)
    P = Fraction(p)
    if origin_level == 1:
        g11 = P * (P + 1)
        gp1 = P ** (2 - 2 * k) * a
        gpp = P * (P + 1) * P ** (-2 * k)
        gq1 = P ** (2 - 4 * k) * a * a - P ** (1 - 2 * k)
        gqp = P ** (2 - 4 * k) * a
        gqq = P ** (1 - 4 * k) * (P + 1)
        entries = ((g11, gp1, gq1), (gp1, gpp, gqp), (gq1, gqp, gqq))
    elif origin_level == local.p or origin_level == "p":
        g11 = P
        gp1 = P ** (1 - 2 * k) * a
        gpp = P ** (1 - 2 * k)
        entries = ((g11, gp1), (gp1, gpp))
        origin_level = p
    else:
        raise ValueError("origin_level must be 1 or p")
    return GramMatrix(origin_level, p, k, entries)


@dataclass(frozen=True)
class OrthoBasis:
    """Gram-Schmidt data; vectors are coefficient rows over (f_1, f_p[, f_{p^2}])."""

    origin_level: int
    vectors: tuple[tuple[Fraction, ...], ...]
    closed_fp_coeff: Fraction
    solved_fp_coeff: Fraction
    closed_Cp: Fraction | None = None
    closed_C1: Fraction | None = None
    solved_Cp: Fraction | None = None
    solved_C1: Fraction | None = None

    def residuals(self, G: GramMatrix) -> list[float]:
        """|(v_i, v_j)| / sqrt((v_i, v_i)(v_j, v_j)) for all i < j, in floats."""
        A = G.as_array()
        scale = np.sqrt(np.diag(A))
        B = A / np.outer(scale, scale)
        V = np.array([[float(c) for c in v] for v in self.vectors]) * scale
        out = []
        for i in range(len(V)):
            for j in range(i + 1, len(V)):
                num = V[i] @ B @ V[j]
                den = math.sqrt((V[i] @ B @ V[i]) * (V[j] @ B @ V[j]))
                out.append(abs(num) / den)
        return out


def closed_forms(p: int, k: int, a_p) -> dict[str, Fraction]:
    """The displayed Gram-Schmidt coefficients, read with a_p = a_p(f) throughout."""
    a = _rational(a_p)
    P = Fraction(p)
    R = (P + 1) ** 2 - P ** (2 - 2 * k) * a * a
    return {
        "levelp_fp": P ** (-2 * k) * a,
        "level1_fp": P ** (-2 * k) * P / (P + 1) * a,
        "Cp": (1 - 1 / R) * P ** (-2 * k) * a,
        "C1": (-1 / R) * P ** (1 - 4 * k) / (P + 1) * a * a - P ** (-2 * k) / (P + 1),
    }


def orthogonalize(G: GramMatrix, local: SatakeLocal) -> OrthoBasis:
    """Gram-Schmidt by solving the normal equations exactly."""
    if not G.is_positive_definite():
        raise SingularGram(f"Gram matrix for p={G.p}, k={G.k}, a_p={local.a_p} is not positive definite")
    closed = closed_forms(G.p, G.k, local.a_p)
    one, zero = Fraction(1), Fraction(0)
    fp = G[1, 0] / G[0, 0]
    if G.size == 2:
        vectors = ((one, zero), (-fp, one))
        return OrthoBasis(G.p, vectors, closed["levelp_fp"], fp)
    # f~_{p^2} = f_{p^2} - C_p f_p - C_1 f_1 with (f~_{p^2}, f_1) = (f~_{p^2}, f_p) = 0
    g11, g1p, gpp = G[0, 0], G[0, 1], G[1, 1]
    r1, rp = G[2, 0], G[2, 1]
    det = g11 * gpp - g1p * g1p
    C1 = (gpp * r1 - g1p * rp) / det
    Cp = (g11 * rp - g1p * r1) / det
    vectors = ((one, zero, zero), (-fp, one, zero), (-C1, -Cp, one))
    return OrthoBasis(
        1, vectors, closed["level1_fp"], fp,
        closed_Cp=closed["Cp"], closed_C1=closed["C1"], solved_Cp=Cp, solved_C1=C1,
    )


def closed_form_report(p: int, k: int, a_p) -> dict[str, float | bool]:
    """Closed-form versus solved Gram-Schmidt coefficients for one draw."""
    local = satake_from_ap(p, k, a_p)
    ob1 = orthogonalize(gram(1, local), local)
    obp = orthogonalize(gram(p, local), local)
    return {
        "p": p, "k": k, "a_p": float(a_p),
        "levelp_fp_match": obp.closed_fp_coeff == obp.solved_fp_coeff,
        "level1_fp_match": ob1.closed_fp_coeff == ob1.solved_fp_coeff,
        "Cp_closed": float(ob1.closed_Cp), "Cp_solved": float(ob1.solved_Cp),
        "Cp_match": ob1.closed_Cp == ob1.solved_Cp,
        "C1_closed": float(ob1.closed_C1), "C1_solved": float(ob1.solved_C1),
        "C1_match": ob1.closed_C1 == ob1.solved_C1,
    }
