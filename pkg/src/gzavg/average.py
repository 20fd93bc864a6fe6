"""Oldform contribution bounds and the level-p^2 nonvanishing certificate.

Expanding the kernel g in an orthogonal basis of level p^2 and reading off
the first Fourier coefficient gives

    sum_f L'(k, f x Theta_A) / (f, f) * a_1(f) = a_1(g).

If a_1(g) (computed exactly, up to a bounded truncation error) exceeds the
total bound on the oldform terms, some newform must have a nonzero central
derivative.  For split p the oldform bounds from level p rely on the
nonnegativity of the central derivatives, so those certificates are
conditional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Iterable

from .errors import LLogBoundFails, RamifiedPrime
from .kernel import asymptotic_estimate, case_for, coefficient_of_g, g_scale, is_prime
from .oldforms import LOG_2PI
from .quadratic_core import FieldData, IdealClassForm, rep_number
from .special_fn import DirichletValues, check_l_log_bound, digamma_integer, dirichlet_values

UNCONDITIONAL = "unconditional"
CONDITIONAL = "conditional_on_nonnegativity"
CERTIFIED = "certified"
NOT_CERTIFIED = "not_certified"


def _legendre_symbol(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def dim_cusp_forms(weight: int, N: int) -> int:
    """dim S_weight(Gamma_0(N)) for even weight >= 2 and N = 1 or a prime."""
    if weight < 2 or weight % 2:
        return 0
    if N == 1:
        index, cusps, e2, e3 = 1, 1, 1, 1
    else:
        if not is_prime(N):
            raise ValueError("N must be 1 or a prime")
        index, cusps = N + 1, 2
        # elliptic points of orders 2 and 3
        e2 = {2: 1, 3: 0}.get(N) if N < 5 else 1 + _legendre_symbol(-1, N)
        e3 = {2: 0, 3: 1}.get(N) if N < 5 else 1 + _legendre_symbol(-3, N)
    # 12 * genus
    genus12 = 12 + index - 3 * e2 - 4 * e3 - 6 * cusps
    assert genus12 % 12 == 0
    genus = genus12 // 12
    if weight == 2:
        return genus
    return (weight - 1) * (genus - 1) + (weight // 2 - 1) * cusps + e2 * (weight // 4) + e3 * (weight // 3)


def dim_new_cusp_forms(weight: int, p: int) -> int:
    return dim_cusp_forms(weight, p) - 2 * dim_cusp_forms(weight, 1)


@dataclass(frozen=True)
class ContributionBound:
    family: str
    bound_value: float
    components: dict[str, float]
    dimension_cap: float


def _bracket_level1(k: int, field: FieldData, lv: DirichletValues) -> float:
    return math.fsum([math.log(field.abs_D), -2 * LOG_2PI, 2 * digamma_integer(k), 2 * lv.log_derivative])


def _error_level_below(field: FieldData) -> float:
    return 192.0 * field.abs_D ** 1.5 * (math.log(field.abs_D) + 1)


def bound_level1(k: int, p: int, field: FieldData, l_values: DirichletValues) -> ContributionBound:
    """Bound on the terms of the oldforms coming from level 1."""
    C_k = k / 12 + 1
    C_p = 73.0 / p ** 2 + 1600.0 / p ** 3
    if dim_cusp_forms(2 * k, 1) == 0:
        return ContributionBound("level1", 0.0, {"C_k": C_k, "C_p": C_p}, C_k)
    hu = field.h / field.u
    average = g_scale(k, field, 1) * hu * max(0.0, _bracket_level1(k, field, l_values) + _error_level_below(field))
    comps = {
        "C_k": C_k,
        "C_p": C_p,
        "level1_average": average,
        "f_1": C_k * average / (p * (p + 1)),
        "f_p": C_k * 72 * average / (p * (p + 1)),
        "f_p2": C_k * 1600.0 * average / p ** 3,
    }
    return ContributionBound("level1", C_k * C_p * average, comps, C_k)


def levelp_average_bound(k: int, p: int, field: FieldData, l_values: DirichletValues, split: bool) -> float:
    """Upper bound on |sum over level-p newforms f of L'(k, f x Theta)/(f, f) a_1(f)|."""
    hu = field.h / field.u
    ip, lp = 1.0 / p, math.log(p)
    psi = digamma_integer(k)
    lld = l_values.log_derivative
    absD = field.abs_D
    if split:
        bracket = math.fsum([
            lp, (1 - ip) * math.log(absD), -2 * (1 - ip) * LOG_2PI,
            2 * (1 - ip) * psi, 2 * (1 - ip) * lld,
        ])
        err = 2.0 ** (10 - 2 * k) * p ** (-k + 0.25) * float(absD) ** k + _error_level_below(field) * ip
        return g_scale(k, field, 1) * max(0.0, hu * bracket + err)
    bracket = math.fsum([
        2 * (1 - ip) * LOG_2PI, -lp, -(1 - ip) * math.log(absD),
        -2 * (1 - ip) * psi, 2 * ip * lld,
    ])
    err = _error_level_below(field) * ip
    return g_scale(k, field, 1) * (hu * abs(bracket) + err)


def bound_levelp(k: int, p: int, field: FieldData, l_values: DirichletValues, split: bool) -> ContributionBound:
    """Bound on the terms of the oldforms coming from level-p newforms."""
    family = "levelp_split" if split else "levelp_inert"
    dim = dim_new_cusp_forms(2 * k, p)
    if dim <= 0:
        return ContributionBound(family, 0.0, {"new_dimension": float(dim)}, float(dim))
    avg = levelp_average_bound(k, p, field, l_values, split)
    f1 = avg / p
    if split:
        fp = 2 * p ** -1.5 * avg
    else:
        fp = 40 * p ** -1.5 * (2 * math.log(p) + 2 * math.log(2 * math.pi * k) + math.log(field.abs_D)) * avg
    comps = {"levelp_average": avg, "f_1": f1, "f_p": fp, "new_dimension": float(dim)}
    return ContributionBound(family, f1 + fp, comps, float(dim))


def shortcut_bound(k: int, field: FieldData) -> float:
    """2^(4k-1) pi^(2k) / (2k-2)! |D|^(-1/2) h/u."""
    return g_scale(k, field, 1) * field.h / field.u


def auxiliary_inequalities(k: int, field: FieldData, l_values: DirichletValues, samples: Iterable[float] = ()) -> dict[str, bool]:
    """The three elementary estimates used for the shortcut bound."""
    xs = list(samples) or [1 + 10.0 ** (j / 4) for j in range(-40, 80)]
    psi = digamma_integer(k)
    return {
        "log_x_lt_4x_quarter": all(math.log(x) < 4 * x ** 0.25 for x in xs if x > 1),
        "digamma_between_0_and_log_k": k >= 2 and 0 < psi < math.log(k),
        "l_log_derivative_lt_log_D": abs(l_values.log_derivative) < math.log(field.abs_D),
    }


def effective_bound_check(k: int, p: int, field: FieldData) -> bool:
    return p > 10 ** 4 * k * field.abs_D


@dataclass(frozen=True)
class Certificate:
    k: int
    p: int
    D: int
    class_form: str
    epsilon_p: int
    a1_g: float
    a1_g_error: float
    level1_bound: float
    levelp_bound: float
    oldform_total: float
    margin: float
    verdict: str
    conditionality: str
    preconditions: tuple[tuple[str, bool], ...]
    shortcut_bound: float
    shortcut_holds: bool
    predicted_literal: float
    predicted_short: float
    unit_flag: bool = False
    notes: tuple[str, ...] = dc_field(default_factory=tuple)


def certify_nonvanishing(
    k: int, p: int, field: FieldData, A: IdealClassForm, tail_tol: float = 1e-9,
    eigenvalues=None,
) -> Certificate:
    """Compare a_1(g) in level p^2 against the total oldform bound.

    ``eigenvalues`` is an optional iterable of rows with ``level``,
    ``weight``, ``p`` and ``ramanujan_ok`` attributes; rows for weight 2k at
    this p from levels 1 or p must satisfy the Ramanujan bound.
    """
    eps_p = field.epsilon(p)
    if eps_p == 0:
        raise RamifiedPrime(f"p={p} divides D={field.D}")
    if not is_prime(p):
        raise ValueError(f"p={p} is not prime")
    lv = dirichlet_values(field)
    l_ok = check_l_log_bound(lv)
    if not l_ok:
        raise LLogBoundFails(f"|L'/L(1, eps)| = {abs(lv.log_derivative):.6g} > log|D| for D={field.D}")

    ramanujan = True
    if eigenvalues is not None:
        for row in eigenvalues:
            if row.weight == 2 * k and row.p == p and row.level in (1, p):
                ramanujan = ramanujan and row.ramanujan_ok

    a1, a1_err, _ = coefficient_of_g(field, A, k, p, p * p, 1, tail_tol)
    b1 = bound_level1(k, p, field, lv)
    bp = bound_levelp(k, p, field, lv, split=eps_p == 1)
    total = b1.bound_value + bp.bound_value
    margin = abs(a1) - a1_err - total
    pre = (("epsilon_p_nonzero", True), ("l_log_bound", l_ok), ("ramanujan_inputs", ramanujan))
    verdict = CERTIFIED if margin > 0 and all(ok for _, ok in pre) else NOT_CERTIFIED

    hr = field.h / field.u * rep_number(A, field, 1)

    literal, _ = asymptotic_estimate(case_for(field, p, "p^2"), field, A, k, p, 1, literal=True) if p > field.abs_D else (float("nan"), 0.0)
    short = 2 * math.pi / math.sqrt(field.abs_D) * hr * math.log(p * p)
    sb = shortcut_bound(k, field)
    notes = []
    if eps_p == 1:
        notes.append("level-p bounds assume L'(k, f x Theta_A) >= 0 for level-p newforms")
    return Certificate(
        k=k, p=p, D=field.D, class_form=str(A), epsilon_p=eps_p,
        a1_g=a1, a1_g_error=a1_err, level1_bound=b1.bound_value, levelp_bound=bp.bound_value,
        oldform_total=total, margin=margin, verdict=verdict,
        conditionality=UNCONDITIONAL if eps_p == -1 else CONDITIONAL,
        preconditions=pre, shortcut_bound=sb, shortcut_holds=total < sb,
        predicted_literal=literal, predicted_short=short, unit_flag=field.u != 1,
        notes=tuple(notes),
    )
