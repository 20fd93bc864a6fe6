"""Class-group arithmetic for an imaginary quadratic field of odd discriminant.

Ideal classes are represented by reduced positive definite binary quadratic
forms.  ``r_A(m)``, the number of integral ideals of norm ``m`` in the class
``A``, is the number of integer pairs represented by the form divided by the
number of units ``2u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from collections import OrderedDict
from typing import Mapping, Sequence

import numpy as np

from .errors import NotFundamental, NotNegative, NotOdd, TableSizeMismatch


def kronecker(D: int, n: int) -> int:
    """Kronecker symbol (D | n)."""
    if n == 0:
        return 1 if abs(D) == 1 else 0
    result = 1
    if n < 0:
        n = -n
        if D < 0:
            result = -result
    while n % 2 == 0:
        n //= 2
        if D % 2 == 0:
            return 0
        if D % 8 in (3, 5):
            result = -result
    # Jacobi symbol (D mod n | n) for odd n
    a = D % n if n > 1 else 0
    if n == 1:
        return result
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def _is_squarefree(n: int) -> bool:
    n = abs(n)
    q = 2
    while q * q <= n:
        if n % (q * q) == 0:
            return False
        if n % q == 0:
            n //= q
        q += 1
    return True


@dataclass(frozen=True)
class IdealClassForm:
    a: int
    b: int
    c: int

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def __call__(self, x: int, y: int) -> int:
        return self.a * x * x + self.b * x * y + self.c * y * y

    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        if not (abs(b) <= a <= c):
            return False
        if (abs(b) == a or a == c) and b < 0:
            return False
        return True

    def __str__(self) -> str:
        return f"({self.a},{self.b},{self.c})"


@dataclass(frozen=True)
class FieldData:
    """Arithmetic data of K = Q(sqrt(D)) for an odd fundamental D < 0."""

    D: int
    h: int
    u: int

    @property
    def abs_D(self) -> int:
        return -self.D

    def epsilon(self, n: int) -> int:
        return kronecker(self.D, n)

    def ideal_count(self, m: int) -> int:
        """Total number of integral ideals of norm m, sum over d | m of eps(d)."""
        return sum(self.epsilon(d) for d in divisors(m))

    @property
    def flagged(self) -> bool:
        # D = -3 carries extra units; reports mark it.
        return self.u != 1


def reduced_forms(D: int) -> list[IdealClassForm]:
    """All reduced forms of discriminant D < 0, ordered by (a, b)."""
    forms = []
    a = 1
    while 3 * a * a <= -D:
        for b in range(-a + 1, a + 1):
            if (b - D) % 2:
                continue
            num = b * b - D
            if num % (4 * a):
                continue
            c = num // (4 * a)
            f = IdealClassForm(a, b, c)
            if f.is_reduced() and math.gcd(math.gcd(a, b), c) == 1:
                forms.append(f)
        a += 1
    forms.sort(key=lambda f: (f.a, f.b, f.c))
    return forms


def validate_discriminant(D: int) -> FieldData:
    if D >= 0:
        raise NotNegative(f"discriminant must be negative, got {D}")
    if D % 2 == 0:
        raise NotOdd(f"discriminant must be odd, got {D}")
    if D % 4 != 1 or not _is_squarefree(D):
        raise NotFundamental(f"{D} is not a fundamental discriminant")
    h = len(reduced_forms(D))
    u = 3 if D == -3 else 1
    return FieldData(D=D, h=h, u=u)


def kronecker_epsilon(field: FieldData, n: int) -> int:
    return field.epsilon(n)


@dataclass(frozen=True)
class ClassGroup:
    field: FieldData
    classes: tuple[IdealClassForm, ...]
    principal_index: int = 0

    @property
    def principal(self) -> IdealClassForm:
        return self.classes[self.principal_index]

    def __len__(self) -> int:
        return len(self.classes)

    def __getitem__(self, i: int) -> IdealClassForm:
        return self.classes[i]


def class_group(field: FieldData) -> ClassGroup:
    forms = tuple(reduced_forms(field.D))
    principal = IdealClassForm(1, 1, (1 - field.D) // 4)
    return ClassGroup(field=field, classes=forms, principal_index=forms.index(principal))


def divisors(m: int) -> list[int]:
    small, large = [], []
    d = 1
    while d * d <= m:
        if m % d == 0:
            small.append(d)
            if d * d != m:
                large.append(m // d)
        d += 1
    return small + large[::-1]


def representation_count(A: IdealClassForm, m: int) -> int:
    """Number of integer pairs (x, y) with A(x, y) = m."""
    if m < 0:
        return 0
    if m == 0:
        return 1
    D = A.discriminant
    a, b = A.a, A.b
    count = 0
    # a*A(x,y)*4 = (2ax + by)^2 - D y^2, so |y| <= sqrt(4am/|D|)
    ymax = math.isqrt(4 * a * m // -D)
    for y in range(-ymax, ymax + 1):
        disc = D * y * y + 4 * a * m
        if disc < 0:
            continue
        s = math.isqrt(disc)
        if s * s != disc:
            continue
        for t in {s, -s}:
            num = -b * y + t
            if num % (2 * a) == 0:
                count += 1
    return count


def rep_number(A: IdealClassForm, field: FieldData, m: int) -> int:
    """r_A(m): integral ideals of norm m in the class of A.  r_A(0) is 0."""
    if m <= 0:
        return 0
    count = representation_count(A, m)
    w = 2 * field.u
    assert count % w == 0, (A, m, count)
    return count // w


def _build_rep_table(a: int, b: int, c: int, u: int, limit: int) -> np.ndarray:
    D = b * b - 4 * a * c
    counts = np.zeros(limit + 1, dtype=np.int64)
    ymax = math.isqrt(4 * a * limit // -D)
    batch: list[np.ndarray] = []
    batch_size = 0
    for y in range(-ymax, ymax + 1):
        disc = D * y * y + 4 * a * limit
        if disc < 0:
            continue
        s = math.isqrt(disc)
        xlo = -((b * y + s) // (2 * a)) - 1
        xhi = (-b * y + s) // (2 * a) + 1
        x = np.arange(xlo, xhi + 1, dtype=np.int64)
        vals = a * x * x + b * x * y + c * y * y
        batch.append(vals[vals <= limit])
        batch_size += x.size
        if batch_size > 1 << 22:
            counts += np.bincount(np.concatenate(batch), minlength=limit + 1)
            batch, batch_size = [], 0
    if batch:
        counts += np.bincount(np.concatenate(batch), minlength=limit + 1)
    counts[0] = 0
    w = 2 * u
    if np.any(counts % w):
        raise AssertionError("representation counts not divisible by the unit count")
    table = (counts // w).astype(np.int32)
    table.setflags(write=False)
    return table


# Largest table built so far per (form, u); bounded to keep memory flat.
_TABLES: "OrderedDict[tuple[int, int, int, int], np.ndarray]" = OrderedDict()
_MAX_CACHED_TABLES = 6
REP_TABLE_CAP = 1 << 24


def rep_table(A: IdealClassForm, field: FieldData, limit: int) -> np.ndarray:
    """Array ``t`` with ``t[M] = r_A(M)`` for 0 <= M <= limit (``t[0] = 0``).

    The returned array may extend past ``limit``.  Tables are built by one
    lattice sweep and cached per form.
    """
    limit = max(int(limit), 1)
    if limit > REP_TABLE_CAP:
        raise ValueError(f"r_A table limit {limit} exceeds cap {REP_TABLE_CAP}")
    key = (A.a, A.b, A.c, field.u)
    table = _TABLES.get(key)
    if table is not None and table.size > limit:
        _TABLES.move_to_end(key)
        return table
    size = max(4096, 1 << (limit - 1).bit_length())
    if table is not None:
        size = max(size, min(2 * (table.size - 1), REP_TABLE_CAP))
    table = _build_rep_table(A.a, A.b, A.c, field.u, min(size, REP_TABLE_CAP))
    _TABLES[key] = table
    _TABLES.move_to_end(key)
    while len(_TABLES) > _MAX_CACHED_TABLES:
        _TABLES.popitem(last=False)
    return table


def chi_combination(
    group: ClassGroup,
    chi: Mapping[IdealClassForm, complex] | Sequence[complex],
    m: int,
) -> complex:
    """Sum over classes A of chi(A) * r_A(m).

    ``chi`` is a table of values, either a sequence aligned with
    ``group.classes`` or a mapping keyed by the reduced forms.
    """
    if isinstance(chi, Mapping):
        if set(chi) != set(group.classes):
            raise TableSizeMismatch("character table must cover exactly the classes of the group")
        values = [chi[A] for A in group.classes]
    else:
        values = list(chi)
        if len(values) != len(group):
            raise TableSizeMismatch(f"character table has {len(values)} entries, class number is {len(group)}")
    return sum(v * rep_number(A, group.field, m) for v, A in zip(values, group.classes))
