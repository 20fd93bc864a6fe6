"""Command-line front end: ``gzavg <command> [options]``.

Every command emits a table of rows plus a dictionary of boolean checks,
as CSV (rows only) or JSON (``config``, ``rows``, ``checks``).  Floats are
written with 17 significant digits so values round-trip exactly.  The exit
status is 0 iff every check passes; domain errors map to distinct codes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Sequence

from . import errors as E
from .average import certify_nonvanishing, effective_bound_check
from .kernel import CASES, asymptotic_estimate, case_level, coefficient_of_g, is_prime
from .oldforms import (
    default_theta_params, derivative_center, euler_transfer, gram, orthogonalize,
    satake_from_ap,
)
from .quadratic_core import class_group, rep_number, validate_discriminant

WORKERS_ENV = "GZAVG_WORKERS"

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_CODES: tuple[tuple[type[BaseException], int], ...] = (
    (E.ConfigError, 2),
    (OSError, 3),
    (E.ParseError, 4),
    (E.DiscriminantError, 5),
    (E.RamifiedPrime, 6),
    (E.LLogBoundFails, 7),
    (E.TailDiverges, 9),
    (E.RangeError, 10),
    (E.CaseMismatch, 11),
    (E.SingularGram, 12),
    (E.PrecisionNotReached, 13),
    (E.GZAvgError, 8),
)


def exit_code_for(exc: BaseException) -> int:
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    raise exc


# ---------------------------------------------------------------- parsing helpers


def parse_range(text: str) -> list[int]:
    """'5..500', '5,7,11' or '13' to a sorted list of integers."""
    out: set[int] = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                lo, hi = (int(v) for v in part.split(".."))
                if lo > hi:
                    raise E.ConfigError(f"range {part!r} has its endpoints reversed")
                out.update(range(lo, hi + 1))
            else:
                out.add(int(part))
        except ValueError as exc:
            if isinstance(exc, E.ConfigError):
                raise
            raise E.ConfigError(f"cannot parse range {part!r}") from None
    if not out:
        raise E.ConfigError(f"empty range {text!r}")
    return sorted(out)


def parse_primes(text: str) -> list[int]:
    return [p for p in parse_range(text) if is_prime(p)]


@dataclass(frozen=True)
class EigenvalueRow:
    level: int
    weight: int
    p: int
    a_p: Fraction
    line: int
    ramanujan_ok: bool


@dataclass(frozen=True)
class EigenvalueTable:
    rows: tuple[EigenvalueRow, ...]

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def violations(self) -> list[int]:
        """Line numbers of rows breaking the Ramanujan bound."""
        return [r.line for r in self.rows if not r.ramanujan_ok]


EIGEN_HEADER = ("level", "weight", "p", "a_p")


def _fields(line: str) -> list[str]:
    return line.replace(",", " ").split()


def ingest_eigenvalues(path: str) -> EigenvalueTable:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or tuple(_fields(lines[0])) != EIGEN_HEADER:
        raise E.ParseError(1, f"expected header {','.join(EIGEN_HEADER)}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = _fields(line)
        if len(parts) != 4:
            raise E.ParseError(lineno, f"expected 4 fields, got {len(parts)}")
        try:
            level, weight, p = (int(v) for v in parts[:3])
            a_p = Fraction(parts[3])
        except (ValueError, ZeroDivisionError):
            raise E.ParseError(lineno, f"non-numeric field in {line.strip()!r}") from None
        if level < 1 or weight < 1 or not is_prime(p):
            raise E.ParseError(lineno, "level and weight must be positive and p prime")
        ok = a_p * a_p <= 4 * Fraction(p) ** (weight - 1)
        rows.append(EigenvalueRow(level, weight, p, a_p, lineno, ok))
    return EigenvalueTable(tuple(rows))


# ---------------------------------------------------------------- output


def fmt_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_value(v: Any) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, float):
        return fmt_float(v) if math.isfinite(v) else "null"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Fraction):
        return json.dumps(str(v))
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    return json.dumps(str(v))


def render_json(config: dict, rows: list[dict], checks: dict) -> str:
    body = ",\n".join("    " + _json_value(r) for r in rows)
    return (
        "{\n"
        f'  "config": {_json_value(config)},\n'
        f'  "rows": [\n{body}\n  ],\n'
        f'  "checks": {_json_value(checks)}\n'
        "}\n"
    )


def _csv_cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt_float(v)
    return str(v)


def render_csv(columns: Sequence[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_csv_cell(r.get(c)) for c in columns])
    return buf.getvalue()


# ---------------------------------------------------------------- parallel map


def resolve_workers(flag: int | None) -> int:
    if flag is not None:
        n = flag
    else:
        env = os.environ.get(WORKERS_ENV, "1")
        try:
            n = int(env)
        except ValueError:
            raise E.ConfigError(f"{WORKERS_ENV}={env!r} is not an integer") from None
    if n < 1:
        raise E.ConfigError("worker count must be at least 1")
    return n


def ordered_map(fn: Callable, tasks: Sequence, workers: int) -> list:
    """Map over tasks, results in task order whatever the worker count."""
    if workers == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------- commands


def _field_and_class(D: int, index: int):
    field = validate_discriminant(D)
    group = class_group(field)
    if not 0 <= index < len(group):
        raise E.ConfigError(f"class index {index} out of range for h={len(group)}")
    return field, group[index]


def cmd_classgroup(args) -> tuple[list[str], list[dict], dict]:
    field = validate_discriminant(args.D)
    group = class_group(field)
    if args.m_max <= 0:
        cols = ["class_index", "form", "a", "b", "c", "h", "u", "principal"]
        rows = [
            {"class_index": i, "form": str(A), "a": A.a, "b": A.b, "c": A.c,
             "h": field.h, "u": field.u, "principal": i == group.principal_index}
            for i, A in enumerate(group.classes)
        ]
        checks = {"all_reduced": all(A.is_reduced() for A in group.classes)}
        return cols, rows, checks
    cols = ["class_index", "form", "m", "r_A"]
    rows = []
    totals_ok = True
    for m in range(1, args.m_max + 1):
        total = 0
        for i, A in enumerate(group.classes):
            r = rep_number(A, field, m)
            total += r
            rows.append({"class_index": i, "form": str(A), "m": m, "r_A": r})
        totals_ok = totals_ok and total == field.ideal_count(m)
    rows.sort(key=lambda r: (r["class_index"], r["m"]))
    return cols, rows, {"class_sum_equals_ideal_count": totals_ok}


def _level_N(level: str, p: int | None) -> int:
    if level == "1":
        return 1
    if p is None:
        raise E.ConfigError(f"level {level} needs --p")
    return p if level == "p" else p * p


def _kernel_task(task):
    D, index, k, p, N, m, tail_tol, max_terms = task
    field, A = _field_and_class(D, index)
    value, err, comps = coefficient_of_g(field, A, k, p, N, m, tail_tol, max_terms=max_terms)
    phis = [
        (nu, c.value, c.tail_error, c.branch, c.tail_converged)
        for nu, c in sorted(comps.items())
    ]
    return m, value, err, phis


def cmd_kernel(args):
    N = _level_N(args.level, args.p)
    tasks = [(args.D, args.class_index, args.k, args.p, N, m, args.tail_tol, args.max_terms) for m in parse_range(args.m)]
    _field_and_class(args.D, args.class_index)
    results = ordered_map(_kernel_task, tasks, args.workers)
    cols = ["kind", "m", "nu", "value", "error_bound", "branch", "converged"]
    rows = []
    converged = True
    for m, value, err, phis in results:
        ok = all(c for *_, c in phis)
        converged = converged and ok
        rows.append({"kind": "g", "m": m, "nu": None, "value": value, "error_bound": err, "branch": None, "converged": ok})
        if args.phi:
            for nu, v, e, b, c in phis:
                rows.append({"kind": "phi", "m": m, "nu": nu, "value": v, "error_bound": e, "branch": b, "converged": c})
    checks = {"error_bounds_finite": all(math.isfinite(r["error_bound"]) for r in rows)}
    if args.strict:
        checks["tails_within_tol"] = converged
    return cols, rows, checks


def _asymptotics_task(task):
    D, k, p, m_max, literal, tail_tol = task
    field = validate_discriminant(D)
    group = class_group(field)
    out = []
    cases = ["N=1"] if p is None else [c for c in CASES if c != "N=1" and ("split" in c) == (field.epsilon(p) == 1)]
    for case in cases:
        N = case_level(case, p)
        for i, A in enumerate(group.classes):
            for m in range(1, m_max + 1):
                if p is not None and p <= m * field.abs_D:
                    continue
                exact, exact_err, _ = coefficient_of_g(field, A, k, p, N, m, tail_tol)
                main, bound = asymptotic_estimate(case, field, A, k, p, m, literal=literal)
                residual = abs(exact - main)
                ok = residual + exact_err <= bound
                out.append({
                    "case": case, "class_index": i, "p": p, "m": m, "exact": exact,
                    "exact_error": exact_err, "main": main, "bound": bound,
                    "residual": residual, "ratio": (residual + exact_err) / bound if bound else math.inf,
                    "ok": ok,
                })
    return out


def cmd_verify_asymptotics(args):
    field = validate_discriminant(args.D)
    primes = [p for p in parse_primes(args.primes) if field.epsilon(p) != 0]
    tasks = [(args.D, args.k, p, args.m_max, args.literal, args.tail_tol) for p in [None] + primes]
    rows = [r for chunk in ordered_map(_asymptotics_task, tasks, args.workers) for r in chunk]
    cols = ["case", "class_index", "p", "m", "exact", "exact_error", "main", "bound", "residual", "ratio", "ok"]
    return cols, rows, {"within_stated_error": all(r["ok"] for r in rows)}


def random_admissible(rng: random.Random, p_max: int = 2000, k_max: int = 12, p_min: int = 5):
    """A prime p, weight parameter k and integer a_p with |a_p| <= 2 p^(k - 1/2)."""
    primes = [q for q in range(p_min, p_max) if is_prime(q)]
    p = rng.choice(primes)
    k = rng.randint(1, k_max)
    bound = math.isqrt(4 * p ** (2 * k - 1))
    return p, k, rng.randint(-bound, bound)


def _even_fd_oracle(local, L_at_k: float, abs_D: int, h: float = 1e-4) -> float:
    """d/ds [F(p^-s) L(s)] at s = k by central differences.

    L(s) is modelled near k as L_at_k * exp(c (s - k)), c being the value of
    L'/L(k) forced by an even functional equation, obtained here by
    differentiating log Gamma numerically.
    """
    p, k = local.p, local.k

    def log_gamma_factor(s):
        return s * math.log(p * abs_D) - 2 * s * math.log(2 * math.pi) + 2 * math.lgamma(s)

    c = -(log_gamma_factor(k + h) - log_gamma_factor(k - h)) / (2 * h)
    F = euler_transfer(local, "levelp_to_p2")

    def G(s):
        return F.at_s(p, s) * L_at_k * math.exp(c * (s - k))

    return (G(k + h) - G(k - h)) / (2 * h)


def oldform_selftest(draws: int, fd_draws: int, seed: int) -> tuple[list[dict], dict]:
    rng = random.Random(seed)
    rows = []
    pd_ok = orth_ok = fp_ok = cp_all = True
    c1_matches = 0
    worst = 0.0
    for i in range(draws):
        p, k, a = random_admissible(rng)
        local = satake_from_ap(p, k, a)
        G1, Gp = gram(1, local), gram(p, local)
        pd = G1.is_positive_definite() and Gp.is_positive_definite()
        pd_ok = pd_ok and pd
        if not pd:
            rows.append({"draw": i, "p": p, "k": k, "a_p": a, "positive_definite": False})
            continue
        ob1, obp = orthogonalize(G1, local), orthogonalize(Gp, local)
        res = max(ob1.residuals(G1) + obp.residuals(Gp))
        worst = max(worst, res)
        orth_ok = orth_ok and bool(res < 1e-10)
        fp_match = ob1.closed_fp_coeff == ob1.solved_fp_coeff and obp.closed_fp_coeff == obp.solved_fp_coeff
        fp_ok = fp_ok and fp_match
        cp_all = cp_all and ob1.closed_Cp == ob1.solved_Cp
        c1_matches += ob1.closed_C1 == ob1.solved_C1
        rows.append({
            "draw": i, "p": p, "k": k, "a_p": a, "positive_definite": True, "max_residual": res,
            "fp_match": fp_match, "Cp_closed": float(ob1.closed_Cp), "Cp_solved": float(ob1.solved_Cp),
            "C1_closed": float(ob1.closed_C1), "C1_solved": float(ob1.solved_C1),
        })

    odd_ok = even_ok = True
    worst_fd = 0.0
    for _ in range(fd_draws):
        p, k, a = random_admissible(rng, p_max=200, k_max=6)
        local = satake_from_ap(p, k, a)
        L_at_k = rng.uniform(0.1, 10.0)
        abs_D = rng.choice([3, 7, 11, 19, 23, 31, 43, 47])
        odd = derivative_center(local, "odd", L_at_k, abs_D)
        odd_ok = odd_ok and odd == euler_transfer(local, "levelp_to_p2").at_s(p, k) * L_at_k
        even = derivative_center(local, "even", L_at_k, abs_D)
        oracle = _even_fd_oracle(local, L_at_k, abs_D)
        scale = max(abs(oracle), abs(euler_transfer(local, "levelp_to_p2").at_s(p, k)) * L_at_k * math.log(p), 1e-300)
        rel = abs(even - oracle) / scale
        worst_fd = max(worst_fd, rel)
        even_ok = even_ok and rel < 1e-6

    zero_ok = True
    for p in (5, 7, 11, 101):
        for k in (1, 2, 6):
            g, d = default_theta_params(-1)
            f = euler_transfer(satake_from_ap(p, k, 0, g, d), "level1_to_p2")
            zero_ok = zero_ok and f.numerator[4] == float(p) ** (2 * k - 1) and f.numerator[3] == 0

    checks = {
        "gram_positive_definite": pd_ok,
        "orthogonality_residual_below_1e-10": orth_ok,
        "fp_coefficients_match_exactly": fp_ok,
        "Cp_closed_form_matches": cp_all,
        "odd_derivative_equals_euler_transfer": odd_ok,
        "even_derivative_matches_finite_difference": even_ok,
        "c4_and_c3_at_zero_eigenvalue": zero_ok,
    }
    summary = {"max_orthogonality_residual": worst, "C1_closed_form_matches": c1_matches, "draws": draws, "max_fd_relative_error": worst_fd}
    return rows, {**checks, "_summary": summary}


def cmd_selftest_oldforms(args):
    rows, checks = oldform_selftest(args.draws, args.fd_draws, args.seed)
    cols = ["draw", "p", "k", "a_p", "positive_definite", "max_residual", "fp_match", "Cp_closed", "Cp_solved", "C1_closed", "C1_solved"]
    return cols, rows, checks


CERT_COLUMNS = [
    "p", "epsilon_p", "a1_g", "a1_g_error", "level1_bound", "levelp_bound", "oldform_total",
    "margin", "verdict", "conditionality", "shortcut_bound", "shortcut_holds",
    "predicted_literal", "predicted_short", "preconditions",
]


def _certify_task(task):
    D, index, k, p, tail_tol, table = task
    field, A = _field_and_class(D, index)
    c = certify_nonvanishing(k, p, field, A, tail_tol, eigenvalues=table)
    row = {col: getattr(c, col) for col in CERT_COLUMNS if col != "preconditions"}
    row["preconditions"] = ";".join(f"{name}={'pass' if ok else 'fail'}" for name, ok in c.preconditions)
    return row


def certificate_checks(rows: list[dict]) -> dict:
    cond_ok = all(
        r["conditionality"] == ("unconditional" if r["epsilon_p"] == -1 else "conditional_on_nonnegativity")
        for r in rows
    )
    nonneg = all(r[c] >= 0 for r in rows for c in ("level1_bound", "levelp_bound", "oldform_total"))
    monotone = True
    for eps in (1, -1):
        margins = [r["margin"] for r in rows if r["epsilon_p"] == eps]
        first = next((i for i, v in enumerate(margins) if v > 0), None)
        if first is not None:
            tail = margins[first:]
            monotone = monotone and all(b > a for a, b in zip(tail, tail[1:]))
    return {
        "conditionality_matches_splitting": cond_ok,
        "bounds_nonnegative": nonneg,
        "margins_increase_after_first_certified": monotone,
    }


def cmd_certify(args):
    field, _ = _field_and_class(args.D, args.class_index)
    table = ingest_eigenvalues(args.eigenvalues) if args.eigenvalues else None
    primes = [p for p in parse_primes(args.primes) if field.epsilon(p) != 0]
    tasks = [(args.D, args.class_index, args.k, p, args.tail_tol, table) for p in primes]
    rows = ordered_map(_certify_task, tasks, args.workers)
    return CERT_COLUMNS, rows, certificate_checks(rows)


def cmd_effective_bound(args):
    field = validate_discriminant(args.D)
    values = parse_range(args.p) if args.p else parse_primes(args.primes or "")
    threshold = 10 ** 4 * args.k * field.abs_D
    rows = [{"p": p, "threshold": threshold, "holds": effective_bound_check(args.k, p, field)} for p in values]
    return ["p", "threshold", "holds"], rows, {}


COMMANDS = {
    "classgroup": cmd_classgroup,
    "kernel": cmd_kernel,
    "verify-asymptotics": cmd_verify_asymptotics,
    "selftest-oldforms": cmd_selftest_oldforms,
    "certify": cmd_certify,
    "effective-bound": cmd_effective_bound,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise E.ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gzavg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, workers=False):
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--output", "-o", default="-", help="output path, '-' for stdout")
        if workers:
            sp.add_argument("--workers", type=int, default=None, help=f"worker processes (default ${WORKERS_ENV} or 1)")

    sp = sub.add_parser("classgroup", help="reduced forms, h, u and r_A(m)")
    sp.add_argument("--D", type=int, required=True)
    sp.add_argument("--m-max", type=int, default=0, help="also tabulate r_A(m) for m <= M")
    common(sp)

    sp = sub.add_parser("kernel", help="a_m(g) and a_m(Phi_nu) tables")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--D", type=int, required=True)
    sp.add_argument("--class", dest="class_index", type=int, default=0)
    sp.add_argument("--level", choices=("1", "p", "p2"), default="1")
    sp.add_argument("--p", type=int)
    sp.add_argument("--m", default="1..10")
    sp.add_argument("--phi", action="store_true", help="include the Phi_nu components")
    sp.add_argument("--tail-tol", type=float, default=1e-9)
    sp.add_argument("--max-terms", type=int, default=20_000)
    sp.add_argument("--strict", action="store_true", help="fail unless every tail reached --tail-tol")
    common(sp, workers=True)

    sp = sub.add_parser("verify-asymptotics", help="predicted versus exact a_m(g)")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--D", type=int, required=True)
    sp.add_argument("--primes", default="2..200")
    sp.add_argument("--m-max", type=int, default=5)
    sp.add_argument("--literal", action="store_true", help="evaluate the displayed formulas without repairs")
    sp.add_argument("--tail-tol", type=float, default=1e-9)
    common(sp, workers=True)

    sp = sub.add_parser("selftest-oldforms", help="Gram, orthogonality and Euler-factor checks")
    sp.add_argument("--draws", type=int, default=1000)
    sp.add_argument("--fd-draws", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    common(sp)

    sp = sub.add_parser("certify", help="nonvanishing certificates over a prime range")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--D", type=int, required=True)
    sp.add_argument("--class", dest="class_index", type=int, default=0)
    sp.add_argument("--primes", required=True)
    sp.add_argument("--tail-tol", type=float, default=1e-9)
    sp.add_argument("--eigenvalues", help="table with header level,weight,p,a_p")
    common(sp, workers=True)

    sp = sub.add_parser("effective-bound", help="is p > 10^4 k |D|")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--D", type=int, required=True)
    sp.add_argument("--p", help="integers, e.g. 140000 or 100..200")
    sp.add_argument("--primes", help="primes in a range")
    common(sp)
    return parser


def _config_dict(args) -> dict:
    # worker count and output path do not affect the content
    skip = {"workers", "output", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def run(argv: Sequence[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        if hasattr(args, "workers"):
            args.workers = resolve_workers(args.workers)
        if getattr(args, "tail_tol", 1.0) <= 0:
            raise E.ConfigError("--tail-tol must be positive")
        if args.command == "effective-bound" and not (args.p or args.primes):
            raise E.ConfigError("effective-bound needs --p or --primes")
        cols, rows, checks = COMMANDS[args.command](args)
        if args.format == "json":
            text = render_json(_config_dict(args), rows, checks)
        else:
            text = render_csv(cols, rows)
        if args.output == "-":
            stdout.write(text)
        else:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        passed = all(v for name, v in checks.items() if not name.startswith("_"))
        if not passed:
            failed = [n for n, v in checks.items() if not n.startswith("_") and not v]
            print(f"gzavg: checks failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_OK if passed else EXIT_CHECKS_FAILED
    except (E.GZAvgError, OSError) as exc:
        print(f"gzavg: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code_for(exc)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
