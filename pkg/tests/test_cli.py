import csv
import io
import json

import pytest

from gzavg import cli
from gzavg.errors import ConfigError, ParseError
from gzavg.kernel import coefficient_of_g
from gzavg.quadratic_core import class_group, validate_discriminant


def run(argv, env=None):
    buf = io.StringIO()
    status = cli.run(argv, stdout=buf)
    return status, buf.getvalue()


def test_classgroup():
    status, out = run(["classgroup", "--D", "-7"])
    assert status == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1 and rows[0]["form"] == "(1,1,2)" and rows[0]["h"] == "1" and rows[0]["u"] == "1"


def test_classgroup_rep_table_json():
    status, out = run(["classgroup", "--D", "-23", "--m-max", "30", "--format", "json"])
    doc = json.loads(out)
    assert status == 0 and doc["checks"]["class_sum_equals_ideal_count"]
    assert len(doc["rows"]) == 90


def test_effective_bound_boundary():
    status, out = run(["effective-bound", "--k", "2", "--D", "-7", "--p", "140000"])
    rows = list(csv.DictReader(io.StringIO(out)))
    assert status == 0 and rows == [{"p": "140000", "threshold": "140000", "holds": "false"}]


def test_certify_rows_and_conditionality():
    status, out = run(["certify", "--k", "2", "--D", "-7", "--class", "0", "--primes", "5..500"])
    assert status == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    field = validate_discriminant(-7)
    primes = [p for p in range(5, 501) if all(p % q for q in range(2, int(p ** 0.5) + 1)) and field.epsilon(p)]
    assert [int(r["p"]) for r in rows] == primes
    for r in rows:
        want = "unconditional" if field.epsilon(int(r["p"])) == -1 else "conditional_on_nonnegativity"
        assert r["conditionality"] == want


def test_kernel_json_round_trip():
    status, out = run(["kernel", "--k", "2", "--D", "-7", "--level", "p", "--p", "11", "--m", "1..6", "--format", "json"])
    assert status == 0
    doc = json.loads(out)
    field = validate_discriminant(-7)
    A = class_group(field).principal
    got = {r["m"]: r["value"] for r in doc["rows"] if r["kind"] == "g"}
    want = {m: coefficient_of_g(field, A, 2, 11, 11, m)[0] for m in range(1, 7)}
    assert got == want
    assert set(doc) == {"config", "rows", "checks"}


def test_csv_float_format():
    assert cli.fmt_float(0.1) == "0.10000000000000001"
    assert float(cli.fmt_float(1 / 3)) == 1 / 3


def test_worker_env(monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "3")
    assert cli.resolve_workers(None) == 3
    assert cli.resolve_workers(2) == 2
    monkeypatch.setenv(cli.WORKERS_ENV, "x")
    with pytest.raises(ConfigError):
        cli.resolve_workers(None)
    with pytest.raises(ConfigError):
        cli.resolve_workers(0)


def test_parse_range():
    assert cli.parse_range("5..9") == [5, 6, 7, 8, 9]
    assert cli.parse_range("3,1,2") == [1, 2, 3]
    assert cli.parse_primes("5..20") == [5, 7, 11, 13, 17, 19]
    for bad in ("9..5", "a..b", ""):
        with pytest.raises(ConfigError):
            cli.parse_range(bad)


@pytest.mark.parametrize("argv, code", [
    (["classgroup", "--D", "-4"], 5),
    (["classgroup"], 2),
    (["certify", "--k", "2", "--D", "-7", "--primes", "5", "--tail-tol", "-1"], 2),
    (["kernel", "--k", "2", "--D", "-7", "--level", "p", "--p", "7"], 6),
    (["kernel", "--k", "1", "--D", "-7", "--m", "1"], 9),
    (["kernel", "--k", "2", "--D", "-7", "--class", "3"], 2),
    (["certify", "--k", "2", "--D", "-7", "--primes", "5", "--eigenvalues", "/nonexistent/x.csv"], 3),
])
def test_exit_codes(argv, code):
    assert run(argv)[0] == code


def test_checks_failed_exit():
    status, _ = run(["verify-asymptotics", "--k", "2", "--D", "-7", "--primes", "11..30", "--m-max", "1", "--literal"])
    assert status == 1
    status, _ = run(["verify-asymptotics", "--k", "2", "--D", "-7", "--primes", "11..30", "--m-max", "1"])
    assert status == 0


def test_ingest_eigenvalues(tmp_path):
    good = tmp_path / "ok.csv"
    good.write_text("level,weight,p,a_p\n11 2 5 1\n")
    table = cli.ingest_eigenvalues(str(good))
    assert len(table) == 1 and table.violations == []

    bad = tmp_path / "bad.csv"
    bad.write_text("level,weight,p,a_p\n11,2,5,1\n11,2,7,abc\n")
    with pytest.raises(ParseError) as exc:
        cli.ingest_eigenvalues(str(bad))
    assert exc.value.line == 3

    loud = tmp_path / "loud.csv"
    loud.write_text("level,weight,p,a_p\n11,2,5,-1\n\n11,2,7,6\n")
    table = cli.ingest_eigenvalues(str(loud))
    assert len(table) == 2 and table.violations == [4]

    with pytest.raises(ParseError):
        header = tmp_path / "header.csv"
        header.write_text("p,a_p\n5,1\n")
        cli.ingest_eigenvalues(str(header))


def test_certify_with_eigenvalue_violation(tmp_path):
    path = tmp_path / "eig.csv"
    path.write_text("level,weight,p,a_p\n53,4,53,100000\n")
    status, out = run(["certify", "--k", "2", "--D", "-7", "--primes", "53", "--eigenvalues", str(path)])
    row = next(csv.DictReader(io.StringIO(out)))
    assert status == 0
    assert row["verdict"] == "not_certified" and "ramanujan_inputs=fail" in row["preconditions"]


def test_selftest_small(tmp_path):
    out = tmp_path / "self.json"
    status, _ = run(["selftest-oldforms", "--draws", "50", "--fd-draws", "10", "--format", "json", "-o", str(out)])
    doc = json.loads(out.read_text())
    assert status == 0 and doc["checks"]["gram_positive_definite"] is True
