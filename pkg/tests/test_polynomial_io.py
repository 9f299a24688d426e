from __future__ import annotations

from pathlib import Path

import pytest

from nehari.errors import PolynomialFormatError
from nehari.poly_torus import Polynomial, TrigPolynomial
from nehari.polynomial_io import (
    dump_polynomial,
    dump_trig_polynomial,
    load_polynomial,
    parse_polynomial,
    parse_trig_polynomial,
)


def test_parse_both_term_forms() -> None:
    payload = {
        "d": 2,
        "terms": [
            {"n": 2, "re": 1.0},
            {"exponents": [0, 1], "re": 1.0, "im": 0.5},
            {"n": 3, "im": -0.5},
        ],
    }
    f = parse_polynomial(payload)
    assert f == Polynomial(2, {2: 1.0, 3: 1.0})


def test_dump_then_parse_keeps_coefficients() -> None:
    f = Polynomial(4, {1: 0.25, 10: 1 - 2j, 21: -3.0})
    payload = dump_polynomial(f)
    assert payload["terms"][1] == {"n": 10, "re": 1.0, "im": -2.0}
    assert parse_polynomial(payload) == f


def test_parse_collects_every_issue() -> None:
    payload = {
        "d": 2,
        "terms": [
            {"n": 5, "re": 1.0},
            {"exponents": [1], "re": 1.0},
            {"exponents": [-1, 0], "re": 1.0},
            {"re": 1.0},
            {"n": 2, "re": "one"},
            "z1",
        ],
    }
    with pytest.raises(PolynomialFormatError) as excinfo:
        parse_polynomial(payload)
    issues = excinfo.value.issues
    assert [issue["location"] for issue in issues] == [
        "$.terms[0].n",
        "$.terms[1].exponents",
        "$.terms[2].exponents",
        "$.terms[3]",
        "$.terms[4].re",
        "$.terms[5]",
    ]
    assert all(issue["level"] == "error" for issue in issues)
    assert "(+1 more)" in str(excinfo.value)


@pytest.mark.parametrize(
    "payload",
    [[], {"terms": []}, {"d": -1, "terms": []}, {"d": 2}, {"d": True, "terms": []}],
)
def test_parse_rejects_bad_headers(payload: object) -> None:
    with pytest.raises(PolynomialFormatError):
        parse_polynomial(payload)


def test_parse_trig_polynomial() -> None:
    payload = {"d": 2, "terms": [{"exponents": [-1, 2], "re": 2.0}]}
    phi = parse_trig_polynomial(payload)
    assert phi == TrigPolynomial(2, {(-1, 2): 2.0})
    assert parse_trig_polynomial(dump_trig_polynomial(phi)) == phi
    with pytest.raises(PolynomialFormatError, match="exponents form"):
        parse_trig_polynomial({"d": 1, "terms": [{"n": 2, "re": 1.0}]})


def test_load_polynomial(tmp_path: Path) -> None:
    path = tmp_path / "f.json"
    path.write_text('{"d": 2, "terms": [{"n": 6, "re": 1}]}', encoding="utf-8")
    assert load_polynomial(path) == Polynomial.monomial(2, 6)
    broken = tmp_path / "broken.json"
    broken.write_text('{"d": 2, "terms": [', encoding="utf-8")
    with pytest.raises(PolynomialFormatError, match="invalid JSON"):
        load_polynomial(broken)
