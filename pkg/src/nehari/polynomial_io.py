from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from nehari.errors import NehariError, PolynomialFormatError
from nehari.multiplicative_index import compose, factorize
from nehari.poly_torus import Polynomial, TrigPolynomial
from nehari.util import load_json


def _error(code: str, message: str, location: str) -> dict[str, str]:
    return {"level": "error", "code": code, "message": message, "location": location}


def _is_number(value: object) -> bool:
    return isinstance(value, int | float) and not isinstance(value, bool)


def _parse_header(
    payload: Any, issues: list[dict[str, str]]
) -> tuple[int | None, list[Any]]:
    if not isinstance(payload, dict):
        issues.append(_error("payload_type", "polynomial must be a JSON object.", "$"))
        return None, []
    d = payload.get("d")
    if not isinstance(d, int) or isinstance(d, bool) or d < 0:
        issues.append(_error("dimension", "d must be a nonnegative integer.", "$.d"))
        d = None
    terms = payload.get("terms")
    if not isinstance(terms, list):
        issues.append(_error("terms_type", "terms must be a list.", "$.terms"))
        return d, []
    return d, terms


def _parse_coefficient(
    record: dict[str, Any], location: str, issues: list[dict[str, str]]
) -> complex | None:
    real = record.get("re", 0.0)
    imag = record.get("im", 0.0)
    if not _is_number(real) or not _is_number(imag):
        issues.append(
            _error("coefficient", "re and im must be numbers.", f"{location}.re")
        )
        return None
    if "re" not in record and "im" not in record:
        issues.append(
            _error("coefficient", "term needs re and/or im.", location)
        )
        return None
    return complex(real, imag)


def _parse_exponents(
    value: Any, d: int, location: str, issues: list[dict[str, str]], *, signed: bool
) -> tuple[int, ...] | None:
    if not isinstance(value, list) or not all(
        isinstance(e, int) and not isinstance(e, bool) for e in value
    ):
        issues.append(
            _error("exponents", "exponents must be a list of integers.", location)
        )
        return None
    if len(value) != d:
        issues.append(
            _error("exponents", f"exponents must have length d={d}.", location)
        )
        return None
    if not signed and any(e < 0 for e in value):
        issues.append(
            _error(
                "exponents",
                "analytic polynomials need nonnegative exponents.",
                location,
            )
        )
        return None
    return tuple(value)


def parse_polynomial(payload: Any) -> Polynomial:
    """Read ``{"d": .., "terms": [{"n" | "exponents", "re", "im"}, ..]}``."""
    issues: list[dict[str, str]] = []
    d, records = _parse_header(payload, issues)
    terms: dict[int, complex] = {}
    for index, record in enumerate(records):
        location = f"$.terms[{index}]"
        if not isinstance(record, dict):
            issues.append(_error("term_type", "term must be a JSON object.", location))
            continue
        coefficient = _parse_coefficient(record, location, issues)
        if d is None or coefficient is None:
            continue
        if "n" in record:
            n = record["n"]
            if not isinstance(n, int) or isinstance(n, bool) or n < 1:
                issues.append(
                    _error("monomial_id", "n must be a positive integer.", f"{location}.n")
                )
                continue
            try:
                factorize(n, d)
            except NehariError as exc:
                issues.append(_error("monomial_id", str(exc), f"{location}.n"))
                continue
        elif "exponents" in record:
            exponents = _parse_exponents(
                record["exponents"], d, f"{location}.exponents", issues, signed=False
            )
            if exponents is None:
                continue
            try:
                n = compose(exponents)
            except NehariError as exc:
                issues.append(_error("exponents", str(exc), f"{location}.exponents"))
                continue
        else:
            issues.append(_error("missing_key", "term needs n or exponents.", location))
            continue
        terms[n] = terms.get(n, 0j) + coefficient
    if issues:
        raise PolynomialFormatError(issues)
    return Polynomial(d, terms)


def parse_trig_polynomial(payload: Any) -> TrigPolynomial:
    issues: list[dict[str, str]] = []
    d, records = _parse_header(payload, issues)
    terms: dict[tuple[int, ...], complex] = {}
    for index, record in enumerate(records):
        location = f"$.terms[{index}]"
        if not isinstance(record, dict):
            issues.append(_error("term_type", "term must be a JSON object.", location))
            continue
        coefficient = _parse_coefficient(record, location, issues)
        if d is None or coefficient is None:
            continue
        if "exponents" not in record:
            issues.append(
                _error(
                    "missing_key",
                    "trigonometric terms use the exponents form.",
                    location,
                )
            )
            continue
        exponents = _parse_exponents(
            record["exponents"], d, f"{location}.exponents", issues, signed=True
        )
        if exponents is not None:
            terms[exponents] = terms.get(exponents, 0j) + coefficient
    if issues:
        raise PolynomialFormatError(issues)
    return TrigPolynomial(d, terms)


def load_polynomial(path: Path) -> Polynomial:
    try:
        payload = load_json(path)
    except json.JSONDecodeError as exc:
        raise PolynomialFormatError(
            [_error("invalid_json", f"invalid JSON ({exc.msg}).", f"{path.name}:{exc.lineno}")]
        ) from exc
    return parse_polynomial(payload)


def dump_polynomial(f: Polynomial) -> dict[str, Any]:
    return {
        "d": f.d,
        "terms": [
            {"n": n, "re": value.real, "im": value.imag} for n, value in f.terms.items()
        ],
    }


def dump_trig_polynomial(phi: TrigPolynomial) -> dict[str, Any]:
    return {
        "d": phi.d,
        "terms": [
            {"exponents": list(exponents), "re": value.real, "im": value.imag}
            for exponents, value in phi.terms.items()
        ],
    }
