from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from importlib import resources
from typing import Any

from jinja2 import Environment

_TEMPLATE_ENV = Environment(
    autoescape=False, trim_blocks=True, lstrip_blocks=True, keep_trailing_newline=True
)


def _fmt(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.6g}"
    return str(value)


_TEMPLATE_ENV.filters["fmt"] = _fmt

_TEMPLATE_TEXT = (
    resources.files("nehari")
    .joinpath("templates/report.txt.j2")
    .read_text(encoding="utf-8")
)
_TEMPLATE = _TEMPLATE_ENV.from_string(_TEMPLATE_TEXT)


def render_certificates(
    certificates: Sequence[Mapping[str, Any]],
    sweep: Mapping[str, Any] | None = None,
) -> str:
    """Plain-text report for one certificate or a sweep, rounded to 6 digits."""
    return _TEMPLATE.render(kind="certificates", certificates=certificates, sweep=sweep)


def render_norm(result: Mapping[str, Any]) -> str:
    details = {
        key: value
        for key, value in sorted(result.items())
        if key not in {"kind", "value", "method"} and not isinstance(value, dict | list)
    }
    return _TEMPLATE.render(kind="norm", result=result, details=details)
