from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any

from nehari.certificates import (
    CSV_COLUMNS,
    Certificate,
    build_construction,
    certify,
    csv_row,
    sweep,
    sweep_dimensions,
)
from nehari.config import (
    TOLERANCE_PROFILES,
    Settings,
    ToleranceProfile,
    tolerance_profile,
)
from nehari.errors import (
    BudgetExceededError,
    ConvergenceError,
    DimensionError,
    NehariError,
    PolynomialFormatError,
)
from nehari.hankel import (
    HankelSymbol,
    build_matrix,
    helson_weights,
    operator_norm,
    schur_bound,
    uniform_weights,
)
from nehari.models import LpMethod
from nehari.multiplicative_index import require_even_dimension
from nehari.poly_torus import Polynomial, h2_norm, lp_norm
from nehari.polynomial_io import load_polynomial
from nehari.report import render_certificates, render_norm
from nehari.util import dumps_csv, dumps_json, write_text
from nehari.weak_factorization import default_grid, weak_norm

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NOT_CERTIFIED = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3

_DEFAULT_FORMAT = "json"
_DEFAULT_SEED = 0
_METHOD_BY_FLAG = {
    "quad": LpMethod.TENSOR_QUADRATURE,
    "mc": LpMethod.MONTE_CARLO,
    "separable": LpMethod.SEPARABLE_EXACT,
}
_NORM_COLUMNS = ("kind", "value", "method")
_LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


def _tolerance_override(text: str) -> tuple[str, float]:
    name, sep, raw = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    try:
        return name.strip(), float(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {name!r} needs a number, got {raw!r}")


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _configure_logging(verbosity: int) -> None:
    logging.basicConfig(
        level=_LOG_LEVELS[min(verbosity, len(_LOG_LEVELS) - 1)],
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def _profile(args: argparse.Namespace) -> ToleranceProfile:
    profile = tolerance_profile(args.tol_profile)
    if args.tol:
        profile = profile.with_overrides(dict(args.tol))
    return profile


def _settings(args: argparse.Namespace) -> Settings:
    settings = Settings.from_env()
    if getattr(args, "samples", None) is not None:
        settings = replace(settings, mc_samples=args.samples)
    if getattr(args, "nodes", None) is not None:
        settings = replace(settings, quadrature_nodes=args.nodes)
    return settings


def _emit(args: argparse.Namespace, text: str) -> None:
    if args.out is None:
        sys.stdout.write(text)
    else:
        write_text(args.out, text)
        logger.info("wrote %s", args.out)


def _render_certificates(
    args: argparse.Namespace,
    certificates: list[Certificate],
    summary: dict[str, Any] | None = None,
) -> str:
    if args.format == "csv":
        return dumps_csv(CSV_COLUMNS, [csv_row(cert) for cert in certificates])
    payloads = [cert.to_dict(include_timings=args.timings) for cert in certificates]
    if args.format == "human":
        return render_certificates(payloads, summary)
    if summary is not None:
        return dumps_json(summary)
    return dumps_json(payloads[0])


def _check_dimension(d: int, settings: Settings) -> None:
    require_even_dimension(d)
    if d > settings.max_d:
        raise DimensionError(f"d={d} is above the configured maximum of {settings.max_d}.")


def _certify_cmd(args: argparse.Namespace) -> int:
    settings = _settings(args)
    profile = _profile(args)
    _check_dimension(args.d, settings)
    certificate = certify(args.d, profile, settings=settings, seed=args.seed)
    _emit(args, _render_certificates(args, [certificate]))
    if not certificate.certified:
        print(
            f"d={args.d} not certified: "
            f"{certificate.error or ', '.join(certificate.failures)}",
            file=sys.stderr,
        )
        return EXIT_NOT_CERTIFIED
    return EXIT_OK


def _sweep_cmd(args: argparse.Namespace) -> int:
    settings = _settings(args)
    profile = _profile(args)
    for d in sweep_dimensions(args.d_min, args.d_max):
        _check_dimension(d, settings)
    report = sweep(
        args.d_min,
        args.d_max,
        profile,
        settings=settings,
        seed=args.seed,
        jobs=args.jobs,
    )
    summary = report.to_dict(include_timings=args.timings)
    _emit(args, _render_certificates(args, report.certificates, summary))
    if not report.certified:
        failed = [str(cert.d) for cert in report.certificates if not cert.certified]
        print(
            f"sweep not certified (dimensions: {', '.join(failed) or 'none'}; "
            f"slope ok: {report.slope_passed}; monotone: {report.monotone})",
            file=sys.stderr,
        )
        return EXIT_NOT_CERTIFIED
    return EXIT_OK


def _lp_payload(args: argparse.Namespace, f: Polynomial, p: float) -> dict[str, Any]:
    if p == 2.0 and args.method is None:
        return {"kind": "l2", "value": h2_norm(f), "method": "coefficients", "p": 2.0}
    settings = _settings(args)
    estimate = lp_norm(
        f,
        p,
        method=_METHOD_BY_FLAG[args.method or "quad"],
        nodes_per_dim=settings.quadrature_nodes,
        samples=settings.mc_samples,
        seed=args.seed,
        budget=settings.quadrature_budget,
    )
    payload: dict[str, Any] = {"kind": args.kind, **estimate.to_dict()}
    if estimate.method is LpMethod.MONTE_CARLO:
        payload["seed"] = args.seed
    return payload


def _norm_payload(args: argparse.Namespace, f: Polynomial) -> dict[str, Any]:
    if args.kind == "l1":
        return _lp_payload(args, f, 1.0)
    if args.kind == "l2":
        return _lp_payload(args, f, 2.0)
    symbol = HankelSymbol(f)
    if args.kind in {"hankel", "schur"}:
        rows = default_grid(f).rows
        settings = _settings(args)
        matrix = build_matrix(symbol, rows, dense_limit=settings.dense_limit)
        if args.kind == "hankel":
            norm = operator_norm(
                matrix,
                dense_limit=settings.dense_limit,
                max_iter=settings.power_iteration_cap,
            )
            return {"kind": "hankel", "matrix_size": len(rows), **norm.to_dict()}
        weights = (
            helson_weights(f.d, rows)
            if args.weights == "helson"
            else uniform_weights(rows)
        )
        return {
            "kind": "schur",
            "value": schur_bound(matrix, weights),
            "method": f"schur-test-{args.weights}",
            "matrix_size": len(rows),
        }
    try:
        result, factorization = weak_norm(
            f, symbol, max_iter=_settings(args).admm_cap
        )
    except ConvergenceError as exc:
        logger.warning("best estimate before the cap: %r", exc.best_estimate)
        raise
    return {
        "kind": "wf",
        "value": result.upper,
        "method": "nuclear-norm-admm",
        **result.to_dict(),
        "rank": len(factorization.pairs),
        "factorization": factorization.to_dict(),
    }


def _norm_cmd(args: argparse.Namespace) -> int:
    f = load_polynomial(args.poly)
    payload = _norm_payload(args, f)
    if args.format == "csv":
        text = dumps_csv(_NORM_COLUMNS, [payload])
    elif args.format == "human":
        text = render_norm(payload)
    else:
        text = dumps_json(payload)
    _emit(args, text)
    return EXIT_OK


def _construct_cmd(args: argparse.Namespace) -> int:
    settings = Settings.from_env()
    _check_dimension(args.d, settings)
    construction = build_construction(args.d, max_d=settings.max_d)
    _emit(args, dumps_json(construction.to_dict()))
    return EXIT_OK


def _add_output_flags(parser: argparse.ArgumentParser, *, formats: bool = True) -> None:
    if formats:
        parser.add_argument(
            "--format",
            choices=["json", "csv", "human"],
            default=_DEFAULT_FORMAT,
            help="Report format (human output rounds to 6 digits).",
        )
    parser.add_argument(
        "--out", type=Path, help="Write the report here instead of stdout."
    )


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--tol-profile",
        choices=sorted(TOLERANCE_PROFILES),
        default="default",
        help="Named tolerance profile.",
    )
    parser.add_argument(
        "--tol",
        action="append",
        type=_tolerance_override,
        default=[],
        metavar="NAME=VALUE",
        help="Override one tolerance field (repeatable).",
    )
    parser.add_argument(
        "--seed", type=int, default=_DEFAULT_SEED, help="Seed for Monte Carlo."
    )
    parser.add_argument(
        "--samples", type=_positive, help="Monte Carlo sample count."
    )
    parser.add_argument(
        "--nodes", type=_positive, help="Quadrature nodes per variable."
    )
    parser.add_argument(
        "--timings",
        action="store_true",
        help="Include wall-clock timings (output is then not reproducible).",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nehari",
        description=(
            "Build and certify the lower-bound construction for Nehari's "
            "theorem on the polydisc."
        ),
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Log progress to stderr (-v info, -vv debug).",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    certify_parser = subparsers.add_parser(
        "certify", help="Cross-check every norm identity for one even d."
    )
    certify_parser.add_argument("--d", type=int, required=True, help="Even dimension.")
    _add_run_flags(certify_parser)
    _add_output_flags(certify_parser)
    certify_parser.set_defaults(func=_certify_cmd)

    sweep_parser = subparsers.add_parser(
        "sweep", help="Certify every even d in a range and fit the growth rate."
    )
    sweep_parser.add_argument("--d-min", type=int, default=2)
    sweep_parser.add_argument("--d-max", type=int, required=True)
    sweep_parser.add_argument(
        "--jobs", type=_positive, default=1, help="Dimensions certified concurrently."
    )
    _add_run_flags(sweep_parser)
    _add_output_flags(sweep_parser)
    sweep_parser.set_defaults(func=_sweep_cmd)

    norm_parser = subparsers.add_parser(
        "norm", help="Compute one norm of a polynomial read from JSON."
    )
    norm_parser.add_argument(
        "--kind", choices=["l1", "l2", "hankel", "schur", "wf"], required=True
    )
    norm_parser.add_argument("--poly", type=Path, required=True)
    norm_parser.add_argument(
        "--method",
        choices=sorted(_METHOD_BY_FLAG),
        help="L^p method (default quad; l2 defaults to the coefficient norm).",
    )
    norm_parser.add_argument(
        "--weights",
        choices=["helson", "uniform"],
        default="helson",
        help="Schur test weights for --kind schur.",
    )
    norm_parser.add_argument(
        "--seed", type=int, default=_DEFAULT_SEED, help="Seed for Monte Carlo."
    )
    norm_parser.add_argument("--samples", type=_positive)
    norm_parser.add_argument("--nodes", type=_positive)
    _add_output_flags(norm_parser)
    norm_parser.set_defaults(func=_norm_cmd)

    construct_parser = subparsers.add_parser(
        "construct", help="Dump psi, f, J and the Schur weights for one d."
    )
    construct_parser.add_argument("--d", type=int, required=True)
    _add_output_flags(construct_parser, formats=False)
    construct_parser.set_defaults(func=_construct_cmd)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv if argv is not None else sys.argv[1:])
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    _configure_logging(args.verbose)
    try:
        return args.func(args)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except PolynomialFormatError as exc:
        for issue in exc.issues:
            print(f"error: {issue['location']}: {issue['message']}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CERTIFIED
    except (NehariError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
