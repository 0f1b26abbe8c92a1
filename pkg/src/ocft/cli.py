"""Command-line front end.

Subcommands map one-to-one onto the library modules:

    pfaffian      Pfaffian of a skew matrix given as JSON
    haar-moment   Monte-Carlo Haar moment of entry products
    moment        <|z - GO|^{2m}> by closed form, Pfaffian integral or MC
    jacobi        Jacobi-ensemble average ratio (Pfaffian or quadrature)
    ginibre-check Gaussian-weight consistency check (closed vs pipeline vs MC)
    verify-cft    coefficient/probe verification of a colour-flavour identity

Results are serialised to stdout as JSON (default) or CSV with stable field
order, so identical run configurations produce byte-identical output;
timing goes to stderr.  Exit codes: 0 success, 2 invalid configuration,
3 verification failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from .cft import verify_bosonic_cft, verify_fermionic_cft, verify_son_cft
from .errors import OcftError
from .haar import Estimate, RngStream, mc_expectation
from .jacobi import (
    JacobiQuery,
    ginibre_closed,
    ginibre_mc,
    ginibre_pipeline,
    jacobi_pfaffian,
    jacobi_quadrature,
)
from .linalg import determinant, pfaffian
from .moments import (
    MomentQuery,
    moment_m1_closed,
    moment_mc,
    moment_pfaffian_integral,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VERIFICATION = 3


def parse_complex(text: str) -> complex:
    """Parse 're,im' (or plain 'x' meaning 'x,0') into a complex number."""
    parts = text.split(",")
    if len(parts) == 1:
        return complex(float(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    raise ValueError(f"cannot parse complex value from {text!r}")


def _cnum(value: complex) -> dict:
    value = complex(value)
    return {"re": value.real, "im": value.imag}


def _estimate_fields(est: Estimate) -> dict:
    return {
        "value": _cnum(est.mean),
        "std_error": est.std_error,
        "samples": est.samples,
    }


def _flatten(record: dict, prefix: str = "") -> list[tuple[str, object]]:
    items: list[tuple[str, object]] = []
    for key, val in record.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            items.extend(_flatten(val, name + "."))
        elif isinstance(val, list):
            items.append((name, json.dumps(val)))
        else:
            items.append((name, val))
    return items


def _emit(record: dict, fmt: str, out) -> None:
    if fmt == "json":
        out.write(json.dumps(record) + "\n")
        return
    rows = record.pop("rows", None)
    writer = csv.writer(out, lineterminator="\n")
    if rows is None:
        flat = _flatten(record)
        writer.writerow([k for k, _ in flat])
        writer.writerow([v for _, v in flat])
        return
    header = list(rows[0].keys()) if rows else []
    flat_rows = [_flatten(r) for r in rows]
    writer.writerow([k for k, _ in flat_rows[0]] if flat_rows else header)
    for fr in flat_rows:
        writer.writerow([v for _, v in fr])


def _parse_matrix(text: str) -> np.ndarray:
    """JSON matrix; entries are numbers or [re, im] pairs."""
    data = json.loads(text)
    rows = []
    for row in data:
        entries = []
        for cell in row:
            if isinstance(cell, (list, tuple)):
                entries.append(complex(cell[0], cell[1]))
            else:
                entries.append(complex(cell))
        rows.append(entries)
    return np.array(rows, dtype=complex)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    parser.add_argument(
        "--workers",
        type=int,
        default=int(os.environ.get("OCFT_WORKERS", "1")),
        help="worker substreams (default $OCFT_WORKERS or 1)",
    )
    parser.add_argument(
        "--format", choices=("json", "csv"), default="json", help="output format"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ocft",
        description="Pfaffian closed forms and Monte-Carlo verification of "
        "orthogonal-group colour-flavour identities",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pfaffian", help="Pfaffian of a skew matrix")
    p.add_argument("--matrix", required=True, help="JSON rows; entries x or [re,im]")
    p.add_argument("--tol", type=float, default=None, help="skew check tolerance")
    _add_common(p)

    p = sub.add_parser("haar-moment", help="Haar moment of entry products")
    p.add_argument("--n", type=int, required=True, help="group dimension")
    p.add_argument(
        "--entries",
        required=True,
        help="semicolon-separated 1-based index pairs, e.g. '1,1;2,2'",
    )
    p.add_argument("--group", choices=("O", "SO"), default="O")
    p.add_argument("--samples", type=int, default=100_000)
    _add_common(p)

    p = sub.add_parser("moment", help="averaged |z - GO|^{2m}")
    p.add_argument("--n", type=int, required=True, help="matrix dimension")
    p.add_argument("--m", type=int, default=1, help="moment order")
    p.add_argument("--z", required=True, help="complex point 're,im' or 'x'")
    p.add_argument("--g", required=True, help="comma-separated singular values")
    p.add_argument("--method", choices=("closed", "pfaffian", "mc"), default="closed")
    p.add_argument("--samples", type=int, default=200_000)
    _add_common(p)

    p = sub.add_parser("jacobi", help="Jacobi-ensemble average ratio")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p.add_argument("--lambda", dest="lam", required=True, help="'re,im' or 'x'")
    p.add_argument("--gamma", dest="gam", required=True, help="'re,im' or 'x'")
    p.add_argument(
        "--method", choices=("pfaffian", "quadrature"), default="pfaffian"
    )
    _add_common(p)

    p = sub.add_parser("ginibre-check", help="Gaussian-weight consistency check")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--gamma", dest="gam", required=True)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--threshold", type=float, default=3.0, help="MC z-score bound")
    _add_common(p)

    p = sub.add_parser("verify-cft", help="verify a colour-flavour identity")
    p.add_argument(
        "--variant", choices=("fermionic", "bosonic", "son"), required=True
    )
    p.add_argument("--colors", type=int, required=True, help="colour count N")
    p.add_argument("--flavors", type=int, required=True, help="flavour count n")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--probes", type=int, default=10, help="bosonic probe points")
    p.add_argument("--threshold", type=float, default=4.0, help="max |z| to pass")
    _add_common(p)

    return parser


def _run_pfaffian(args) -> tuple[dict, int]:
    matrix = _parse_matrix(args.matrix)
    value = pfaffian(matrix, args.tol)
    det = determinant(matrix)
    residual = abs(value**2 - det) / max(abs(det), 1e-300)
    record = {
        "command": "pfaffian",
        "dimension": matrix.shape[0],
        "value": _cnum(value),
        "det_residual": residual,
    }
    return record, EXIT_OK


def _run_haar_moment(args) -> tuple[dict, int]:
    idx = []
    for chunk in args.entries.split(";"):
        i, j = (int(x) for x in chunk.split(","))
        if not (1 <= i <= args.n and 1 <= j <= args.n):
            raise OcftError(f"entry ({i},{j}) outside a {args.n}x{args.n} matrix")
        idx.append((i - 1, j - 1))

    def f(o):
        out = np.ones(o.shape[0])
        for i, j in idx:
            out = out * o[:, i, j]
        return out

    est = mc_expectation(
        f,
        args.n,
        args.samples,
        RngStream(args.seed),
        group=args.group,
        workers=args.workers,
        batched=True,
    )
    record = {
        "command": "haar-moment",
        "n": args.n,
        "group": args.group,
        "entries": args.entries,
        "seed": args.seed,
        "workers": args.workers,
        **_estimate_fields(est),
    }
    return record, EXIT_OK


def _run_moment(args) -> tuple[dict, int]:
    g = tuple(float(x) for x in args.g.split(","))
    if len(g) != args.n:
        raise OcftError(f"--g lists {len(g)} values but --n is {args.n}")
    query = MomentQuery(z=parse_complex(args.z), g=g, m=args.m)
    record = {
        "command": "moment",
        "n": args.n,
        "m": args.m,
        "z": _cnum(query.z),
        "g": list(g),
        "method": args.method,
        "seed": args.seed,
    }
    if args.method == "closed":
        record["value"] = moment_m1_closed(query)
    elif args.method == "mc":
        est = moment_mc(query, args.samples, RngStream(args.seed), args.workers)
        record.update(_estimate_fields(est))
    else:
        est = moment_pfaffian_integral(query, RngStream(args.seed))
        record.update(_estimate_fields(est))
    return record, EXIT_OK


def _run_jacobi(args) -> tuple[dict, int]:
    query = JacobiQuery(
        parse_complex(args.lam), parse_complex(args.gam), args.a, args.b, args.n
    )
    fn = jacobi_pfaffian if args.method == "pfaffian" else jacobi_quadrature
    value = fn(query)
    record = {
        "command": "jacobi",
        "n": args.n,
        "a": args.a,
        "b": args.b,
        "lambda": _cnum(query.lam),
        "gamma": _cnum(query.gam),
        "method": args.method,
        "reference_lg": _cnum(1.0),
        "value": _cnum(value),
    }
    return record, EXIT_OK


def _run_ginibre(args) -> tuple[dict, int]:
    lam, gam = parse_complex(args.lam), parse_complex(args.gam)
    closed = ginibre_closed(lam, gam, args.n)
    pipeline = ginibre_pipeline(lam, gam, args.n)
    est = ginibre_mc(lam, gam, args.n, args.samples, RngStream(args.seed))
    z_mc = est.z_score(closed)
    pipeline_err = abs(pipeline - closed) / abs(closed)
    passed = bool(z_mc <= args.threshold and pipeline_err <= 1e-6)
    record = {
        "command": "ginibre-check",
        "n": args.n,
        "lambda": _cnum(lam),
        "gamma": _cnum(gam),
        "seed": args.seed,
        "closed_ratio": _cnum(closed),
        "pipeline_ratio": _cnum(pipeline),
        "pipeline_rel_err": pipeline_err,
        "mc_ratio": _cnum(est.mean),
        "mc_std_error": est.std_error,
        "samples": est.samples,
        "mc_z_score": z_mc,
        "threshold": args.threshold,
        "passed": passed,
    }
    return record, EXIT_OK if passed else EXIT_VERIFICATION


def _run_verify(args) -> tuple[dict, int]:
    rng = RngStream(args.seed)
    if args.variant == "fermionic":
        report = verify_fermionic_cft(
            args.colors,
            args.flavors,
            args.samples,
            rng,
            threshold=args.threshold,
            workers=args.workers,
        )
    elif args.variant == "bosonic":
        report = verify_bosonic_cft(
            args.colors,
            args.flavors,
            args.probes,
            args.samples,
            rng,
            threshold=args.threshold,
            workers=args.workers,
        )
    else:
        report = verify_son_cft(
            args.colors,
            args.flavors,
            args.samples,
            rng,
            threshold=args.threshold,
            workers=args.workers,
        )
    rows = [
        {
            "mask": r.mask,
            "label": r.label,
            "lhs": _cnum(r.lhs),
            "lhs_se": r.lhs_se,
            "rhs": _cnum(r.rhs),
            "rhs_se": r.rhs_se,
            "z_score": r.z_score if np.isfinite(r.z_score) else 1e308,
        }
        for r in report.rows
    ]
    record = {
        "command": "verify-cft",
        "variant": report.variant,
        "colors": report.n_colour,
        "flavors": report.n_flavour,
        "samples": report.samples,
        "seed": args.seed,
        "workers": args.workers,
        "threshold": report.threshold,
        "max_abs_z": report.max_abs_z,
        "passed": bool(report.passed),
        "extras": {
            k: v for k, v in report.extras.items() if not isinstance(v, dict)
        },
        "rows": rows,
    }
    if "normalization_audit" in report.extras:
        audit = report.extras["normalization_audit"]
        record["extras"]["normalization_ratio"] = audit["ratio"]
    return record, EXIT_OK if report.passed else EXIT_VERIFICATION


_RUNNERS = {
    "pfaffian": _run_pfaffian,
    "haar-moment": _run_haar_moment,
    "moment": _run_moment,
    "jacobi": _run_jacobi,
    "ginibre-check": _run_ginibre,
    "verify-cft": _run_verify,
}


def run(argv, out=None, err=None) -> int:
    """Execute one CLI invocation; returns the exit code."""
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    started = time.perf_counter()
    try:
        record, code = _RUNNERS[args.command](args)
    except (OcftError, ValueError, json.JSONDecodeError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_USAGE
    _emit(record, args.format, out)
    err.write(f"elapsed: {time.perf_counter() - started:.3f}s\n")
    return code


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
