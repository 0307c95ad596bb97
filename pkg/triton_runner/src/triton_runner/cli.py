"""Command-line entry point: ``python -m triton_runner run ...``."""

import argparse
import sys

from .runner import EnvironmentUnavailable, ManifestError, build_request, run_and_compare
from .tensorio import TensorIOError

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_NO_ENV = 3


class CliError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triton-runner",
        description="run an emitted Triton kernel and compare against an expected tensor",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="execute a kernel and check its output")
    p.add_argument("--source", required=True, help="emitted kernel .py file")
    p.add_argument("--manifest", required=True, help="manifest .json sidecar")
    p.add_argument(
        "--inputs",
        action="append",
        default=[],
        metavar="NAME=PATH",
        help="input tensor file for a kernel param (repeatable)",
    )
    p.add_argument("--expect", required=True, help="expected output tensor file")
    p.add_argument(
        "--meta",
        action="append",
        default=[],
        metavar="NAME=INT",
        help="compile-time meta parameter value (repeatable)",
    )
    p.add_argument("--tol", type=float, default=None,
                   help="max-abs tolerance (default 1e-2 for f16 kernels, 1e-4 for f32)")
    return parser


def _parse_pairs(pairs, label, convert):
    out = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep or not name:
            raise CliError(f"bad {label} {pair!r}, expected NAME=VALUE")
        if name in out:
            raise CliError(f"duplicate {label} {name!r}")
        try:
            out[name] = convert(value)
        except ValueError as exc:
            raise CliError(f"bad {label} {pair!r}: {exc}") from exc
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        inputs = _parse_pairs(args.inputs, "input", str)
        meta = _parse_pairs(args.meta, "meta", int)
        req = build_request(args.source, args.manifest, inputs, args.expect, meta, args.tol)
    except (CliError, ManifestError, TensorIOError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = run_and_compare(req)
    except EnvironmentUnavailable as exc:
        print(f"environment unavailable: {exc}", file=sys.stderr)
        return EXIT_NO_ENV
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    status = "pass" if report.passed else "FAIL"
    print(f"{report.kernel}: max-abs {report.max_abs:.3e} tol {report.tol:.0e} {status}")
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
