"""Command-line front door: inspect arrangements, simulate, verify against
oracles, and emit Triton source.

Exit codes: 0 success/pass, 1 verification failure, 2 usage or spec error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import symexpr as se
from . import verify as vf
from .catalog import CATALOG_NAMES, OUT_OF_SCOPE, OutOfScopeError, catalog
from .emit import emit_triton, manifest_json
from .htensor import HTensorError
from .arrange import ArrangeError
from .sim import LaunchError
from .symexpr import EvalError
from .tensorio import TensorIOError, write_tensor
from .tileir import KernelSpec, SpecError, parse_spec, typecheck

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class CliError(Exception):
    pass


def _parse_binds(pairs: list[str]) -> dict[str, int]:
    binds: dict[str, int] = {}
    for chunk in pairs:
        for item in chunk.split(","):
            item = item.strip()
            if not item:
                continue
            if "=" not in item:
                raise CliError(f"bad binding {item!r}; expected SYM=INT")
            name, _, value = item.partition("=")
            try:
                v = int(value)
            except ValueError:
                raise CliError(f"binding {name!r} is not an integer: {value!r}") from None
            if v < 1:
                raise CliError(f"binding {name!r} must be positive, got {v}")
            binds[name.strip()] = v
    return binds


def _load_spec(ref: str) -> KernelSpec:
    if ref in CATALOG_NAMES or ref in OUT_OF_SCOPE:
        return catalog(ref)
    path = Path(ref)
    if path.suffix == ".json" or path.exists():
        return parse_spec(path.read_text())
    raise CliError(
        f"unknown kernel {ref!r} (not in catalog and not a spec file); "
        f"available: {', '.join(CATALOG_NAMES)}"
    )


def _reject_unknown_binds(spec: KernelSpec, binds: dict, aliases=()) -> None:
    allowed = set(spec.symbol_names()) | set(aliases)
    unknown = set(binds) - allowed
    if unknown:
        raise CliError(
            f"unknown symbols in --bind: {', '.join(sorted(unknown))}; "
            f"allowed: {', '.join(sorted(allowed))}"
        )


def _alias_binding(kernel: str, binds: dict) -> tuple[dict, dict]:
    """Split CLI bindings into shape dims (by alias) and meta values."""
    aliases = vf.SHAPE_SYMBOLS[kernel]
    spec = catalog(kernel)
    dims = {a: binds[a] for a in aliases if a in binds}
    missing = [a for a in aliases if a not in dims]
    if missing:
        raise CliError(
            f"{kernel} needs shape bindings for {', '.join(missing)} "
            f"(e.g. --bind {missing[0]}=8)"
        )
    meta = {m: binds[m] for m in spec.meta if m in binds}
    defaults = vf.default_meta(kernel, dims)
    for m in spec.meta:
        meta.setdefault(m, defaults[m])
    return dims, meta


def _emit_report(report: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(report, indent=2))
        return
    _print_text(report)


def _print_text(report: dict, indent: int = 0) -> None:
    pad = "  " * indent
    for key, val in report.items():
        if isinstance(val, dict):
            print(f"{pad}{key}:")
            _print_text(val, indent + 1)
        elif isinstance(val, list) and val and isinstance(val[0], dict):
            print(f"{pad}{key}:")
            for item in val:
                print(f"{pad}  -")
                _print_text(item, indent + 2)
        else:
            print(f"{pad}{key}: {val}")


def cmd_list_kernels(args) -> int:
    report = {
        "kernels": list(CATALOG_NAMES),
        "out_of_scope": list(OUT_OF_SCOPE),
    }
    _emit_report(report, args.format)
    return EXIT_OK


def cmd_inspect(args) -> int:
    spec = _load_spec(args.spec)
    binds = _parse_binds(args.bind)
    aliases = vf.SHAPE_SYMBOLS.get(spec.name, ())
    _reject_unknown_binds(spec, binds, aliases)
    checked = typecheck(spec)

    numeric = dict(binds)
    if spec.name in vf.SHAPE_SYMBOLS and all(a in binds for a in aliases):
        dims, meta = _alias_binding(spec.name, binds)
        shapes = vf.arg_shapes(spec.name, dims)
        for pname, shape in shapes.items():
            stride = 1
            strides = []
            for s in reversed(shape):
                strides.append(stride)
                stride *= s
            for i, (size, st) in enumerate(zip(shape, reversed(strides))):
                numeric[f"{pname}_size_{i}"] = size
                numeric[f"{pname}_stride_{i}"] = st
        numeric.update(meta)

    def num(e: se.SymExpr):
        try:
            return int(se.evaluate(e, numeric))
        except EvalError:
            return None

    params = []
    for name, tensor in checked.arrangement:
        imap = checked.index_maps[name]
        levels = []
        for lvl in tensor.levels:
            shape = [se.render(s) for s in lvl.shape]
            values = [num(s) for s in lvl.shape]
            entry = {"shape": shape}
            if all(v is not None for v in values):
                entry["value"] = values
            levels.append(entry)
        params.append(
            {
                "param": name,
                "levels": levels,
                "offset": se.render(imap.offset),
                "mask": [f"{se.render(l)} < {se.render(b)}" for l, b in imap.mask],
            }
        )
    grid = {
        "sizes": [se.render(s) for s in checked.grid.sizes],
        "total": se.render(checked.grid.total),
    }
    total = num(checked.grid.total)
    if total is not None:
        grid["value"] = [num(s) for s in checked.grid.sizes]
        grid["total_value"] = total
    report = {
        "kernel": spec.name,
        "grid": grid,
        "params": params,
        "checks": [
            f"{se.render(l)} == {se.render(r)}" for l, r in checked.grid.checks
        ],
    }
    _emit_report(report, args.format)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.spec not in vf.SHAPE_SYMBOLS:
        raise CliError(f"simulate supports catalog kernels only, not {args.spec!r}")
    binds = _parse_binds(args.bind)
    spec = catalog(args.spec)
    _reject_unknown_binds(spec, binds, vf.SHAPE_SYMBOLS[args.spec])
    dims, meta = _alias_binding(args.spec, binds)
    cfg = vf.Config(args.spec, dims, meta)
    inputs = vf.make_inputs(args.spec, cfg, args.seed)
    got = vf.simulate(args.spec, inputs, meta)
    expected = vf.run_oracle(args.spec, inputs)
    report = {
        "kernel": args.spec,
        "dims": dims,
        "meta": meta,
        "seed": args.seed,
        "output_shape": list(got.shape),
        "output_checksum": float(np.float64(got.astype(np.float64).sum())),
    }
    if args.save_dir:
        out_dir = Path(args.save_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        files = {}
        for name, value in inputs.items():
            if name == "output":
                continue
            path = out_dir / f"{name}.twt"
            write_tensor(path, np.asarray(value, dtype=np.float32))
            files[name] = str(path)
        sim_path = out_dir / "output.twt"
        write_tensor(sim_path, got)
        files["output"] = str(sim_path)
        oracle_path = out_dir / "expected.twt"
        write_tensor(oracle_path, expected)
        files["expected"] = str(oracle_path)
        report["files"] = files
    _emit_report(report, args.format)
    return EXIT_OK


def _case_dict(r: vf.CaseReport) -> dict:
    return {
        "kernel": r.kernel,
        "dims": r.dims,
        "meta": r.meta,
        "max_abs": r.max_abs,
        "max_rel": r.max_rel,
        "tol": r.tol,
        "status": "pass" if r.passed else "FAIL",
    }


def cmd_verify(args) -> int:
    if args.spec not in vf.SHAPE_SYMBOLS:
        # Catalog resolution raises the out-of-scope/unknown diagnostics.
        catalog(args.spec)
        raise CliError(f"no oracle for {args.spec!r}")
    binds = _parse_binds(args.bind)
    spec = catalog(args.spec)
    _reject_unknown_binds(spec, binds, vf.SHAPE_SYMBOLS[args.spec])
    cases: list[vf.Config] = []
    if args.all:
        cases = vf.sample_configs(args.spec, count=args.count, seed=args.seed)
    else:
        dims, meta = _alias_binding(args.spec, binds)
        cases = [vf.Config(args.spec, dims, meta)]
    reports = [
        vf.run_case(args.spec, cfg, seed=args.seed + i, tol=args.tol)
        for i, cfg in enumerate(cases)
    ]
    ok = all(r.passed for r in reports)
    report = {
        "kernel": args.spec,
        "cases": [_case_dict(r) for r in reports],
        "status": "pass" if ok else "FAIL",
    }
    _emit_report(report, args.format)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_emit(args) -> int:
    spec = _load_spec(args.spec)
    emitted = emit_triton(typecheck(spec))
    out_path = Path(args.output)
    manifest_path = out_path.with_suffix("").with_suffix(".manifest.json")
    try:
        out_path.write_text(emitted.source)
        manifest_path.write_text(manifest_json(emitted))
    except OSError as exc:
        raise CliError(f"cannot write output: {exc}") from None
    report = {
        "kernel": emitted.kernel_name,
        "launcher": emitted.launcher_name,
        "source": str(out_path),
        "manifest": str(manifest_path),
    }
    _emit_report(report, args.format)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tiledsl",
        description="Inspect, simulate, verify, and emit tile-DSL kernels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, spec=True):
        if spec:
            p.add_argument("spec", help="catalog kernel name or JSON spec path")
        p.add_argument(
            "--bind",
            action="append",
            default=[],
            metavar="SYM=INT",
            help="bind a shape or meta symbol (repeatable, comma-separable)",
        )
        p.add_argument("--seed", type=int, default=0, help="input RNG seed")
        p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("list-kernels", help="list catalog kernels")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(fn=cmd_list_kernels)

    p = sub.add_parser("inspect", help="show arrangement, grid, and index maps")
    common(p)
    p.set_defaults(fn=cmd_inspect)

    p = sub.add_parser("simulate", help="run the simulator on seeded inputs")
    common(p)
    p.add_argument("--save-dir", help="directory for TWT1 input/output exports")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("verify", help="compare the simulator against the oracle")
    common(p)
    p.add_argument("--tol", type=float, default=None, help="override tolerance")
    p.add_argument("--all", action="store_true", help="run the sampled config matrix")
    p.add_argument("--count", type=int, default=20, help="matrix size for --all")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("emit", help="write Triton source and its manifest")
    common(p)
    p.add_argument("-o", "--output", required=True, help="output source path")
    p.set_defaults(fn=cmd_emit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except OutOfScopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CliError, SpecError, HTensorError, ArrangeError, LaunchError,
            EvalError, TensorIOError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
