"""Tile DSL: hierarchical symbolic tensors, arrange-and-apply kernel specs,
a deterministic CPU simulator, and a Triton source emitter."""

from .arrange import ArrangeError, GridSpec, IndexMap
from .catalog import CATALOG_NAMES, OutOfScopeError, catalog
from .emit import EmitError, EmittedKernel, emit_triton, manifest_json
from .htensor import FULL, HTensor, HTensorError, new_param, param_with_shape
from .sim import ConcreteTensor, LaunchError, check_write_partition, launch
from .symexpr import EvalError, SymExpr, cdiv, const, evaluate, render, simplify, sym
from .tileir import (
    CheckedSpec,
    KernelSpec,
    SpecError,
    SpecParseError,
    TypecheckError,
    parse_spec,
    serialize_spec,
    typecheck,
)

__version__ = "0.1.0"

__all__ = [
    "ArrangeError",
    "CATALOG_NAMES",
    "CheckedSpec",
    "ConcreteTensor",
    "EmitError",
    "EmittedKernel",
    "EvalError",
    "FULL",
    "GridSpec",
    "HTensor",
    "HTensorError",
    "IndexMap",
    "KernelSpec",
    "LaunchError",
    "OutOfScopeError",
    "SpecError",
    "SpecParseError",
    "SymExpr",
    "TypecheckError",
    "catalog",
    "cdiv",
    "check_write_partition",
    "const",
    "emit_triton",
    "evaluate",
    "launch",
    "manifest_json",
    "new_param",
    "param_with_shape",
    "parse_spec",
    "render",
    "serialize_spec",
    "simplify",
    "sym",
    "typecheck",
]
