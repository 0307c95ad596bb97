"""Verification harness shared by the CLI and the test suite.

Seeded configuration sampling, input generation, oracle dispatch, and a
single run_case entry point that launches the simulator and reports the
max-abs / max-rel deviation from the matching oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np

from . import oracle
from .catalog import catalog
from .sim import ConcreteTensor, launch
from .tileir import CheckedSpec, typecheck

ELEMENTWISE = ("add", "silu")
REDUCTION = ("softmax", "rms_norm", "mm", "bmm", "addmm", "conv2d")

TOL_ELEMENTWISE = 1e-5
TOL_REDUCTION = 1e-4

# Shape symbols accepted on the command line per kernel, in declaration order.
SHAPE_SYMBOLS = {
    "add": ("N",),
    "silu": ("N",),
    "softmax": ("R", "C"),
    "rms_norm": ("R", "C"),
    "mm": ("M", "N", "K"),
    "addmm": ("M", "N", "K"),
    "bmm": ("B", "M", "N", "K"),
    "conv2d": ("N", "C", "H", "W", "K", "R", "S"),
}

_BLOCK_CHOICES = (1, 2, 3, 4, 8, 16)


def tolerance_for(kernel: str) -> float:
    return TOL_ELEMENTWISE if kernel in ELEMENTWISE else TOL_REDUCTION


@lru_cache(maxsize=None)
def checked_catalog(kernel: str) -> CheckedSpec:
    return typecheck(catalog(kernel))


def next_pow2(n: int) -> int:
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


@dataclass(frozen=True)
class Config:
    kernel: str
    dims: dict  # shape-symbol -> int
    meta: dict  # meta-parameter -> int
    const_rows: bool = False  # degenerate reduction case (identical rows)


def default_meta(kernel: str, dims: Mapping[str, int], rng=None) -> dict:
    pick = (lambda: int(rng.choice(_BLOCK_CHOICES))) if rng is not None else (lambda: 4)
    if kernel in ("add", "silu"):
        return {"BLOCK_SIZE": pick()}
    if kernel in ("softmax", "rms_norm"):
        return {"COLS_PADDED": next_pow2(dims["C"])}
    return {"BLOCK_SIZE_M": pick(), "BLOCK_SIZE_N": pick(), "BLOCK_SIZE_K": pick()}


def sample_configs(kernel: str, count: int = 20, seed: int = 0) -> list[Config]:
    """Seeded random configurations, deliberately including non-divisible
    shape/block combinations; sizes are kept desk-scale so the full matrix
    stays well inside the time budget."""
    rng = np.random.default_rng(seed ^ hash(kernel) % (2**32))
    out = []
    for i in range(count):
        if kernel in ("add", "silu"):
            dims = {"N": int(rng.integers(1, 65))}
        elif kernel in ("softmax", "rms_norm"):
            dims = {"R": int(rng.integers(1, 17)), "C": int(rng.integers(1, 65))}
        elif kernel in ("mm", "addmm"):
            dims = {k: int(rng.integers(1, 25)) for k in ("M", "N", "K")}
        elif kernel == "bmm":
            dims = {"B": int(rng.integers(1, 5))}
            dims.update({k: int(rng.integers(1, 17)) for k in ("M", "N", "K")})
        elif kernel == "conv2d":
            h, w = int(rng.integers(4, 11)), int(rng.integers(4, 11))
            dims = {
                "N": int(rng.integers(1, 3)),
                "C": int(rng.integers(1, 5)),
                "H": h,
                "W": w,
                "K": int(rng.integers(1, 7)),
                "R": int(rng.integers(1, min(4, h) + 1)),
                "S": int(rng.integers(1, min(4, w) + 1)),
            }
        else:
            raise ValueError(f"no configuration sampler for {kernel!r}")
        const_rows = kernel in ("softmax", "rms_norm") and i % 7 == 3
        out.append(Config(kernel, dims, default_meta(kernel, dims, rng), const_rows))
    return out


def arg_shapes(kernel: str, dims: Mapping[str, int]) -> dict[str, tuple[int, ...]]:
    """Shapes of every tensor argument, outputs included."""
    d = dims
    if kernel in ("add", "silu"):
        shapes = {"input": (d["N"],), "output": (d["N"],)}
        if kernel == "add":
            shapes["other"] = (d["N"],)
        return shapes
    if kernel == "softmax":
        return {"input": (d["R"], d["C"]), "output": (d["R"], d["C"])}
    if kernel == "rms_norm":
        return {
            "input": (d["R"], d["C"]),
            "weight": (d["C"],),
            "output": (d["R"], d["C"]),
        }
    if kernel == "mm":
        return {
            "input": (d["M"], d["K"]),
            "other": (d["K"], d["N"]),
            "output": (d["M"], d["N"]),
        }
    if kernel == "addmm":
        return {
            "input": (d["M"], d["N"]),
            "mat1": (d["M"], d["K"]),
            "mat2": (d["K"], d["N"]),
            "output": (d["M"], d["N"]),
        }
    if kernel == "bmm":
        return {
            "input": (d["B"], d["M"], d["K"]),
            "other": (d["B"], d["K"], d["N"]),
            "output": (d["B"], d["M"], d["N"]),
        }
    if kernel == "conv2d":
        p, q = d["H"] - d["R"] + 1, d["W"] - d["S"] + 1
        if p < 1 or q < 1:
            raise ValueError("filter larger than image")
        return {
            "input": (d["N"], d["C"], d["H"], d["W"]),
            "filter": (d["K"], d["C"], d["R"], d["S"]),
            "output": (d["N"], d["K"], p, q),
        }
    raise ValueError(f"no shape rule for {kernel!r}")


def make_inputs(kernel: str, cfg: Config, seed: int = 0) -> dict:
    """Seeded uniform(-1, 1) inputs; outputs zero-initialized."""
    rng = np.random.default_rng(seed)
    shapes = arg_shapes(kernel, cfg.dims)
    args: dict = {}
    for name, shape in shapes.items():
        if name == "output":
            args[name] = np.zeros(shape, dtype=np.float32)
        else:
            args[name] = rng.uniform(-1.0, 1.0, shape).astype(np.float32)
    if cfg.const_rows:
        args["input"][:] = args["input"][:1]
    if kernel == "addmm":
        args["beta"] = float(np.round(rng.uniform(-1.0, 1.0), 3))
        args["alpha"] = float(np.round(rng.uniform(-1.0, 1.0), 3))
    return args


def run_oracle(kernel: str, args: Mapping) -> np.ndarray:
    if kernel == "add":
        return oracle.add(args["input"], args["other"])
    if kernel == "silu":
        return oracle.silu(args["input"])
    if kernel == "softmax":
        return oracle.softmax(args["input"])
    if kernel == "rms_norm":
        return oracle.rms_norm(args["input"], args["weight"])
    if kernel == "mm":
        return oracle.mm(args["input"], args["other"])
    if kernel == "bmm":
        return oracle.bmm(args["input"], args["other"])
    if kernel == "addmm":
        return oracle.addmm(
            args["input"], args["mat1"], args["mat2"], args["beta"], args["alpha"]
        )
    if kernel == "conv2d":
        return oracle.conv2d(args["input"], args["filter"])
    raise ValueError(f"no oracle for {kernel!r}")


def to_concrete(args: Mapping) -> dict[str, ConcreteTensor]:
    return {
        k: ConcreteTensor.scalar(v) if np.ndim(v) == 0 else ConcreteTensor.from_array(v)
        for k, v in args.items()
    }


def simulate(kernel: str, args: Mapping, meta: Mapping[str, int],
             pid_order: str = "forward") -> np.ndarray:
    tensors = to_concrete(args)
    launch(checked_catalog(kernel), tensors, meta, pid_order=pid_order)
    return tensors["output"].to_array()


@dataclass(frozen=True)
class CaseReport:
    kernel: str
    dims: dict
    meta: dict
    max_abs: float
    max_rel: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_abs <= self.tol


def run_case(kernel: str, cfg: Config, seed: int = 0,
             tol: float | None = None) -> CaseReport:
    args = make_inputs(kernel, cfg, seed)
    got = simulate(kernel, args, cfg.meta)
    want = run_oracle(kernel, args)
    diff = np.abs(got.astype(np.float64) - want.astype(np.float64))
    max_abs = float(diff.max()) if diff.size else 0.0
    denom = np.maximum(np.abs(want.astype(np.float64)), 1e-12)
    max_rel = float((diff / denom).max()) if diff.size else 0.0
    return CaseReport(
        kernel=kernel,
        dims=dict(cfg.dims),
        meta=dict(cfg.meta),
        max_abs=max_abs,
        max_rel=max_rel,
        tol=tolerance_for(kernel) if tol is None else tol,
    )
