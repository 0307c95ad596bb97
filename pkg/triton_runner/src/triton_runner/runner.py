"""Load an emitted Triton kernel and compare its output against an expected tensor."""

import importlib.util
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .tensorio import TensorIOError, read_tensor

KINDS = ("f16", "f32")
ROLES = ("in", "out")


class ManifestError(Exception):
    """The manifest file is missing, malformed, or inconsistent."""


class EnvironmentUnavailable(Exception):
    """torch/triton or a CUDA device is not available."""


@dataclass(frozen=True)
class ParamInfo:
    name: str
    rank: int
    kind: str
    role: str


@dataclass(frozen=True)
class Manifest:
    name: str
    kernel: str
    launcher: str
    params: tuple[ParamInfo, ...]
    meta: tuple[str, ...]
    launcher_args: tuple[str, ...]


@dataclass(frozen=True)
class RunRequest:
    source: Path
    manifest: Manifest
    inputs: dict[str, np.ndarray]
    expected: np.ndarray
    meta: dict[str, int]
    tol: float


@dataclass(frozen=True)
class RunReport:
    kernel: str
    max_abs: float
    tol: float
    passed: bool
    details: dict = field(default_factory=dict)


def load_manifest(path) -> Manifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_bytes())
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ManifestError(f"{path}: manifest must be a JSON object")
    try:
        params = tuple(
            ParamInfo(
                name=str(p["name"]),
                rank=int(p["rank"]),
                kind=str(p["kind"]),
                role=str(p["role"]),
            )
            for p in doc["params"]
        )
        manifest = Manifest(
            name=str(doc["name"]),
            kernel=str(doc["kernel"]),
            launcher=str(doc["launcher"]),
            params=params,
            meta=tuple(str(m) for m in doc["meta"]),
            launcher_args=tuple(str(a) for a in doc["launcher_args"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"{path}: malformed manifest: {exc}") from exc
    for p in manifest.params:
        if p.kind not in KINDS:
            raise ManifestError(f"{path}: param {p.name!r} has unknown kind {p.kind!r}")
        if p.role not in ROLES:
            raise ManifestError(f"{path}: param {p.name!r} has unknown role {p.role!r}")
        if p.rank < 0:
            raise ManifestError(f"{path}: param {p.name!r} has negative rank")
    expected_args = tuple(p.name for p in manifest.params) + manifest.meta
    if manifest.launcher_args != expected_args:
        raise ManifestError(
            f"{path}: launcher_args {list(manifest.launcher_args)} do not match "
            f"params + meta {list(expected_args)}"
        )
    outs = [p for p in manifest.params if p.role == "out"]
    if len(outs) != 1:
        raise ManifestError(f"{path}: expected exactly one output param, found {len(outs)}")
    return manifest


def default_tolerance(manifest: Manifest) -> float:
    if any(p.kind == "f16" for p in manifest.params):
        return 1e-2
    return 1e-4


def build_request(source, manifest_path, input_paths, expect_path, meta, tol=None) -> RunRequest:
    """Assemble a run request, validating every artifact against the manifest."""
    source = Path(source)
    if not source.is_file():
        raise ManifestError(f"kernel source not found: {source}")
    manifest = load_manifest(manifest_path)
    in_params = {p.name: p for p in manifest.params if p.role == "in"}
    out_param = next(p for p in manifest.params if p.role == "out")
    missing = sorted(set(in_params) - set(input_paths))
    if missing:
        raise ManifestError(f"missing input tensors for params: {', '.join(missing)}")
    extra = sorted(set(input_paths) - set(in_params))
    if extra:
        raise ManifestError(f"unknown input params: {', '.join(extra)}")
    inputs = {}
    for name, path in input_paths.items():
        arr = read_tensor(path)
        want = in_params[name].rank
        if arr.ndim != want:
            raise ManifestError(
                f"input {name!r}: file {path} has rank {arr.ndim}, manifest says {want}"
            )
        inputs[name] = arr
    expected = read_tensor(expect_path)
    if expected.ndim != out_param.rank:
        raise ManifestError(
            f"expected output has rank {expected.ndim}, manifest says {out_param.rank}"
        )
    missing_meta = sorted(set(manifest.meta) - set(meta))
    if missing_meta:
        raise ManifestError(f"missing meta values: {', '.join(missing_meta)}")
    extra_meta = sorted(set(meta) - set(manifest.meta))
    if extra_meta:
        raise ManifestError(f"unknown meta values: {', '.join(extra_meta)}")
    for name, value in meta.items():
        if value <= 0:
            raise ManifestError(f"meta {name} must be a positive integer, got {value}")
    return RunRequest(
        source=source,
        manifest=manifest,
        inputs=inputs,
        expected=expected,
        meta=dict(meta),
        tol=default_tolerance(manifest) if tol is None else float(tol),
    )


def _require_gpu():
    try:
        import torch
        import triton  # noqa: F401
    except ImportError as exc:
        raise EnvironmentUnavailable(f"torch/triton not importable: {exc}") from exc
    if not torch.cuda.is_available():
        raise EnvironmentUnavailable("no CUDA device available")
    return torch


def _load_launcher(source: Path, name: str):
    spec = importlib.util.spec_from_file_location(f"_emitted_{source.stem}", source)
    module = importlib.util.module_from_spec(spec)
    sys.modules[spec.name] = module
    try:
        spec.loader.exec_module(module)
    finally:
        sys.modules.pop(spec.name, None)
    launcher = getattr(module, name, None)
    if launcher is None:
        raise ManifestError(f"{source}: launcher {name!r} not found in kernel source")
    return launcher


def run_and_compare(req: RunRequest) -> RunReport:
    """Execute the emitted launcher on the GPU and compare with the expected tensor."""
    torch = _require_gpu()
    launcher = _load_launcher(req.source, req.manifest.launcher)
    dtypes = {"f16": torch.float16, "f32": torch.float32}
    args = []
    for p in req.manifest.params:
        if p.role == "out":
            host = np.zeros(req.expected.shape, dtype=np.float32)
        else:
            host = req.inputs[p.name]
        args.append(torch.from_numpy(host).to(device="cuda", dtype=dtypes[p.kind]))
    out = launcher(*args, *(req.meta[m] for m in req.manifest.meta))
    got = out.to(dtype=torch.float32).cpu().numpy()
    max_abs = float(np.max(np.abs(got - req.expected))) if got.size else 0.0
    return RunReport(
        kernel=req.manifest.name,
        max_abs=max_abs,
        tol=req.tol,
        passed=max_abs <= req.tol,
        details={"output_shape": list(got.shape)},
    )
