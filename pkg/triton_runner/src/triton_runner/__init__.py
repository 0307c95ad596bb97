"""Standalone harness that runs emitted Triton kernels from source + manifest files."""

from .runner import (
    EnvironmentUnavailable,
    Manifest,
    ManifestError,
    ParamInfo,
    RunReport,
    RunRequest,
    build_request,
    default_tolerance,
    load_manifest,
    run_and_compare,
)
from .tensorio import TensorIOError, read_tensor

__version__ = "0.1.0"

__all__ = [
    "EnvironmentUnavailable",
    "Manifest",
    "ManifestError",
    "ParamInfo",
    "RunReport",
    "RunRequest",
    "TensorIOError",
    "build_request",
    "default_tolerance",
    "load_manifest",
    "read_tensor",
    "run_and_compare",
    "__version__",
]
