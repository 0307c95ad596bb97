"""Command-line behavior: reports, exit codes, file outputs."""

import json

import numpy as np
import pytest

from tiledsl.cli import main
from tiledsl.tensorio import read_tensor


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestListKernels:
    def test_text(self, capsys):
        code, out, _ = run(capsys, "list-kernels")
        assert code == 0
        assert "mm" in out and "conv2d" in out

    def test_json(self, capsys):
        code, out, _ = run(capsys, "list-kernels", "--format", "json")
        doc = json.loads(out)
        assert code == 0
        assert set(doc["kernels"]) >= {"add", "mm", "conv2d"}


class TestInspect:
    def test_matmul_bound_report(self, capsys):
        code, out, _ = run(
            capsys, "inspect", "mm", "--format", "json",
            "--bind", "M=4,N=8,K=6",
            "--bind", "BLOCK_SIZE_M=2,BLOCK_SIZE_N=2,BLOCK_SIZE_K=3",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["grid"]["total_value"] == 8
        by_name = {p["param"]: p for p in doc["params"]}
        levels = [lvl["value"] for lvl in by_name["input"]["levels"]]
        assert levels == [[2, 4], [2], [2, 3]]

    def test_symbolic_grid_without_binds(self, capsys):
        code, out, _ = run(capsys, "inspect", "add")
        assert code == 0
        assert "cdiv(input_size_0, BLOCK_SIZE)" in out

    def test_unknown_kernel_is_usage_error(self, capsys):
        code, _, err = run(capsys, "inspect", "nope")
        assert code == 2
        assert "unknown kernel" in err

    def test_unknown_bind_symbol_rejected(self, capsys):
        code, _, err = run(capsys, "inspect", "add", "--bind", "Q=3")
        assert code == 2
        assert "unknown symbols" in err

    def test_malformed_bind_rejected(self, capsys):
        code, _, err = run(capsys, "inspect", "add", "--bind", "N")
        assert code == 2

    def test_spec_file_input(self, capsys, tmp_path):
        from tiledsl.catalog import catalog
        from tiledsl.tileir import serialize_spec

        path = tmp_path / "mm.json"
        path.write_text(serialize_spec(catalog("mm")))
        code, out, _ = run(capsys, "inspect", str(path))
        assert code == 0
        assert "cdiv(input_size_0, BLOCK_SIZE_M)" in out

    def test_corrupt_spec_file_is_usage_error(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{")
        code, _, err = run(capsys, "inspect", str(path))
        assert code == 2


class TestVerify:
    def test_elementwise_exact(self, capsys):
        code, out, _ = run(
            capsys, "verify", "add", "--bind", "N=10,BLOCK_SIZE=4",
            "--format", "json",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["status"] == "pass"
        assert doc["cases"][0]["max_abs"] == 0.0

    def test_conv2d_small_case(self, capsys):
        code, out, _ = run(
            capsys, "verify", "conv2d",
            "--bind", "N=1,C=2,H=5,W=5,K=3,R=3,S=3",
        )
        assert code == 0

    def test_out_of_scope_kernel(self, capsys):
        code, _, err = run(capsys, "verify", "sdpa")
        assert code == 2
        assert "out of scope" in err

    def test_zero_tolerance_fails(self, capsys):
        code, out, _ = run(
            capsys, "verify", "mm", "--bind", "M=9,N=9,K=11",
            "--tol", "0", "--format", "json",
        )
        assert code == 1
        assert json.loads(out)["status"] == "FAIL"

    def test_matrix_mode(self, capsys):
        code, out, _ = run(
            capsys, "verify", "silu", "--all", "--count", "5", "--format", "json"
        )
        assert code == 0
        assert len(json.loads(out)["cases"]) == 5


class TestSimulate:
    def test_export_files(self, capsys, tmp_path):
        save = tmp_path / "case"
        code, out, _ = run(
            capsys, "simulate", "mm", "--bind", "M=4,N=4,K=4",
            "--save-dir", str(save), "--format", "json",
        )
        assert code == 0
        doc = json.loads(out)
        got = read_tensor(doc["files"]["output"])
        want = read_tensor(doc["files"]["expected"])
        assert got.shape == (4, 4)
        assert np.max(np.abs(got - want)) <= 1e-4


class TestEmit:
    def test_writes_source_and_manifest(self, capsys, tmp_path):
        out_path = tmp_path / "mm_kernel.py"
        code, out, _ = run(capsys, "emit", "mm", "-o", str(out_path))
        assert code == 0
        assert out_path.exists()
        manifest = tmp_path / "mm_kernel.manifest.json"
        assert manifest.exists()
        doc = json.loads(manifest.read_text())
        assert doc["launcher"] == "mm_launch"

    def test_repeated_emission_identical_bytes(self, capsys, tmp_path):
        a, b = tmp_path / "a.py", tmp_path / "b.py"
        run(capsys, "emit", "softmax", "-o", str(a))
        run(capsys, "emit", "softmax", "-o", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_unwritable_path_is_error(self, capsys, tmp_path):
        code, _, err = run(capsys, "emit", "mm", "-o", str(tmp_path))
        assert code == 2
