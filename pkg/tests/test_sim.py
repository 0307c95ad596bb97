"""Simulator semantics: oracle agreement, determinism, launch validation."""

import numpy as np
import pytest

from tiledsl import oracle
from tiledsl import verify as vf
from tiledsl.sim import (
    ConcreteTensor,
    LaunchError,
    check_write_partition,
    launch,
)
from tiledsl.tensorio import TensorIOError, read_tensor, write_tensor


def _launch_args(kernel, cfg, seed=0):
    args = vf.make_inputs(kernel, cfg, seed)
    return vf.to_concrete(args), args


class TestConcreteTensor:
    def test_round_trip(self):
        arr = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
        t = ConcreteTensor.from_array(arr)
        assert t.shape == (2, 3, 4)
        assert t.strides == (12, 4, 1)
        np.testing.assert_array_equal(t.to_array(), arr)

    def test_scalar(self):
        t = ConcreteTensor.scalar(2.5)
        assert t.shape == ()
        assert float(t.to_array()) == 2.5


class TestOracleAgreement:
    @pytest.mark.parametrize(
        "kernel,dims",
        [
            ("add", {"N": 37}),
            ("silu", {"N": 5}),
            ("softmax", {"R": 5, "C": 13}),
            ("rms_norm", {"R": 4, "C": 13}),
            ("mm", {"M": 7, "N": 9, "K": 11}),
            ("bmm", {"B": 3, "M": 7, "N": 9, "K": 11}),
            ("addmm", {"M": 7, "N": 9, "K": 11}),
            ("conv2d", {"N": 2, "C": 3, "H": 6, "W": 5, "K": 4, "R": 3, "S": 2}),
        ],
    )
    def test_non_divisible_case_matches_oracle(self, kernel, dims):
        meta = vf.default_meta(kernel, dims)
        if "BLOCK_SIZE" in meta:
            meta["BLOCK_SIZE"] = 8
        cfg = vf.Config(kernel, dims, meta)
        report = vf.run_case(kernel, cfg, seed=1)
        assert report.passed, report

    def test_constant_rows_reduction(self):
        for kernel in ("softmax", "rms_norm"):
            cfg = vf.Config(
                kernel, {"R": 4, "C": 9},
                vf.default_meta(kernel, {"R": 4, "C": 9}),
                const_rows=True,
            )
            assert vf.run_case(kernel, cfg, seed=3).passed

    def test_single_element(self):
        cfg = vf.Config("add", {"N": 1}, {"BLOCK_SIZE": 1})
        assert vf.run_case("add", cfg).passed


class TestDeterminism:
    def test_reverse_pid_order_is_bit_identical(self):
        cfg = vf.Config("mm", {"M": 7, "N": 9, "K": 11},
                        {"BLOCK_SIZE_M": 3, "BLOCK_SIZE_N": 4, "BLOCK_SIZE_K": 2})
        args = vf.make_inputs("mm", cfg, seed=5)
        fwd = vf.simulate("mm", args, cfg.meta, pid_order="forward")
        args2 = vf.make_inputs("mm", cfg, seed=5)
        rev = vf.simulate("mm", args2, cfg.meta, pid_order="reverse")
        assert fwd.tobytes() == rev.tobytes()

    def test_repeated_launches_are_bit_identical(self):
        cfg = vf.Config("softmax", {"R": 6, "C": 10}, {"COLS_PADDED": 16})
        a = vf.simulate("softmax", vf.make_inputs("softmax", cfg, 7), cfg.meta)
        b = vf.simulate("softmax", vf.make_inputs("softmax", cfg, 7), cfg.meta)
        assert a.tobytes() == b.tobytes()


class TestWritePartition:
    @pytest.mark.parametrize("kernel", ["add", "softmax", "mm", "conv2d"])
    def test_output_writes_partition_buffer(self, kernel):
        cfg = vf.sample_configs(kernel, count=3, seed=11)[1]
        tensors, _ = _launch_args(kernel, cfg)
        check_write_partition(vf.checked_catalog(kernel), tensors, cfg.meta)


class TestLaunchValidation:
    def _mm_tensors(self):
        cfg = vf.Config("mm", {"M": 4, "N": 4, "K": 4},
                        {"BLOCK_SIZE_M": 2, "BLOCK_SIZE_N": 2, "BLOCK_SIZE_K": 2})
        tensors, _ = _launch_args("mm", cfg)
        return tensors, cfg.meta

    def test_missing_meta_rejected(self):
        tensors, meta = self._mm_tensors()
        meta = dict(meta)
        del meta["BLOCK_SIZE_K"]
        with pytest.raises(LaunchError):
            launch(vf.checked_catalog("mm"), tensors, meta)

    def test_nonpositive_meta_rejected(self):
        tensors, meta = self._mm_tensors()
        with pytest.raises(LaunchError):
            launch(vf.checked_catalog("mm"), tensors, dict(meta, BLOCK_SIZE_M=0))

    def test_missing_argument_rejected(self):
        tensors, meta = self._mm_tensors()
        del tensors["other"]
        with pytest.raises(LaunchError):
            launch(vf.checked_catalog("mm"), tensors, meta)

    def test_wrong_rank_rejected(self):
        tensors, meta = self._mm_tensors()
        tensors["other"] = ConcreteTensor.from_array(np.zeros(4, np.float32))
        with pytest.raises(LaunchError):
            launch(vf.checked_catalog("mm"), tensors, meta)

    def test_inconsistent_shapes_fail_runtime_check(self):
        tensors, meta = self._mm_tensors()
        tensors["output"] = ConcreteTensor.from_array(np.zeros((9, 4), np.float32))
        with pytest.raises(LaunchError):
            launch(vf.checked_catalog("mm"), tensors, meta)

    def test_row_kernel_requires_padded_width(self):
        # rms_norm holds one row per program; a too-small padded width must
        # be rejected by the recorded launch-time check, not mis-read data.
        cfg = vf.Config("rms_norm", {"R": 3, "C": 20}, {"COLS_PADDED": 16})
        tensors, _ = _launch_args("rms_norm", cfg)
        with pytest.raises(LaunchError):
            launch(vf.checked_catalog("rms_norm"), tensors, cfg.meta)


class TestImplicitGemm:
    def test_three_way_agreement(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(-1, 1, (1, 2, 5, 5)).astype(np.float32)
        w = rng.uniform(-1, 1, (3, 2, 3, 3)).astype(np.float32)
        direct = oracle.conv2d(x, w)
        via_unfold = oracle.conv2d_via_im2col(x, w)
        args = {
            "input": x,
            "filter": w,
            "output": np.zeros_like(direct),
        }
        simulated = vf.simulate(
            "conv2d", args,
            {"BLOCK_SIZE_M": 3, "BLOCK_SIZE_N": 2, "BLOCK_SIZE_K": 4},
        )
        assert np.max(np.abs(direct - via_unfold)) <= 1e-4
        assert np.max(np.abs(simulated - direct)) <= 1e-4


class TestTensorFiles:
    def test_binary_round_trip(self, tmp_path):
        arr = np.random.default_rng(0).uniform(-1, 1, (3, 5)).astype(np.float32)
        path = tmp_path / "t.twt"
        write_tensor(path, arr)
        np.testing.assert_array_equal(read_tensor(path), arr)

    def test_json_round_trip(self, tmp_path):
        arr = np.arange(6, dtype=np.float32).reshape(2, 3)
        path = tmp_path / "t.json"
        write_tensor(path, arr)
        np.testing.assert_array_equal(read_tensor(path), arr)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "t.twt"
        path.write_bytes(b"NOPE" + b"\0" * 16)
        with pytest.raises(TensorIOError):
            read_tensor(path)

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "t.twt"
        arr = np.zeros((4,), np.float32)
        write_tensor(path, arr)
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(TensorIOError):
            read_tensor(path)
