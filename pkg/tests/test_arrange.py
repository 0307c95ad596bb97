"""Grid inference and offset/mask lowering."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiledsl.arrange import ArrangeError, decompose_pid, lower, validate
from tiledsl.htensor import FULL, new_param, param_with_shape
from tiledsl.symexpr import evaluate, render, sym


def _binding(shape, name="x", meta=None):
    b = dict(meta or {})
    stride = 1
    strides = []
    for s in reversed(shape):
        strides.append(stride)
        stride *= s
    for i, (size, st_) in enumerate(zip(shape, reversed(strides))):
        b[f"{name}_size_{i}"] = size
        b[f"{name}_stride_{i}"] = st_
    return b


def _covered_offsets(imap, grid, binding):
    """Evaluate an index map at every (pid, nest, lane) point; return the
    in-mask flat offsets."""
    grid_sizes = [int(evaluate(s, binding)) for s in grid.sizes]
    nest_sizes = [int(evaluate(s, binding)) for s in imap.nest_sizes]
    lane_sizes = [int(evaluate(s, binding)) for s in imap.lane_sizes]
    out = []
    total = int(np.prod(grid_sizes)) if grid_sizes else 1

    def points(sizes):
        if not sizes:
            yield ()
            return
        for head in range(sizes[0]):
            for rest in points(sizes[1:]):
                yield (head,) + rest

    for pid in range(total):
        pid_vals = decompose_pid(grid, pid, binding)
        for nest_vals in points(nest_sizes):
            for lane_vals in points(lane_sizes):
                env = dict(binding)
                env.update({f"pid_{i}": v for i, v in enumerate(pid_vals)})
                env.update({f"nest_{k}": v for k, v in enumerate(nest_vals)})
                env.update({f"lane_{j}": v for j, v in enumerate(lane_vals)})
                ok = all(
                    evaluate(lhs, env) < evaluate(bound, env)
                    for lhs, bound in imap.mask
                )
                if ok:
                    out.append(int(evaluate(imap.offset, env)))
    return out


class TestValidate:
    def test_constant_mismatch_rejected(self):
        a = param_with_shape("a", (4,)).tile((2,))
        b = param_with_shape("b", (6,)).tile((2,))
        with pytest.raises(ArrangeError):
            validate([("a", a), ("b", b)])

    def test_rank_mismatch_rejected(self):
        a = param_with_shape("a", (4, 4)).tile((2, 2))
        b = param_with_shape("b", (4,)).tile((2,))
        with pytest.raises(ArrangeError):
            validate([("a", a), ("b", b)])

    def test_single_level_rejected(self):
        a = param_with_shape("a", (4,))
        with pytest.raises(ArrangeError):
            validate([("a", a)])

    def test_symbolic_mismatch_becomes_runtime_check(self):
        a = new_param("a", 1).tile((sym("B"),))
        b = new_param("b", 1).tile((sym("B"),))
        grid = validate([("a", a), ("b", b)])
        assert len(grid.checks) == 1
        lhs, rhs = grid.checks[0]
        assert render(lhs) == "cdiv(a_size_0, B)"
        assert render(rhs) == "cdiv(b_size_0, B)"

    def test_grid_total_is_dim_product(self):
        a = param_with_shape("a", (4, 6)).tile((2, 3))
        grid = validate([("a", a)])
        assert evaluate(grid.total, {}) == 4


class TestPidDecomposition:
    def test_row_major_last_dim_fastest(self):
        a = param_with_shape("a", (4, 6)).tile((2, 3))
        grid = validate([("a", a)])
        seen = [decompose_pid(grid, pid, {}) for pid in range(4)]
        assert seen == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_out_of_range_pid_rejected(self):
        a = param_with_shape("a", (4,)).tile((2,))
        grid = validate([("a", a)])
        with pytest.raises(ArrangeError):
            decompose_pid(grid, 2, {})


class TestLaneNestAssignment:
    def test_three_level_tensor_uses_one_nest(self):
        t = new_param("x", 2).tile((sym("BM"), sym("BK"))).tile((1, FULL))
        t = t.expand((-1, sym("CN")))
        t = t.set_inner(t.get_inner().squeeze(0))  # drop the singleton nest dim
        grid = validate([("x", t)])
        (imap,) = lower([("x", t)], grid)
        assert len(imap.nest_sizes) == 1
        assert len(imap.lane_sizes) == 2
        assert render(imap.nest_sizes[0]) == "cdiv(x_size_1, BK)"

    def test_expanded_dim_contributes_nothing_to_offset(self):
        t = new_param("x", 1).tile((sym("B"),)).tile((FULL,)).expand((sym("R"),))
        grid = validate([("x", t)])
        (imap,) = lower([("x", t)], grid)
        assert "pid_0" not in render(imap.offset)


class TestCoverage:
    @given(
        st.integers(1, 9), st.integers(1, 9),
        st.integers(1, 4), st.integers(1, 4),
    )
    @settings(max_examples=60, deadline=None)
    def test_tiled_matrix_offsets_partition_the_buffer(self, m, n, bm, bn):
        t = new_param("x", 2).tile((sym("BM"), sym("BN")))
        grid = validate([("x", t)])
        (imap,) = lower([("x", t)], grid)
        binding = _binding((m, n), meta={"BM": bm, "BN": bn})
        offs = _covered_offsets(imap, grid, binding)
        assert sorted(offs) == list(range(m * n))

    @given(st.integers(2, 7), st.integers(2, 7), st.integers(1, 10))
    @settings(max_examples=60, deadline=None)
    def test_flattened_then_tiled_offsets_partition_the_buffer(self, m, n, b):
        t = new_param("x", 2).flatten().tile((sym("B"),))
        grid = validate([("x", t)])
        (imap,) = lower([("x", t)], grid)
        binding = _binding((m, n), meta={"B": b})
        offs = _covered_offsets(imap, grid, binding)
        assert sorted(offs) == list(range(m * n))

    def test_sliding_window_offsets_hit_expected_elements(self):
        # 1-D size 5, window 3, stride 1: window w covers {w, w+1, w+2}.
        t = new_param("x", 1).tile((sym("W"),), strides=(1,))
        grid = validate([("x", t)])
        (imap,) = lower([("x", t)], grid)
        binding = {"x_size_0": 5, "x_stride_0": 1, "W": 3}
        for pid in range(3):
            env = dict(binding, pid_0=pid)
            got = sorted(
                int(evaluate(imap.offset, dict(env, lane_0=lane)))
                for lane in range(3)
            )
            assert got == [pid, pid + 1, pid + 2]
