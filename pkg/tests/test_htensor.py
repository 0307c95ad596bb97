"""Hierarchical tensor meta-operations: structural behavior and errors."""

import pytest

from tiledsl.htensor import (
    FULL,
    HTensorError,
    new_param,
    param_with_shape,
)
from tiledsl.symexpr import const, evaluate, render, simplify, sym


def shape_values(tensor, level, binding):
    return tuple(int(evaluate(s, binding)) for s in tensor.levels[level].shape)


class TestTile:
    def test_square_tile_splits_both_dims(self):
        t = param_with_shape("x", (4, 4)).tile((2, 2))
        assert [s.value for s in t.levels[0].shape] == [2, 2]
        assert [s.value for s in t.levels[1].shape] == [2, 2]

    def test_default_stride_rounds_partial_tiles_up(self):
        t = param_with_shape("x", (5,)).tile((2,))
        assert t.levels[0].shape[0].value == 3

    def test_explicit_stride_counts_windows(self):
        # size 5, window 3, stride 1 -> 3 placements
        t = param_with_shape("x", (5,)).tile((3,), strides=(1,))
        assert t.levels[0].shape[0].value == 3

    def test_symbolic_count_expression(self):
        t = new_param("x", 1).tile((sym("B"),))
        assert render(t.levels[0].shape[0]) == "cdiv(x_size_0, B)"

    def test_full_keeps_whole_dim(self):
        t = param_with_shape("x", (6, 8)).tile((FULL, 2))
        assert [s.value for s in t.levels[0].shape] == [1, 4]
        assert [s.value for s in t.levels[1].shape] == [6, 2]

    def test_rank_mismatch_rejected(self):
        with pytest.raises(HTensorError):
            param_with_shape("x", (4, 4)).tile((2,))

    def test_nonpositive_stride_rejected(self):
        with pytest.raises(HTensorError):
            param_with_shape("x", (4,)).tile((2,), strides=(0,))

    def test_tile_of_flattened_dim_allowed(self):
        merged = param_with_shape("x", (4, 6)).flatten()
        t = merged.tile((8,))
        assert t.levels[0].shape[0].value == 3
        assert t.levels[1].shape[0].value == 8


class TestExpandSqueeze:
    def test_expand_singleton(self):
        t = param_with_shape("x", (6,)).tile((FULL,)).expand((sym("R"), ))
        # After FULL tile the outer dim is 1; expand replaces it.
        assert render(t.levels[0].shape[0]) == "R"

    def test_expand_non_singleton_rejected(self):
        with pytest.raises(HTensorError):
            param_with_shape("x", (6,)).tile((2,)).expand((sym("R"),))

    def test_squeeze_constant_one(self):
        t = param_with_shape("x", (4, 4)).tile((FULL, 2)).squeeze(0)
        assert len(t.levels[0].dims) == 1

    def test_squeeze_constant_other_than_one_rejected(self):
        with pytest.raises(HTensorError):
            param_with_shape("x", (4, 4)).tile((2, 2)).squeeze(0)

    def test_squeeze_symbolic_records_runtime_check(self):
        t = new_param("x", 1).tile((sym("B"),)).squeeze(0)
        assert len(t.checks) == 1
        lhs, rhs = t.checks[0]
        assert render(lhs) == "cdiv(x_size_0, B)"
        assert rhs == const(1)


class TestReshaping:
    def test_permute_reorders(self):
        t = param_with_shape("x", (2, 3, 4)).permute((2, 0, 1))
        assert [s.value for s in t.levels[0].shape] == [4, 2, 3]

    def test_permute_rejects_non_permutation(self):
        with pytest.raises(HTensorError):
            param_with_shape("x", (2, 3)).permute((0, 0))

    def test_flatten_merges_span_exclusive_end(self):
        t = param_with_shape("x", (2, 3, 4)).flatten(0, 2)
        assert [s.value for s in t.levels[0].shape] == [6, 4]

    def test_flatten_rejects_degenerate_span(self):
        with pytest.raises(HTensorError):
            param_with_shape("x", (2, 3)).flatten(1, 2)

    def test_ravel_collapses_levels(self):
        t = param_with_shape("x", (4, 6)).tile((2, 3))
        r = t.ravel()
        assert len(r.levels) == 1
        assert [s.value for s in r.levels[0].shape] == [2, 2, 2, 3]

    def test_inner_round_trip(self):
        t = param_with_shape("x", (4, 6)).tile((2, 3))
        inner = t.get_inner().tile((1, 3))
        back = t.set_inner(inner)
        assert len(back.levels) == 3
        assert [s.value for s in back.levels[1].shape] == [2, 1]


class TestSlidingWindows:
    def test_window_tiling_first_level_shape(self):
        # Image (1,2,5,5) windowed by a (-,2,3,3) filter, batch/channel kept
        # whole: one 3x3 placement grid stays per image.
        f1, f2, f3 = const(2), const(3), const(3)
        t = param_with_shape("x", (1, 2, 5, 5)).tile(
            (1, f1, f2, f3), strides=(-1, -1, 1, 1)
        )
        assert [simplify(s).value for s in t.levels[0].shape] == [1, 1, 3, 3]
        assert [simplify(s).value for s in t.levels[1].shape] == [1, 2, 3, 3]
