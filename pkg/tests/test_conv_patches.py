"""Convolutions (two independent routes) and patch lowering."""

import numpy as np
import pytest

from nsfdeblur.autograd import (Tensor, conv2d, conv2d_im2col,
                                conv2d_transposed, fold, grad_check, mul,
                                patch_count, patch_grid, resize_bilinear,
                                sum_, unfold)
from nsfdeblur.errors import ShapeError


def naive_conv(x, w, b, stride, pad):
    """Quadruple-loop reference, asserted against both fast routes."""
    bsz, cin, h, wd = x.shape
    cout, _, kh, kw = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wd + 2 * pad - kw) // stride + 1
    out = np.zeros((bsz, cout, ho, wo), dtype=np.float64)
    for n in range(bsz):
        for co in range(cout):
            for i in range(ho):
                for j in range(wo):
                    patch = xp[n, :, i * stride:i * stride + kh,
                               j * stride:j * stride + kw]
                    out[n, co, i, j] = np.sum(patch * w[co])
            if b is not None:
                out[n, co] += b[co]
    return out


class TestConv2d:
    @pytest.mark.parametrize("stride,pad,k", [(1, 0, 3), (1, 1, 3), (2, 1, 3),
                                              (2, 0, 2), (3, 2, 5)])
    def test_matches_naive_and_im2col(self, stride, pad, k):
        rng = np.random.default_rng(stride * 10 + pad)
        x = rng.standard_normal((2, 3, 9, 8))
        w = rng.standard_normal((4, 3, k, k))
        b = rng.standard_normal(4)
        want = naive_conv(x, w, b, stride, pad)
        got = conv2d(Tensor(x), Tensor(w), Tensor(b), stride=stride, pad=pad).data
        ref = conv2d_im2col(x, w, b, stride=stride, pad=pad)
        np.testing.assert_allclose(got, want, atol=1e-10)
        np.testing.assert_allclose(ref, want, atol=1e-10)

    def test_no_bias(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((1, 2, 5, 5))
        w = rng.standard_normal((3, 2, 3, 3))
        np.testing.assert_allclose(
            conv2d(Tensor(x), Tensor(w), None, pad=1).data,
            conv2d_im2col(x, w, None, pad=1), atol=1e-10)

    def test_gradients(self):
        rng = np.random.default_rng(4)
        x = Tensor(rng.standard_normal((2, 3, 6, 5)), requires_grad=True)
        w = Tensor(rng.standard_normal((4, 3, 3, 3)), requires_grad=True)
        b = Tensor(rng.standard_normal(4), requires_grad=True)
        probe = Tensor(rng.standard_normal((2, 4, 3, 3)))
        err = grad_check(
            lambda: sum_(mul(conv2d(x, w, b, stride=2, pad=1), probe)),
            [x, w, b])
        assert err < 1e-6

    def test_channel_mismatch_raises(self):
        with pytest.raises(ShapeError):
            conv2d(Tensor(np.zeros((1, 2, 4, 4))),
                   Tensor(np.zeros((1, 3, 3, 3))))

    def test_float32_inputs_keep_float64_weights_precise(self):
        # mixed precision must promote accumulation, not downcast weights
        rng = np.random.default_rng(5)
        x32 = rng.standard_normal((1, 2, 6, 6)).astype(np.float32)
        w64 = rng.standard_normal((2, 2, 3, 3))
        out = conv2d(Tensor(x32), Tensor(w64), pad=1)
        assert out.data.dtype == np.float64


class TestConvTransposed:
    def test_inverts_stride2_shapes(self):
        rng = np.random.default_rng(6)
        x = Tensor(rng.standard_normal((2, 4, 5, 7)))
        w = Tensor(rng.standard_normal((4, 2, 2, 2)))
        out = conv2d_transposed(x, w, stride=2)
        assert out.shape == (2, 2, 10, 14)

    def test_matches_naive_scatter(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((1, 2, 3, 4))
        w = rng.standard_normal((2, 3, 2, 2))
        b = rng.standard_normal(3)
        got = conv2d_transposed(Tensor(x), Tensor(w), Tensor(b), stride=2).data

        want = np.zeros((1, 3, 6, 8))
        for n in range(1):
            for ci in range(2):
                for i in range(3):
                    for j in range(4):
                        want[n, :, i * 2:i * 2 + 2, j * 2:j * 2 + 2] += \
                            x[n, ci, i, j] * w[ci]
        want += b[None, :, None, None]
        np.testing.assert_allclose(got, want, atol=1e-10)

    def test_gradients(self):
        rng = np.random.default_rng(8)
        x = Tensor(rng.standard_normal((1, 3, 4, 4)), requires_grad=True)
        w = Tensor(rng.standard_normal((3, 2, 2, 2)), requires_grad=True)
        b = Tensor(rng.standard_normal(2), requires_grad=True)
        probe = Tensor(rng.standard_normal((1, 2, 8, 8)))
        err = grad_check(
            lambda: sum_(mul(conv2d_transposed(x, w, b, stride=2), probe)),
            [x, w, b])
        assert err < 1e-6


class TestPatchGrid:
    def test_basic_counts(self):
        assert patch_grid(8, 8, 3, 1, 1) == (8, 8)
        assert patch_grid(8, 8, 6, 2, 2) == (4, 4)
        assert patch_grid(8, 8, 12, 4, 4) == (2, 2)

    def test_count_product(self):
        assert patch_count(16, 12, 3, 1, 1) == 16 * 12

    def test_window_too_large_raises(self):
        with pytest.raises(ShapeError):
            patch_grid(4, 4, 9, 1, 1)

    def test_bad_stride_raises(self):
        with pytest.raises(ShapeError):
            patch_grid(8, 8, 3, 1, 0)


class TestUnfoldFold:
    def test_unfold_rows_match_hand_patches(self):
        x = np.arange(16, dtype=np.float64).reshape(1, 1, 4, 4)
        rows = unfold(Tensor(x), 2, 0, 2).data
        np.testing.assert_allclose(rows[0], [0, 1, 4, 5])
        np.testing.assert_allclose(rows[1], [2, 3, 6, 7])
        np.testing.assert_allclose(rows[3], [10, 11, 14, 15])

    def test_unfold_row_layout_is_row_major_grid(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((1, 2, 6, 8))
        rows = unfold(Tensor(x), 3, 1, 1).data
        gh, gw = patch_grid(6, 8, 3, 1, 1)
        t = 2 * gw + 5    # grid position (2, 5)
        xp = np.pad(x[0], ((0, 0), (1, 1), (1, 1)))
        want = xp[:, 2:5, 5:8].reshape(-1)
        np.testing.assert_allclose(rows[t], want)

    @pytest.mark.parametrize("k,pad,stride", [(3, 1, 1), (6, 2, 2), (12, 4, 4)])
    def test_fold_unfold_identity(self, k, pad, stride):
        rng = np.random.default_rng(k)
        x = rng.standard_normal((1, 3, 16, 16)).astype(np.float32)
        t = Tensor(x)
        y = fold(unfold(t, k, pad, stride), 16, 16, k, pad, stride)
        np.testing.assert_allclose(y.data, x, atol=1e-6)

    def test_fold_averages_overlaps(self):
        # two 2x2 patches over a 2x3 map overlap in the middle column;
        # patch values 0 and 6 must average to 3 there
        rows = Tensor(np.array([[0.0] * 4, [6.0] * 4]))
        out = fold(rows, 2, 3, 2, 0, 1).data[0, 0]
        np.testing.assert_allclose(out, [[0.0, 3.0, 6.0], [0.0, 3.0, 6.0]])

    def test_gradients(self):
        rng = np.random.default_rng(11)
        x = Tensor(rng.standard_normal((1, 2, 8, 8)), requires_grad=True)
        probe = Tensor(rng.standard_normal((patch_count(8, 8, 3, 1, 1), 18)))
        assert grad_check(lambda: sum_(mul(unfold(x, 3, 1, 1), probe)),
                          [x]) < 1e-6
        rows = Tensor(rng.standard_normal((16, 8)), requires_grad=True)
        probe2 = Tensor(rng.standard_normal((1, 2, 8, 8)))
        assert grad_check(
            lambda: sum_(mul(fold(rows, 8, 8, 2, 0, 2), probe2)),
            [rows]) < 1e-6

    def test_fold_wrong_rows_raises(self):
        with pytest.raises(ShapeError):
            fold(Tensor(np.zeros((5, 4))), 8, 8, 2, 0, 2)


class TestResizeBilinear:
    def test_factor_one_is_identity(self):
        x = Tensor(np.random.default_rng(0).standard_normal((1, 2, 3, 3)))
        np.testing.assert_array_equal(resize_bilinear(x, 1).data, x.data)

    def test_constant_map_stays_constant(self):
        x = Tensor(np.full((1, 1, 4, 4), 2.5))
        y = resize_bilinear(x, 2).data
        np.testing.assert_allclose(y, 2.5)

    def test_linear_ramp_preserved(self):
        # bilinear interpolation reproduces an affine ramp away from edges
        ramp = np.arange(6, dtype=np.float64)[None, None, None, :].repeat(4, 2)
        y = resize_bilinear(Tensor(ramp), 2).data[0, 0, 0]
        np.testing.assert_allclose(y[1:-1], np.arange(0.25, 5.0, 0.5), atol=1e-12)

    def test_shape_and_gradient(self):
        rng = np.random.default_rng(12)
        x = Tensor(rng.standard_normal((2, 3, 4, 5)), requires_grad=True)
        y = resize_bilinear(x, 4)
        assert y.shape == (2, 3, 16, 20)
        probe = Tensor(rng.standard_normal((2, 3, 16, 20)))
        assert grad_check(lambda: sum_(mul(resize_bilinear(x, 4), probe)),
                          [x]) < 1e-6

    def test_rejects_bad_input(self):
        with pytest.raises(ShapeError):
            resize_bilinear(Tensor(np.zeros((3, 4))), 2)
