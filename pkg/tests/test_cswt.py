"""Windowed cross-attention transformer: partitioning, masking, wiring."""

import numpy as np
import pytest

from nsfdeblur.autograd import Tensor, grad_check, no_grad
from nsfdeblur.autograd.module import zero_module
from nsfdeblur.errors import ShapeError
from nsfdeblur.restorer import CswtConfig
from nsfdeblur.restorer.cswt import (CrossAttentionBlock, CrossWindowTransformer,
                                     WindowCrossLayer, _relative_index,
                                     _shift_mask, window_maps, window_tokens)


def small_cfg(window=4, embed=8, heads=2, n_castb=1, n_cstl=2):
    return CswtConfig(n_castb=n_castb, n_cstl=n_cstl, heads=heads,
                      window=window, embed_dim=embed, mlp_ratio=1.0)


class TestWindowPartition:
    def test_token_layout(self):
        # value encodes its own coordinates, so grouping is fully checkable
        vals = np.arange(16, dtype=np.float32).reshape(1, 1, 4, 4)
        t = window_tokens(Tensor(vals), 2).data
        assert t.shape == (4, 4, 1)
        # window 0 is the top-left 2x2 block, tokens row-major inside it
        assert t[0, :, 0].tolist() == [0, 1, 4, 5]
        # windows advance column-first along the top row
        assert t[1, :, 0].tolist() == [2, 3, 6, 7]
        assert t[2, :, 0].tolist() == [8, 9, 12, 13]

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((1, 3, 8, 12)).astype(np.float32)
        t = window_tokens(Tensor(x), 4)
        back = window_maps(t, 8, 12, 4)
        assert np.array_equal(back.data, x)

    def test_round_trip_gradient(self):
        from nsfdeblur.autograd import sum_
        x = Tensor(np.random.default_rng(1).standard_normal((1, 2, 4, 4)),
                   requires_grad=True)
        y = window_maps(window_tokens(x, 2), 4, 4, 2)
        sum_(y).backward()
        assert np.allclose(x.grad, 1.0)


class TestRelativeIndex:
    def test_matches_loop_reference(self):
        win = 3
        idx = _relative_index(win)
        coords = [(i, j) for i in range(win) for j in range(win)]
        ref = np.empty((win * win, win * win), dtype=np.int64)
        for a, (ia, ja) in enumerate(coords):
            for b, (ib, jb) in enumerate(coords):
                ref[a, b] = (ia - ib + win - 1) * (2 * win - 1) + (ja - jb + win - 1)
        assert np.array_equal(idx.reshape(win * win, win * win), ref)

    def test_range(self):
        idx = _relative_index(4)
        assert idx.min() >= 0
        assert idx.max() < 49


class TestShiftMask:
    def test_zero_inside_windows(self):
        mask = _shift_mask(8, 8, 4, 2)
        assert mask.shape == (4, 1, 16, 16)
        # diagonal is always unmasked
        for wi in range(4):
            assert np.all(np.diagonal(mask[wi, 0]) == 0.0)

    def test_blocks_cross_zone_pairs(self):
        # top-left window has no wrapped content, so nothing is masked there
        mask = _shift_mask(8, 8, 4, 2)
        assert np.all(mask[0] == 0.0)
        # the bottom-right window mixes four zones and must mask some pairs
        assert (mask[3] == -100.0).any()


class TestCrossLayer:
    def test_attention_rows_sum_to_one(self):
        rng = np.random.default_rng(2)
        layer = WindowCrossLayer(8, 2, 4, 0, 8, rng)
        xq = Tensor(rng.standard_normal((1, 8, 8, 8)).astype(np.float32))
        kv = Tensor(rng.standard_normal((1, 8, 8, 8)).astype(np.float32))
        probe = []
        with no_grad():
            layer(xq, kv, probe)
        assert len(probe) == 1
        sums = probe[0].sum(axis=-1)
        assert np.abs(sums - 1.0).max() < 1e-6

    def test_shifted_layer_masks_foreign_windows(self):
        rng = np.random.default_rng(3)
        layer = WindowCrossLayer(8, 2, 4, 2, 8, rng)
        xq = Tensor(rng.standard_normal((1, 8, 8, 8)).astype(np.float32))
        kv = Tensor(rng.standard_normal((1, 8, 8, 8)).astype(np.float32))
        probe = []
        with no_grad():
            layer(xq, kv, probe)
        a = probe[0]
        mask = _shift_mask(8, 8, 4, 2)
        forbidden = np.broadcast_to(mask != 0.0, a.shape)
        assert a[forbidden].max() < 1e-6

    def test_output_shape(self):
        rng = np.random.default_rng(4)
        layer = WindowCrossLayer(8, 2, 4, 0, 16, rng)
        xq = Tensor(rng.standard_normal((1, 8, 8, 12)).astype(np.float32))
        kv = Tensor(rng.standard_normal((1, 8, 8, 12)).astype(np.float32))
        with no_grad():
            out = layer(xq, kv)
        assert out.shape == (1, 8, 8, 12)

    def test_gradients(self):
        rng = np.random.default_rng(5)
        layer = WindowCrossLayer(4, 2, 2, 1, 4, rng, dtype=np.float64)
        xq = Tensor(rng.standard_normal((1, 4, 4, 4)), requires_grad=True)
        kv = Tensor(rng.standard_normal((1, 4, 4, 4)), requires_grad=True)
        mix = Tensor(rng.standard_normal((1, 4, 4, 4)))

        def closure():
            from nsfdeblur.autograd import mul, sum_
            return sum_(mul(layer(xq, kv), mix))

        params = layer.params() + [xq, kv]
        assert grad_check(closure, params, samples=3) < 1e-4


class TestBlockAndTransformer:
    def test_block_residual_with_zeroed_conv(self):
        rng = np.random.default_rng(6)
        block = CrossAttentionBlock(8, small_cfg(), rng)
        zero_module(block.conv)
        x = Tensor(rng.standard_normal((1, 8, 8, 8)).astype(np.float32))
        kv = Tensor(rng.standard_normal((1, 8, 8, 8)).astype(np.float32))
        with no_grad():
            out = block(x, kv)
        assert np.array_equal(out.data, x.data)

    def test_transformer_identity_when_blocks_zeroed(self):
        # channels == embed dim, so there are no in/out projections; zeroing
        # every block conv turns the whole stack into the identity on b_nbr
        rng = np.random.default_rng(7)
        net = CrossWindowTransformer(8, small_cfg(), rng)
        assert net.inproj is None and net.outproj is None
        for block in net.block:
            zero_module(block.conv)
        cur = Tensor(np.random.default_rng(8).standard_normal((1, 8, 8, 8)).astype(np.float32))
        nbr = Tensor(np.random.default_rng(9).standard_normal((1, 8, 8, 8)).astype(np.float32))
        with no_grad():
            out = net(cur, nbr)
        assert np.allclose(out.data, nbr.data, atol=1e-6)

    def test_pad_and_crop_shape(self):
        # 20x20 with window 8 pads to 24 internally and crops back
        rng = np.random.default_rng(10)
        net = CrossWindowTransformer(4, small_cfg(window=8, embed=8), rng)
        cur = Tensor(rng.standard_normal((1, 4, 20, 20)).astype(np.float32))
        nbr = Tensor(rng.standard_normal((1, 4, 20, 20)).astype(np.float32))
        with no_grad():
            out = net(cur, nbr)
        assert out.shape == (1, 4, 20, 20)

    def test_non_square_shape(self):
        rng = np.random.default_rng(11)
        net = CrossWindowTransformer(4, small_cfg(), rng)
        cur = Tensor(rng.standard_normal((1, 4, 12, 20)).astype(np.float32))
        nbr = Tensor(rng.standard_normal((1, 4, 12, 20)).astype(np.float32))
        with no_grad():
            out = net(cur, nbr)
        assert out.shape == (1, 4, 12, 20)

    def test_both_inputs_matter(self):
        rng = np.random.default_rng(12)
        net = CrossWindowTransformer(4, small_cfg(), rng)
        cur = Tensor(rng.standard_normal((1, 4, 8, 8)).astype(np.float32))
        nbr = Tensor(rng.standard_normal((1, 4, 8, 8)).astype(np.float32))
        cur2 = Tensor(cur.data + 0.5)
        nbr2 = Tensor(nbr.data + 0.5)
        with no_grad():
            base = net(cur, nbr).data
            dcur = net(cur2, nbr).data
            dnbr = net(cur, nbr2).data
        assert not np.allclose(base, dcur)
        assert not np.allclose(base, dnbr)

    def test_shape_mismatch_rejected(self):
        rng = np.random.default_rng(13)
        net = CrossWindowTransformer(4, small_cfg(), rng)
        cur = Tensor(np.zeros((1, 4, 8, 8), dtype=np.float32))
        nbr = Tensor(np.zeros((1, 4, 8, 12), dtype=np.float32))
        with pytest.raises(ShapeError):
            net(cur, nbr)

    def test_projections_added_when_dims_differ(self):
        rng = np.random.default_rng(14)
        net = CrossWindowTransformer(4, small_cfg(embed=16, heads=2), rng)
        assert net.inproj is not None and net.outproj is not None
        cur = Tensor(rng.standard_normal((1, 4, 8, 8)).astype(np.float32))
        nbr = Tensor(rng.standard_normal((1, 4, 8, 8)).astype(np.float32))
        with no_grad():
            out = net(cur, nbr)
        assert out.shape == (1, 4, 8, 8)
