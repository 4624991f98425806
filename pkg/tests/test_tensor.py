"""Core tensor engine: forward values, gradients, and graph mechanics."""

import numpy as np
import pytest

from nsfdeblur.autograd import (Tensor, abs_, add, astype, check_finite, clip,
                                concat, concat_channels, div, exp, gather_rows,
                                gelu, grad_check, grad_enabled, layer_norm, log,
                                matmul, max_, mean, mul, neg, no_grad, pad2d,
                                reshape, roll, scale, sigmoid, softmax, sqrt,
                                sub, sum_, tanh, transpose)
from nsfdeblur.errors import NumericError, ShapeError


def randt(rng, shape, scale_=1.0):
    return Tensor(scale_ * rng.standard_normal(shape), requires_grad=True)


class TestTensorBasics:
    def test_float_storage(self):
        t = Tensor(np.arange(6).reshape(2, 3))
        assert t.data.dtype in (np.float32, np.float64)

    def test_requires_grad_default_off(self):
        t = Tensor(np.ones(3))
        assert not t.requires_grad
        assert t.grad is None

    def test_item_scalar(self):
        assert Tensor(np.float64(2.5)).item() == 2.5

    def test_shape_ndim(self):
        t = Tensor(np.zeros((2, 5, 3)))
        assert t.shape == (2, 5, 3)
        assert t.ndim == 3

    def test_backward_accumulates_on_leaves(self):
        x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
        y = add(x, x)
        sum_(y).backward()
        np.testing.assert_allclose(x.grad, [2.0, 2.0])

    def test_backward_twice_accumulates(self):
        x = Tensor(np.array([3.0]), requires_grad=True)
        sum_(mul(x, x)).backward()
        sum_(mul(x, x)).backward()
        np.testing.assert_allclose(x.grad, [12.0])

    def test_diamond_graph(self):
        # x feeds two branches that rejoin; chain rule must add both paths
        x = Tensor(np.array([2.0]), requires_grad=True)
        a = mul(x, x)
        b = scale(x, 3.0)
        sum_(add(a, b)).backward()
        np.testing.assert_allclose(x.grad, [7.0])

    def test_no_grad_blocks_graph(self):
        x = Tensor(np.ones(4), requires_grad=True)
        with no_grad():
            y = mul(x, x)
        assert not y.requires_grad
        y2 = mul(x, x)
        sum_(y2).backward()
        assert x.grad is not None

    def test_grad_enabled_flag(self):
        assert grad_enabled()
        with no_grad():
            assert not grad_enabled()
        assert grad_enabled()

    def test_deep_chain_no_recursion_limit(self):
        x = Tensor(np.array([1.0]), requires_grad=True)
        y = x
        for _ in range(5000):
            y = add(y, 1.0)
        sum_(y).backward()
        np.testing.assert_allclose(x.grad, [1.0])


class TestArithmetic:
    def test_add_broadcast_values(self):
        a = Tensor(np.ones((2, 3)))
        b = Tensor(np.arange(3, dtype=np.float64))
        np.testing.assert_allclose(add(a, b).data, [[1, 2, 3], [1, 2, 3]])

    def test_broadcast_gradient_unbroadcasts(self):
        a = Tensor(np.ones((2, 3)), requires_grad=True)
        b = Tensor(np.ones(3), requires_grad=True)
        sum_(mul(a, b)).backward()
        assert a.grad.shape == (2, 3)
        assert b.grad.shape == (3,)
        np.testing.assert_allclose(b.grad, [2.0, 2.0, 2.0])

    def test_operator_sugar_matches_functions(self):
        rng = np.random.default_rng(0)
        a = Tensor(rng.standard_normal((2, 2)))
        b = Tensor(rng.standard_normal((2, 2)))
        np.testing.assert_array_equal((a + b).data, add(a, b).data)
        np.testing.assert_array_equal((a - b).data, sub(a, b).data)
        np.testing.assert_array_equal((a * b).data, mul(a, b).data)
        np.testing.assert_array_equal((-a).data, neg(a).data)

    def test_div_gradient(self):
        rng = np.random.default_rng(1)
        a = randt(rng, (3, 4))
        b = Tensor(rng.standard_normal((3, 4)) + 3.0, requires_grad=True)
        err = grad_check(lambda: sum_(div(a, b)), [a, b])
        assert err < 1e-6

    def test_scale(self):
        x = Tensor(np.array([1.0, -2.0]), requires_grad=True)
        sum_(scale(x, -4.0)).backward()
        np.testing.assert_allclose(x.grad, [-4.0, -4.0])


class TestElementwiseOps:
    @pytest.mark.parametrize("op", [sigmoid, tanh, gelu, abs_])
    def test_gradients(self, op):
        rng = np.random.default_rng(2)
        x = randt(rng, (4, 5))
        err = grad_check(lambda: sum_(op(x)), [x])
        assert err < 1e-5

    def test_exp_log_sqrt_gradients(self):
        rng = np.random.default_rng(3)
        x = Tensor(rng.random((3, 3)) + 0.5, requires_grad=True)
        for op in (exp, log, sqrt):
            x.grad = None
            err = grad_check(lambda: sum_(op(x)), [x])
            assert err < 1e-6

    def test_sigmoid_value(self):
        np.testing.assert_allclose(sigmoid(Tensor(np.zeros(3))).data, 0.5)

    def test_gelu_values(self):
        # gelu(0) = 0 and gelu is close to identity for large positive x
        x = Tensor(np.array([0.0, 6.0]))
        y = gelu(x).data
        assert abs(y[0]) < 1e-12
        assert abs(y[1] - 6.0) < 1e-6

    def test_clip_blocks_gradient_outside(self):
        x = Tensor(np.array([-2.0, 0.5, 2.0]), requires_grad=True)
        sum_(clip(x, 0.0, 1.0)).backward()
        np.testing.assert_allclose(x.grad, [0.0, 1.0, 0.0])

    def test_clip_values(self):
        x = Tensor(np.array([-1.0, 0.25, 9.0]))
        np.testing.assert_allclose(clip(x, 0.0, 1.0).data, [0.0, 0.25, 1.0])

    def test_astype_round_trip_gradient(self):
        x = Tensor(np.array([1.0, 2.0], dtype=np.float32), requires_grad=True)
        y = astype(x, np.float64)
        assert y.data.dtype == np.float64
        sum_(y).backward()
        assert x.grad.dtype == np.float32

    def test_check_finite_passes_through(self):
        x = Tensor(np.ones(3), requires_grad=True)
        y = check_finite(x, "probe")
        np.testing.assert_array_equal(y.data, x.data)

    def test_check_finite_raises(self):
        x = Tensor(np.array([1.0, np.inf]))
        with pytest.raises(NumericError, match="probe"):
            check_finite(x, "probe")


class TestReductionsAndShapes:
    def test_sum_axis_keepdims(self):
        x = Tensor(np.arange(6, dtype=np.float64).reshape(2, 3))
        np.testing.assert_allclose(sum_(x, axis=1, keepdims=True).data,
                                   [[3.0], [12.0]])

    def test_mean_gradient(self):
        x = Tensor(np.ones((2, 4)), requires_grad=True)
        mean(x).backward()
        np.testing.assert_allclose(x.grad, np.full((2, 4), 1 / 8))

    def test_max_forward_and_gradient_routing(self):
        x = Tensor(np.array([[1.0, 5.0, 2.0], [7.0, 0.0, 7.0]]),
                   requires_grad=True)
        y = max_(x, axis=1)
        np.testing.assert_allclose(y.data, [5.0, 7.0])
        sum_(y).backward()
        # gradient goes only to (arg)max entries; ties split by the mask
        assert x.grad[0, 1] == 1.0 and x.grad[0, 0] == 0.0

    def test_reduction_gradients(self):
        rng = np.random.default_rng(4)
        x = randt(rng, (3, 4, 2))
        for closure in (lambda: sum_(x), lambda: sum_(mean(x, axis=(0, 2))),
                        lambda: sum_(max_(x, axis=1))):
            x.grad = None
            assert grad_check(closure, [x]) < 1e-6

    def test_reshape_transpose_round_trip(self):
        rng = np.random.default_rng(5)
        x = randt(rng, (2, 3, 4))
        y = transpose(reshape(x, (6, 4)), (1, 0))
        assert y.shape == (4, 6)
        err = grad_check(lambda: sum_(mul(y, y)), [x])
        assert err < 1e-6

    def test_slice_gradient_scatter(self):
        x = Tensor(np.arange(10, dtype=np.float64), requires_grad=True)
        sum_(x[3:6]).backward()
        expected = np.zeros(10)
        expected[3:6] = 1.0
        np.testing.assert_allclose(x.grad, expected)

    def test_matmul_shapes_and_gradient(self):
        rng = np.random.default_rng(6)
        a = randt(rng, (2, 3, 4))
        b = randt(rng, (2, 4, 5))
        y = matmul(a, b)
        assert y.shape == (2, 3, 5)
        assert grad_check(lambda: sum_(matmul(a, b)), [a, b]) < 1e-6


class TestStructuralOps:
    def test_concat_values_and_gradient(self):
        rng = np.random.default_rng(7)
        a = randt(rng, (2, 3))
        b = randt(rng, (2, 2))
        y = concat([a, b], axis=1)
        assert y.shape == (2, 5)
        assert grad_check(lambda: sum_(mul(concat([a, b], axis=1), 2.0)),
                          [a, b]) < 1e-6

    def test_concat_channels_is_axis1(self):
        a = Tensor(np.ones((1, 2, 4, 4)))
        b = Tensor(np.zeros((1, 3, 4, 4)))
        assert concat_channels([a, b]).shape == (1, 5, 4, 4)

    def test_pad2d_values(self):
        x = Tensor(np.ones((1, 1, 2, 2)))
        y = pad2d(x, 1, 0, 0, 2)
        assert y.shape == (1, 1, 3, 4)
        assert y.data[0, 0, 0].sum() == 0.0
        assert y.data[0, 0, 1, 3] == 0.0

    def test_pad2d_gradient(self):
        rng = np.random.default_rng(8)
        x = randt(rng, (1, 2, 3, 3))
        assert grad_check(lambda: sum_(mul(pad2d(x, 1, 2, 0, 1), 3.0)), [x]) < 1e-6

    def test_roll_round_trip(self):
        rng = np.random.default_rng(9)
        x = randt(rng, (1, 2, 4, 4))
        y = roll(roll(x, (-1, -2), (2, 3)), (1, 2), (2, 3))
        np.testing.assert_array_equal(y.data, x.data)
        assert grad_check(lambda: sum_(mul(roll(x, (1, 1), (2, 3)), 2.0)),
                          [x]) < 1e-6

    def test_gather_rows_values_and_gradient(self):
        x = Tensor(np.arange(12, dtype=np.float64).reshape(4, 3),
                   requires_grad=True)
        idx = np.array([2, 2, 0])
        y = gather_rows(x, idx)
        np.testing.assert_allclose(y.data, [[6, 7, 8], [6, 7, 8], [0, 1, 2]])
        sum_(y).backward()
        np.testing.assert_allclose(x.grad[2], [2.0, 2.0, 2.0])
        np.testing.assert_allclose(x.grad[1], [0.0, 0.0, 0.0])

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(10)
        x = Tensor(rng.standard_normal((5, 7)))
        np.testing.assert_allclose(softmax(x, axis=-1).data.sum(axis=-1),
                                   np.ones(5), atol=1e-12)

    def test_softmax_shift_invariance(self):
        x = np.array([[1.0, 2.0, 3.0]])
        a = softmax(Tensor(x), axis=-1).data
        b = softmax(Tensor(x + 100.0), axis=-1).data
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_softmax_gradient(self):
        rng = np.random.default_rng(11)
        x = randt(rng, (3, 6))
        w = Tensor(rng.standard_normal((3, 6)))
        assert grad_check(lambda: sum_(mul(softmax(x, axis=-1), w)), [x]) < 1e-6

    def test_layer_norm_normalizes(self):
        rng = np.random.default_rng(12)
        x = Tensor(rng.standard_normal((4, 8)) * 5 + 3)
        g = Tensor(np.ones(8))
        b = Tensor(np.zeros(8))
        y = layer_norm(x, g, b).data
        np.testing.assert_allclose(y.mean(axis=-1), 0.0, atol=1e-7)
        np.testing.assert_allclose(y.std(axis=-1), 1.0, atol=1e-3)

    def test_layer_norm_gradient(self):
        rng = np.random.default_rng(13)
        x = randt(rng, (3, 5))
        g = randt(rng, (5,))
        b = randt(rng, (5,))
        assert grad_check(lambda: sum_(mul(layer_norm(x, g, b), 2.0)),
                          [x, g, b]) < 1e-5

    def test_layer_norm_shape_error(self):
        x = Tensor(np.zeros((2, 4)))
        with pytest.raises(ShapeError):
            layer_norm(x, Tensor(np.ones(3)), Tensor(np.zeros(3)))
