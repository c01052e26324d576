import numpy as np
import pytest

from autodiff.checkpoint import decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint
from autodiff.functional import (
    average_pair,
    average_pair_backward,
    avgpool2,
    avgpool2_backward,
    concat_channels,
    conv2d_backward,
    conv2d_forward,
    dropout,
    dropout_backward,
    maxpool2,
    maxpool2_backward,
    mse_loss,
    relu,
    relu_backward,
    split_channels,
    upsample_nearest2,
    upsample_nearest2_backward,
)
from autodiff.gradcheck import gradient_check
from autodiff.layers import ConvLayer
from autodiff.tensor import EVAL, TRAIN, DropoutSpec, ParamStore, Tensor4
from utils.exceptions import GridFormatError, ShapeError, TrainingError

SEEDS = list(range(20))


def random_shape(rng, even=False, max_channels=3):
    n = int(rng.integers(1, 3))
    c = int(rng.integers(1, max_channels + 1))
    if even:
        h, w = 2 * int(rng.integers(1, 3)), 2 * int(rng.integers(1, 3))
    else:
        h, w = int(rng.integers(1, 5)), int(rng.integers(1, 5))
    return n, c, h, w


def conv(in_channels, out_channels, seed=0, name="conv"):
    return ConvLayer.create(ParamStore(), name, in_channels, out_channels, np.random.default_rng(seed))


def weighted_sum(forward, backward, weights):
    """f(x) = sum(weights * forward(x)) with its analytic gradient"""
    def f(x):
        y = forward(x)
        return float(np.sum(weights * y)), backward(x, weights)
    return f


class TestConv:
    def test_identity_kernel(self, rng):
        layer = conv(2, 2)
        layer.kernel.values[...] = 0.0
        layer.kernel.values[0, 0, 1, 1] = 1.0
        layer.kernel.values[1, 1, 1, 1] = 1.0
        x = rng.normal(size=(1, 2, 4, 5))
        np.testing.assert_array_equal(conv2d_forward(x, layer).values, x)

    def test_all_ones_hand_case(self):
        layer = conv(1, 1)
        layer.kernel.values[...] = 1.0
        y = conv2d_forward(np.ones((1, 1, 3, 3)), layer).values[0, 0]
        assert y[1, 1] == 9.0
        assert y[0, 0] == 4.0 and y[2, 2] == 4.0
        assert y[0, 1] == 6.0

    def test_parameter_count(self):
        assert conv(1, 64).parameter_count == 640

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError):
            conv2d_forward(np.ones((1, 2, 3, 3)), conv(1, 4))

    def test_zero_upstream_gives_zero_gradients(self, rng):
        layer = conv(2, 3)
        x = rng.normal(size=(2, 2, 4, 4))
        dx, dk, db = conv2d_backward(x, layer, np.zeros((2, 3, 4, 4)))
        assert not dx.any() and not dk.any() and not db.any()

    def test_bias_gradient_on_single_cell(self):
        layer = conv(2, 3)
        _, _, db = conv2d_backward(np.ones((1, 2, 1, 1)), layer, np.ones((1, 3, 1, 1)))
        np.testing.assert_array_equal(db.reshape(-1), [1.0, 1.0, 1.0])

    @pytest.mark.parametrize("seed", SEEDS)
    def test_input_gradient(self, seed):
        rng = np.random.default_rng(seed)
        n, c, h, w = random_shape(rng)
        out = int(rng.integers(1, 4))
        layer = conv(c, out, seed)
        weights = rng.normal(size=(n, out, h, w))
        f = weighted_sum(
            lambda x: conv2d_forward(x.reshape(n, c, h, w), layer).values,
            lambda x, u: conv2d_backward(x.reshape(n, c, h, w), layer, u)[0],
            weights,
        )
        assert gradient_check(f, rng.normal(size=(n, c, h, w))).passed

    @pytest.mark.parametrize("seed", SEEDS)
    def test_kernel_and_bias_gradient(self, seed):
        rng = np.random.default_rng(seed)
        n, c, h, w = random_shape(rng)
        out = int(rng.integers(1, 4))
        layer = conv(c, out, seed)
        x = rng.normal(size=(n, c, h, w))
        weights = rng.normal(size=(n, out, h, w))

        def f_kernel(k):
            layer.kernel.values[...] = k.reshape(layer.kernel.dims)
            return float(np.sum(weights * conv2d_forward(x, layer).values)), conv2d_backward(x, layer, weights)[1]

        def f_bias(b):
            layer.bias.values[...] = b.reshape(layer.bias.dims)
            return float(np.sum(weights * conv2d_forward(x, layer).values)), conv2d_backward(x, layer, weights)[2]

        assert gradient_check(f_kernel, layer.kernel.values.copy()).passed
        assert gradient_check(f_bias, rng.normal(size=layer.bias.dims)).passed

    def test_layer_backward_accumulates(self, rng):
        layer = conv(1, 2)
        x = rng.normal(size=(1, 1, 3, 3))
        upstream = rng.normal(size=(1, 2, 3, 3))
        layer.backward(x, upstream)
        layer.backward(x, upstream)
        _, dk, _ = conv2d_backward(x, layer, upstream)
        np.testing.assert_allclose(layer.kernel.grad, 2 * dk)


class TestPooling:
    def test_maxpool_unique_max(self):
        y, argmax = maxpool2(np.array([[[[1.0, 2.0], [3.0, 4.0]]]]))
        assert y.values.item() == 4.0
        dx = maxpool2_backward(argmax, np.ones((1, 1, 1, 1)))
        np.testing.assert_array_equal(dx[0, 0], [[0.0, 0.0], [0.0, 1.0]])

    def test_maxpool_tie_goes_to_first(self):
        _, argmax = maxpool2(np.full((1, 1, 2, 2), 7.0))
        dx = maxpool2_backward(argmax, np.ones((1, 1, 1, 1)))
        np.testing.assert_array_equal(dx[0, 0], [[1.0, 0.0], [0.0, 0.0]])

    def test_maxpool_ramp(self):
        y, _ = maxpool2(np.arange(16.0).reshape(1, 1, 4, 4))
        np.testing.assert_array_equal(y.values[0, 0], [[5.0, 7.0], [13.0, 15.0]])

    def test_odd_dims_rejected(self):
        with pytest.raises(ShapeError):
            maxpool2(np.ones((1, 1, 3, 4)))
        with pytest.raises(ShapeError):
            avgpool2(np.ones((1, 1, 4, 5)))

    def test_avgpool(self):
        assert avgpool2(np.array([[[[1.0, 2.0], [3.0, 4.0]]]])).values.item() == 2.5
        np.testing.assert_array_equal(avgpool2(np.full((1, 2, 4, 4), 3.0)).values, np.full((1, 2, 2, 2), 3.0))
        np.testing.assert_array_equal(avgpool2_backward(np.ones((1, 1, 1, 1))), np.full((1, 1, 2, 2), 0.25))

    def test_upsample(self):
        y = upsample_nearest2(np.array([[[[1.0, 2.0]]]])).values
        np.testing.assert_array_equal(y[0, 0], [[1.0, 1.0, 2.0, 2.0], [1.0, 1.0, 2.0, 2.0]])
        np.testing.assert_array_equal(upsample_nearest2_backward(np.ones((1, 1, 2, 2))), [[[[4.0]]]])

    def test_pool_then_upsample_preserves_dims(self, rng):
        x = rng.normal(size=(2, 3, 6, 4))
        assert upsample_nearest2(avgpool2(x)).dims == x.shape
        assert upsample_nearest2(maxpool2(x)[0]).dims == x.shape
        const = np.full((1, 1, 4, 4), 2.5)
        np.testing.assert_array_equal(upsample_nearest2(avgpool2(const)).values, const)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_pooling_gradients(self, seed):
        rng = np.random.default_rng(seed)
        shape = random_shape(rng, even=True)
        # distinct, well separated values keep the argmax fixed under the probe step
        x = rng.permutation(int(np.prod(shape))).reshape(shape) * 0.1
        half = (shape[0], shape[1], shape[2] // 2, shape[3] // 2)
        weights = rng.normal(size=half)

        def f_max(z):
            y, argmax = maxpool2(z.reshape(shape))
            return float(np.sum(weights * y.values)), maxpool2_backward(argmax, weights)

        f_avg = weighted_sum(lambda z: avgpool2(z.reshape(shape)).values, lambda z, u: avgpool2_backward(u), weights)
        assert gradient_check(f_max, x).passed
        assert gradient_check(f_avg, x).passed

    @pytest.mark.parametrize("seed", SEEDS)
    def test_upsample_gradient(self, seed):
        rng = np.random.default_rng(seed)
        shape = random_shape(rng)
        weights = rng.normal(size=(shape[0], shape[1], 2 * shape[2], 2 * shape[3]))
        f = weighted_sum(lambda z: upsample_nearest2(z.reshape(shape)).values,
                         lambda z, u: upsample_nearest2_backward(u), weights)
        assert gradient_check(f, rng.normal(size=shape)).passed


class TestDropout:
    def test_rate_zero_and_eval_are_identity(self, rng):
        x = rng.normal(size=(1, 2, 3, 3))
        y, kept = dropout(x, DropoutSpec(0.0), rng)
        np.testing.assert_array_equal(y.values, x)
        assert kept.all()
        y, _ = dropout(x, DropoutSpec(0.5, EVAL), rng)
        np.testing.assert_array_equal(y.values, x)

    def test_invalid_rate(self):
        with pytest.raises(ValueError):
            DropoutSpec(1.0)
        with pytest.raises(ValueError):
            DropoutSpec(0.2, "test")

    def test_law_of_large_numbers(self):
        x = np.random.default_rng(0).uniform(1.0, 2.0, size=(1, 1, 1000, 1000))
        y, kept = dropout(x, DropoutSpec(0.3, TRAIN), np.random.default_rng(5))
        assert abs(kept.mean() - 0.7) < 0.005
        assert abs(y.values.mean() / x.mean() - 1.0) < 0.01

    def test_same_stream_same_mask(self):
        x = np.ones((2, 2, 4, 4))
        _, a = dropout(x, DropoutSpec(0.3), np.random.default_rng(3))
        _, b = dropout(x, DropoutSpec(0.3), np.random.default_rng(3))
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_frozen_mask_gradient(self, seed):
        rng = np.random.default_rng(seed)
        shape = random_shape(rng)
        spec = DropoutSpec(0.3, TRAIN)
        weights = rng.normal(size=shape)

        def f(z):
            y, kept = dropout(z.reshape(shape), spec, np.random.default_rng(seed))
            return float(np.sum(weights * y.values)), dropout_backward(kept, spec, weights)

        assert gradient_check(f, rng.normal(size=shape)).passed


class TestEltwise:
    def test_concat_and_split(self, rng):
        parts = [rng.normal(size=(1, 16, 4, 4)), rng.normal(size=(1, 16, 4, 4)), rng.normal(size=(1, 32, 4, 4))]
        y = concat_channels(parts)
        assert y.dims == (1, 64, 4, 4)
        for original, piece in zip(parts, split_channels(y.values, [16, 16, 32])):
            np.testing.assert_array_equal(original, piece)

    def test_concat_mismatch(self):
        with pytest.raises(ShapeError):
            concat_channels([np.ones((1, 1, 4, 4)), np.ones((1, 1, 2, 4))])

    def test_average_pair(self, rng):
        x = rng.normal(size=(1, 2, 2, 2))
        np.testing.assert_array_equal(average_pair(x, x).values, x)
        assert average_pair([[[[2.0]]]], [[[[4.0]]]]).values.item() == 3.0
        da, db = average_pair_backward(np.ones((1, 1, 1, 1)))
        assert da.item() == 0.5 and db.item() == 0.5

    def test_relu(self):
        x = np.array([[[[-1.0, 0.0, 2.0]]]])
        np.testing.assert_array_equal(relu(x).values, [[[[0.0, 0.0, 2.0]]]])
        np.testing.assert_array_equal(relu_backward(x, np.ones_like(x)), [[[[0.0, 0.0, 1.0]]]])

    @pytest.mark.parametrize("seed", SEEDS)
    def test_relu_gradient_away_from_zero(self, seed):
        rng = np.random.default_rng(seed)
        shape = random_shape(rng)
        x = rng.uniform(0.05, 1.0, size=shape) * rng.choice([-1.0, 1.0], size=shape)
        weights = rng.normal(size=shape)
        f = weighted_sum(lambda z: relu(z.reshape(shape)).values,
                         lambda z, u: relu_backward(z.reshape(shape), u), weights)
        assert gradient_check(f, x).passed

    def test_mse_hand_cases(self):
        loss, grad = mse_loss(np.array([[[[1.0, 2.0]]]]), np.zeros((1, 1, 1, 2)), np.ones((1, 2), dtype=bool))
        assert loss == 2.5
        np.testing.assert_array_equal(grad, [[[[1.0, 2.0]]]])
        loss, grad = mse_loss(np.array([[[[1.0, 2.0]]]]), np.zeros((1, 1, 1, 2)), np.array([[False, True]]))
        assert loss == 4.0
        np.testing.assert_array_equal(grad, [[[[0.0, 4.0]]]])
        same = np.ones((1, 1, 2, 2))
        assert mse_loss(same, same, np.ones((2, 2), dtype=bool))[0] == 0.0

    def test_mse_all_masked(self):
        with pytest.raises(TrainingError):
            mse_loss(np.ones((1, 1, 2, 2)), np.zeros((1, 1, 2, 2)), np.zeros((2, 2), dtype=bool))

    @pytest.mark.parametrize("seed", SEEDS)
    def test_mse_gradient(self, seed):
        rng = np.random.default_rng(seed)
        shape = random_shape(rng)
        target = rng.normal(size=shape)
        mask = rng.random(shape[2:]) < 0.7
        mask.flat[0] = True
        f = lambda z: mse_loss(z.reshape(shape), target, mask)
        assert gradient_check(f, rng.normal(size=shape)).passed


class TestGradCheck:
    def test_linear_map_is_exact(self, rng):
        a = rng.normal(size=12)
        report = gradient_check(lambda z: (float(a @ z), a.copy()), rng.normal(size=12))
        assert report.max_rel_error < 1e-9
        assert report.n_checked == 12

    def test_wrong_gradient_fails(self, rng):
        report = gradient_check(lambda z: (float(np.sum(z ** 2)), z.copy()), rng.normal(size=5))
        assert not report.passed


class TestParamStore:
    def test_duplicate_names_rejected(self):
        store = ParamStore()
        store.add("a", Tensor4.zeros(1, 1, 1, 1))
        with pytest.raises(ValueError, match="duplicate"):
            store.add("a", Tensor4.zeros(1, 1, 1, 1))

    def test_tensor4_needs_four_dims(self):
        with pytest.raises(ShapeError):
            Tensor4(np.zeros((2, 2)))

    def test_load_checks_shapes_and_resets_state(self):
        store = ParamStore()
        store.add("w", Tensor4(np.ones((1, 1, 2, 2))))
        store["w"].adam_m += 1.0
        store.load({"w": np.full((1, 1, 2, 2), 3.0)})
        assert store["w"].tensor.values[0, 0, 1, 1] == 3.0
        assert not store["w"].adam_m.any()
        with pytest.raises(ShapeError):
            store.load({"w": np.ones((1, 1, 3, 3))})
        with pytest.raises(ShapeError):
            store.load({"v": np.ones((1, 1, 2, 2))})

    def test_snapshot_is_a_copy(self):
        store = ParamStore()
        store.add("w", Tensor4(np.ones((1, 1, 1, 1))))
        snap = store.snapshot()
        store["w"].tensor.values[...] = 5.0
        assert snap["w"].item() == 1.0


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        layer = conv(2, 3, seed=4, name="conv0")
        store = ParamStore()
        store.add("conv0.kernel", layer.kernel)
        store.add("conv0.bias", layer.bias)
        back = read_checkpoint(write_checkpoint(store, str(tmp_path / "c.mck1")))
        assert list(back) == ["conv0.kernel", "conv0.bias"]
        assert back["conv0.kernel"].tobytes() == layer.kernel.values.tobytes()

    def test_bad_magic(self):
        payload = encode_checkpoint({"a": np.ones((1, 1, 1, 1))})
        with pytest.raises(GridFormatError, match="magic"):
            decode_checkpoint(b"XXXX" + payload[4:])

    def test_truncated_and_trailing(self):
        payload = encode_checkpoint({"a": np.ones((1, 1, 2, 2))})
        with pytest.raises(GridFormatError):
            decode_checkpoint(payload[:-3])
        with pytest.raises(GridFormatError, match="trailing"):
            decode_checkpoint(payload + b"\x00")
