import numpy as np
import pytest

from netinv import Prng, TrainConfig, train_conv_autoencoder, train_dense_autoencoder
from netinv.training import TrainLayer, backprop_mse, conv_autoencoder_train_layers, dataset_mse


def linear_train_layer(w):
    m, n = w.shape
    return TrainLayer("dense", w, np.zeros(m), relu=False,
                      input_shape=(n,), output_shape=(m,))


class TestBackprop:
    def test_linear_autoencoder_closed_form(self):
        # loss = (1/n) sum_i ||W x_i - x_i||^2, gradient (2/n) sum (Wx-x) x^T
        rng = Prng(0)
        w = rng.normal((4, 4))
        x = rng.normal((7, 4))
        layer = linear_train_layer(w.copy())
        loss, grads = backprop_mse([layer], x)
        n = len(x)
        resid = x @ w.T - x
        expected_loss = float(np.sum(resid**2)) / n
        expected_gw = (2.0 / n) * resid.T @ x
        expected_gb = (2.0 / n) * resid.sum(axis=0)
        assert loss == pytest.approx(expected_loss)
        assert np.allclose(grads[0][0], expected_gw, atol=1e-12)
        assert np.allclose(grads[0][1], expected_gb, atol=1e-12)

    def test_dead_relu_unit_gets_zero_gradient(self):
        w = np.array([[1.0, 0.0], [0.0, 1.0]])
        enc = TrainLayer("dense", w.copy(), np.array([0.0, -10.0]), relu=True,
                         input_shape=(2,), output_shape=(2,))
        dec = linear_train_layer(np.diag([2.0, 1.0]))  # imperfect on unit 0
        x = np.array([[0.5, 0.5]])
        _, grads = backprop_mse([enc, dec], x)
        # second unit's pre-activation is -9.5 < 0: its row receives nothing
        assert np.all(grads[0][0][1] == 0.0)
        assert grads[0][1][1] == 0.0
        assert np.any(grads[0][0][0] != 0.0)

    def test_full_conv_net_matches_finite_differences(self):
        rng = Prng(1)
        layers = conv_autoencoder_train_layers(rng)
        data = Prng(2).uniform((2, 1, 28, 28))
        _, grads = backprop_mse(layers, data)
        probe = Prng(3)
        h = 1e-6
        # five random parameters spread over the dense code layer
        li = 2
        for _ in range(5):
            i = int(probe.uniform() * layers[li].weight.shape[0])
            j = int(probe.uniform() * layers[li].weight.shape[1])
            orig = layers[li].weight[i, j]
            layers[li].weight[i, j] = orig + h
            up, _ = backprop_mse(layers, data)
            layers[li].weight[i, j] = orig - h
            dn, _ = backprop_mse(layers, data)
            layers[li].weight[i, j] = orig
            fd = (up - dn) / (2 * h)
            assert grads[li][0][i, j] == pytest.approx(fd, abs=1e-4)

    def test_conv_kernel_gradient_finite_differences(self):
        rng = Prng(4)
        layers = conv_autoencoder_train_layers(rng)
        data = Prng(5).uniform((2, 1, 28, 28))
        _, grads = backprop_mse(layers, data)
        h = 1e-6
        for li, idx in ((0, (3, 0, 1, 2)), (4, (7, 5, 0, 3))):
            orig = layers[li].weight[idx]
            layers[li].weight[idx] = orig + h
            up, _ = backprop_mse(layers, data)
            layers[li].weight[idx] = orig - h
            dn, _ = backprop_mse(layers, data)
            layers[li].weight[idx] = orig
            fd = (up - dn) / (2 * h)
            assert grads[li][0][idx] == pytest.approx(fd, abs=1e-4)


class TestDenseAutoencoder:
    def test_low_rank_data_is_learned(self):
        rng = Prng(3)
        basis = rng.uniform((2, 12)) * 0.5
        coef = rng.uniform((100, 2))
        data = coef @ basis
        cfg = TrainConfig(learning_rate=0.1, epochs=200, batch_size=16, seed=1)
        _, _, mse = train_dense_autoencoder(data, 6, cfg)
        assert mse < 1e-2

    def test_identity_sized_code_with_zero_lr_keeps_mse(self):
        rng = Prng(6)
        data = rng.uniform((20, 8))
        cfg = TrainConfig(learning_rate=0.0, epochs=3, batch_size=5, seed=2)
        log = []
        _, _, mse = train_dense_autoencoder(data, 8, cfg, log_sink=log)
        assert log[0][1] == pytest.approx(log[-1][1])

    def test_training_reduces_mse(self):
        rng = Prng(7)
        data = rng.uniform((80, 10))
        cfg0 = TrainConfig(learning_rate=0.0, epochs=1, batch_size=16, seed=3)
        _, _, initial = train_dense_autoencoder(data, 4, cfg0)
        cfg = TrainConfig(learning_rate=0.05, epochs=30, batch_size=16, seed=3)
        _, _, final = train_dense_autoencoder(data, 4, cfg)
        assert final < initial

    def test_epoch_loss_monotone_for_small_lr(self):
        rng = Prng(8)
        basis = rng.uniform((2, 10)) * 0.5
        data = rng.uniform((60, 2)) @ basis
        log = []
        cfg = TrainConfig(learning_rate=0.02, epochs=40, batch_size=60, seed=4)
        train_dense_autoencoder(data, 5, cfg, log_sink=log)
        losses = [m for _, m in log]
        assert all(b <= a + 1e-9 for a, b in zip(losses, losses[1:]))

    def test_deterministic_given_seed(self):
        rng = Prng(9)
        data = rng.uniform((50, 8))
        cfg = TrainConfig(learning_rate=0.05, epochs=5, batch_size=16, seed=5)
        enc1, dec1, mse1 = train_dense_autoencoder(data, 4, cfg)
        enc2, dec2, mse2 = train_dense_autoencoder(data, 4, cfg)
        assert mse1 == mse2
        assert np.array_equal(enc1.layers[0].op.weight, enc2.layers[0].op.weight)
        assert np.array_equal(dec1.layers[0].op.weight, dec2.layers[0].op.weight)

    def test_encoder_outputs_nonnegative(self):
        rng = Prng(10)
        data = rng.uniform((50, 8)) - 0.5  # centred data goes negative
        cfg = TrainConfig(learning_rate=0.05, epochs=5, batch_size=16, seed=6)
        enc, _, _ = train_dense_autoencoder(data, 4, cfg)
        for row in data:
            assert np.all(enc.forward(row) >= 0.0)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            train_dense_autoencoder(np.zeros((0, 4)), 2, TrainConfig())


class TestConvAutoencoder:
    def test_shape_chain(self):
        rng = Prng(11)
        layers = conv_autoencoder_train_layers(rng)
        shapes = [l.input_shape for l in layers] + [layers[-1].output_shape]
        assert shapes == [
            (1, 28, 28),
            (8, 14, 14),
            (16, 7, 7),
            (300,),
            (16, 7, 7),
            (8, 14, 14),
            (1, 28, 28),
        ]

    def test_zero_lr_keeps_weights_bit_identical(self):
        data = Prng(12).uniform((8, 28, 28))
        cfg = TrainConfig(learning_rate=0.0, epochs=1, batch_size=4, seed=7)
        enc, dec, _ = train_conv_autoencoder(data, cfg)
        rng = Prng(7)
        fresh = conv_autoencoder_train_layers(rng)
        assert np.array_equal(enc.layers[0].op.kernel, fresh[0].weight)
        assert np.array_equal(dec.layers[2].op.kernel, fresh[5].weight)
        assert np.array_equal(enc.layers[2].op.weight, fresh[2].weight)

    def test_training_runs_and_reduces_loss(self):
        from netinv import synthetic_shapes

        data = synthetic_shapes(64, seed=13)
        frozen = TrainConfig(learning_rate=0.0, epochs=1, batch_size=16, seed=8)
        _, _, initial = train_conv_autoencoder(data, frozen)
        cfg = TrainConfig(learning_rate=1e-3, epochs=5, batch_size=16, seed=8)
        enc, dec, mse = train_conv_autoencoder(data, cfg)
        assert mse < initial
        code = enc.forward(data[0][None, :, :])
        assert code.shape == (300,)
        assert np.all(code >= 0.0)
        out = dec.forward(code)
        assert out.shape == (1, 28, 28)

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            train_conv_autoencoder(np.zeros((4, 27, 27)), TrainConfig())
