import numpy as np
import pytest

from netinv import (
    Conv2d,
    ConvTranspose2d,
    DenseAffine,
    Layer,
    Network,
    NonNegIndicator,
    Prng,
    ZeroPenalty,
)


def relu_layer(rng, m, n):
    return Layer(
        DenseAffine(rng.normal((m, n)), rng.normal((m,))), NonNegIndicator()
    )


class TestForward:
    def test_identity_layer(self):
        net = Network([Layer(DenseAffine(np.eye(3)), ZeroPenalty())])
        x = np.array([1.0, -2.0, 3.0])
        assert np.array_equal(net.forward(x), x)

    def test_relu_perceptron(self):
        rng = Prng(0)
        w, b = rng.normal((4, 3)), rng.normal((4,))
        net = Network([Layer(DenseAffine(w, b), NonNegIndicator())])
        x = rng.normal((3,))
        assert np.allclose(net.forward(x), np.maximum(0.0, w @ x + b))

    def test_two_layer_composition(self):
        rng = Prng(1)
        l1, l2 = relu_layer(rng, 5, 4), relu_layer(rng, 3, 5)
        net = Network([l1, l2])
        x = rng.normal((4,))
        manual = l2.forward(l1.forward(x))
        assert np.array_equal(net.forward(x), manual)

    def test_linear_when_no_bias_no_penalty(self):
        rng = Prng(2)
        w1, w2 = rng.normal((4, 4)), rng.normal((4, 4))
        net = Network([
            Layer(DenseAffine(w1), ZeroPenalty()),
            Layer(DenseAffine(w2), ZeroPenalty()),
        ])
        x, y = rng.normal((4,)), rng.normal((4,))
        assert np.allclose(net.forward(x + y), net.forward(x) + net.forward(y),
                           atol=1e-12)


class TestHiddenStates:
    def test_single_layer(self):
        rng = Prng(3)
        net = Network([relu_layer(rng, 4, 4)])
        x = rng.normal((4,))
        states = net.hidden_states(x)
        assert len(states) == 1
        assert np.array_equal(states[0], net.forward(x))

    def test_two_layers(self):
        rng = Prng(4)
        l1, l2 = relu_layer(rng, 5, 4), relu_layer(rng, 3, 5)
        net = Network([l1, l2])
        x = rng.normal((4,))
        states = net.hidden_states(x)
        assert len(states) == 2
        assert np.array_equal(states[0], l1.forward(x))
        assert np.array_equal(states[1], net.forward(x))

    def test_last_state_bit_exact(self):
        rng = Prng(5)
        net = Network([relu_layer(rng, 6, 6), relu_layer(rng, 6, 6),
                       relu_layer(rng, 2, 6)])
        x = rng.normal((6,))
        assert np.array_equal(net.hidden_states(x)[-1], net.forward(x))


class TestChaining:
    def test_mismatched_shapes_rejected(self):
        rng = Prng(6)
        with pytest.raises(ValueError):
            Network([relu_layer(rng, 5, 4), relu_layer(rng, 3, 6)])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            Network([])

    def test_flat_boundary_between_dense_and_conv(self):
        # dense expansion feeding a transpose convolution: 1-D output chains
        # with the shaped input when the sizes agree
        rng = Prng(7)
        dense = Layer(DenseAffine(rng.normal((16, 3))), ZeroPenalty())
        up = Layer(
            ConvTranspose2d(rng.normal((4, 2, 4, 4)), (2, 2), stride=2, padding=1),
            NonNegIndicator(),
        )
        net = Network([dense, up])
        out = net.forward(rng.normal((3,)))
        assert out.shape == (2, 4, 4)

    def test_conv_chain_shapes(self):
        rng = Prng(8)
        net = Network([
            Layer(Conv2d(rng.normal((8, 1, 4, 4)), (28, 28), 2, 1),
                  NonNegIndicator()),
            Layer(Conv2d(rng.normal((16, 8, 4, 4)), (14, 14), 2, 1),
                  NonNegIndicator()),
            Layer(DenseAffine(rng.normal((300, 784)), input_shape=(16, 7, 7)),
                  NonNegIndicator()),
        ])
        out = net.forward(rng.normal((1, 28, 28)))
        assert out.shape == (300,)
        assert np.all(out >= 0.0)
