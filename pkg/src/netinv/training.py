"""Plain stochastic gradient training for the toy autoencoders whose
encoders the solvers invert.

Training works on mutable parameter holders (`TrainLayer`); the finished
weights are wrapped into immutable inference networks at the end.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._conv import conv2d_adjoint, conv2d_forward, conv2d_kernel_grad
from .linops import Conv2d, ConvTranspose2d, DenseAffine, conv_output_hw
from .network import Layer, Network
from .penalties import NonNegIndicator, ZeroPenalty
from .rng import Prng


@dataclass
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        # zero learning rate is allowed (it must leave weights untouched)
        if self.learning_rate < 0 or self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("learning_rate must be >= 0, epochs and "
                             "batch_size positive")


class TrainLayer:
    """Mutable (weights, bias, optional ReLU) block used during training."""

    def __init__(self, kind, weight, bias, relu, input_shape, output_shape,
                 stride=1, padding=1):
        self.kind = kind  # "dense" | "conv" | "convt"
        self.weight = np.array(weight, dtype=np.float64)
        self.bias = np.array(bias, dtype=np.float64)
        self.relu = relu
        self.input_shape = tuple(input_shape)
        self.output_shape = tuple(output_shape)
        self.stride = stride
        self.padding = padding

    # -- forward / backward on a batch ------------------------------------
    def forward_batch(self, x):
        b = x.shape[0]
        x = x.reshape((b,) + self.input_shape)
        if self.kind == "dense":
            pre = x.reshape(b, -1) @ self.weight.T + self.bias
            pre = pre.reshape((b,) + self.output_shape)
        elif self.kind == "conv":
            pre = np.stack(
                [
                    conv2d_forward(x[i], self.weight, self.stride, self.padding)
                    for i in range(b)
                ]
            ) + self.bias[None, :, None, None]
        else:
            h_out = self.output_shape[1:]
            pre = np.stack(
                [
                    conv2d_adjoint(
                        x[i], self.weight, self.stride, self.padding, *h_out
                    )
                    for i in range(b)
                ]
            ) + self.bias[None, :, None, None]
        out = np.maximum(0.0, pre) if self.relu else pre
        return out, (x, pre)

    def backward_batch(self, g_out, cache):
        x, pre = cache
        b = x.shape[0]
        g = g_out.reshape((b,) + self.output_shape)
        if self.relu:
            g = g * (pre > 0)  # subgradient 0 at exactly zero
        if self.kind == "dense":
            gf = g.reshape(b, -1)
            g_w = gf.T @ x.reshape(b, -1)
            g_b = gf.sum(axis=0)
            g_in = (gf @ self.weight).reshape((b,) + self.input_shape)
        elif self.kind == "conv":
            kh, kw = self.weight.shape[2:]
            h, w = self.input_shape[1:]
            g_w = np.zeros_like(self.weight)
            g_in = np.empty((b,) + self.input_shape)
            for i in range(b):
                g_in[i] = conv2d_adjoint(g[i], self.weight, self.stride,
                                         self.padding, h, w)
                g_w += conv2d_kernel_grad(x[i], g[i], self.stride, self.padding,
                                          kh, kw)
            g_b = g.sum(axis=(0, 2, 3))
        else:
            kh, kw = self.weight.shape[2:]
            g_w = np.zeros_like(self.weight)
            g_in = np.empty((b,) + self.input_shape)
            for i in range(b):
                g_in[i] = conv2d_forward(g[i], self.weight, self.stride,
                                         self.padding)
                # roles swap for the transpose direction
                g_w += conv2d_kernel_grad(g[i], x[i], self.stride, self.padding,
                                          kh, kw)
            g_b = g.sum(axis=(0, 2, 3))
        return g_in, g_w, g_b

    def apply_update(self, d_w, d_b):
        self.weight += d_w
        self.bias += d_b


def backprop_mse(layers, batch, targets=None):
    """Loss and exact parameter gradients of the reconstruction error.

    The loss is the batch mean of the per-sample squared error (summed
    over components), so a single linear layer recovers the familiar
    (2/n) (W x - x) x^T gradient.  Returns (loss, [(g_w, g_b), ...]).
    """
    x = np.asarray(batch, dtype=np.float64)
    t = x if targets is None else np.asarray(targets, dtype=np.float64)
    cur = x
    caches = []
    for layer in layers:
        cur, cache = layer.forward_batch(cur)
        caches.append(cache)
    b = x.shape[0]
    diff = cur - t.reshape(cur.shape)
    loss = float(np.sum(diff * diff)) / b
    g = (2.0 / b) * diff
    grads = [None] * len(layers)
    for i in reversed(range(len(layers))):
        g, g_w, g_b = layers[i].backward_batch(g, caches[i])
        grads[i] = (g_w, g_b)
    return loss, grads


def dataset_mse(layers, data, batch_size=256):
    total = 0.0
    n = len(data)
    for s in range(0, n, batch_size):
        chunk = data[s : s + batch_size]
        cur = chunk
        for layer in layers:
            cur, _ = layer.forward_batch(cur)
        diff = cur - chunk.reshape(cur.shape)
        total += float(np.sum(diff * diff))
    return total / n


def _sgd(layers, data, cfg, rng, log_sink=None):
    n = len(data)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, cfg.batch_size):
            idx = order[s : s + cfg.batch_size]
            loss, grads = backprop_mse(layers, data[idx])
            for layer, (g_w, g_b) in zip(layers, grads):
                layer.apply_update(-cfg.learning_rate * g_w,
                                   -cfg.learning_rate * g_b)
            total += loss * len(idx)
        if log_sink is not None:
            log_sink.append((epoch, total / n))


def _init(rng, fan_in, shape):
    return rng.uniform_signed(1.0 / math.sqrt(fan_in), shape)


# small positive bias keeps ReLU units alive at the start; with zero biases
# the strided decoder collapses onto the dead all-zero output within one epoch
RELU_BIAS_INIT = 0.1


def train_dense_autoencoder(data, code_dim, cfg, log_sink=None):
    """Two-layer autoencoder: ReLU bottleneck encoder, affine decoder.

    Returns (encoder, decoder, final_mse) with the final mean squared
    error taken over the whole dataset.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or len(data) == 0:
        raise ValueError("expected a non-empty (N, d) dataset")
    if code_dim < 1:
        raise ValueError("code dimension must be >= 1")
    d = data.shape[1]
    rng = Prng(cfg.seed)
    layers = [
        TrainLayer("dense", _init(rng, d, (code_dim, d)),
                   np.full(code_dim, RELU_BIAS_INIT),
                   relu=True, input_shape=(d,), output_shape=(code_dim,)),
        TrainLayer("dense", _init(rng, code_dim, (d, code_dim)), np.zeros(d),
                   relu=False, input_shape=(code_dim,), output_shape=(d,)),
    ]
    _sgd(layers, data, cfg, rng, log_sink=log_sink)
    final_mse = dataset_mse(layers, data)
    encoder = Network([
        Layer(DenseAffine(layers[0].weight, layers[0].bias), NonNegIndicator())
    ])
    decoder = Network([
        Layer(DenseAffine(layers[1].weight, layers[1].bias), ZeroPenalty())
    ])
    return encoder, decoder, final_mse


def conv_autoencoder_train_layers(rng):
    """The fixed six-layer architecture on 28 x 28 single-channel images."""
    h1 = conv_output_hw(28, 28, 4, 4, 2, 1)  # (14, 14)
    h2 = conv_output_hw(*h1, 4, 4, 2, 1)     # (7, 7)
    flat = 16 * h2[0] * h2[1]
    b = RELU_BIAS_INIT
    return [
        TrainLayer("conv", _init(rng, 1 * 16, (8, 1, 4, 4)), np.full(8, b),
                   relu=True, input_shape=(1, 28, 28),
                   output_shape=(8,) + h1, stride=2, padding=1),
        TrainLayer("conv", _init(rng, 8 * 16, (16, 8, 4, 4)), np.full(16, b),
                   relu=True, input_shape=(8,) + h1,
                   output_shape=(16,) + h2, stride=2, padding=1),
        TrainLayer("dense", _init(rng, flat, (300, flat)), np.full(300, b),
                   relu=True, input_shape=(16,) + h2, output_shape=(300,)),
        TrainLayer("dense", _init(rng, 300, (flat, 300)), np.zeros(flat),
                   relu=False, input_shape=(300,), output_shape=(16,) + h2),
        TrainLayer("convt", _init(rng, 16 * 16, (16, 8, 4, 4)), np.full(8, b),
                   relu=True, input_shape=(16,) + h2,
                   output_shape=(8,) + h1, stride=2, padding=1),
        TrainLayer("convt", _init(rng, 8 * 16, (8, 1, 4, 4)), np.full(1, b),
                   relu=True, input_shape=(8,) + h1,
                   output_shape=(1, 28, 28), stride=2, padding=1),
    ]


def train_conv_autoencoder(data, cfg, log_sink=None):
    """Six-layer convolutional autoencoder on 28 x 28 images.

    Encoder: two strided 4x4 convolutions (8 then 16 channels) and a dense
    map onto a 300-dimensional non-negative code.  Decoder: dense
    expansion followed by two strided transpose convolutions.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 3 or data.shape[1:] != (28, 28) or len(data) == 0:
        raise ValueError("expected a non-empty (N, 28, 28) dataset")
    rng = Prng(cfg.seed)
    layers = conv_autoencoder_train_layers(rng)
    batches = data[:, None, :, :]  # single channel
    _sgd(layers, batches, cfg, rng, log_sink=log_sink)
    final_mse = dataset_mse(layers, batches)
    encoder = Network([
        Layer(
            Conv2d(layers[0].weight, (28, 28), stride=2, padding=1,
                   bias=layers[0].bias),
            NonNegIndicator(),
        ),
        Layer(
            Conv2d(layers[1].weight, (14, 14), stride=2, padding=1,
                   bias=layers[1].bias),
            NonNegIndicator(),
        ),
        Layer(
            DenseAffine(layers[2].weight, layers[2].bias,
                        input_shape=(16, 7, 7)),
            NonNegIndicator(),
        ),
    ])
    decoder = Network([
        Layer(DenseAffine(layers[3].weight, layers[3].bias), ZeroPenalty()),
        Layer(
            ConvTranspose2d(layers[4].weight, (7, 7), stride=2, padding=1,
                            bias=layers[4].bias),
            NonNegIndicator(),
        ),
        Layer(
            ConvTranspose2d(layers[5].weight, (14, 14), stride=2, padding=1,
                            bias=layers[5].bias),
            NonNegIndicator(),
        ),
    ])
    return encoder, decoder, final_mse
