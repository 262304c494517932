"""Feed-forward networks as alternating affine maps and activations."""

import numpy as np


class Layer:
    """One (affine operator, penalty) pair; the activation is the prox."""

    def __init__(self, op, penalty):
        self.op = op
        self.penalty = penalty

    def forward(self, x):
        return self.penalty.prox(self.op.forward(x))

    def __repr__(self):
        return f"Layer({self.op!r}, {self.penalty!r})"


def _chainable(prev, cur):
    if tuple(prev) == tuple(cur):
        return True
    # a flat vector may feed a shaped layer (and vice versa) when sizes agree,
    # e.g. a dense expansion followed by a transpose convolution
    if len(prev) == 1 or len(cur) == 1:
        return int(np.prod(prev)) == int(np.prod(cur))
    return False


class Network:
    """Ordered layers with chained shapes; immutable after construction."""

    def __init__(self, layers):
        layers = list(layers)
        if not layers:
            raise ValueError("a network needs at least one layer")
        for i in range(1, len(layers)):
            prev, cur = layers[i - 1].op.output_shape, layers[i].op.input_shape
            if not _chainable(prev, cur):
                raise ValueError(
                    f"layer {i} expects input shape {tuple(cur)} but layer "
                    f"{i - 1} produces {tuple(prev)}"
                )
        self.layers = layers

    @property
    def input_shape(self):
        return self.layers[0].op.input_shape

    @property
    def output_shape(self):
        return self.layers[-1].op.output_shape

    def forward(self, x):
        """Alternate affine map and activation through all layers."""
        for layer in self.layers:
            x = layer.forward(np.reshape(x, layer.op.input_shape))
        return x

    def hidden_states(self, x):
        """All post-activation states; the last one equals ``forward(x)``."""
        states = []
        for layer in self.layers:
            x = layer.forward(np.reshape(x, layer.op.input_shape))
            states.append(np.asarray(x))
        return states

    def __len__(self):
        return len(self.layers)

    def __repr__(self):
        return "Network([" + ", ".join(repr(l) for l in self.layers) + "])"
