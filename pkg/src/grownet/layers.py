"""Feedforward layers: dense perceptron, input projection, tunnel, highway, dropout.

A tunnel unit mixes a nonlinear branch with an identity branch through a
learned constant gate g in [0, 1]:

    y = g * act(W x + b) + (1 - g) * x

so a unit with g = 0 copies its input and costs nothing at inference, while
g = 1 is an ordinary perceptron unit.  A highway unit computes the same mix
but with an input-dependent gate sigmoid(gateW x + gateB); the tunnel unit is
exactly the constant-gate special case.

All layers accept a single sample (K,) or a batch (B, K) and return output of
the same shape.  forward returns (output, cache); backward consumes that cache,
accumulates parameter gradients into each Param's grad buffer, and returns the
gradient with respect to the input.  A cache is only valid for the layer that
produced it.
"""

import numpy as np

from .errors import ConfigError, UsageError
from .numeric import relu, relu_grad, sigmoid
from .optim import Param

ACTIVATIONS = ("relu", "sigmoid", "identity")


def _to_batch(x, width, who):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[np.newaxis, :]
        squeeze = True
    elif x.ndim == 2:
        squeeze = False
    else:
        raise ConfigError(f"{who} expects a vector or a batch of rows, got ndim={x.ndim}")
    if x.shape[1] != width:
        raise ConfigError(f"{who} expects width {width}, got {x.shape[1]}")
    return x, squeeze


def _check_cache(layer, cache):
    if not isinstance(cache, dict) or cache.get("layer") is not layer:
        raise UsageError("backward called with a stale or foreign cache")


def _apply_activation(kind, z):
    if kind == "relu":
        return relu(z)
    if kind == "sigmoid":
        return sigmoid(z)
    return z


def _activation_grad(kind, z, a):
    # derivative in terms of pre-activation z and output a
    if kind == "relu":
        return relu_grad(z)
    if kind == "sigmoid":
        return a * (1.0 - a)
    return np.ones_like(z)


class PerceptronLayer:
    """Dense layer y = act(W x + b) with W of shape (K_out, K_in).

    Existing Param objects can be passed in to tie weights with another layer;
    gradients then accumulate into the shared buffers.
    """

    def __init__(self, name, k_out, k_in, rng=None, activation="relu", depth=0,
                 weight=None, bias=None):
        if activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation '{activation}'")
        if weight is None:
            if rng is None:
                raise ConfigError("either an rng or an explicit weight Param is required")
            weight = Param(f"{name}.W", rng.glorot(k_out, k_in), "weight", depth)
        if bias is None:
            bias = Param(f"{name}.b", np.zeros(k_out), "bias", depth)
        if weight.value.shape != (k_out, k_in) or bias.value.shape != (k_out,):
            raise ConfigError("weight/bias shapes do not match the layer dimensions")
        self.name = name
        self.k_out = k_out
        self.k_in = k_in
        self.activation = activation
        self.W = weight
        self.b = bias

    def forward(self, x):
        x, squeeze = _to_batch(x, self.k_in, self.name)
        z = x @ self.W.value.T + self.b.value
        a = _apply_activation(self.activation, z)
        cache = {"layer": self, "x": x, "z": z, "a": a, "squeeze": squeeze}
        return (a[0] if squeeze else a), cache

    def backward(self, dy, cache):
        _check_cache(self, cache)
        dy, _ = _to_batch(dy, self.k_out, self.name)
        dz = dy * _activation_grad(self.activation, cache["z"], cache["a"])
        self.W.grad += dz.T @ cache["x"]
        self.b.grad += dz.sum(axis=0)
        dx = dz @ self.W.value
        return dx[0] if cache["squeeze"] else dx

    def params(self):
        return [self.W, self.b]

    def param_count(self):
        return self.W.value.size + self.b.value.size


class ProjectionLayer:
    """Bias-free linear map from D input features to the hidden width K."""

    def __init__(self, name, k, d_input, rng, depth=0):
        self.name = name
        self.k = k
        self.d_input = d_input
        self.W = Param(f"{name}.W", rng.glorot(k, d_input), "weight", depth)

    def forward(self, x):
        x, squeeze = _to_batch(x, self.d_input, self.name)
        y = x @ self.W.value.T
        return (y[0] if squeeze else y), {"layer": self, "x": x, "squeeze": squeeze}

    def backward(self, dy, cache):
        _check_cache(self, cache)
        dy, _ = _to_batch(dy, self.k, self.name)
        self.W.grad += dy.T @ cache["x"]
        dx = dy @ self.W.value
        return dx[0] if cache["squeeze"] else dx

    def params(self):
        return [self.W]

    def param_count(self):
        return self.W.value.size


class TunnelLayer:
    """Square hidden layer with one constant gate per unit, all gates starting at 0.

    With every gate at 0 the layer is the exact identity, so a fresh stack of
    tunnel layers begins as a pass-through network and units are switched on
    by gradient pressure against the gate penalty.
    """

    def __init__(self, name, k, rng, activation="relu", depth=0):
        self.name = name
        self.k = k
        self.inner = PerceptronLayer(name, k, k, rng, activation, depth)
        self.g = Param(f"{name}.g", np.zeros(k), "tunnel-gate", depth)

    def forward(self, x):
        x, squeeze = _to_batch(x, self.k, self.name)
        a, inner_cache = self.inner.forward(x)
        g = self.g.value
        y = g * a + (1.0 - g) * x
        cache = {"layer": self, "x": x, "a": a, "inner": inner_cache, "squeeze": squeeze}
        return (y[0] if squeeze else y), cache

    def backward(self, dy, cache):
        _check_cache(self, cache)
        dy, _ = _to_batch(dy, self.k, self.name)
        self.g.grad += (dy * (cache["a"] - cache["x"])).sum(axis=0)
        dx_nonlinear = self.inner.backward(dy * self.g.value, cache["inner"])
        dx = dx_nonlinear + dy * (1.0 - self.g.value)
        return dx[0] if cache["squeeze"] else dx

    def params(self):
        return self.inner.params() + [self.g]

    def param_count(self):
        # K*K + K + K
        return self.inner.param_count() + self.g.value.size

    def soft_size(self):
        """Sum of gate values: the layer's differentiable unit count."""
        return float(self.g.value.sum())

    def hard_size(self):
        """Number of units with a strictly positive gate."""
        return int(np.count_nonzero(self.g.value > 0.0))


class HighwayLayer:
    """Square hidden layer whose per-unit gate is a learned function of the input.

    gate(x) = sigmoid(gateW x + gateB), so gates live strictly inside (0, 1).
    The gate bias starts at -2, biasing early gates toward the identity path
    without saturating them.
    """

    GATE_BIAS_INIT = -2.0

    def __init__(self, name, k, rng, activation="relu", depth=0):
        self.name = name
        self.k = k
        self.inner = PerceptronLayer(name, k, k, rng, activation, depth)
        self.gateW = Param(f"{name}.gateW", rng.glorot(k, k), "highway-gate-weight", depth)
        self.gateB = Param(f"{name}.gateB", np.full(k, self.GATE_BIAS_INIT), "highway-gate-bias", depth)

    def forward(self, x):
        x, squeeze = _to_batch(x, self.k, self.name)
        a, inner_cache = self.inner.forward(x)
        gate = sigmoid(x @ self.gateW.value.T + self.gateB.value)
        y = gate * a + (1.0 - gate) * x
        cache = {"layer": self, "x": x, "a": a, "gate": gate, "inner": inner_cache,
                 "squeeze": squeeze}
        return (y[0] if squeeze else y), cache

    def backward(self, dy, cache):
        _check_cache(self, cache)
        dy, _ = _to_batch(dy, self.k, self.name)
        x, a, gate = cache["x"], cache["a"], cache["gate"]
        dgate = dy * (a - x)
        ds = dgate * gate * (1.0 - gate)  # through the gate sigmoid
        self.gateW.grad += ds.T @ x
        self.gateB.grad += ds.sum(axis=0)
        dx_nonlinear = self.inner.backward(dy * gate, cache["inner"])
        dx = dx_nonlinear + dy * (1.0 - gate) + ds @ self.gateW.value
        return dx[0] if cache["squeeze"] else dx

    def params(self):
        return self.inner.params() + [self.gateW, self.gateB]

    def param_count(self):
        # K*K + K inner, K*K + K gate
        return self.inner.param_count() + self.gateW.value.size + self.gateB.value.size

    def mean_gates(self, x):
        """Per-unit gate activations averaged over the rows of x (dataset soft size)."""
        x, _ = _to_batch(x, self.k, self.name)
        gate = sigmoid(x @ self.gateW.value.T + self.gateB.value)
        return gate.mean(axis=0)


class InputDropout:
    """Inverted dropout on the input features; identity in evaluation mode."""

    def __init__(self, rate, rng):
        if not 0.0 <= rate < 1.0:
            raise ConfigError("dropout rate must lie in [0, 1)")
        self.rate = rate
        self.keep_probability = 1.0 - rate
        self.rng = rng

    def forward(self, x, train):
        x = np.asarray(x, dtype=np.float64)
        if not train or self.rate == 0.0:
            return x, {"layer": self, "mask": None}
        mask = self.rng.keep_mask(x.shape, self.keep_probability) / self.keep_probability
        return x * mask, {"layer": self, "mask": mask}

    def backward(self, dy, cache):
        _check_cache(self, cache)
        if cache["mask"] is None:
            return dy
        return dy * cache["mask"]

    def params(self):
        return []


def output_head_forward(kind, logits):
    """Map logits to probabilities for the three output head kinds."""
    logits = np.asarray(logits, dtype=np.float64)
    if kind in ("binary-sigmoid", "multilabel-sigmoid"):
        return sigmoid(logits)
    if kind == "softmax":
        from .numeric import softmax
        return softmax(logits, axis=-1)
    raise ConfigError(f"unknown output head kind '{kind}'")
