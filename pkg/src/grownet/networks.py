"""Whole-model assembly: projection + hidden block + output head.

Two families share one interface:

* LayeredNet -- a stack of hidden layers of one kind: ``tunnel``, ``highway``,
  or ``mlp-baseline`` (plain perceptron layers, the ungated control).
* BuddingNet -- a budding perceptron tree as the hidden block.

Both start with a bias-free linear projection from the input dimension to the
hidden width K and end with a linear output layer feeding the task's head
(sigmoid, softmax, or per-label sigmoid).  Learning-rate depth indices are
positional: the projection sits at 0 and hidden layer i of a stack at i+1,
while a budding tree's root is 0 and each tree level below increments it.
The output layer stays at depth 0: the per-depth decay exists to pace the
growth of constructive layers, and the head is not one.

forward(x, train) returns (probabilities, caches); backward consumes the
fused loss gradient with respect to the logits.
"""

import numpy as np

from .budding import BuddingTree
from .errors import ConfigError
from .layers import (HighwayLayer, InputDropout, PerceptronLayer,
                     ProjectionLayer, TunnelLayer, output_head_forward)

ARCHITECTURES = ("tunnel", "highway", "budding", "mlp-baseline")

HEAD_FOR_TASK = {
    "binary": "binary-sigmoid",
    "categorical": "softmax",
    "multilabel": "multilabel-sigmoid",
}


def _check_task(task_kind):
    if task_kind not in HEAD_FOR_TASK:
        raise ConfigError(f"unknown task kind '{task_kind}'")


class _NetBase:
    """Shared plumbing: dropout, projection, output head, parameter walks."""

    def __init__(self, d_input, k, n_outputs, task_kind, rng, dropout_p, activation):
        _check_task(task_kind)
        self.d_input = d_input
        self.k = k
        self.n_outputs = n_outputs
        self.task_kind = task_kind
        self.head_kind = HEAD_FOR_TASK[task_kind]
        self.activation = activation
        self.dropout = InputDropout(dropout_p, rng)
        self.projection = ProjectionLayer("proj", k, d_input, rng, depth=0)
        # output params are created after the hidden block so that rebuild
        # from a fixed seed reproduces the same draw order
        self._output = None

    def _make_output(self, rng):
        self._output = PerceptronLayer("out", self.n_outputs, self.k, rng,
                                       "identity", depth=0)

    @property
    def output(self):
        return self._output

    def predict_proba(self, x):
        probabilities, _ = self.forward(x, train=False)
        return probabilities

    def zero_grads(self):
        for p in self.params():
            p.zero_grad()

    def param_count(self):
        seen, total = set(), 0
        for p in self.params():
            if id(p) not in seen:
                seen.add(id(p))
                total += p.value.size
        return total


class LayeredNet(_NetBase):
    """Projection, a homogeneous stack of hidden layers, and a linear output."""

    def __init__(self, architecture, d_input, k, n_layers, n_outputs, task_kind,
                 rng, dropout_p=0.0, activation="relu"):
        if architecture not in ("tunnel", "highway", "mlp-baseline"):
            raise ConfigError(f"not a layered architecture: '{architecture}'")
        if n_layers < 1:
            raise ConfigError("a layered network needs at least one hidden layer")
        super().__init__(d_input, k, n_outputs, task_kind, rng, dropout_p, activation)
        self.architecture = architecture
        self.n_layers = n_layers
        self.hidden = []
        for i in range(n_layers):
            name = f"h{i}"
            if architecture == "tunnel":
                layer = TunnelLayer(name, k, rng, activation, depth=i + 1)
            elif architecture == "highway":
                layer = HighwayLayer(name, k, rng, activation, depth=i + 1)
            else:
                layer = PerceptronLayer(name, k, k, rng, activation, depth=i + 1)
            self.hidden.append(layer)
        self._make_output(rng)

    def forward(self, x, train=False):
        h, drop_cache = self.dropout.forward(x, train)
        h, proj_cache = self.projection.forward(h)
        hidden_caches = []
        for layer in self.hidden:
            h, cache = layer.forward(h)
            hidden_caches.append(cache)
        logits, out_cache = self.output.forward(h)
        probabilities = output_head_forward(self.head_kind, logits)
        caches = {"drop": drop_cache, "proj": proj_cache, "hidden": hidden_caches,
                  "out": out_cache}
        return probabilities, caches

    def backward(self, dlogits, caches, rng=None):
        dh = self.output.backward(dlogits, caches["out"])
        for layer, cache in zip(reversed(self.hidden), reversed(caches["hidden"])):
            dh = layer.backward(dh, cache)
        dx = self.projection.backward(dh, caches["proj"])
        return self.dropout.backward(dx, caches["drop"])

    def hidden_inputs(self, x):
        """Evaluation-mode inputs to each hidden layer, for gate averaging."""
        h, _ = self.projection.forward(np.asarray(x, dtype=np.float64))
        inputs = []
        for layer in self.hidden:
            inputs.append(h)
            h, _ = layer.forward(h)
        return inputs

    def params(self):
        out = self.projection.params()
        for layer in self.hidden:
            out.extend(layer.params())
        out.extend(self.output.params())
        return out


class BuddingNet(_NetBase):
    """Projection, a budding perceptron tree, and a linear output."""

    architecture = "budding"

    def __init__(self, d_input, k, n_outputs, task_kind, rng, max_depth=20,
                 dropout_p=0.0, activation="relu"):
        super().__init__(d_input, k, n_outputs, task_kind, rng, dropout_p, activation)
        self.tree = BuddingTree("root", k, rng, activation, max_depth)
        self._make_output(rng)

    def forward(self, x, train=False):
        h, drop_cache = self.dropout.forward(x, train)
        h, proj_cache = self.projection.forward(h)
        h, tree_cache = self.tree.forward(h)
        logits, out_cache = self.output.forward(h)
        probabilities = output_head_forward(self.head_kind, logits)
        caches = {"drop": drop_cache, "proj": proj_cache, "tree": tree_cache,
                  "out": out_cache}
        return probabilities, caches

    def backward(self, dlogits, caches, rng=None):
        dh = self.output.backward(dlogits, caches["out"])
        dh = self.tree.backward(dh, caches["tree"], rng)
        dx = self.projection.backward(dh, caches["proj"])
        return self.dropout.backward(dx, caches["drop"])

    def grow(self, rng):
        return self.tree.grow(rng)

    def params(self):
        return self.projection.params() + self.tree.params() + self.output.params()
