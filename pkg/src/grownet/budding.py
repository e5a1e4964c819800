"""Budding perceptron trees.

Each node m holds a square perceptron layer and a leafness scalar gamma in
[0, 1] and computes

    y_m(x) = (1 - gamma_m) * y_right(y_left(x)) + gamma_m * act(W_m x + b_m)

A node with gamma == 1 is evaluated as a plain perceptron layer and its
subtree (materialized or not) is skipped entirely, so the recursion always
terminates.  The tree starts as a single node with gamma = 1 and grows by
materializing children the first time an optimizer step pulls gamma below 1:
the left child shares (ties) the parent's W and b, so the fresh composition
y_right(y_left(x)) starts from the parent's own feature map, and the right
child is freshly initialized.

Gradient at the leaf boundary: dgamma at gamma == 1 needs the would-be child
output y_right(y_left(x)).  During a training backward pass a pure leaf
evaluates one-shot "phantom" children (tied left, fresh right) kept in a side
slot; they receive no gradient themselves (their path weight 1 - gamma is
zero) and are adopted as real children by maybe_grow if gamma then drops.
Nodes whose gamma returned to 1 keep their stale children in memory so the
subtree can reactivate without losing learned weights; prune_for_export
removes everything behind a gamma == 1 node for deployment.
"""

import numpy as np

from .errors import ConfigError, UsageError
from .layers import PerceptronLayer, _to_batch
from .optim import Param


class BuddingNode:
    """One tree node: a K by K perceptron plus its leafness gamma."""

    def __init__(self, name, k, rng=None, activation="relu", depth=0,
                 weight=None, bias=None, left_tied=False):
        self.name = name
        self.k = k
        self.activation = activation
        self.depth = depth
        self.left_tied = left_tied
        self.inner = PerceptronLayer(name, k, k, rng, activation, depth,
                                     weight=weight, bias=bias)
        self.gamma = Param(f"{name}.gamma", np.ones(1), "gamma", depth)
        self.left = None
        self.right = None
        self.phantom = None  # (left, right) candidates awaiting adoption

    @property
    def W(self):
        return self.inner.W

    @property
    def b(self):
        return self.inner.b

    def is_pure_leaf(self):
        return self.left is None and float(self.gamma.value[0]) == 1.0

    def _make_children(self, rng):
        left = BuddingNode(f"{self.name}.L", self.k, activation=self.activation,
                           depth=self.depth + 1, weight=self.W, bias=self.b,
                           left_tied=True)
        right = BuddingNode(f"{self.name}.R", self.k, rng, self.activation,
                            depth=self.depth + 1)
        return left, right

    # -- forward / backward ------------------------------------------------

    def forward(self, x):
        x, squeeze = _to_batch(x, self.k, self.name)
        a, inner_cache = self.inner.forward(x)
        gamma = float(self.gamma.value[0])
        cache = {"node": self, "x": x, "a": a, "inner": inner_cache,
                 "squeeze": squeeze, "sub": None}
        if gamma == 1.0 or self.left is None:
            y = a
        else:
            y_left, left_cache = self.left.forward(x)
            y_sub, right_cache = self.right.forward(y_left)
            cache["sub"] = (left_cache, right_cache, y_sub)
            y = (1.0 - gamma) * y_sub + gamma * a
        return (y[0] if squeeze else y), cache

    def backward(self, dy, cache, rng=None):
        """Accumulate gradients for every evaluated node; returns dx.

        When rng is given, a pure leaf computes dgamma against phantom
        children (created on first need from rng); without rng, dgamma at a
        childless leaf is zero, which keeps evaluation-only use side-effect
        free.
        """
        if not isinstance(cache, dict) or cache.get("node") is not self:
            raise UsageError("backward called with a stale or foreign cache")
        dy, _ = _to_batch(dy, self.k, self.name)
        x, a = cache["x"], cache["a"]
        gamma = float(self.gamma.value[0])
        if cache["sub"] is not None:
            left_cache, right_cache, y_sub = cache["sub"]
            self.gamma.grad[0] += float((dy * (a - y_sub)).sum())
            d_sub = dy * (1.0 - gamma)
            d_left = self.right.backward(d_sub, right_cache, rng)
            dx_sub = self.left.backward(d_left, left_cache, rng)
            dx_own = self.inner.backward(dy * gamma, cache["inner"])
            dx = dx_own + dx_sub
        else:
            # leaf path: the full upstream gradient flows through the perceptron
            y_sub = self._boundary_child_output(x, a, rng)
            if y_sub is not None:
                self.gamma.grad[0] += float((dy * (a - y_sub)).sum())
            dx = self.inner.backward(dy, cache["inner"])
        return dx[0] if cache["squeeze"] else dx

    def _boundary_child_output(self, x, a, rng):
        """Would-be child output for dgamma at gamma == 1, or None when unavailable.

        Stale real children are evaluated directly (no gradient reaches them;
        their path weight is zero).  A childless leaf uses its phantom pair,
        creating it from rng on first need; the phantom left child is tied and
        a fresh leaf, so it maps x to exactly a and only the right half needs
        evaluating.
        """
        if self.left is not None:
            y_left, _ = self.left.forward(x)
            y_sub, _ = self.right.forward(y_left)
            return y_sub
        if rng is None:
            return None
        if self.phantom is None:
            self.phantom = self._make_children(rng)
        y_sub, _ = self.phantom[1].forward(a)
        return y_sub

    # -- growth ------------------------------------------------------------

    def maybe_grow(self, rng, max_depth):
        """Materialize children after gamma left 1; returns whether growth occurred.

        At max depth growth is refused and gamma is clamped back to 1 (the
        caller counts these refusals).  Raises ConfigError if rng is missing
        when fresh children are needed.
        """
        if float(self.gamma.value[0]) >= 1.0 or self.left is not None:
            return False
        if self.depth + 1 > max_depth:
            self.gamma.value[0] = 1.0
            return False
        if self.phantom is not None:
            self.left, self.right = self.phantom
            self.phantom = None
        else:
            if rng is None:
                raise ConfigError("growth requires an rng to initialize the right child")
            self.left, self.right = self._make_children(rng)
        return True

    # -- size measures -----------------------------------------------------

    def soft_size(self):
        gamma = float(self.gamma.value[0])
        if gamma == 1.0 or self.left is None:
            return 1.0
        return 1.0 + (1.0 - gamma) * (self.left.soft_size() + self.right.soft_size())

    def hard_size(self):
        if float(self.gamma.value[0]) == 1.0 or self.left is None:
            return 1
        return 1 + self.left.hard_size() + self.right.hard_size()

    # -- traversal ---------------------------------------------------------

    def walk(self):
        """All materialized nodes, parents before children (pre-order)."""
        yield self
        if self.left is not None:
            yield from self.left.walk()
            yield from self.right.walk()

    def params(self):
        out = []
        for node in self.walk():
            out.extend([node.W, node.b, node.gamma])
        return out


class BuddingTree:
    """A budding perceptron: root node plus growth bookkeeping."""

    def __init__(self, name, k, rng, activation="relu", max_depth=20):
        if max_depth < 0:
            raise ConfigError("max_depth must be non-negative")
        self.name = name
        self.k = k
        self.max_depth = max_depth
        self.activation = activation
        self.root = BuddingNode(name, k, rng, activation, depth=0)
        self.depth_refusals = 0

    def forward(self, x):
        return self.root.forward(x)

    def backward(self, dy, cache, rng=None):
        return self.root.backward(dy, cache, rng)

    def grow(self, rng):
        """Run maybe_grow over every node; returns the number of new child pairs."""
        grew = 0
        for node in list(self.root.walk()):
            gamma = float(node.gamma.value[0])
            if gamma < 1.0 and node.left is None and node.depth + 1 > self.max_depth:
                node.maybe_grow(rng, self.max_depth)
                self.depth_refusals += 1
            elif node.maybe_grow(rng, self.max_depth):
                grew += 1
        return grew

    def soft_size(self):
        return self.root.soft_size()

    def hard_size(self):
        return self.root.hard_size()

    def params(self):
        return self.root.params()

    def node_count(self):
        return sum(1 for _ in self.root.walk())

    def prune_for_export(self):
        """Copy of this tree with every subtree behind gamma == 1 removed.

        Predictions are identical: dropped subtrees are never on the compute
        path.  Parameter values are copied, with left-child tying preserved.
        """
        pruned = BuddingTree.__new__(BuddingTree)
        pruned.name = self.name
        pruned.k = self.k
        pruned.max_depth = self.max_depth
        pruned.activation = self.activation
        pruned.depth_refusals = self.depth_refusals
        pruned.root = _clone_active(self.root, None)
        return pruned


def _clone_active(node, parent_clone):
    if node.left_tied and parent_clone is not None:
        weight, bias = parent_clone.W, parent_clone.b
    else:
        weight = Param(node.W.name, node.W.value.copy(), "weight", node.W.depth)
        bias = Param(node.b.name, node.b.value.copy(), "bias", node.b.depth)
    clone = BuddingNode(node.name, node.k, activation=node.activation,
                        depth=node.depth, weight=weight, bias=bias,
                        left_tied=node.left_tied)
    clone.gamma.value[0] = node.gamma.value[0]
    if node.left is not None and float(node.gamma.value[0]) < 1.0:
        clone.left = _clone_active(node.left, clone)
        clone.right = _clone_active(node.right, clone)
    return clone
