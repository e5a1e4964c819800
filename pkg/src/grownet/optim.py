"""Adam optimizer with parameter roles, structural penalties, and projection.

Parameters are grouped by role:

* ``weight``              -- dense weight matrices; the only role that gets L2 decay
* ``bias``                -- layer biases
* ``tunnel-gate``         -- per-unit gates g in [0, 1]; L1-penalized toward 0
* ``highway-gate-weight`` -- input-dependent gate weights; no structural penalty
* ``highway-gate-bias``   -- input-dependent gate biases; no structural penalty
* ``gamma``               -- per-node leafness in [0, 1]; L1-penalized toward 1

Structural parameters (tunnel-gate, gamma) are clamped back to [0, 1] after
every step, so the constant L1 subgradient is absorbed at the boundary and
inactive structure stays inactive until the data gradient beats the penalty.

Each parameter's learning rate is scaled by (3/4)**depth when depth decay is
enabled, so shallower structure adapts faster than deeper structure.
"""

import numpy as np

from .errors import ConfigError, NumericalError

STRUCTURAL_ROLES = ("tunnel-gate", "gamma")
ROLES = ("weight", "bias", "tunnel-gate", "highway-gate-weight", "highway-gate-bias", "gamma")

DEPTH_DECAY_BASE = 0.75


class Param:
    """A named parameter tensor with its gradient buffer and optimizer group info.

    Weight tying is expressed by sharing the Param object itself: every user
    accumulates into the same ``grad`` buffer, and the optimizer updates the
    shared ``value`` once per step.
    """

    __slots__ = ("name", "value", "grad", "role", "depth")

    def __init__(self, name, value, role, depth=0):
        if role not in ROLES:
            raise ConfigError(f"unknown parameter role '{role}'")
        self.name = name
        self.value = np.ascontiguousarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.role = role
        self.depth = int(depth)

    def zero_grad(self):
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Param({self.name!r}, shape={self.value.shape}, role={self.role}, depth={self.depth})"


class AdamState:
    """First/second moment accumulators for one parameter."""

    __slots__ = ("m", "v", "t", "beta1", "beta2", "epsilon")

    def __init__(self, shape, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon


def adam_step(state, p, grad, lr):
    """One Adam update with bias correction, in place on p.

    m <- b1*m + (1-b1)*g ; v <- b2*v + (1-b2)*g^2 ;
    p <- p - lr * m_hat / (sqrt(v_hat) + eps).
    """
    if lr <= 0:
        raise ConfigError("learning rate must be positive")
    if grad.shape != p.shape:
        raise ConfigError(f"gradient shape {grad.shape} does not match parameter {p.shape}")
    if not np.all(np.isfinite(grad)):
        raise NumericalError("non-finite gradient")
    state.t += 1
    state.m += (1.0 - state.beta1) * (grad - state.m)
    state.v += (1.0 - state.beta2) * (grad * grad - state.v)
    m_hat = state.m / (1.0 - state.beta1**state.t)
    v_hat = state.v / (1.0 - state.beta2**state.t)
    p -= lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return p, state


def structural_penalty(role, lam):
    """Constant L1 subgradient for a structural parameter.

    +lam for tunnel gates (objective term lam * sum g) and -lam for gamma
    (objective term lam * sum (1 - gamma)); zero for every other role, in
    particular highway gates carry no structural penalty.
    """
    if lam < 0:
        raise ConfigError("structural penalty must be non-negative")
    if role == "tunnel-gate":
        return lam
    if role == "gamma":
        return -lam
    return 0.0


def l2_decay(value, grad, coeff, role="weight"):
    """Add the L2 term 2*coeff*value to grad, for weight matrices only."""
    if coeff < 0:
        raise ConfigError("L2 coefficient must be non-negative")
    if role != "weight" or coeff == 0.0:
        return grad
    return grad + 2.0 * coeff * value


def project_unit_interval(value):
    """Clamp to [0, 1] (returns the input array, modified in place)."""
    np.clip(value, 0.0, 1.0, out=value)
    return value


class Adam:
    """Adam over a (possibly growing) set of Params.

    ``param_source`` is a callable returning the current parameter list each
    step; parameters created mid-training (budding growth) get fresh moment
    state keyed by their name.  Duplicate mentions of a tied Param are
    collapsed by object identity, so a shared tensor is updated exactly once.
    """

    def __init__(self, param_source, base_lr, lambda_l1=0.0, l2_coeff=0.0,
                 depth_decay=True, beta1=0.9, beta2=0.999, epsilon=1e-8):
        if base_lr <= 0:
            raise ConfigError("base learning rate must be positive")
        self.param_source = param_source
        self.base_lr = base_lr
        self.lambda_l1 = lambda_l1
        self.l2_coeff = l2_coeff
        self.depth_decay = depth_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.states = {}
        self.grew_events = 0
        self.pruned_events = 0

    def lr_scale(self, depth):
        return DEPTH_DECAY_BASE**depth if self.depth_decay else 1.0

    def _unique_params(self):
        seen = set()
        out = []
        for p in self.param_source():
            if id(p) not in seen:
                seen.add(id(p))
                out.append(p)
        return out

    def step(self, lr_factor=1.0):
        """Apply one update to every parameter; lr_factor is the schedule stage factor."""
        for p in self._unique_params():
            grad = p.grad
            if not np.all(np.isfinite(grad)):
                raise NumericalError(
                    f"non-finite gradient in parameter group '{p.name}' (role {p.role})"
                )
            if p.role == "weight" and self.l2_coeff:
                grad = l2_decay(p.value, grad, self.l2_coeff, p.role)
            pen = structural_penalty(p.role, self.lambda_l1)
            if pen:
                grad = grad + pen
            state = self.states.get(p.name)
            if state is None:
                state = AdamState(p.value.shape, self.beta1, self.beta2, self.epsilon)
                self.states[p.name] = state
            structural = p.role in STRUCTURAL_ROLES
            if structural:
                before = p.value.copy()
            adam_step(state, p.value, grad, self.base_lr * lr_factor * self.lr_scale(p.depth))
            if structural:
                project_unit_interval(p.value)
                self._count_events(p.role, before, p.value)

    def _count_events(self, role, before, after):
        if role == "tunnel-gate":
            self.grew_events += int(np.count_nonzero((before == 0.0) & (after > 0.0)))
            self.pruned_events += int(np.count_nonzero((before > 0.0) & (after == 0.0)))
        else:  # gamma: leaving 1 grows the tree, returning to 1 prunes it
            self.grew_events += int(np.count_nonzero((before == 1.0) & (after < 1.0)))
            self.pruned_events += int(np.count_nonzero((before < 1.0) & (after == 1.0)))

    def take_events(self):
        """Return (grew, pruned) counts accumulated since the last call and reset them."""
        ev = (self.grew_events, self.pruned_events)
        self.grew_events = 0
        self.pruned_events = 0
        return ev
