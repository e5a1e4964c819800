import numpy as np
import pytest

from grownet.errors import ConfigError, NumericalError
from grownet.optim import (Adam, AdamState, Param, adam_step, l2_decay,
                           project_unit_interval, structural_penalty)


# -- reference Adam in the textbook form --------------------------------------

def reference_adam(p0, grads, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    p = p0.copy()
    m = np.zeros_like(p)
    v = np.zeros_like(p)
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        p = p - lr * m_hat / (np.sqrt(v_hat) + eps)
    return p


def test_adam_step_matches_textbook_form_over_many_steps():
    rng = np.random.RandomState(0)
    p = rng.randn(5)
    grads = [rng.randn(5) for _ in range(25)]
    expected = reference_adam(p, grads, lr=0.01)
    state = AdamState(p.shape)
    got = p.copy()
    for g in grads:
        adam_step(state, got, g, lr=0.01)
    assert np.allclose(got, expected, rtol=1e-10, atol=0)
    assert state.t == 25


def test_adam_first_step_is_roughly_signed_lr():
    # with zero moments the first update is lr * g / (|g| + eps)
    p = np.array([1.0, 1.0])
    state = AdamState(p.shape)
    adam_step(state, p, np.array([0.5, -2.0]), lr=0.001)
    assert np.allclose(p, [1.0 - 0.001, 1.0 + 0.001], atol=1e-8)


def test_adam_step_errors():
    p = np.zeros(2)
    with pytest.raises(ConfigError):
        adam_step(AdamState(p.shape), p, np.zeros(2), lr=0.0)
    with pytest.raises(ConfigError):
        adam_step(AdamState(p.shape), p, np.zeros(3), lr=0.1)
    with pytest.raises(NumericalError):
        adam_step(AdamState(p.shape), p, np.array([np.nan, 0.0]), lr=0.1)


# -- penalty / decay / projection pieces ---------------------------------------

def test_structural_penalty_signs():
    lam = 0.001
    assert structural_penalty("tunnel-gate", lam) == lam
    assert structural_penalty("gamma", lam) == -lam
    assert structural_penalty("weight", lam) == 0.0
    assert structural_penalty("bias", lam) == 0.0
    assert structural_penalty("highway-gate-weight", lam) == 0.0
    assert structural_penalty("highway-gate-bias", lam) == 0.0
    with pytest.raises(ConfigError):
        structural_penalty("tunnel-gate", -0.1)


def test_l2_decay_applies_to_weights_only():
    value = np.array([2.0, -4.0])
    grad = np.array([0.1, 0.1])
    out = l2_decay(value, grad, 1e-5, "weight")
    assert np.allclose(out, grad + 2e-5 * value, atol=1e-18)
    assert np.array_equal(l2_decay(value, grad, 1e-5, "bias"), grad)
    with pytest.raises(ConfigError):
        l2_decay(value, grad, -1.0, "weight")


def test_project_unit_interval_clamps_in_place():
    v = np.array([-0.5, 0.25, 1.75])
    out = project_unit_interval(v)
    assert out is v
    assert np.array_equal(v, np.array([0.0, 0.25, 1.0]))


def test_param_validation_and_grad_buffer():
    p = Param("w", np.ones((2, 2)), "weight", depth=3)
    assert p.grad.shape == (2, 2)
    assert np.all(p.grad == 0.0)
    p.grad += 1.0
    p.zero_grad()
    assert np.all(p.grad == 0.0)
    assert p.depth == 3
    with pytest.raises(ConfigError):
        Param("x", np.ones(2), "nonsense")


# -- the Adam driver over parameter collections --------------------------------

def test_adam_rejects_bad_lr():
    with pytest.raises(ConfigError):
        Adam(lambda: [], base_lr=0.0)


def test_tied_param_updated_once():
    # the same Param listed twice must behave exactly like one mention
    tied = Param("shared", np.array([1.0, 2.0]), "weight")
    tied.grad[:] = [0.3, -0.7]
    opt = Adam(lambda: [tied, tied], base_lr=0.01, depth_decay=False)
    opt.step()

    single = Param("shared", np.array([1.0, 2.0]), "weight")
    single.grad[:] = [0.3, -0.7]
    opt2 = Adam(lambda: [single], base_lr=0.01, depth_decay=False)
    opt2.step()
    assert np.array_equal(tied.value, single.value)


def test_depth_decay_scales_step_size():
    shallow = Param("a", np.zeros(1), "weight", depth=0)
    deep = Param("b", np.zeros(1), "weight", depth=2)
    shallow.grad[:] = 1.0
    deep.grad[:] = 1.0
    opt = Adam(lambda: [shallow, deep], base_lr=0.01)
    opt.step()
    # identical moments, so the update ratio is exactly the lr ratio
    ratio = deep.value[0] / shallow.value[0]
    assert abs(ratio - 0.75**2) < 1e-12


def test_depth_decay_disabled_gives_equal_steps():
    a = Param("a", np.zeros(1), "weight", depth=0)
    b = Param("b", np.zeros(1), "weight", depth=5)
    a.grad[:] = 1.0
    b.grad[:] = 1.0
    Adam(lambda: [a, b], base_lr=0.01, depth_decay=False).step()
    assert a.value[0] == b.value[0]


def test_lr_factor_scales_step():
    a = Param("a", np.zeros(1), "weight")
    b = Param("b", np.zeros(1), "weight")
    a.grad[:] = 1.0
    b.grad[:] = 1.0
    Adam(lambda: [a], base_lr=0.01, depth_decay=False).step(lr_factor=1.0)
    Adam(lambda: [b], base_lr=0.01, depth_decay=False).step(lr_factor=0.3)
    assert abs(b.value[0] / a.value[0] - 0.3) < 1e-12


def test_l2_and_penalty_wiring():
    # weight with zero data gradient still moves under L2
    w = Param("w", np.array([10.0]), "weight")
    opt = Adam(lambda: [w], base_lr=0.01, l2_coeff=1e-2, depth_decay=False)
    opt.step()
    assert w.value[0] < 10.0
    # bias with zero gradient and L2 on: no movement
    b = Param("b", np.array([10.0]), "bias")
    Adam(lambda: [b], base_lr=0.01, l2_coeff=1e-2, depth_decay=False).step()
    assert b.value[0] == 10.0


def test_gate_dead_zone_under_penalty():
    # data gradient weaker than lambda: the gate must stay parked at 0
    g = Param("g", np.zeros(3), "tunnel-gate")
    opt = Adam(lambda: [g], base_lr=0.003, lambda_l1=0.001, depth_decay=False)
    for _ in range(50):
        g.zero_grad()
        g.grad[:] = -0.0005  # pull toward growth, but below the penalty
        opt.step()
    assert np.array_equal(g.value, np.zeros(3))
    assert opt.take_events() == (0, 0)


def test_gate_grows_when_data_gradient_beats_penalty():
    g = Param("g", np.zeros(1), "tunnel-gate")
    opt = Adam(lambda: [g], base_lr=0.003, lambda_l1=0.001, depth_decay=False)
    g.grad[:] = -0.01
    opt.step()
    assert g.value[0] > 0.0
    assert g.value[0] <= 1.0
    grew, pruned = opt.take_events()
    assert (grew, pruned) == (1, 0)
    # second call starts from a clean slate
    assert opt.take_events() == (0, 0)


def test_gate_prune_event_on_return_to_zero():
    g = Param("g", np.array([0.002]), "tunnel-gate")
    opt = Adam(lambda: [g], base_lr=0.003, lambda_l1=0.001, depth_decay=False)
    g.grad[:] = 0.05  # push down hard; projection lands exactly on 0
    opt.step()
    assert g.value[0] == 0.0
    assert opt.take_events() == (0, 1)


def test_gamma_events_mirror_gate_events():
    gamma = Param("gamma", np.ones(1), "gamma")
    opt = Adam(lambda: [gamma], base_lr=0.001, lambda_l1=0.001, depth_decay=False)
    # penalty alone pushes gamma up; projection holds it at 1, no event
    opt.step()
    assert gamma.value[0] == 1.0
    assert opt.take_events() == (0, 0)
    # a data gradient above lambda drags gamma off 1: a grow event
    gamma.zero_grad()
    gamma.grad[:] = 0.01
    opt.step()
    assert gamma.value[0] < 1.0
    assert opt.take_events() == (1, 0)
    # sustained reverse gradient walks it back to the ceiling: a prune event
    for _ in range(10):
        gamma.zero_grad()
        gamma.grad[:] = -10.0
        opt.step()
    assert gamma.value[0] == 1.0
    assert opt.take_events() == (0, 1)


def test_structural_values_stay_in_unit_interval():
    g = Param("g", np.array([0.5]), "tunnel-gate")
    opt = Adam(lambda: [g], base_lr=0.5, lambda_l1=0.0, depth_decay=False)
    rng = np.random.RandomState(3)
    for _ in range(100):
        g.zero_grad()
        g.grad[:] = rng.randn()
        opt.step()
        assert 0.0 <= g.value[0] <= 1.0


def test_param_added_mid_run_gets_fresh_state():
    params = [Param("first", np.zeros(1), "weight")]
    opt = Adam(lambda: params, base_lr=0.01, depth_decay=False)
    params[0].grad[:] = 1.0
    opt.step()
    params.append(Param("second", np.zeros(1), "weight"))
    params[0].zero_grad()
    params[0].grad[:] = 1.0
    params[1].grad[:] = 1.0
    opt.step()
    assert opt.states["first"].t == 2
    assert opt.states["second"].t == 1
    assert params[1].value[0] != 0.0


def test_step_flags_non_finite_gradient():
    p = Param("w", np.zeros(1), "weight")
    p.grad[:] = np.inf
    with pytest.raises(NumericalError):
        Adam(lambda: [p], base_lr=0.01).step()
