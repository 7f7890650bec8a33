"""Adam optimizer behavior against hand-derived first-step values."""

import numpy as np
import pytest

from fairac.autodiff import parameter
from fairac.optim import Adam, grad_check


def test_adam_first_step_magnitude():
    # With bias correction the first step is lr * g/|g| regardless of scale:
    # m_hat = g, v_hat = g^2, so the update is lr * sign(g) up to eps.
    p = parameter(np.array([1.0, -2.0]))
    p.grad = np.array([0.3, -70.0])
    Adam([p], lr=0.01).step()
    assert np.allclose(p.data, [1.0 - 0.01, -2.0 + 0.01], atol=1e-6)


def test_adam_decoupled_weight_decay_zero_grad():
    # with zero gradient only the decay term moves the parameter
    p = parameter(np.array([10.0]))
    p.grad = np.zeros(1)
    Adam([p], lr=0.1, weight_decay=0.01).step()
    assert np.allclose(p.data, [10.0 * (1 - 0.1 * 0.01)])


def test_adam_decay_before_adaptive_step():
    p = parameter(np.array([10.0]))
    p.grad = np.array([1.0])
    opt = Adam([p], lr=0.1, weight_decay=0.5)
    opt.step()
    # decay first: 10 -> 9.5, then ~ -lr * 1 step
    expected = 10.0 * (1 - 0.1 * 0.5) - 0.1 * (1.0 / (1.0 + 1e-8))
    assert np.allclose(p.data, [expected], atol=1e-9)


def test_adam_two_steps_match_reference():
    # independent scalar reference implementation
    lr, b1, b2, eps = 0.05, 0.9, 0.999, 1e-8
    grads = [0.7, -1.3]
    ref = 2.0
    m = v = 0.0
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        ref -= lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)

    p = parameter(np.array([2.0]))
    opt = Adam([p], lr=lr)
    for g in grads:
        p.grad = np.array([g])
        opt.step()
    assert np.allclose(p.data, [ref], atol=1e-12)


def test_adam_clears_grads_and_checks_shapes():
    p = parameter(np.zeros(2))
    p.grad = np.zeros(2)
    opt = Adam([p])
    opt.step()
    assert p.grad is None
    p.grad = np.zeros(3)
    with pytest.raises(ValueError):
        opt.step()


def test_adam_missing_grad_treated_as_zero():
    p = parameter(np.array([1.0]))
    Adam([p], lr=0.1).step()
    assert np.allclose(p.data, [1.0])


def test_grad_check_catches_wrong_gradient():
    # a loss whose autodiff path is deliberately broken via detach
    p = parameter(np.array([1.0, 2.0]))

    def bad_loss():
        return (p.detach() * p).sum()  # analytic grad p, true grad 2p

    res = grad_check(bad_loss, [p], rtol=1e-4)
    assert not res["passed"]


def test_grad_check_reports_structure(rng):
    p = parameter(rng.standard_normal(4))
    res = grad_check(lambda: (p * p).sum(), [p])
    assert res["passed"]
    assert len(res["per_param"]) == 1
    assert res["max_rel_error"] < res["rtol"]
