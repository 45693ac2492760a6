from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fedgame.core import Norm, NonFiniteGradient
from fedgame.estimation import RegressionModel
from fedgame.game import (
    RewardParams,
    concentration,
    policy_delta,
    project_policy,
    reward,
    reward_gradient,
    step,
    update_policy,
)

P = RewardParams(2.5, 1e-8)


def model(weights, target=0, b=0.5):
    return RegressionModel(target, b, np.asarray(weights, dtype=float))


def decimal_reward(b, w, c_in, c_out, gamma, eps, prec=40):
    """Reference reward in arbitrary precision."""
    getcontext().prec = prec
    total = Decimal(b)
    for wj, ij, oj in zip(w, c_in, c_out):
        base = max(Decimal(wj), Decimal(0)) * Decimal(ij)
        if base > 0:
            total += (base ** Decimal(gamma)) / (Decimal(oj) + Decimal(eps))
    return total


def central_difference(m, c_in, c_out, params, h=1e-7):
    g = np.zeros(len(c_out))
    for j in range(len(c_out)):
        if j == m.target:
            continue
        up, down = np.array(c_out, float), np.array(c_out, float)
        up[j] += h
        down[j] -= h
        g[j] = (reward(m, c_in, up, params) - reward(m, c_in, down, params)) / (2 * h)
    return g


def test_reward_worked_point():
    m = model([0, 0.2, 0])
    r = reward(m, [0, 0.5, 0], [0, 0.1, 0], P)
    ref = decimal_reward(0.5, [0, 0.2, 0], [0, 0.5, 0], [0, 0.1, 0], 2.5, 1e-8)
    assert r == pytest.approx(0.53162278, abs=1e-8)
    assert abs(Decimal(r) - ref) < Decimal("1e-12")


def test_reward_matches_decimal_reference():
    rng = np.random.default_rng(3)
    for _ in range(50):
        w, c_in, c_out = rng.uniform(0.05, 1, (3, 3))
        w[0] = c_in[0] = c_out[0] = 0.0
        ref = decimal_reward(0.5, w, c_in, c_out, 2.5, 1e-8)
        assert abs(Decimal(reward(model(w), c_in, c_out, P)) - ref) < Decimal("1e-12") * (1 + abs(ref))


def test_reward_zero_incoming_is_intercept():
    assert reward(model([0, 0.4, 0.9]), np.zeros(3), [0, 0.3, 0.2], P) == 0.5


def test_negative_weights_are_floored():
    assert reward(model([0, -0.3, -0.3]), [0, 0.5, 0.5], [0, 0.1, 0.1], P) == 0.5
    assert not reward_gradient(model([0, -0.3, -0.3]), [0, 0.5, 0.5], [0, 0.1, 0.1], P).any()


def test_gradient_worked_point():
    g = reward_gradient(model([0, 0.2, 0]), [0, 0.5, 0], [0, 0.1, 0], P)
    assert g[1] == pytest.approx(-0.31622771, abs=1e-8)
    # epsilon shifts the derivative by less than 1e-6
    assert abs(g[1] - (-(0.1**2.5) / 0.1**2)) < 1e-6
    fd = central_difference(model([0, 0.2, 0]), [0, 0.5, 0], [0, 0.1, 0], P)
    assert g[1] == pytest.approx(fd[1], rel=1e-5)


def test_gradient_zero_incoming():
    assert not reward_gradient(model([0, 1, 1]), np.zeros(3), [0, 0.2, 0.2], P).any()


def decimal_central_difference(w, c_in, c_out, gamma, eps, h=Decimal("1e-7")):
    g = []
    for j in range(len(c_out)):
        up = [Decimal(x) for x in c_out]
        down = list(up)
        up[j] += h
        down[j] -= h
        g.append(float((decimal_reward(0.5, w, c_in, up, gamma, eps) - decimal_reward(0.5, w, c_in, down, gamma, eps))
                       / (2 * h)))
    return np.array(g)


def test_gradient_matches_finite_differences():
    # Differences are taken in 40-digit arithmetic: in float64 the
    # cancellation error at h=1e-7 swamps the smallest gradients.
    rng = np.random.default_rng(2024)
    for _ in range(100):
        w, c_in, c_out = rng.uniform(0.05, 1, (3, 3))
        w[0] = c_in[0] = c_out[0] = 0.0
        g = reward_gradient(model(w), c_in, c_out, P)
        fd = decimal_central_difference(w, c_in, c_out, 2.5, 1e-8)
        assert np.all(np.abs(g[1:] - fd[1:]) <= 1e-5 * np.abs(fd[1:]))


def test_gradient_matches_float_differences_when_well_conditioned():
    rng = np.random.default_rng(5)
    for _ in range(50):
        w, c_in = rng.uniform(0.5, 1, (2, 3))
        c_out = rng.uniform(0.05, 0.3, 3)
        gamma = rng.uniform(1.0, 4.0)
        params = RewardParams(gamma, 1e-8)
        g = reward_gradient(model(w), c_in, c_out, params)
        fd = central_difference(model(w), c_in, c_out, params)
        assert np.allclose(g[1:], fd[1:], rtol=1e-5, atol=0)


@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.lists(st.floats(0, 1), min_size=3, max_size=3),
       st.lists(st.floats(0, 1), min_size=3, max_size=3), st.floats(0.5, 4))
def test_gradient_never_positive(w, c_in, c_out, gamma):
    g = reward_gradient(model(w), c_in, c_out, RewardParams(gamma, 1e-8))
    assert np.all(g <= 0)


def test_update_worked_point():
    new = update_policy([0, 0.1, 0.1], [0, -0.31622777, -0.1], 0.01)
    assert new == pytest.approx([0, 0.10316228, 0.101], abs=1e-8)


def test_update_fixed_points():
    p = np.array([0, 0.2, 0.3])
    assert np.array_equal(update_policy(p, np.zeros(3), 0.01), p)
    assert np.array_equal(update_policy(p, [0, -1.0, -2.0], 0.0), p)


def test_update_rejects_non_finite():
    with pytest.raises(NonFiniteGradient):
        update_policy([0, 0.1, 0.1], [0, -np.inf, 0], 0.01)


@pytest.mark.parametrize("raw,expected", [
    ([0, 0.8, 0.6], [0, 0.8 / 1.4, 0.6 / 1.4]),
    ([0, 0.3, 0.4], [0, 0.3, 0.4]),
    ([0, -0.2, 0.5], [0, 0, 0.5]),
])
def test_projection_examples(raw, expected):
    assert project_policy(raw, 1.0) == pytest.approx(expected, abs=1e-12)


def test_projection_worked_values():
    assert project_policy([0, 0.8, 0.6], 1.0) == pytest.approx([0, 0.57142857, 0.42857143], abs=1e-8)


def check_projection(raw, budget):
    out = project_policy(raw, budget)
    assert np.all(out >= 0)
    assert out.sum() <= budget + 1e-12
    assert np.array_equal(project_policy(out, budget), out)
    clamped = np.maximum(raw, 0)
    if clamped.sum() > budget:
        assert out.sum() == budget
        pos = clamped > 0
        assert np.max(np.abs(out[pos] - clamped[pos] * (budget / clamped.sum()))) <= 1e-12
    else:
        assert np.array_equal(out, clamped)


def test_projection_properties_seeded():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = rng.integers(2, 8)
        raw = rng.uniform(-1, 2, size=n)
        check_projection(raw, float(rng.uniform(0, 2)))


@settings(max_examples=300)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=8), st.floats(0, 5))
def test_projection_properties(raw, budget):
    check_projection(np.array(raw), budget)


def test_projection_zeroes_owner():
    assert project_policy([0.3, 0.2, 0.1], 1.0, owner=0)[0] == 0.0


def test_policy_delta_examples():
    d = policy_delta([0, 0.1, 0.1], [0, 0.1, 0.1], 1e-4)
    assert d.norm_value == 0 and d.converged
    d = policy_delta([0, 0.1, 0.1], [0, 0.103, 0.101], 0.0031623)
    assert d.norm_value == pytest.approx(0.0031623, abs=1e-7)
    assert d.converged == (0.0031623 > d.norm_value)
    assert not policy_delta([0, 0.1, 0.1], [0, 0.103, 0.101], 0.003).converged
    d = policy_delta([0, 0.1, 0.1], [0, 0.103, 0.101], 1e-4, Norm.LINF)
    assert d.norm_value == pytest.approx(0.003, abs=1e-12)


def test_step_respects_budget():
    rng = np.random.default_rng(1)
    for _ in range(200):
        w = rng.uniform(0, 3, 3)
        new = step(model(w), rng.uniform(0, 1, 3), rng.uniform(0, 0.5, 3), 0.9, 0.01, P)
        assert new[0] == 0 and np.all(new >= 0) and new.sum() <= 0.9 + 1e-12


def test_concentration():
    m = np.array([[0, 0.3, 0.6], [0, 0, 0], [0.45, 0.45, 0]])
    assert concentration(m) == pytest.approx([2 / 3, 0.0, 0.5])
