import numpy as np
import pytest

from voxnav.reward import (RewardConfig, exploration_reward, progress_reward,
                           proximity_penalty, smoothness_penalty,
                           total_reward)


def cfg(**kw):
    return RewardConfig(**kw)


# -- progress -----------------------------------------------------------------

def test_progress_at_goal():
    assert progress_reward(0.0, 0.0, cfg()) == pytest.approx(cfg().lambda_e)


def test_progress_pure_difference():
    c = cfg(lambda_d=1.0, lambda_e=1e-300)
    assert progress_reward(3.0, 2.0, c) == pytest.approx(1.0)


def test_progress_formula_value():
    c = cfg(lambda_d=1.0, lambda_e=1.0, alpha=0.5)
    assert progress_reward(2.0, 1.0, c) == pytest.approx(1.0 + np.exp(-0.5))


def test_progress_rejects_negative_distance():
    with pytest.raises(ValueError):
        progress_reward(-1.0, 0.0, cfg())


# -- smoothness ---------------------------------------------------------------

def test_smoothness_zero_for_repeated_action():
    a = np.array([0.3, -0.2, 0.1, 0.5, 0.0, -0.4])
    assert smoothness_penalty(a, a, cfg()) == 0.0


def test_smoothness_unit_weights():
    c = cfg(lambda_a=np.ones(6))
    diff = np.array([1.0, 0, 0, 0, 0, 0])
    assert smoothness_penalty(diff, np.zeros(6), c) == pytest.approx(-1.0)


def test_smoothness_weighted_hand_value():
    c = cfg(lambda_a=np.array([2.0, 1, 1, 1, 1, 1]))
    a_now = np.array([1.0, 1.0, 0, 0, 0, 0])
    assert smoothness_penalty(a_now, np.zeros(6), c) \
        == pytest.approx(-np.sqrt(5.0))


def test_smoothness_shape_mismatch():
    with pytest.raises(ValueError):
        smoothness_penalty(np.zeros(5), np.zeros(5), cfg())


# -- discovery ----------------------------------------------------------------

def test_discovery_zero_transitions():
    assert exploration_reward(0, cfg(enable_discovery=True)) == 0.0


def test_discovery_disabled_by_default():
    c = cfg()
    assert not c.enable_discovery
    assert exploration_reward(500, c) == 0.0


def test_discovery_linear_scaling():
    c = cfg(enable_discovery=True, lambda_g=0.01)
    assert exploration_reward(250, c) == pytest.approx(2.5)
    c2 = cfg(enable_discovery=True, lambda_g=0.02)
    assert exploration_reward(250, c2) == pytest.approx(5.0)


# -- proximity ----------------------------------------------------------------

def test_proximity_values():
    c = cfg(lambda_p=0.02)
    assert proximity_penalty(0, c) == 0.0
    assert proximity_penalty(10, c) == pytest.approx(-0.2)
    with pytest.raises(ValueError):
        proximity_penalty(-1, c)


# -- total --------------------------------------------------------------------

def test_total_at_goal_all_zero_inputs():
    c = cfg()
    b = total_reward(0.0, 0.0, np.zeros(6), np.zeros(6), 0, 0, c)
    assert b.total == pytest.approx(c.lambda_e)
    assert b.smoothness == 0.0 and b.discovery == 0.0 and b.proximity == 0.0


def test_total_additivity_random_inputs():
    rng = np.random.default_rng(0)
    c = cfg(enable_discovery=True)
    for _ in range(1000):
        d_prev, d_now = rng.uniform(0, 15, size=2)
        a_now = rng.uniform(-1, 1, size=6)
        a_prev = rng.uniform(-1, 1, size=6)
        tr = int(rng.integers(0, 500))
        near = int(rng.integers(0, 300))
        b = total_reward(d_prev, d_now, a_now, a_prev, tr, near, c)
        assert b.total == b.progress + b.smoothness + b.discovery \
            + b.proximity
        assert b.progress == progress_reward(d_prev, d_now, c)
        assert b.smoothness == smoothness_penalty(a_now, a_prev, c)
        assert b.discovery == exploration_reward(tr, c)
        assert b.proximity == proximity_penalty(near, c)


def test_term_signs():
    rng = np.random.default_rng(1)
    c = cfg(enable_discovery=True)
    for _ in range(200):
        b = total_reward(rng.uniform(0, 10), rng.uniform(0, 10),
                         rng.uniform(-1, 1, 6), rng.uniform(-1, 1, 6),
                         int(rng.integers(0, 100)), int(rng.integers(0, 100)),
                         c)
        assert b.smoothness <= 0.0
        assert b.proximity <= 0.0
        assert b.discovery >= 0.0
    # approaching the goal never pays less than the exponential shaping
    d_prev, d_now = 5.0, 4.0
    assert progress_reward(d_prev, d_now, c) \
        >= c.lambda_e * np.exp(-c.alpha * d_now ** 2)


def test_stationary_at_goal():
    c = cfg()
    a = np.zeros(6)
    for _ in range(5):
        b = total_reward(0.0, 0.0, a, a, 0, 0, c)
        assert b.total == pytest.approx(c.lambda_e)


def test_config_validation():
    with pytest.raises(ValueError):
        RewardConfig(lambda_d=0.0)
    with pytest.raises(ValueError):
        RewardConfig(lambda_a=np.full(5, 0.05))
    with pytest.raises(ValueError):
        RewardConfig(lambda_a=np.array([0.05, 0.05, 0.05, 0.05, 0.05, -0.1]))
