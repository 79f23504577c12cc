import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from c2mabt.model import (ORDERED, SEED_SET, Action, FeatureContext, Feedback, LinearGroundTruth,
                          arm_means, embed_means, one_hot_lift)


def test_dot_product_mean():
    gt = LinearGroundTruth(np.array([1.0, 0.0]))
    assert arm_means(gt, FeatureContext([[0.3, 0.9]]))[0] == pytest.approx(0.3)


def test_zero_theta():
    gt = LinearGroundTruth(np.zeros(3))
    assert np.array_equal(arm_means(gt, FeatureContext(np.eye(3))), np.zeros(3))


def test_rejects_large_theta_and_features():
    with pytest.raises(ValueError):
        LinearGroundTruth(np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        FeatureContext([[1.0, 1.0]])


def test_negative_mean_rejected():
    gt = LinearGroundTruth(np.array([-1.0, 0.0]))
    with pytest.raises(ValueError):
        arm_means(gt, FeatureContext([[0.5, 0.0]]))


@pytest.mark.parametrize("mu", [[0.5, 0.5], [0.0, 0.0], [0.1, 0.2, 0.3]])
def test_one_hot_lift(mu):
    gt, ctx = one_hot_lift(mu)
    assert np.array_equal(gt.theta_star, mu)
    assert np.array_equal(ctx.features, np.eye(len(mu)))
    assert np.array_equal(arm_means(gt, ctx), mu)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=20), st.integers(2, 8), st.integers(0, 2**31))
def test_embed_recovers_means(mu, d, seed):
    mu = np.array(mu)
    gt, ctx = embed_means(mu, d, np.random.default_rng(seed))
    assert np.allclose(np.linalg.norm(ctx.features, axis=1), 1.0, atol=1e-12)
    assert np.allclose(ctx.features @ gt.theta_star, mu, atol=1e-12)


def test_action_label_and_duplicates():
    assert Action((3, 0, 1), ORDERED).label() == "3-0-1"
    with pytest.raises(ValueError):
        Action((1, 1), SEED_SET)


def test_feedback_checks_outcomes():
    Feedback((0, 2), {0: 0, 2: 1}, 1.0)
    with pytest.raises(ValueError):
        Feedback((0,), {0: 1, 1: 0}, 1.0)
