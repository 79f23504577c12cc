"""Core protocol types: linear ground truth, contexts, actions, feedback.

Every environment derives from :class:`Environment` and exposes the analytic
reward ``r(S; mu)`` and triggering probabilities ``p_i^{mu,S}`` alongside a
sampler for the actual feedback process.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

NORM_TOL = 1e-12
MEAN_TOL = 1e-9

ORDERED = "ordered-list"
SEED_SET = "seed-set"


@dataclass(frozen=True)
class LinearGroundTruth:
    theta_star: np.ndarray
    # set by one_hot_lift, where ||theta*|| <= 1 may not hold
    lifted: bool = False

    def __post_init__(self):
        theta = np.asarray(self.theta_star, dtype=float).reshape(-1)
        object.__setattr__(self, "theta_star", theta)
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta_star has non-finite entries")
        if not self.lifted and np.linalg.norm(theta) > 1 + NORM_TOL:
            raise ValueError(f"||theta_star|| = {np.linalg.norm(theta):.6g} exceeds 1")

    @property
    def dim(self) -> int:
        return self.theta_star.shape[0]


@dataclass(frozen=True)
class FeatureContext:
    """One round's feature map; row ``i`` is the feature vector of arm ``i``."""

    features: np.ndarray

    def __post_init__(self):
        feats = np.atleast_2d(np.asarray(self.features, dtype=float))
        object.__setattr__(self, "features", feats)
        if not np.all(np.isfinite(feats)):
            raise ValueError("features have non-finite entries")
        norms = np.linalg.norm(feats, axis=1)
        if np.any(norms > 1 + NORM_TOL):
            raise ValueError(f"feature norm {norms.max():.6g} exceeds 1")

    @property
    def num_arms(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class Action:
    arms: tuple
    semantics: str = ORDERED

    def __post_init__(self):
        arms = tuple(int(a) for a in self.arms)
        if len(set(arms)) != len(arms):
            raise ValueError(f"duplicate arms in action {arms}")
        if self.semantics not in (ORDERED, SEED_SET):
            raise ValueError(f"unknown action semantics {self.semantics!r}")
        object.__setattr__(self, "arms", arms)

    def __len__(self):
        return len(self.arms)

    def __iter__(self):
        return iter(self.arms)

    def label(self) -> str:
        return "-".join(str(a) for a in self.arms)


@dataclass
class Feedback:
    """Triggered arms, their revealed outcomes, and the realized reward."""

    triggered: tuple
    outcomes: dict = field(default_factory=dict)
    realized_reward: float = 0.0

    def __post_init__(self):
        self.triggered = tuple(int(i) for i in self.triggered)
        if set(self.outcomes) != set(self.triggered):
            raise ValueError("outcomes must be keyed exactly by the triggered arms")
        if not (np.isfinite(self.realized_reward) and self.realized_reward >= 0):
            raise ValueError(f"realized reward must be finite and >= 0, got {self.realized_reward}")


def arm_means(gt: LinearGroundTruth, ctx: FeatureContext, clip: bool = True) -> np.ndarray:
    """Per-arm Bernoulli means ``<theta*, phi(i)>``.

    Means outside ``[0, 1]`` by more than 1e-9 mean the instance was built
    wrong, so they raise instead of being clamped quietly.
    """
    if ctx.dim != gt.dim:
        raise ValueError(f"context dimension {ctx.dim} != parameter dimension {gt.dim}")
    mu = ctx.features @ gt.theta_star
    if not clip:
        return mu
    if np.any(mu < -MEAN_TOL) or np.any(mu > 1 + MEAN_TOL):
        raise ValueError(f"arm means outside [0, 1]: min {mu.min():.6g}, max {mu.max():.6g}")
    return np.clip(mu, 0.0, 1.0)


def one_hot_lift(mu) -> tuple[LinearGroundTruth, FeatureContext]:
    """Embed a non-contextual mean vector with ``theta* = mu`` and ``phi(i) = e_i``."""
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if np.any(mu < 0) or np.any(mu > 1):
        raise ValueError("means must lie in [0, 1]")
    return LinearGroundTruth(mu.copy(), lifted=True), FeatureContext(np.eye(mu.shape[0]))


def embed_means(mu, d: int, rng: np.random.Generator) -> tuple[LinearGroundTruth, FeatureContext]:
    """Unit-norm features with ``<e_1, phi(i)> = mu_i``.

    ``phi(i) = (mu_i, sqrt(1 - mu_i^2) u_i)`` with ``u_i`` uniform on the unit
    sphere in dimension ``d - 1``.
    """
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if d < 2:
        raise ValueError("need d >= 2 to embed means with unit-norm features")
    if np.any(mu < 0) or np.any(mu > 1):
        raise ValueError("means must lie in [0, 1]")
    u = rng.standard_normal((mu.shape[0], d - 1))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    feats = np.empty((mu.shape[0], d))
    feats[:, 0] = mu
    feats[:, 1:] = np.sqrt(1.0 - mu**2)[:, None] * u
    theta = np.zeros(d)
    theta[0] = 1.0
    return LinearGroundTruth(theta), FeatureContext(feats)


class Environment:
    """Contract shared by every bundled C²MAB-T instance.

    Subclasses set ``num_arms``, ``batch_size`` and ``semantics`` and implement
    the analytic and sampling hooks below.  Contexts are constant by default.
    """

    num_arms: int
    batch_size: int
    semantics: str = ORDERED
    kind: str = "environment"

    def __init__(self, features, ground_truth: LinearGroundTruth | None):
        self._ctx = FeatureContext(features)
        self.ground_truth = ground_truth
        self.num_arms = self._ctx.num_arms

    @property
    def dim(self) -> int:
        return self._ctx.dim

    def context(self, t: int, rng: np.random.Generator | None = None) -> FeatureContext:
        return self._ctx

    def means(self, ctx: FeatureContext) -> np.ndarray:
        return arm_means(self.ground_truth, ctx)

    def true_means(self, t: int = 1) -> np.ndarray:
        return self.means(self.context(t))

    # -- action space -----------------------------------------------------
    def make_action(self, arms: Sequence[int]) -> Action:
        action = arms if isinstance(arms, Action) else Action(tuple(arms), self.semantics)
        self.validate_action(action)
        return action

    def validate_action(self, action: Action) -> None:
        raise NotImplementedError

    def random_action(self, rng: np.random.Generator) -> Action:
        raise NotImplementedError

    def enumerate_actions(self):
        """Yield every feasible action (one representative per reward class)."""
        raise NotImplementedError

    def action_count(self) -> int:
        raise NotImplementedError

    def oracle(self, scores, rng: np.random.Generator | None = None) -> Action:
        raise NotImplementedError

    def alpha_beta(self) -> tuple[float, float]:
        raise NotImplementedError

    # -- analytic quantities ----------------------------------------------
    def expected_reward(self, action: Action, mu) -> float:
        raise NotImplementedError

    def triggering_probs(self, action: Action, mu) -> np.ndarray:
        """Vector ``p_i^{mu,S}`` over all arms."""
        raise NotImplementedError

    def triggering_prob(self, i: int, action: Action, mu) -> float:
        return float(self.triggering_probs(action, mu)[i])

    def triggerable(self, action: Action) -> np.ndarray:
        """Arms that can be triggered by ``action`` under some mean vector."""
        raise NotImplementedError

    # -- sampling -----------------------------------------------------------
    def sample_many(self, action: Action, mu, n: int, rng: np.random.Generator):
        """``n`` independent plays: realized rewards ``(n,)`` and a boolean
        triggered matrix ``(n, m)``."""
        raise NotImplementedError

    def play(self, t: int, action: Action, rng: np.random.Generator) -> Feedback:
        raise NotImplementedError

    # exact expectation of the sampling process; differs from expected_reward
    # only for data-driven environments whose outcomes are not independent
    def true_expected_reward(self, action: Action) -> float:
        return self.expected_reward(action, self.true_means())

    def true_triggering_probs(self, action: Action) -> np.ndarray:
        return self.triggering_probs(action, self.true_means())
