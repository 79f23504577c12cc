"""Learning policies.

``C2UCBT`` is the contextual combinatorial UCB for triggered arms with an
ordinary ridge estimate; ``VAC2UCB`` reweights each triggered observation by
the inverse of an optimistic Bernoulli variance.  ``CUCB`` and ``BCUCBT``
are the non-contextual counter-based baselines.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .linalg import RegressionState
from .model import Action, FeatureContext, Feedback

VARIANCE_FLOOR = 1e-6


@dataclass(frozen=True)
class PolicyConfig:
    horizon: int
    batch_size: int
    dim: int
    gamma: float | None = None
    delta: float | None = None
    exploration_scale: float = 1.0

    def __post_init__(self):
        if self.horizon < 1 or self.batch_size < 1 or self.dim < 1:
            raise ValueError("horizon, batch size and dimension must be positive")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not 0 < self.failure_prob <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if not self.exploration_scale > 0:
            raise ValueError("exploration_scale must be positive")

    @property
    def failure_prob(self) -> float:
        return 1.0 / self.horizon if self.delta is None else self.delta

    def with_gamma(self, default: float) -> "PolicyConfig":
        return self if self.gamma is not None else replace(self, gamma=float(default))


def c2ucbt_radius(cfg: PolicyConfig) -> float:
    """sqrt(log((gamma + KT/d)^d / (gamma^d delta^2))) + sqrt(gamma), in log form."""
    g = cfg.gamma if cfg.gamma is not None else max(1.0, cfg.batch_size)
    d, k, t, delta = cfg.dim, cfg.batch_size, cfg.horizon, cfg.failure_prob
    inner = d * math.log1p(k * t / (d * g)) + 2.0 * math.log(1.0 / delta)
    return cfg.exploration_scale * (math.sqrt(inner) + math.sqrt(g))


def vac2ucb_radius(cfg: PolicyConfig) -> float:
    """1 + sqrt(gamma) + 4 sqrt(log((6TN/delta) log(3TN/delta))) with N = (4 d^2 K^4 T^4)^d."""
    g = cfg.gamma if cfg.gamma is not None else 4.0 * cfg.batch_size
    d, k, t, delta = cfg.dim, cfg.batch_size, cfg.horizon, cfg.failure_prob
    log_n = d * (math.log(4) + 2 * math.log(d) + 4 * math.log(k) + 4 * math.log(t))
    log_3tn = math.log(3) + math.log(t) + log_n - math.log(delta)
    log_6tn = math.log(2) + log_3tn
    return cfg.exploration_scale * (1.0 + math.sqrt(g) + 4.0 * math.sqrt(log_6tn + math.log(log_3tn)))


def optimistic_variance(ucb, lcb, floor: float = VARIANCE_FLOOR) -> np.ndarray:
    """Largest Bernoulli variance ``mu(1 - mu)`` over ``[lcb, ucb]``, floored."""
    ucb = np.asarray(ucb, dtype=float)
    lcb = np.asarray(lcb, dtype=float)
    var = np.where(ucb <= 0.5, (1 - ucb) * ucb, np.where(lcb >= 0.5, (1 - lcb) * lcb, 0.25))
    return np.maximum(var, floor)


@dataclass
class ArmEstimates:
    ucb: np.ndarray
    lcb: np.ndarray
    opt_var: np.ndarray | None = None


class Policy:
    name = "policy"

    def select(self, ctx: FeatureContext) -> Action:
        raise NotImplementedError

    def update(self, ctx: FeatureContext, fb: Feedback) -> None:
        raise NotImplementedError

    @staticmethod
    def _check_feedback(fb: Feedback, m: int):
        for i in fb.triggered:
            if not 0 <= i < m:
                raise ValueError(f"feedback references arm {i} outside [0, {m})")


class C2UCBT(Policy):
    """Optimistic ridge regression over triggered arms with a fixed radius."""

    name = "c2ucbt"

    def __init__(self, cfg: PolicyConfig, oracle):
        self.cfg = cfg.with_gamma(max(1.0, cfg.batch_size))
        self.oracle = oracle
        self.state = RegressionState(cfg.dim, self.cfg.gamma)
        self.radius = c2ucbt_radius(self.cfg)
        self.last: ArmEstimates | None = None
        self.last_widths: np.ndarray | None = None

    def estimates(self, ctx: FeatureContext) -> ArmEstimates:
        theta = self.state.solve_theta()
        center = ctx.features @ theta
        width = self.radius * self.state.ellipsoid_norms(ctx.features)
        self.last_widths = width
        return ArmEstimates(np.clip(center + width, 0, 1), np.clip(center - width, 0, 1))

    def select(self, ctx):
        self.last = self.estimates(ctx)
        return self.oracle(self.last.ucb)

    def update(self, ctx, fb):
        self._check_feedback(fb, ctx.num_arms)
        if not fb.triggered:
            return
        idx = list(fb.triggered)
        outcomes = [fb.outcomes[i] for i in idx]
        self.state.batch_update(ctx.features[idx], outcomes)


class VAC2UCB(Policy):
    """Variance-adaptive variant: doubled radius, LCB, and 1/V-weighted updates."""

    name = "vac2ucb"

    def __init__(self, cfg: PolicyConfig, oracle):
        self.cfg = cfg.with_gamma(4.0 * cfg.batch_size)
        self.oracle = oracle
        self.state = RegressionState(cfg.dim, self.cfg.gamma)
        self.radius = vac2ucb_radius(self.cfg)
        self.last: ArmEstimates | None = None
        self.last_widths: np.ndarray | None = None

    def estimates(self, ctx):
        theta = self.state.solve_theta()
        center = ctx.features @ theta
        width = 2.0 * self.radius * self.state.ellipsoid_norms(ctx.features)
        self.last_widths = width
        ucb = np.clip(center + width, 0, 1)
        lcb = np.clip(center - width, 0, 1)
        return ArmEstimates(ucb, lcb, optimistic_variance(ucb, lcb))

    def select(self, ctx):
        self.last = self.estimates(ctx)
        return self.oracle(self.last.ucb)

    def update(self, ctx, fb):
        self._check_feedback(fb, ctx.num_arms)
        if not fb.triggered:
            return
        idx = list(fb.triggered)
        outcomes = [fb.outcomes[i] for i in idx]
        # variances frozen at decision time
        self.state.batch_update(ctx.features[idx], outcomes, 1.0 / self.last.opt_var[idx])


class _CounterPolicy(Policy):
    """Per-arm counts, means and (Welford) variances over triggered outcomes."""

    def __init__(self, num_arms: int, oracle):
        self.oracle = oracle
        self.counts = np.zeros(num_arms, dtype=np.int64)
        self.means = np.zeros(num_arms)
        self._m2 = np.zeros(num_arms)
        self.t = 0
        self.last: ArmEstimates | None = None

    @property
    def variances(self) -> np.ndarray:
        return np.divide(self._m2, self.counts, out=np.zeros_like(self._m2), where=self.counts > 0)

    def bonus(self, log_t: float) -> np.ndarray:
        raise NotImplementedError

    def select(self, ctx):
        self.t += 1
        log_t = math.log(self.t)
        ucb = np.ones_like(self.means)
        seen = self.counts > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            ucb[seen] = np.minimum(1.0, self.means[seen] + self.bonus(log_t)[seen])
        self.last = ArmEstimates(ucb, np.zeros_like(ucb))
        return self.oracle(ucb)

    def update(self, ctx, fb):
        self._check_feedback(fb, len(self.counts))
        for i in fb.triggered:
            x = float(fb.outcomes[i])
            self.counts[i] += 1
            delta = x - self.means[i]
            self.means[i] += delta / self.counts[i]
            self._m2[i] += delta * (x - self.means[i])


class CUCB(_CounterPolicy):
    name = "cucb"

    def bonus(self, log_t):
        return np.sqrt(3.0 * log_t / (2.0 * self.counts))


class BCUCBT(_CounterPolicy):
    name = "bcucbt"

    def bonus(self, log_t):
        return np.sqrt(6.0 * self.variances * log_t / self.counts) + 9.0 * log_t / self.counts


POLICY_KINDS = ("c2ucbt", "vac2ucb", "cucb", "bcucbt")


def make_policy(kind: str, cfg: PolicyConfig, num_arms: int, oracle) -> Policy:
    if kind == "c2ucbt":
        return C2UCBT(cfg, oracle)
    if kind == "vac2ucb":
        return VAC2UCB(cfg, oracle)
    if kind == "cucb":
        return CUCB(num_arms, oracle)
    if kind == "bcucbt":
        return BCUCBT(num_arms, oracle)
    raise ValueError(f"unknown policy kind {kind!r}; choose from {', '.join(POLICY_KINDS)}")
