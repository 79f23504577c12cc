"""Bundled environments: cascades, probabilistic maximum coverage, online
influence maximization, and a rating-matrix cascade driven by real feedback."""
from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from . import oracles
from .graphs import Bipartite, DiGraph
from .model import (ORDERED, SEED_SET, Action, Environment, FeatureContext, Feedback,
                    LinearGroundTruth, embed_means, one_hot_lift)

DISJUNCTIVE = "disjunctive"
CONJUNCTIVE = "conjunctive"


class _ConstantContextEnv(Environment):
    def __init__(self, features, ground_truth):
        super().__init__(features, ground_truth)
        self._mu_cache = None

    def true_means(self, t: int = 1) -> np.ndarray:
        if self._mu_cache is None:
            self._mu_cache = self.means(self._ctx)
        return self._mu_cache

    def sample_many(self, action: Action, mu, n: int, rng: np.random.Generator):
        rewards, triggered, _ = self._simulate(action, np.asarray(mu, dtype=float), n, rng)
        return rewards, triggered

    def play(self, t: int, action: Action, rng: np.random.Generator) -> Feedback:
        rewards, triggered, outcomes = self._simulate(action, self.true_means(t), 1, rng)
        idx = np.flatnonzero(triggered[0])
        return Feedback(tuple(idx), {int(i): int(outcomes[0, i]) for i in idx}, float(rewards[0]))

    def _simulate(self, action, mu, n, rng):
        """Return realized rewards ``(n,)``, triggered mask and outcomes ``(n, m)``."""
        raise NotImplementedError


class CascadeEnv(_ConstantContextEnv):
    """Ordered slate of ``K`` items scanned until the stopping outcome.

    Disjunctive: the user stops at the first outcome 1, reward is 1 if any.
    Conjunctive: the scan stops at the first outcome 0, reward is 1 if none.
    """

    semantics = ORDERED

    def __init__(self, features, ground_truth, k: int, form: str = DISJUNCTIVE):
        super().__init__(features, ground_truth)
        if form not in (DISJUNCTIVE, CONJUNCTIVE):
            raise ValueError(f"unknown cascade form {form!r}")
        if not 1 <= k <= self.num_arms:
            raise ValueError(f"slate size {k} must be in [1, {self.num_arms}]")
        self.k = int(k)
        self.form = form
        self.batch_size = self.k
        self.kind = f"{form}-cascade"

    def validate_action(self, action: Action) -> None:
        if len(action) != self.k:
            raise ValueError(f"slate must have exactly {self.k} items, got {len(action)}")
        if min(action.arms) < 0 or max(action.arms) >= self.num_arms:
            raise ValueError("arm index out of range")

    def random_action(self, rng):
        return Action(tuple(int(i) for i in rng.choice(self.num_arms, self.k, replace=False)), ORDERED)

    def enumerate_actions(self):
        for combo in combinations(range(self.num_arms), self.k):
            yield Action(combo, ORDERED)

    def action_count(self) -> int:
        return math.comb(self.num_arms, self.k)

    def oracle(self, scores, rng=None) -> Action:
        return oracles.top_k(scores, self.k)

    def alpha_beta(self):
        return oracles.TOP_K.alpha, oracles.TOP_K.beta

    def expected_reward(self, action, mu) -> float:
        m = np.asarray(mu, dtype=float)[list(action.arms)]
        if self.form == DISJUNCTIVE:
            return float(1.0 - np.prod(1.0 - m))
        return float(np.prod(m))

    def triggering_probs(self, action, mu) -> np.ndarray:
        m = np.asarray(mu, dtype=float)[list(action.arms)]
        keep = 1.0 - m if self.form == DISJUNCTIVE else m
        p = np.zeros(self.num_arms)
        p[list(action.arms)] = np.concatenate([[1.0], np.cumprod(keep)[:-1]])
        return p

    def triggerable(self, action) -> np.ndarray:
        mask = np.zeros(self.num_arms, dtype=bool)
        mask[list(action.arms)] = True
        return mask

    def _scan(self, action, x):
        """Stopping rule over slate outcomes ``x`` of shape ``(n, K)``."""
        n = x.shape[0]
        stop = x if self.form == DISJUNCTIVE else ~x
        hit = stop.any(axis=1)
        last = np.where(hit, stop.argmax(axis=1), self.k - 1)
        seen = np.arange(self.k)[None, :] <= last[:, None]
        rewards = (hit if self.form == DISJUNCTIVE else ~hit).astype(float)
        triggered = np.zeros((n, self.num_arms), dtype=bool)
        outcomes = np.zeros((n, self.num_arms), dtype=bool)
        arms = list(action.arms)
        triggered[:, arms] = seen
        outcomes[:, arms] = x & seen
        return rewards, triggered, outcomes

    def _simulate(self, action, mu, n, rng):
        x = rng.random((n, self.k)) < mu[list(action.arms)]
        return self._scan(action, x)


class PmcEnv(_ConstantContextEnv):
    """Probabilistic maximum coverage: choose ``k`` sources, arms are edges.

    Every edge out of a chosen source is observed (semi-bandit feedback).
    """

    semantics = SEED_SET
    kind = "pmc"

    def __init__(self, graph: Bipartite, features, ground_truth, k: int):
        super().__init__(features, ground_truth)
        if self.num_arms != graph.num_edges:
            raise ValueError("one feature row per edge required")
        if not 1 <= k <= graph.n_sources:
            raise ValueError(f"seed budget {k} must be in [1, {graph.n_sources}]")
        self.graph = graph
        self.k = int(k)
        self.batch_size = graph.max_batch(k)

    def validate_action(self, action):
        if len(action) != self.k:
            raise ValueError(f"need exactly {self.k} sources, got {len(action)}")
        if min(action.arms) < 0 or max(action.arms) >= self.graph.n_sources:
            raise ValueError("source index out of range")

    def random_action(self, rng):
        return Action(tuple(sorted(int(i) for i in rng.choice(self.graph.n_sources, self.k, replace=False))),
                      SEED_SET)

    def enumerate_actions(self):
        for combo in combinations(range(self.graph.n_sources), self.k):
            yield Action(combo, SEED_SET)

    def action_count(self):
        return math.comb(self.graph.n_sources, self.k)

    def oracle(self, scores, rng=None):
        return oracles.greedy_coverage(scores, self.graph, self.k)

    def alpha_beta(self):
        return oracles.GREEDY_COVERAGE.alpha, oracles.GREEDY_COVERAGE.beta

    def expected_reward(self, action, mu):
        return self.graph.coverage(action.arms, mu)

    def triggering_probs(self, action, mu):
        return self.graph.incident(action.arms).astype(float)

    def triggerable(self, action):
        return self.graph.incident(action.arms)

    def _simulate(self, action, mu, n, rng):
        mask = self.graph.incident(action.arms)
        x = rng.random((n, self.num_arms)) < mu
        x &= mask
        idx = np.flatnonzero(mask)
        heads = np.zeros((idx.size, self.graph.n_targets))
        heads[np.arange(idx.size), self.graph.dst[idx]] = 1.0
        rewards = ((x[:, idx] @ heads) > 0).sum(axis=1).astype(float)
        return rewards, np.broadcast_to(mask, (n, self.num_arms)).copy(), x


class OimEnv(_ConstantContextEnv):
    """Online influence maximization under independent cascade; arms are edges.

    Edges out of every activated node are observed.  Spread and triggering
    probabilities are exact for graphs with at most 20 edges and Monte Carlo
    estimates (``self.exact`` False) otherwise.
    """

    semantics = SEED_SET
    kind = "oim"

    def __init__(self, graph: DiGraph, features, ground_truth, k: int,
                 mc_samples: int = 2000, mc_seed: int = 0):
        super().__init__(features, ground_truth)
        if self.num_arms != graph.num_edges:
            raise ValueError("one feature row per edge required")
        if not 1 <= k <= graph.n_nodes:
            raise ValueError(f"seed budget {k} must be in [1, {graph.n_nodes}]")
        self.graph = graph
        self.k = int(k)
        self.mc_samples = int(mc_samples)
        self.mc_seed = int(mc_seed)
        self.exact = graph.exact
        if math.comb(graph.n_nodes, self.k) <= 10_000:
            self.batch_size = max(int(graph.triggerable(c).sum())
                                  for c in combinations(range(graph.n_nodes), self.k))
        else:
            self.batch_size = graph.num_edges

    def validate_action(self, action):
        if len(action) != self.k:
            raise ValueError(f"need exactly {self.k} seeds, got {len(action)}")
        if min(action.arms) < 0 or max(action.arms) >= self.graph.n_nodes:
            raise ValueError("node index out of range")

    def random_action(self, rng):
        return Action(tuple(sorted(int(i) for i in rng.choice(self.graph.n_nodes, self.k, replace=False))),
                      SEED_SET)

    def enumerate_actions(self):
        for combo in combinations(range(self.graph.n_nodes), self.k):
            yield Action(combo, SEED_SET)

    def action_count(self):
        return math.comb(self.graph.n_nodes, self.k)

    def oracle(self, scores, rng=None):
        rng = np.random.default_rng(self.mc_seed) if rng is None else rng
        return oracles.greedy_im(scores, self.graph, self.k, self.mc_samples, rng)

    def alpha_beta(self):
        spec = oracles.greedy_im_spec(self.graph.n_nodes, self.exact)
        return spec.alpha, spec.beta

    def node_probs(self, action, mu) -> np.ndarray:
        if self.exact:
            return self.graph.exact_node_probs(action.arms, mu)
        return self.graph.mc_node_probs(action.arms, mu, self.mc_samples,
                                        np.random.default_rng(self.mc_seed))

    def expected_reward(self, action, mu):
        return float(self.node_probs(action, mu).sum())

    def triggering_probs(self, action, mu):
        return self.node_probs(action, mu)[self.graph.src]

    def triggerable(self, action):
        return self.graph.triggerable(action.arms)

    def _simulate(self, action, mu, n, rng):
        live = self.graph.sample_live(mu, n, rng)
        reach = self.graph.reachable(action.arms, live)
        triggered = reach[:, self.graph.src]
        return reach.sum(axis=1).astype(float), triggered, live & triggered


class RatingMatrixCascadeEnv(CascadeEnv):
    """Disjunctive cascade whose outcomes are the ratings of a random user.

    ``ratings`` is a binary ``items x users`` matrix.  The per-item click
    rates (row means) play the role of the mean vector for regret accounting.
    """

    kind = "rating-cascade"

    def __init__(self, features, ratings, k: int):
        ratings = np.asarray(ratings).astype(bool)
        features = np.asarray(features, dtype=float)
        if ratings.ndim != 2 or ratings.shape[0] != features.shape[0] or ratings.shape[1] < 1:
            raise ValueError("ratings must be items x users with one row per feature row")
        super().__init__(features, None, k, DISJUNCTIVE)
        self.kind = "rating-cascade"
        self.ratings = ratings
        self.click_rates = ratings.mean(axis=1)

    def means(self, ctx: FeatureContext) -> np.ndarray:
        return self.click_rates

    def _simulate(self, action, mu, n, rng):
        users = rng.integers(self.ratings.shape[1], size=n)
        x = self.ratings[list(action.arms)][:, users].T
        return self._scan(action, x)

    def true_expected_reward(self, action) -> float:
        return float(self.ratings[list(action.arms)].any(axis=0).mean())

    def true_triggering_probs(self, action) -> np.ndarray:
        sub = self.ratings[list(action.arms)]
        # position j is seen by users who clicked none of the first j items
        none_yet = np.vstack([np.ones(sub.shape[1], dtype=bool),
                              np.logical_and.accumulate(~sub, axis=0)[:-1]])
        p = np.zeros(self.num_arms)
        p[list(action.arms)] = none_yet.mean(axis=1)
        return p


# -- instance generators --------------------------------------------------------

def synthetic_cascade_means(m: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """First ``k`` items uniform in [2/(3k), 1/k], the rest uniform in [0, 1/(3k)]."""
    if not 1 <= k <= m:
        raise ValueError("need 1 <= K <= m")
    mu = np.empty(m)
    mu[:k] = rng.uniform(2.0 / (3 * k), 1.0 / k, size=k)
    mu[k:] = rng.uniform(0.0, 1.0 / (3 * k), size=m - k)
    return mu


def gen_synthetic_cascade(m: int, k: int, d: int, rng: np.random.Generator,
                          form: str = DISJUNCTIVE, shuffle: bool = False) -> tuple[CascadeEnv, LinearGroundTruth]:
    """Linear cascading instance with unit-norm ``theta* = e_1`` and features.

    The ``k`` attractive items are indices ``0..k-1`` unless ``shuffle`` is
    set.  Shuffle for learning experiments: with that layout, a policy whose
    scores all tie at 1 picks the optimal slate through the index tie-break.
    """
    if d < 2:
        raise ValueError("synthetic cascades need d >= 2")
    mu = synthetic_cascade_means(m, k, rng)
    if shuffle:
        mu = mu[rng.permutation(m)]
    gt, ctx = embed_means(mu, d, rng)
    return CascadeEnv(ctx.features, gt, k, form), gt


def _features_for(mu, d, rng):
    if d is None:
        return one_hot_lift(mu)
    return embed_means(mu, d, rng)


def random_cascade(m: int, k: int, rng: np.random.Generator, form: str = DISJUNCTIVE,
                   d: int | None = 4, low: float = 0.05, high: float = 0.95) -> CascadeEnv:
    mu = rng.uniform(low, high, size=m)
    gt, ctx = _features_for(mu, d, rng)
    return CascadeEnv(ctx.features, gt, k, form)


def random_bipartite(n_sources: int, n_targets: int, rng: np.random.Generator,
                     edge_prob: float = 0.6) -> Bipartite:
    edges = [(u, v) for u in range(n_sources) for v in range(n_targets) if rng.random() < edge_prob]
    # every source keeps at least one edge
    have = {u for u, _ in edges}
    for u in range(n_sources):
        if u not in have:
            edges.append((u, int(rng.integers(n_targets))))
    return Bipartite(n_sources, n_targets, sorted(edges))


def random_pmc(n_sources: int, n_targets: int, k: int, rng: np.random.Generator,
               d: int | None = None, low: float = 0.05, high: float = 0.95,
               edge_prob: float = 0.6) -> PmcEnv:
    graph = random_bipartite(n_sources, n_targets, rng, edge_prob)
    mu = rng.uniform(low, high, size=graph.num_edges)
    gt, ctx = _features_for(mu, d, rng)
    return PmcEnv(graph, ctx.features, gt, k)


def random_digraph(n_nodes: int, n_edges: int, rng: np.random.Generator) -> DiGraph:
    pairs = [(u, v) for u in range(n_nodes) for v in range(n_nodes) if u != v]
    n_edges = min(n_edges, len(pairs))
    pick = sorted(rng.choice(len(pairs), n_edges, replace=False))
    return DiGraph(n_nodes, [pairs[i] for i in pick])


def random_oim(n_nodes: int, n_edges: int, k: int, rng: np.random.Generator,
               d: int | None = None, low: float = 0.05, high: float = 0.95) -> OimEnv:
    graph = random_digraph(n_nodes, n_edges, rng)
    mu = rng.uniform(low, high, size=graph.num_edges)
    gt, ctx = _features_for(mu, d, rng)
    return OimEnv(graph, ctx.features, gt, k)


def random_rating_env(m: int, k: int, n_users: int, rng: np.random.Generator,
                      d: int = 4, low: float = 0.05, high: float = 0.6) -> RatingMatrixCascadeEnv:
    rates = rng.uniform(low, high, size=m)
    ratings = rng.random((m, n_users)) < rates[:, None]
    feats = rng.standard_normal((m, d))
    feats /= np.linalg.norm(feats, axis=1, keepdims=True)
    return RatingMatrixCascadeEnv(feats, ratings, k)


BUILTIN_NAMES = ("disjunctive", "conjunctive", "pmc", "oim", "rating")


def builtin_env(name: str, rng: np.random.Generator) -> Environment:
    """Small random instances used by the CLI ``check``/``contract`` commands."""
    if name == "disjunctive":
        return random_cascade(8, 4, rng, DISJUNCTIVE)
    if name == "conjunctive":
        return random_cascade(8, 4, rng, CONJUNCTIVE)
    if name == "pmc":
        return random_pmc(4, 4, 2, rng)
    if name == "oim":
        return random_oim(6, 10, 2, rng)
    if name == "rating":
        return random_rating_env(8, 4, 500, rng)
    raise ValueError(f"unknown builtin environment {name!r}; choose from {', '.join(BUILTIN_NAMES)}")


# -- JSON round trip ---------------------------------------------------------------

def env_to_dict(env: Environment) -> dict:
    out = {"features": env._ctx.features.tolist()}
    if env.ground_truth is not None:
        out["theta_star"] = env.ground_truth.theta_star.tolist()
        out["lifted"] = env.ground_truth.lifted
    if isinstance(env, RatingMatrixCascadeEnv):
        out.update(kind="rating-cascade", k=env.k, ratings=env.ratings.astype(int).tolist())
    elif isinstance(env, CascadeEnv):
        out.update(kind="cascade", form=env.form, k=env.k, mu=env.true_means().tolist())
    elif isinstance(env, PmcEnv):
        out.update(kind="pmc", k=env.k, n_sources=env.graph.n_sources,
                   n_targets=env.graph.n_targets, edges=env.graph.edges.tolist())
    elif isinstance(env, OimEnv):
        out.update(kind="oim", k=env.k, n_nodes=env.graph.n_nodes, edges=env.graph.edges.tolist(),
                   mc_samples=env.mc_samples, mc_seed=env.mc_seed)
    else:
        raise TypeError(f"cannot serialize {type(env).__name__}")
    return out


def env_from_dict(data: dict) -> Environment:
    kind = data.get("kind")
    if kind == "rating-cascade":
        return RatingMatrixCascadeEnv(data["features"], data["ratings"], data["k"])
    gt = LinearGroundTruth(np.asarray(data["theta_star"], dtype=float), lifted=data.get("lifted", False))
    feats = np.asarray(data["features"], dtype=float)
    if kind == "cascade":
        return CascadeEnv(feats, gt, data["k"], data.get("form", DISJUNCTIVE))
    if kind == "pmc":
        graph = Bipartite(data["n_sources"], data["n_targets"], data["edges"])
        return PmcEnv(graph, feats, gt, data["k"])
    if kind == "oim":
        graph = DiGraph(data["n_nodes"], data["edges"])
        return OimEnv(graph, feats, gt, data["k"], data.get("mc_samples", 2000), data.get("mc_seed", 0))
    raise ValueError(f"unknown environment kind {kind!r}")
