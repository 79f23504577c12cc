"""Offline (alpha, beta)-approximation oracles and exact brute force.

Ties are always broken toward the smallest arm (or node) index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .graphs import Bipartite, DiGraph
from .model import ORDERED, SEED_SET, Action

BRUTE_FORCE_LIMIT = 2_000_000
IM_MC_EPSILON = 0.01


@dataclass(frozen=True)
class OracleSpec:
    kind: str
    alpha: float
    beta: float
    tie_break: str = "ascending-arm-index"

    def __post_init__(self):
        if not (0 < self.alpha <= 1 and 0 < self.beta <= 1):
            raise ValueError("alpha and beta must lie in (0, 1]")

    @property
    def scale(self) -> float:
        return self.alpha * self.beta


TOP_K = OracleSpec("top-k", 1.0, 1.0)
GREEDY_COVERAGE = OracleSpec("greedy-coverage", 1.0 - 1.0 / math.e, 1.0)
BRUTE_FORCE = OracleSpec("brute-force", 1.0, 1.0)


def greedy_im_spec(n_nodes: int, exact: bool) -> OracleSpec:
    eps = 0.0 if exact else IM_MC_EPSILON
    return OracleSpec("greedy-im", 1.0 - 1.0 / math.e - eps, 1.0 / n_nodes)


def top_k(scores, k: int) -> Action:
    """The ``k`` highest scores in descending order, lower index first on ties."""
    scores = np.asarray(scores, dtype=float)
    m = scores.shape[0]
    if not 0 <= k <= m:
        raise ValueError(f"cannot pick {k} of {m} arms")
    # stable sort on -score keeps ascending index among equal scores
    order = np.argsort(-scores, kind="stable")[:k]
    return Action(tuple(int(i) for i in order), ORDERED)


def _greedy(n_candidates: int, k: int, value) -> tuple:
    chosen: list[int] = []
    current = value(chosen)
    for _ in range(k):
        best, best_val = -1, -math.inf
        for c in range(n_candidates):
            if c in chosen:
                continue
            v = value(chosen + [c])
            if v > best_val:
                best, best_val = c, v
        chosen.append(best)
        current = best_val
    return tuple(chosen), current


def greedy_coverage(mu, graph: Bipartite, k: int) -> Action:
    """Plain greedy on the expected coverage of the chosen sources."""
    if not 0 <= k <= graph.n_sources:
        raise ValueError(f"cannot pick {k} of {graph.n_sources} sources")
    mu = np.asarray(mu, dtype=float)
    seeds, _ = _greedy(graph.n_sources, k, lambda s: graph.coverage(s, mu))
    return Action(seeds, SEED_SET)


def greedy_im(mu, graph: DiGraph, k: int, mc_samples: int = 1000,
              rng: np.random.Generator | None = None) -> Action:
    """Plain greedy on influence spread.

    Spread is exact for small graphs; otherwise every candidate is scored on
    the same ``mc_samples`` live-edge worlds.
    """
    if not 0 <= k <= graph.n_nodes:
        raise ValueError(f"cannot pick {k} of {graph.n_nodes} nodes")
    if mc_samples < 1:
        raise ValueError("mc_samples must be >= 1")
    mu = np.asarray(mu, dtype=float)
    if graph.exact:
        spread = lambda s: graph.exact_spread(s, mu)  # noqa: E731
    else:
        rng = np.random.default_rng(0) if rng is None else rng
        live = graph.sample_live(mu, mc_samples, rng)
        spread = lambda s: float(graph.reachable(s, live).sum(axis=1).mean())  # noqa: E731
    seeds, _ = _greedy(graph.n_nodes, k, spread)
    return Action(seeds, SEED_SET)


def brute_force_best(env, mu, limit: int = BRUTE_FORCE_LIMIT) -> tuple[Action, float]:
    """Exact maximizer of ``env.expected_reward(., mu)`` by enumeration."""
    count = env.action_count()
    if count > limit:
        raise ValueError(f"action space has {count} candidates (limit {limit})")
    best, best_val = None, -math.inf
    for action in env.enumerate_actions():
        v = env.expected_reward(action, mu)
        if v > best_val + 1e-15:
            best, best_val = action, v
    return best, float(best_val)


def subsets(n: int, k: int):
    """All ``k``-subsets of ``range(n)`` in lexicographic order."""
    return combinations(range(n), k)
