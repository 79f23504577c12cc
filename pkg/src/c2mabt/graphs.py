"""Bipartite coverage and independent-cascade primitives.

Arms are edges in both structures.  Independent-cascade quantities are exact
by live-edge world enumeration up to ``EXACT_EDGE_LIMIT`` edges and Monte
Carlo estimates beyond that.
"""
from __future__ import annotations

from collections import OrderedDict

import numpy as np

EXACT_EDGE_LIMIT = 20
_CACHE_BUDGET = 1 << 25  # booleans kept in the reachability cache


class Bipartite:
    """Sources ``0..n_sources-1``, targets ``0..n_targets-1``, edges ``(u, v)``."""

    def __init__(self, n_sources: int, n_targets: int, edges):
        edges = np.asarray(edges, dtype=int).reshape(-1, 2)
        if n_sources < 1 or n_targets < 1:
            raise ValueError("need at least one source and one target")
        if edges.size and (edges[:, 0].min() < 0 or edges[:, 0].max() >= n_sources
                           or edges[:, 1].min() < 0 or edges[:, 1].max() >= n_targets):
            raise ValueError("edge endpoint out of range")
        if len({(int(u), int(v)) for u, v in edges}) != len(edges):
            raise ValueError("duplicate edges")
        self.n_sources = int(n_sources)
        self.n_targets = int(n_targets)
        self.edges = edges
        self.src = edges[:, 0]
        self.dst = edges[:, 1]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    def incident(self, seeds) -> np.ndarray:
        """Boolean mask of edges leaving any seed."""
        chosen = np.zeros(self.n_sources, dtype=bool)
        chosen[list(seeds)] = True
        return chosen[self.src]

    def max_batch(self, k: int) -> int:
        deg = np.bincount(self.src, minlength=self.n_sources)
        return int(np.sort(deg)[::-1][:k].sum())

    def coverage(self, seeds, mu) -> float:
        """Expected number of covered targets, ``sum_v 1 - prod_{u in S}(1 - mu_uv)``."""
        mu = np.asarray(mu, dtype=float)
        mask = self.incident(seeds)
        miss = np.ones(self.n_targets)
        np.multiply.at(miss, self.dst[mask], 1.0 - mu[mask])
        return float(self.n_targets - miss.sum())


class DiGraph:
    """Directed graph on nodes ``0..n_nodes-1`` with edge list ``(u, v)``."""

    def __init__(self, n_nodes: int, edges):
        edges = np.asarray(edges, dtype=int).reshape(-1, 2)
        if n_nodes < 1:
            raise ValueError("need at least one node")
        if edges.size and (edges.min() < 0 or edges.max() >= n_nodes):
            raise ValueError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ValueError("self loops are not allowed")
        if len({(int(u), int(v)) for u, v in edges}) != len(edges):
            raise ValueError("duplicate edges")
        self.n_nodes = int(n_nodes)
        self.edges = edges
        self.src = edges[:, 0]
        self.dst = edges[:, 1]
        # E x V indicator of edge heads
        self._heads = np.zeros((len(edges), n_nodes))
        self._heads[np.arange(len(edges)), self.dst] = 1.0
        self._reach_cache: OrderedDict = OrderedDict()
        self._cache_size = 0
        self._worlds = None

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def exact(self) -> bool:
        return self.num_edges <= EXACT_EDGE_LIMIT

    def reachable(self, seeds, live: np.ndarray) -> np.ndarray:
        """Reachability from ``seeds`` in each live-edge world.

        ``live`` is ``(n, E)`` boolean; returns ``(n, V)`` boolean.
        """
        live = np.atleast_2d(live)
        chunk = 1 << 16
        if live.shape[0] > chunk:
            return np.concatenate([self.reachable(seeds, live[i:i + chunk])
                                   for i in range(0, live.shape[0], chunk)])
        reach = np.zeros((live.shape[0], self.n_nodes), dtype=bool)
        reach[:, list(seeds)] = True
        if self.num_edges == 0:
            return reach
        livef = live.astype(float)
        for _ in range(self.n_nodes):
            fire = reach[:, self.src] * livef
            new = reach | ((fire @ self._heads) > 0)
            if np.array_equal(new, reach):
                break
            reach = new
        return reach

    def full_reach(self, seeds) -> np.ndarray:
        """Nodes reachable from ``seeds`` when every edge is live."""
        return self.reachable(seeds, np.ones((1, self.num_edges), dtype=bool))[0]

    def triggerable(self, seeds) -> np.ndarray:
        return self.full_reach(seeds)[self.src]

    # -- exact enumeration ---------------------------------------------------
    def _world_matrix(self) -> np.ndarray:
        if self._worlds is None:
            n = 1 << self.num_edges
            idx = np.arange(n, dtype=np.int64)
            self._worlds = ((idx[:, None] >> np.arange(self.num_edges)) & 1).astype(bool)
        return self._worlds

    def world_probs(self, mu) -> np.ndarray:
        """Probability of every live-edge world; bit ``e`` of the index is edge ``e``."""
        probs = np.ones(1)
        for p in np.asarray(mu, dtype=float):
            probs = np.concatenate([probs * (1.0 - p), probs * p])
        return probs

    def _world_reach(self, seeds) -> np.ndarray:
        key = tuple(sorted(int(s) for s in seeds))
        hit = self._reach_cache.get(key)
        if hit is not None:
            self._reach_cache.move_to_end(key)
            return hit
        reach = self.reachable(key, self._world_matrix())
        self._reach_cache[key] = reach
        self._cache_size += reach.size
        while self._cache_size > _CACHE_BUDGET and len(self._reach_cache) > 1:
            _, old = self._reach_cache.popitem(last=False)
            self._cache_size -= old.size
        return reach

    def exact_spread(self, seeds, mu) -> float:
        reach = self._world_reach(seeds)
        return float(self.world_probs(mu) @ reach.sum(axis=1))

    def exact_node_probs(self, seeds, mu) -> np.ndarray:
        """Probability that each node is activated."""
        return self.world_probs(mu) @ self._world_reach(seeds)

    # -- Monte Carlo -------------------------------------------------------------
    def sample_live(self, mu, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.random((n, self.num_edges)) < np.asarray(mu, dtype=float)

    def mc_node_probs(self, seeds, mu, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.reachable(seeds, self.sample_live(mu, n, rng)).mean(axis=0)
