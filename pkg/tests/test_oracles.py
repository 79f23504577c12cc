import math

import numpy as np
import pytest

from c2mabt.environments import CONJUNCTIVE, CascadeEnv, PmcEnv, random_bipartite, random_digraph
from c2mabt.graphs import Bipartite, DiGraph
from c2mabt.model import one_hot_lift
from c2mabt.oracles import brute_force_best, greedy_coverage, greedy_im, greedy_im_spec, subsets, top_k

APPROX = 1 - 1 / math.e


def cascade(mu, k, form="disjunctive"):
    gt, ctx = one_hot_lift(mu)
    return CascadeEnv(ctx.features, gt, k, form)


def test_top_k_examples():
    assert top_k([0.9, 0.1, 0.5], 2).arms == (0, 2)
    assert top_k([0.3, 0.3, 0.3], 2).arms == (0, 1)
    assert top_k([0.2, 0.7, 0.5], 3).arms == (1, 2, 0)


def test_top_k_scale_invariant(rng):
    s = rng.random(30).round(2)  # rounding forces ties
    assert top_k(s, 5) == top_k(s * 3.7, 5)


def test_brute_force_examples():
    a, v = brute_force_best(cascade([0.9, 0.1, 0.5], 2), [0.9, 0.1, 0.5])
    assert set(a.arms) == {0, 2} and v == pytest.approx(0.95)
    a, v = brute_force_best(cascade([0.9, 0.1, 0.5], 2, CONJUNCTIVE), [0.9, 0.1, 0.5])
    assert set(a.arms) == {0, 2} and v == pytest.approx(0.45)
    g = Bipartite(2, 1, [(0, 0), (1, 0)])
    gt, ctx = one_hot_lift([0.5, 0.5])
    a, v = brute_force_best(PmcEnv(g, ctx.features, gt, 2), [0.5, 0.5])
    assert a.arms == (0, 1) and v == pytest.approx(0.75)


def test_brute_force_limit():
    with pytest.raises(ValueError):
        brute_force_best(cascade(np.full(10, 0.5), 5), np.full(10, 0.5), limit=10)


def test_greedy_coverage_first_step_and_modular():
    g = Bipartite(3, 3, [(0, 0), (1, 1), (1, 2), (2, 2)])
    mu = np.array([0.9, 0.6, 0.6, 0.1])
    assert greedy_coverage(mu, g, 1).arms == (1,)
    assert set(greedy_coverage(mu, g, 2).arms) == {0, 1}


def test_greedy_im_dag_and_full():
    g = DiGraph(4, [(0, 1), (1, 2), (3, 2)])
    assert greedy_im(np.ones(3), g, 1).arms == (0,)
    assert set(greedy_im(np.ones(3), g, 4).arms) == {0, 1, 2, 3}


def test_greedy_im_spec():
    assert greedy_im_spec(10, True).alpha == pytest.approx(APPROX)
    assert greedy_im_spec(10, False).alpha == pytest.approx(APPROX - 0.01)
    assert greedy_im_spec(10, True).beta == pytest.approx(0.1)


def test_greedy_coverage_guarantee_small(rng):
    for _ in range(20):
        g = random_bipartite(int(rng.integers(2, 7)), int(rng.integers(1, 6)), rng)
        mu = rng.random(g.num_edges)
        k = int(rng.integers(1, min(3, g.n_sources) + 1))
        best = max(g.coverage(s, mu) for s in subsets(g.n_sources, k))
        assert g.coverage(greedy_coverage(mu, g, k).arms, mu) >= APPROX * best - 1e-12


def test_greedy_im_mc_path_is_seeded():
    rng = np.random.default_rng(3)
    g = random_digraph(8, 25, rng)
    mu = rng.random(g.num_edges)
    a = greedy_im(mu, g, 2, 300, np.random.default_rng(1))
    b = greedy_im(mu, g, 2, 300, np.random.default_rng(1))
    assert not g.exact and a == b
