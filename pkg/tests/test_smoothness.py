import math

import numpy as np
import pytest

from c2mabt.environments import CONJUNCTIVE, CascadeEnv, random_cascade, random_pmc
from c2mabt.model import one_hot_lift
from c2mabt.smoothness import (check_monotonicity, check_tp_smoothness, check_tpm, check_tpvm, check_vm,
                               contract_check, evaluate, mc_expected_reward, mc_triggering_freq, replay,
                               tolerant_ratio)


def cascade(mu, k, form="disjunctive"):
    gt, ctx = one_hot_lift(mu)
    return CascadeEnv(ctx.features, gt, k, form)


def test_mono_example():
    env = cascade([0.2, 0.3], 2)
    lo, hi = evaluate(env, "mono", {}, {"action": [0, 1], "mu": [0.2, 0.3], "mu_prime": [0.3, 0.3]})
    assert lo == pytest.approx(0.44) and hi == pytest.approx(0.51)


def test_equal_means_pass():
    env = cascade([0.2, 0.3], 2)
    lhs, rhs = evaluate(env, "tpm", {"b1": 1.0}, {"action": [0, 1], "mu": [0.2, 0.3], "mu_prime": [0.2, 0.3]})
    assert lhs == 0 and rhs == 0 and tolerant_ratio(lhs, rhs) <= 1


def test_disjunctive_tpm_and_half_coefficient():
    env = random_cascade(8, 4, np.random.default_rng(0))
    assert check_tpm(env, 1.0, 2000, np.random.default_rng(1)).passed
    bad = check_tpm(env, 0.5, 2000, np.random.default_rng(1))
    assert not bad.passed and bad.worst_ratio > 1
    lhs, rhs = replay(env, bad)
    assert tolerant_ratio(lhs, rhs) == pytest.approx(bad.worst_ratio)


def test_pmc_vm_counterexample_replays():
    env = random_pmc(4, 4, 2, np.random.default_rng(2))
    rep = check_vm(env, 0.1, 0.0, 500, 4, np.random.default_rng(3))
    assert rep.verdict == "counterexample"
    assert tolerant_ratio(*replay(env, rep)) == pytest.approx(rep.worst_ratio)
    assert rep.to_dict()["counterexample"] is not None


def test_zero_split_reduces_to_l1():
    env = random_pmc(3, 3, 2, np.random.default_rng(4))
    mu = np.full(env.num_arms, 0.4)
    mu2 = np.full(env.num_arms, 0.6)
    base = {"action": [0, 1], "mu": mu.tolist(), "mu_prime": mu2.tolist()}
    _, rhs = evaluate(env, "vm", {"bv": 5.0, "b1": 1.0}, dict(base, zeta=[0.0] * env.num_arms,
                                                               eta=(mu2 - mu).tolist()))
    mask = env.triggerable(env.make_action([0, 1]))
    assert rhs == pytest.approx(0.2 * mask.sum())


def test_tpvm_lambda_zero_equals_vm():
    env = random_cascade(6, 3, np.random.default_rng(5))
    rng = np.random.default_rng(6)
    mu, mu2 = rng.uniform(0.1, 0.9, 6), rng.uniform(0.1, 0.9, 6)
    z = (mu2 - mu) * 0.3
    p = {"action": [4, 1, 2], "mu": mu.tolist(), "mu_prime": mu2.tolist(), "zeta": z.tolist(),
         "eta": (mu2 - mu - z).tolist()}
    _, vm = evaluate(env, "vm", {"bv": 1.0, "b1": 0.0}, p)
    _, tpvm = evaluate(env, "tpvm", {"bv": 1.0, "b1": 0.0, "lambda": 0.0}, p)
    assert vm == pytest.approx(tpvm)


def test_tp_smoothness_first_position_constant():
    env = cascade([0.3, 0.4, 0.5], 3)
    lhs, _ = evaluate(env, "tp-smooth", {"bp": 1.0},
                      {"action": [2, 0, 1], "mu": [0.3, 0.4, 0.5], "mu_prime": [0.9, 0.1, 0.0], "arm": 2})
    assert lhs == 0.0


def test_small_suite_passes():
    rng = np.random.default_rng(7)
    dis = random_cascade(8, 4, rng)
    con = random_cascade(8, 4, rng, CONJUNCTIVE)
    assert check_tpvm(dis, 1, 1, 2, 500, 4, rng).passed
    assert check_tpvm(con, 1, 1, 1, 500, 4, rng).passed
    assert check_tp_smoothness(dis, 1, 500, rng).passed
    assert check_tp_smoothness(con, 1, 500, rng).passed
    assert check_monotonicity(con, 500, rng).passed
    pmc = random_pmc(4, 4, 2, rng)
    assert check_vm(pmc, 3 * math.sqrt(8), 1, 500, 4, rng).passed


def test_mc_helpers():
    env = cascade([0.5, 0.5], 2)
    a = env.make_action([0, 1])
    rng = np.random.default_rng(0)
    est, se = mc_expected_reward(env, a, 100_000, rng)
    assert abs(est - 0.75) <= 4 * se
    freq, fse = mc_triggering_freq(env, a, 100_000, rng)
    assert freq[0] == 1.0 and abs(freq[1] - 0.5) <= 4 * fse[1]
    pmc = random_pmc(3, 3, 1, rng)
    a = pmc.random_action(rng)
    freq, _ = mc_triggering_freq(pmc, a, 1000, rng)
    assert np.array_equal(freq, pmc.triggerable(a).astype(float))
    res = contract_check(pmc, a, 20_000, rng)
    assert res["passed"]
