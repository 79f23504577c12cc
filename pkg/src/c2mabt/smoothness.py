"""Numerical falsification of the reward smoothness conditions.

Each check draws random actions and mean-vector pairs, evaluates both sides
of the inequality with the environment's analytic ``r(S; mu)`` and
``p_i^{mu,S}``, and keeps the worst ratio.  A pass means no violation was
found in the sampled set, not a proof.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .model import Action

REL_TOL = 1e-9
ABS_TOL = 1e-12
VAR_LOW, VAR_HIGH = 0.05, 0.95

CONDITIONS = ("mono", "tpm", "vm", "tpvm", "tp-smooth")


@dataclass
class ConditionReport:
    condition: str
    coefficients: dict
    trials: int
    verdict: str
    worst_ratio: float
    counterexample: dict | None = None
    worst_case: dict | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def tolerant_ratio(lhs: float, rhs: float) -> float:
    """``lhs / rhs`` with the violation tolerance folded in; > 1 means violated."""
    return lhs / (rhs * (1 + REL_TOL) + ABS_TOL)


def _action_from(env, payload) -> Action:
    return Action(tuple(payload["action"]), env.semantics)


def evaluate(env, condition: str, coefficients: dict, payload: dict) -> tuple[float, float]:
    """Left- and right-hand side of ``condition`` for one sampled case.

    ``payload`` holds ``action``, ``mu``, ``mu_prime`` and, depending on the
    condition, ``zeta``/``eta`` or ``arm``.
    """
    action = _action_from(env, payload)
    mu = np.asarray(payload["mu"], dtype=float)
    mu2 = np.asarray(payload["mu_prime"], dtype=float)
    if condition == "mono":
        return env.expected_reward(action, mu), env.expected_reward(action, mu2)
    p = env.triggering_probs(action, mu)
    if condition == "tp-smooth":
        i = payload["arm"]
        lhs = abs(env.triggering_probs(action, mu2)[i] - p[i])
        return lhs, coefficients["bp"] * float(p @ np.abs(mu2 - mu))
    lhs = abs(env.expected_reward(action, mu2) - env.expected_reward(action, mu))
    if condition == "tpm":
        return lhs, coefficients["b1"] * float(p @ np.abs(mu2 - mu))
    zeta = np.asarray(payload["zeta"], dtype=float)
    eta = np.asarray(payload["eta"], dtype=float)
    return lhs, _variance_rhs(env, condition, coefficients, action, mu, p, zeta[None, :], eta[None, :])[0]


def _variance_rhs(env, condition, coefficients, action, mu, p, zeta, eta) -> np.ndarray:
    """Right-hand side of VM/TPVM for a batch of decompositions (rows)."""
    support = env.triggerable(action)
    var = (1 - mu) * mu
    if condition == "vm":
        w_var = support.astype(float)
        w_lin = support.astype(float)
    else:
        lam = coefficients["lambda"]
        pp = np.where(support, p, 0.0)
        # 0**0 would wrongly switch on arms outside the support
        w_var = np.where(support, pp ** lam, 0.0)
        w_lin = pp
    with np.errstate(divide="ignore", invalid="ignore"):
        quad = np.where(w_var > 0, w_var * zeta**2 / var, 0.0).sum(axis=1)
    return coefficients["bv"] * np.sqrt(quad) + coefficients["b1"] * (np.abs(eta) * w_lin).sum(axis=1)


def _perturb(mu, rng, low=0.0, high=1.0, mode=0):
    """Second mean vector: fresh draw, a sparse change, or a single coordinate."""
    m = mu.shape[0]
    mu2 = mu.copy()
    if mode == 0:
        mu2 = rng.uniform(low, high, size=m)
    elif mode == 1:
        mask = rng.random(m) < 0.5
        mu2[mask] = rng.uniform(low, high, size=mask.sum())
    else:
        j = rng.integers(m)
        mu2[j] = rng.uniform(low, high)
    return mu2


def _payload(action, mu, mu2, **extra) -> dict:
    out = {"action": list(action.arms), "mu": mu.tolist(), "mu_prime": mu2.tolist()}
    out.update({k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in extra.items()})
    return out


class _Tracker:
    def __init__(self):
        self.worst = -math.inf
        self.worst_case = None
        self.counterexample = None
        self.first_ratio = None

    def see(self, ratio, make_payload):
        if ratio > self.worst:
            self.worst = ratio
            self.worst_case = make_payload()
            if ratio > 1:
                self.counterexample = self.worst_case

    def report(self, condition, coefficients, trials) -> ConditionReport:
        worst = max(self.worst, 0.0)
        verdict = "counterexample" if self.counterexample is not None else "pass"
        return ConditionReport(condition, dict(coefficients), trials, verdict, float(worst),
                               self.counterexample, self.worst_case)


def check_monotonicity(env, trials: int, rng: np.random.Generator) -> ConditionReport:
    tr = _Tracker()
    m = env.num_arms
    for _ in range(trials):
        action = env.random_action(rng)
        mu = rng.random(m)
        lift = rng.random(m) * (1 - mu) * (rng.random(m) < 0.7)
        mu2 = np.minimum(mu + lift, 1.0)
        lo, hi = env.expected_reward(action, mu), env.expected_reward(action, mu2)
        tr.see(tolerant_ratio(lo, hi), lambda: _payload(action, mu, mu2))
    return tr.report("mono", {}, trials)


def check_tpm(env, b1: float, trials: int, rng: np.random.Generator) -> ConditionReport:
    tr = _Tracker()
    coeffs = {"b1": b1}
    for n in range(trials):
        action = env.random_action(rng)
        mu = rng.random(env.num_arms)
        mu2 = _perturb(mu, rng, mode=n % 3)
        payload = _payload(action, mu, mu2)
        lhs, rhs = evaluate(env, "tpm", coeffs, payload)
        tr.see(tolerant_ratio(lhs, rhs), lambda: payload)
    return tr.report("tpm", coeffs, trials)


def _check_variance(env, condition, coeffs, trials, decomps_per_trial, rng):
    tr = _Tracker()
    m = env.num_arms
    for n in range(trials):
        action = env.random_action(rng)
        mu = rng.uniform(VAR_LOW, VAR_HIGH, size=m)
        mu2 = _perturb(mu, rng, VAR_LOW, VAR_HIGH, mode=n % 3)
        diff = mu2 - mu
        split = np.vstack([np.zeros(m), np.ones(m), rng.random((decomps_per_trial, m))])
        zeta = split * diff
        eta = diff - zeta
        lhs = abs(env.expected_reward(action, mu2) - env.expected_reward(action, mu))
        rhs = _variance_rhs(env, condition, coeffs, action, mu, env.triggering_probs(action, mu), zeta, eta)
        ratios = lhs / (rhs * (1 + REL_TOL) + ABS_TOL)
        j = int(np.argmax(ratios))
        tr.see(float(ratios[j]), lambda: _payload(action, mu, mu2, zeta=zeta[j], eta=eta[j]))
    return tr.report(condition, coeffs, trials)


def check_vm(env, bv: float, b1: float, trials: int, decomps_per_trial: int,
             rng: np.random.Generator) -> ConditionReport:
    return _check_variance(env, "vm", {"bv": bv, "b1": b1}, trials, decomps_per_trial, rng)


def check_tpvm(env, bv: float, b1: float, lam: float, trials: int, decomps_per_trial: int,
               rng: np.random.Generator) -> ConditionReport:
    return _check_variance(env, "tpvm", {"bv": bv, "b1": b1, "lambda": lam}, trials, decomps_per_trial, rng)


def check_tp_smoothness(env, bp: float, trials: int, rng: np.random.Generator) -> ConditionReport:
    tr = _Tracker()
    coeffs = {"bp": bp}
    for n in range(trials):
        action = env.random_action(rng)
        mu = rng.random(env.num_arms)
        mu2 = _perturb(mu, rng, mode=n % 3)
        p1 = env.triggering_probs(action, mu)
        p2 = env.triggering_probs(action, mu2)
        rhs = bp * float(p1 @ np.abs(mu2 - mu))
        gaps = np.abs(p2 - p1)
        i = int(np.argmax(gaps))
        tr.see(tolerant_ratio(float(gaps[i]), rhs), lambda: _payload(action, mu, mu2, arm=i))
    return tr.report("tp-smooth", coeffs, trials)


def replay(env, report: ConditionReport, payload: dict | None = None) -> tuple[float, float]:
    """Re-evaluate a stored case; defaults to the report's counterexample."""
    payload = report.counterexample if payload is None else payload
    if payload is None:
        raise ValueError("report has no counterexample to replay")
    return evaluate(env, report.condition, report.coefficients, payload)


# -- Monte Carlo contract ------------------------------------------------------

def mc_expected_reward(env, action, n: int, rng: np.random.Generator) -> tuple[float, float]:
    rewards, _ = env.sample_many(action, env.true_means(), n, rng)
    return float(rewards.mean()), float(rewards.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0


def mc_triggering_freq(env, action, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    _, triggered = env.sample_many(action, env.true_means(), n, rng)
    freq = triggered.mean(axis=0)
    return freq, np.sqrt(freq * (1 - freq) / n)


def contract_check(env, action, n: int, rng: np.random.Generator, z: float = 4.0) -> dict:
    """Compare Monte Carlo reward and trigger frequencies with analytic values.

    Reward uses the sample standard error.  Trigger frequencies use the
    standard error implied by the analytic probability, which stays positive
    for rare-but-possible triggers.
    """
    rewards, triggered = env.sample_many(action, env.true_means(), n, rng)
    r_hat = float(rewards.mean())
    r_se = float(rewards.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    r_true = env.true_expected_reward(action)
    freq = triggered.mean(axis=0)
    p_true = np.clip(env.true_triggering_probs(action), 0.0, 1.0)
    p_se = np.sqrt(p_true * (1 - p_true) / n)
    reward_ok = abs(r_hat - r_true) <= z * r_se + 1e-9
    trig_ok = bool(np.all(np.abs(freq - p_true) <= z * p_se + 1e-12))
    return {
        "action": list(action.arms),
        "reward_estimate": r_hat,
        "reward_stderr": r_se,
        "reward_analytic": r_true,
        "max_trigger_gap_se": float(np.max(np.abs(freq - p_true) / np.maximum(p_se, 1e-300),
                                           initial=0.0, where=p_se > 0)),
        "reward_ok": bool(reward_ok),
        "triggering_ok": trig_ok,
        "passed": bool(reward_ok and trig_ok),
    }
