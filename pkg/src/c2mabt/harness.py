"""Seeded regret experiments.

A run pairs one policy with one seed: fresh environment and policy, then
``T`` rounds of context -> select -> play -> update.  Regret is always
computed from analytic expected rewards, never from realized rewards.
"""
from __future__ import annotations

import csv
import io as _io
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import environments as envs
from . import io
from .model import embed_means, one_hot_lift
from .oracles import BRUTE_FORCE_LIMIT, brute_force_best
from .policies import POLICY_KINDS, PolicyConfig, make_policy
from .smoothness import contract_check

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1
REFERENCES = ("brute-force", "greedy-on-true-means")


class ConfigError(ValueError):
    pass


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(base_seed: int, policy_index: int, run_index: int) -> int:
    """64-bit stream seed: splitmix64 applied to base, then xor-chained with
    the policy and run indices (each step is a bijection)."""
    x = _splitmix64(base_seed & _MASK64)
    x = _splitmix64(x ^ (policy_index & _MASK64))
    return _splitmix64(x ^ (run_index & _MASK64))


# -- configuration ---------------------------------------------------------------

@dataclass(frozen=True)
class PolicySpec:
    kind: str
    id: str = ""
    gamma: float | None = None
    delta: float | None = None
    exploration_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ConfigError(f"unknown policy kind {self.kind!r}")
        if not self.id:
            object.__setattr__(self, "id", self.kind)

    def policy_config(self, horizon, batch_size, dim) -> PolicyConfig:
        return PolicyConfig(horizon, batch_size, dim, self.gamma, self.delta, self.exploration_scale)


_ENV_KEYS = {
    "cascade-synthetic": ({"m", "k", "d"}, {"kind", "instance_seed", "form", "shuffle"}),
    "env-file": ({"path"}, {"kind"}),
    "rating-matrix": ({"features", "ratings", "k"}, {"kind", "n_users"}),
    "pmc": ({"graph", "k"}, {"kind", "instance_seed", "mu_low", "mu_high", "d"}),
    "oim": ({"graph", "k"}, {"kind", "instance_seed", "mu_low", "mu_high", "d", "mc_samples"}),
}
_PATH_KEYS = {"path", "features", "ratings", "graph"}
_TOP_KEYS = {"env", "policies", "horizon", "seeds", "regret_reference", "output_dir", "mc_contract_checks"}
_POLICY_KEYS = {"kind", "id", "gamma", "delta", "exploration_scale"}


@dataclass
class ExperimentConfig:
    env: dict
    policies: list
    horizon: int
    seeds: list
    regret_reference: str = "brute-force"
    output_dir: str | None = None
    mc_contract_checks: bool = False

    def __post_init__(self):
        self.policies = [p if isinstance(p, PolicySpec) else PolicySpec(**p) for p in self.policies]
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ConfigError("horizon must be a positive integer")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        if not self.policies:
            raise ConfigError("need at least one policy")
        ids = [p.id for p in self.policies]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate policy ids {ids}")
        if self.regret_reference not in REFERENCES:
            raise ConfigError(f"regret_reference must be one of {REFERENCES}")
        kind = self.env.get("kind")
        if kind not in _ENV_KEYS:
            raise ConfigError(f"unknown env kind {kind!r}; choose from {sorted(_ENV_KEYS)}")
        required, optional = _ENV_KEYS[kind]
        missing = required - set(self.env)
        unknown = set(self.env) - required - optional
        if missing:
            raise ConfigError(f"env is missing keys {sorted(missing)}")
        if unknown:
            raise ConfigError(f"unknown env keys {sorted(unknown)}")
        for key in _PATH_KEYS & set(self.env):
            if not Path(self.env[key]).is_file():
                raise ConfigError(f"env.{key}: file not found: {self.env[key]}")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    for key in ("env", "policies", "horizon", "seeds"):
        if key not in data:
            raise ConfigError(f"missing config key {key!r}")
    env = dict(data["env"])
    for key in _PATH_KEYS & set(env):
        p = Path(env[key])
        env[key] = str(p if p.is_absolute() else path.parent / p)
    policies = []
    for spec in data["policies"]:
        bad = set(spec) - _POLICY_KEYS
        if bad:
            raise ConfigError(f"unknown policy keys {sorted(bad)}")
        if "kind" not in spec:
            raise ConfigError("policy entry needs a kind")
        policies.append(PolicySpec(**spec))
    try:
        return ExperimentConfig(env, policies, data["horizon"], list(data["seeds"]),
                                data.get("regret_reference", "brute-force"),
                                data.get("output_dir"), bool(data.get("mc_contract_checks", False)))
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _edge_env(spec, graph_reader, env_cls, **extra):
    graph = graph_reader(spec["graph"])
    rng = np.random.default_rng(spec.get("instance_seed", 0))
    mu = rng.uniform(spec.get("mu_low", 0.05), spec.get("mu_high", 0.95), size=graph.num_edges)
    d = spec.get("d")
    gt, ctx = one_hot_lift(mu) if d is None else embed_means(mu, d, rng)
    return env_cls(graph, ctx.features, gt, spec["k"], **extra)


def build_env(spec: dict):
    kind = spec["kind"]
    if kind == "cascade-synthetic":
        rng = np.random.default_rng(spec.get("instance_seed", 0))
        env, _ = envs.gen_synthetic_cascade(spec["m"], spec["k"], spec["d"], rng,
                                            spec.get("form", envs.DISJUNCTIVE), spec.get("shuffle", True))
        return env
    if kind == "env-file":
        return envs.env_from_dict(json.loads(Path(spec["path"]).read_text()))
    if kind == "rating-matrix":
        feats = io.ingest_features(spec["features"])
        ratings = io.ingest_ratings(spec["ratings"], n_items=feats.shape[0], n_users=spec.get("n_users"))
        return envs.RatingMatrixCascadeEnv(feats, ratings, spec["k"])
    if kind == "pmc":
        return _edge_env(spec, io.read_bipartite, envs.PmcEnv)
    if kind == "oim":
        return _edge_env(spec, io.read_digraph, envs.OimEnv, mc_samples=spec.get("mc_samples", 2000))
    raise ConfigError(f"unknown env kind {kind!r}")


# -- running -----------------------------------------------------------------------

@dataclass
class RegretTrace:
    policy: str
    seed: int
    inst_regret: np.ndarray
    actions: list
    realized_reward: float = 0.0
    wall_ms: float = 0.0
    stream_seed: int = 0

    @property
    def cum_regret(self) -> np.ndarray:
        # negative rounds (possible under an approximate reference) are floored
        return np.cumsum(np.maximum(self.inst_regret, 0.0))

    def to_csv(self) -> str:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "inst_regret", "cum_regret", "action"])
        for t, (r, c, a) in enumerate(zip(self.inst_regret, self.cum_regret, self.actions), start=1):
            w.writerow([t, repr(float(r)), repr(float(c)), a])
        return buf.getvalue()


class RegretReference:
    """Per-round benchmark value ``alpha*beta * r(S*_t; mu_t)``."""

    def __init__(self, env, mode: str, limit: int = BRUTE_FORCE_LIMIT):
        if mode not in REFERENCES:
            raise ConfigError(f"unknown regret reference {mode!r}")
        if mode == "brute-force" and env.action_count() > limit:
            raise ConfigError(f"brute-force reference infeasible: {env.action_count()} actions > {limit}")
        self.env = env
        self.mode = mode
        self._cache = {}

    def value(self, mu) -> float:
        key = np.asarray(mu).tobytes()
        hit = self._cache.get(key)
        if hit is None:
            if self.mode == "brute-force":
                _, best = brute_force_best(self.env, mu)
                hit = best
            else:
                alpha, beta = self.env.alpha_beta()
                hit = alpha * beta * self.env.expected_reward(self.env.oracle(mu), mu)
            self._cache[key] = hit
        return hit


def run_policy(env, policy, horizon: int, rng: np.random.Generator, reference: RegretReference,
               monitor=None) -> tuple[np.ndarray, list, float]:
    """Core protocol loop; ``monitor(t, ctx, policy, mu, action)`` sees every round."""
    inst = np.empty(horizon)
    actions = []
    realized = 0.0
    for t in range(1, horizon + 1):
        ctx = env.context(t, rng)
        mu = env.means(ctx) if ctx is not env._ctx else env.true_means(t)
        action = env.make_action(policy.select(ctx))
        if monitor is not None:
            monitor(t, ctx, policy, mu, action)
        fb = env.play(t, action, rng)
        policy.update(ctx, fb)
        inst[t - 1] = reference.value(mu) - env.expected_reward(action, mu)
        actions.append(action.label())
        realized += fb.realized_reward
    return inst, actions, realized


def run_one(cfg: ExperimentConfig, policy_index: int, run_index: int) -> RegretTrace:
    spec = cfg.policies[policy_index]
    seed = cfg.seeds[run_index]
    stream = derive_seed(seed, policy_index, run_index)
    env = build_env(cfg.env)
    reference = RegretReference(env, cfg.regret_reference)
    policy = make_policy(spec.kind, spec.policy_config(cfg.horizon, env.batch_size, env.dim),
                         env.num_arms, env.oracle)
    start = time.perf_counter()
    inst, actions, realized = run_policy(env, policy, cfg.horizon, np.random.default_rng(stream), reference)
    wall = (time.perf_counter() - start) * 1e3
    return RegretTrace(spec.id, seed, inst, actions, realized, wall, stream)


def _run_job(args):
    return args[1:], run_one(*args)


def run_contract_checks(env, rng, actions: int = 5, samples: int = 20_000) -> list:
    return [contract_check(env, env.random_action(rng), samples, rng) for _ in range(actions)]


@dataclass
class ExperimentResult:
    traces: dict
    summary: list
    contract: list = field(default_factory=list)


def summarize(cfg: ExperimentConfig, traces: dict) -> list:
    out = []
    for pi, spec in enumerate(cfg.policies):
        curves = np.array([traces[pi, ri].cum_regret for ri in range(len(cfg.seeds))])
        out.append({
            "policy": spec.id,
            "rounds": list(range(1, cfg.horizon + 1)),
            "mean_cum": curves.mean(axis=0).tolist(),
            "std_cum": curves.std(axis=0).tolist(),
        })
    return out


def run_experiment(cfg: ExperimentConfig, out_dir=None, workers: int = 1) -> ExperimentResult:
    """Run every (policy, seed) pair and write CSV/JSON outputs if ``out_dir``."""
    jobs = [(cfg, pi, ri) for pi in range(len(cfg.policies)) for ri in range(len(cfg.seeds))]
    contract = []
    if cfg.mc_contract_checks:
        env = build_env(cfg.env)
        contract = run_contract_checks(env, np.random.default_rng(derive_seed(cfg.seeds[0], 2**32, 0)))
        if not all(c["passed"] for c in contract):
            log.warning("Monte Carlo contract check failed for %s", cfg.env["kind"])
    traces = {}
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for key, trace in pool.map(_run_job, jobs):
                traces[key] = trace
    else:
        for job in jobs:
            key, trace = _run_job(job)
            traces[key] = trace
    result = ExperimentResult(traces, summarize(cfg, traces), contract)
    out_dir = out_dir if out_dir is not None else cfg.output_dir
    if out_dir is not None:
        write_outputs(cfg, result, Path(out_dir))
    return result


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def write_outputs(cfg: ExperimentConfig, result: ExperimentResult, out: Path) -> None:
    runs = out / "runs"
    runs.mkdir(parents=True, exist_ok=True)
    manifest = []
    for (pi, ri) in sorted(result.traces):
        tr = result.traces[pi, ri]
        name = f"{tr.policy}_seed{tr.seed}.csv"
        (runs / name).write_text(tr.to_csv())
        manifest.append({"policy": tr.policy, "seed": tr.seed, "stream_seed": tr.stream_seed,
                         "file": f"runs/{name}", "final_cum_regret": float(tr.cum_regret[-1]),
                         "realized_reward": tr.realized_reward})
    (out / "summary.json").write_text(_dump(result.summary))
    (out / "manifest.json").write_text(_dump({"horizon": cfg.horizon, "env": cfg.env,
                                              "regret_reference": cfg.regret_reference,
                                              "runs": manifest, "contract": result.contract}))


def final_mean_regret(result: ExperimentResult, policy_id: str) -> float:
    for row in result.summary:
        if row["policy"] == policy_id:
            return row["mean_cum"][-1]
    raise KeyError(policy_id)


def window_regret(curve, lo: float, hi: float) -> float:
    """Regret accrued in rounds ``(lo*T, hi*T]`` of a cumulative curve."""
    curve = np.asarray(curve)
    n = curve.shape[0]
    a, b = int(math.floor(lo * n)), int(math.floor(hi * n))
    return float(curve[b - 1] - (curve[a - 1] if a > 0 else 0.0))
