import json
import warnings

import numpy as np
import pytest

from c2mabt.environments import CascadeEnv, random_cascade
from c2mabt.harness import (ConfigError, ExperimentConfig, RegretReference, build_env, derive_seed,
                            load_config, run_experiment, run_policy, window_regret)
from c2mabt.io import (DataFormatError, ingest_features, ingest_ratings, read_bipartite, read_digraph,
                       write_bipartite, write_digraph)
from c2mabt.graphs import Bipartite, DiGraph
from c2mabt.model import one_hot_lift
from c2mabt.oracles import brute_force_best
from c2mabt.policies import C2UCBT, PolicyConfig

from conftest import RotatingContext


class Fixed:
    def __init__(self, env, arms):
        self.action = env.make_action(arms)

    def select(self, ctx):
        return self.action

    def update(self, ctx, fb):
        pass


def test_derive_seed_pinned():
    assert derive_seed(0, 0, 0) == 0x238275BC38FCBE91
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert 0 <= derive_seed(2**70, 5, 6) < 2**64


def test_derive_seed_no_collisions():
    rng = np.random.default_rng(0)
    triples = {tuple(int(v) for v in t) for t in rng.integers(0, 2**31, size=(10_000, 3))}
    assert len({derive_seed(*t) for t in triples}) == len(triples)
    grid = {derive_seed(b, p, r) for b in range(20) for p in range(20) for r in range(25)}
    assert len(grid) == 20 * 20 * 25


def test_regret_example():
    gt, ctx = one_hot_lift([0.9, 0.1, 0.5])
    env = CascadeEnv(ctx.features, gt, 2)
    ref = RegretReference(env, "brute-force")
    inst, actions, _ = run_policy(env, Fixed(env, [1, 2]), 3, np.random.default_rng(0), ref)
    assert np.allclose(inst, 0.40) and actions == ["1-2"] * 3
    inst, _, _ = run_policy(env, Fixed(env, [0, 2]), 3, np.random.default_rng(0), ref)
    assert np.all(inst == 0.0)


def test_regret_nonnegative_with_brute_force():
    env = RotatingContext(random_cascade(7, 3, np.random.default_rng(1)))
    ref = RegretReference(env, "brute-force")
    pol = C2UCBT(PolicyConfig(60, 3, env.dim, exploration_scale=0.1), env.oracle)
    means = []
    inst, _, _ = run_policy(env, pol, 60, np.random.default_rng(2), ref,
                            monitor=lambda t, ctx, p, mu, a: means.append(mu))
    assert np.all(inst >= -1e-12)
    # rotation permutes arms: the optimal slate moves, its value does not
    assert not np.allclose(means[0], means[1])
    assert len({brute_force_best(env, mu)[0] for mu in means}) > 1


def test_brute_force_infeasible():
    env = random_cascade(40, 10, np.random.default_rng(0))
    with pytest.raises(ConfigError):
        RegretReference(env, "brute-force")
    assert RegretReference(env, "greedy-on-true-means").value(env.true_means()) > 0


def test_window_regret():
    curve = np.arange(1, 11, dtype=float)
    assert window_regret(curve, 0.0, 0.1) == 1.0
    assert window_regret(curve, 0.9, 1.0) == 1.0


def write_config(tmp_path, body):
    p = tmp_path / "exp.toml"
    p.write_text(body)
    return p


BASE = """
horizon = 40
seeds = [3, 4]
[env]
kind = "cascade-synthetic"
m = 8
k = 2
d = 3
[[policies]]
kind = "c2ucbt"
exploration_scale = 0.1
[[policies]]
kind = "cucb"
"""


def test_run_experiment_outputs(tmp_path):
    cfg = load_config(write_config(tmp_path, BASE))
    res = run_experiment(cfg, tmp_path / "out")
    files = sorted(p.name for p in (tmp_path / "out" / "runs").iterdir())
    assert files == ["c2ucbt_seed3.csv", "c2ucbt_seed4.csv", "cucb_seed3.csv", "cucb_seed4.csv"]
    lines = (tmp_path / "out" / "runs" / "cucb_seed3.csv").read_text().splitlines()
    assert lines[0] == "round,inst_regret,cum_regret,action" and len(lines) == 41
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    for row in summary:
        curves = np.array([res.traces[k].cum_regret for k in res.traces
                           if res.traces[k].policy == row["policy"]])
        assert np.allclose(row["mean_cum"], curves.mean(axis=0), atol=1e-12)
        assert row["rounds"] == list(range(1, 41))
        assert np.all(np.diff(row["mean_cum"]) >= 0)


@pytest.mark.parametrize("extra,msg", [("bogus = 1\n", "unknown config keys"),
                                       ("regret_reference = 'oracle'\n", "regret_reference")])
def test_config_errors(tmp_path, extra, msg):
    with pytest.raises(ConfigError, match=msg):
        load_config(write_config(tmp_path, extra + BASE))


def test_config_unknown_env_and_policy_keys(tmp_path):
    with pytest.raises(ConfigError, match="env keys"):
        load_config(write_config(tmp_path, BASE.replace("d = 3", "d = 3\ncolour = 1")))
    with pytest.raises(ConfigError, match="policy keys"):
        load_config(write_config(tmp_path, BASE.replace('kind = "cucb"', 'kind = "cucb"\nrho = 1')))
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, BASE.replace("seeds = [3, 4]", "seeds = []")))


def test_config_missing_file(tmp_path):
    body = BASE.replace('kind = "cascade-synthetic"\nm = 8\nk = 2\nd = 3',
                        'kind = "env-file"\npath = "missing.json"')
    with pytest.raises(ConfigError, match="not found"):
        load_config(write_config(tmp_path, body))


def test_graph_env_from_files(tmp_path):
    write_bipartite(tmp_path / "g.txt", Bipartite(3, 2, [(0, 0), (1, 0), (2, 1)]))
    write_digraph(tmp_path / "d.txt", DiGraph(4, [(0, 1), (1, 2), (2, 3)]))
    pmc = build_env({"kind": "pmc", "graph": str(tmp_path / "g.txt"), "k": 2})
    oim = build_env({"kind": "oim", "graph": str(tmp_path / "d.txt"), "k": 1, "d": 3})
    assert pmc.num_arms == 3 and oim.num_arms == 3 and oim.dim == 3


def test_ingest_features(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("item_id,f1,f2\n1,0.0,0.5\n0,0.6,0.8\n2,2.0,0.0\n")
    with pytest.warns(UserWarning):
        x = ingest_features(p)
    assert x.shape == (3, 2) and np.allclose(x[0], [0.6, 0.8]) and np.allclose(x[2], [1.0, 0.0])
    p.write_text("item_id,f1\n0,0.1,0.2\n")
    with pytest.raises(DataFormatError):
        ingest_features(p)
    p.write_text("")
    with pytest.raises(DataFormatError):
        ingest_features(p)


def test_ingest_ratings(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("item_id,user_id\n0,0\n0,1\n1,0\n")
    r = ingest_ratings(p)
    assert np.allclose(r.mean(axis=1), [1.0, 0.5])
    with pytest.raises(DataFormatError):
        ingest_ratings(p, n_items=1)


def test_rating_matrix_config(tmp_path):
    (tmp_path / "f.csv").write_text("item_id,f1\n0,1\n1,1\n2,1\n")
    (tmp_path / "r.csv").write_text("0,0\n1,1\n2,2\n0,3\n")
    body = BASE.replace('kind = "cascade-synthetic"\nm = 8\nk = 2\nd = 3',
                        'kind = "rating-matrix"\nfeatures = "f.csv"\nratings = "r.csv"\nk = 2')
    cfg = load_config(write_config(tmp_path, body))
    env = build_env(cfg.env)
    assert np.allclose(env.true_means(), [0.5, 0.25, 0.25])


def test_graph_readers_reject_garbage(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("0 1 2\n")
    with pytest.raises(DataFormatError):
        read_digraph(p)
    p.write_text("0 1\n")
    with pytest.raises(DataFormatError):
        read_bipartite(p)
