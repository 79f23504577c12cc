"""Command-line entry point: ``run``, ``gen``, ``check`` and ``contract``.

Exit codes: 0 on success or pass, 1 when a counterexample or failed contract
is found, 2 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import environments as envs
from .harness import ConfigError, load_config, run_experiment
from .io import DataFormatError
from .smoothness import (CONDITIONS, check_monotonicity, check_tp_smoothness, check_tpm,
                         check_tpvm, check_vm, contract_check)

EXIT_OK, EXIT_FOUND, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_env(spec: str, rng):
    if spec in envs.BUILTIN_NAMES:
        return envs.builtin_env(spec, rng)
    path = Path(spec)
    if not path.is_file():
        raise ConfigError(f"--env: not a builtin ({', '.join(envs.BUILTIN_NAMES)}) or existing file: {spec}")
    try:
        return envs.env_from_dict(json.loads(path.read_text()))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"{spec}: malformed environment file ({exc})") from None


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = args.out or cfg.output_dir
    if out is None:
        raise ConfigError("no output directory: pass --out or set output_dir")
    result = run_experiment(cfg, out, workers=args.workers)
    for row in result.summary:
        print(f"{row['policy']}: mean cumulative regret {row['mean_cum'][-1]:.3f} "
              f"(std {row['std_cum'][-1]:.3f}) at T={cfg.horizon}")
    if result.contract and not all(c["passed"] for c in result.contract):
        print("contract check FAILED (see manifest.json)")
        return EXIT_FOUND
    return EXIT_OK


def cmd_gen(args) -> int:
    rng = np.random.default_rng(args.seed)
    env, _ = envs.gen_synthetic_cascade(args.m, args.k, args.d, rng, args.form, shuffle=args.shuffle)
    Path(args.out).write_text(json.dumps(envs.env_to_dict(env)) + "\n")
    print(f"wrote {args.kind} instance (m={args.m}, K={args.k}, d={args.d}) to {args.out}")
    return EXIT_OK


def cmd_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    env = _load_env(args.env, rng)
    c = args.condition
    if c == "mono":
        report = check_monotonicity(env, args.trials, rng)
    elif c == "tpm":
        report = check_tpm(env, args.b1, args.trials, rng)
    elif c == "vm":
        report = check_vm(env, args.bv, args.b1, args.trials, args.decomps, rng)
    elif c == "tpvm":
        report = check_tpvm(env, args.bv, args.b1, args.lam, args.trials, args.decomps, rng)
    else:
        report = check_tp_smoothness(env, args.bp, args.trials, rng)
    print(report.to_json(indent=1))
    return EXIT_OK if report.passed else EXIT_FOUND


def cmd_contract(args) -> int:
    rng = np.random.default_rng(args.seed)
    env = _load_env(args.env, rng)
    results = [contract_check(env, env.random_action(rng), args.samples, rng) for _ in range(args.actions)]
    print(json.dumps(results, indent=1))
    return EXIT_OK if all(r["passed"] for r in results) else EXIT_FOUND


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="c2mabt", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a TOML-configured regret experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--out")
    run.add_argument("--workers", type=int, default=1)
    run.set_defaults(func=cmd_run)

    gen = sub.add_parser("gen", help="write a synthetic cascade instance as JSON")
    gen.add_argument("--kind", choices=["cascade-synthetic"], default="cascade-synthetic")
    gen.add_argument("--m", type=int, required=True)
    gen.add_argument("--k", type=int, required=True)
    gen.add_argument("--d", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--form", choices=[envs.DISJUNCTIVE, envs.CONJUNCTIVE], default=envs.DISJUNCTIVE)
    gen.add_argument("--no-shuffle", dest="shuffle", action="store_false",
                     help="keep the best items at indices 0..K-1")
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen)

    chk = sub.add_parser("check", help="falsify a smoothness condition numerically")
    chk.add_argument("--env", required=True, help=f"JSON file or one of {', '.join(envs.BUILTIN_NAMES)}")
    chk.add_argument("--condition", required=True, choices=CONDITIONS)
    chk.add_argument("--b1", type=float, default=1.0)
    chk.add_argument("--bv", type=float, default=1.0)
    chk.add_argument("--lambda", dest="lam", type=float, default=1.0)
    chk.add_argument("--bp", type=float, default=1.0)
    chk.add_argument("--decomps", type=int, default=8)
    chk.add_argument("--trials", type=int, default=1000)
    chk.add_argument("--seed", type=int, default=0)
    chk.set_defaults(func=cmd_check)

    con = sub.add_parser("contract", help="Monte Carlo check of analytic reward and triggering")
    con.add_argument("--env", required=True)
    con.add_argument("--samples", type=int, default=100_000)
    con.add_argument("--actions", type=int, default=5)
    con.add_argument("--seed", type=int, default=0)
    con.set_defaults(func=cmd_contract)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DataFormatError, ValueError) as exc:
        print(f"c2mabt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
