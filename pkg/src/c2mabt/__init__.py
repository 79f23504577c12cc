"""Contextual combinatorial bandits with probabilistically triggered arms."""
from .environments import (CONJUNCTIVE, DISJUNCTIVE, CascadeEnv, OimEnv, PmcEnv,
                           RatingMatrixCascadeEnv, builtin_env, env_from_dict, env_to_dict,
                           gen_synthetic_cascade)
from .harness import ExperimentConfig, PolicySpec, derive_seed, load_config, run_experiment
from .linalg import RegressionState
from .model import Action, FeatureContext, Feedback, LinearGroundTruth, embed_means, one_hot_lift
from .policies import BCUCBT, C2UCBT, CUCB, VAC2UCB, PolicyConfig, make_policy

__version__ = "0.1.0"

__all__ = [
    "Action", "BCUCBT", "C2UCBT", "CONJUNCTIVE", "CUCB", "CascadeEnv", "DISJUNCTIVE",
    "ExperimentConfig", "FeatureContext", "Feedback", "LinearGroundTruth", "OimEnv", "PmcEnv",
    "PolicyConfig", "PolicySpec", "RatingMatrixCascadeEnv", "RegressionState", "VAC2UCB",
    "builtin_env", "derive_seed", "embed_means", "env_from_dict", "env_to_dict",
    "gen_synthetic_cascade", "load_config", "make_policy", "one_hot_lift", "run_experiment",
]
