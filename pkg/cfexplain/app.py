"""Command-line application: subcommand parsing and dispatch."""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from .errors import CfExplainError, InvalidTrajectoryError
from .models.episodes import EpisodeLog, Vocabulary
from .models.mdp import Mdp, Trajectory, outcome, require_valid_trajectory
from .models.report import MetricsReport, baseline_frame
from .operations.cf_estimate import estimate_counterfactual_transitions
from .operations.estimation import (
    assign_rewards_from_log,
    compare_baselines,
    dirichlet_transition_estimate,
    run_log_suite,
)
from .operations.explain import change_frequency_profile, explanation_summary, sample_explanations
from .operations.planner import solve_optimal_cf_policy
from .operations.synthetic import SyntheticSpec, run_synthetic_suite
from .operations.verify import run_verification
from .utils import formats
from .utils.config import RunConfig
from .utils.rng import Stream, make_rng
from .version import __version__

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_ERROR = 2


class InputError(Exception):
    """A file could not be read or written."""


def _check(result: Tuple[object, Optional[str]]):
    value, error = result
    if error:
        raise InputError(error)
    return value


def _check_write(error: Optional[str]) -> None:
    if error:
        raise InputError(error)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfexplain",
        description="Counterfactual explanations for finite-horizon MDPs with Gumbel-Max transitions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="flat TOML run configuration")
        p.add_argument("--out", dest="output_dir", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int, help="worker processes (0 = one per core)")

    synth = sub.add_parser("synth", help="run the synthetic experiment suite")
    common(synth)
    synth.add_argument("--alphas", type=float, nargs="+")
    synth.add_argument("--k", dest="k_values", type=int, nargs="+")
    synth.add_argument("--d", type=int)
    synth.add_argument("--n", type=int)
    synth.add_argument("--m", type=int)
    synth.add_argument("--horizon", type=int)
    synth.add_argument("--instances", dest="n_instances", type=int)
    synth.add_argument("--realizations", dest="realizations_per_instance", type=int)
    synth.add_argument("--deviation-prob", dest="deviation_prob", type=float)
    synth.add_argument("--samples", dest="n_samples", type=int)

    estimate = sub.add_parser("estimate", help="estimate transitions and rewards from an episode log")
    common(estimate)
    estimate.add_argument("--log", dest="log_path")
    estimate.add_argument("--vocab", dest="vocab_path")
    estimate.add_argument("--n", type=int)
    estimate.add_argument("--m", type=int)
    estimate.add_argument("--method", dest="dirichlet_method", choices=["closed_form", "sample"])
    estimate.add_argument("--posterior-samples", dest="dirichlet_samples", type=int)
    estimate.add_argument("--allow-unobserved", dest="forbid_unobserved",
                          action="store_false", default=None,
                          help="give unobserved pairs a finite reward")

    explain = sub.add_parser("explain", help="explain one logged episode, or every episode")
    common(explain)
    explain.add_argument("--transition", dest="transition_path")
    explain.add_argument("--reward", dest="reward_path")
    explain.add_argument("--log", dest="log_path")
    explain.add_argument("--vocab", dest="vocab_path")
    explain.add_argument("--episode", dest="episode_id")
    explain.add_argument("--k", dest="k_values", type=int, nargs="+")
    explain.add_argument("--d", type=int)
    explain.add_argument("--samples", dest="n_samples", type=int)

    baselines = sub.add_parser("baselines", help="compare the optimal policy with the baselines")
    common(baselines)
    baselines.add_argument("--transition", dest="transition_path")
    baselines.add_argument("--reward", dest="reward_path")
    baselines.add_argument("--log", dest="log_path")
    baselines.add_argument("--k", dest="k_values", type=int, nargs="+")
    baselines.add_argument("--d", type=int)
    baselines.add_argument("--allow-unobserved", dest="forbid_unobserved",
                           action="store_false", default=None,
                           help="assign finite rewards to unobserved pairs when --reward is absent")

    verify = sub.add_parser("verify", help="self-check on small random instances")
    verify.add_argument("--instances", type=int, default=100)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--d", type=int, default=200)
    verify.add_argument("--out", dest="output_dir")

    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Config file values overridden by every flag given on the command line."""
    overrides = {
        key: value for key, value in vars(args).items()
        if key not in ("command", "config", "log_level")
    }
    config = RunConfig.load(getattr(args, "config", None)).override(**overrides)
    if args.command in ("estimate", "explain", "baselines"):
        config = config.override(mode="from-log")
    problems = config.validate()
    if problems:
        raise ValueError("; ".join(problems))
    return config


def _output_dir(config: RunConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require(value, flag: str):
    if value is None:
        raise ValueError(f"{flag} is required")
    return value


def _read_log(config: RunConfig) -> EpisodeLog:
    return _check(formats.read_episodes(_require(config.log_path, "--log"), config.vocab_path))


def cmd_synth(config: RunConfig) -> int:
    out = _output_dir(config)
    report = MetricsReport()
    for alpha in config.alphas:
        spec = SyntheticSpec(
            n=config.n, m=config.m, horizon=config.horizon, alpha=alpha,
            n_instances=config.n_instances,
            realizations_per_instance=config.realizations_per_instance,
            deviation_prob=config.deviation_prob, seed=config.seed,
        )
        report.extend(run_synthetic_suite(spec, config.k_values, d=config.d,
                                          n_samples=config.n_samples, workers=config.workers))
    _check_write(formats.write_report(out, report))
    print(f"wrote {len(report.records)} records to {out}")
    return EXIT_OK


def cmd_estimate(config: RunConfig) -> int:
    out = _output_dir(config)
    log = _read_log(config)
    n, m = config.n, config.m
    if log.vocabulary is not None:
        n = len(log.vocabulary.states) or n
        m = len(log.vocabulary.actions) or m
    transition = dirichlet_transition_estimate(
        log, n, m, method=config.dirichlet_method,
        n_posterior_samples=config.dirichlet_samples, seed=config.seed,
    )
    reward = assign_rewards_from_log(log, n, m, forbid_unobserved=config.forbid_unobserved)
    _check_write(formats.write_transition(out / "transition.txt", transition))
    _check_write(formats.write_reward(out / "reward.txt", reward))
    print(f"estimated a {n}x{m} model from {len(log)} episodes into {out}")
    return EXIT_OK


def _read_model(config: RunConfig) -> Tuple[np.ndarray, np.ndarray]:
    transition = _check(formats.read_transition(_require(config.transition_path, "--transition")))
    reward = _check(formats.read_reward(_require(config.reward_path, "--reward")))
    return transition, reward


def _select_episode(log: EpisodeLog, episode_id: str) -> Trajectory:
    episode = log.find(episode_id)
    if episode is None:
        raise InvalidTrajectoryError(f"episode {episode_id!r} not found in the log")
    return episode


def explain_episode_files(out: Path, transition: np.ndarray, reward: np.ndarray,
                          traj: Trajectory, k: int, config: RunConfig,
                          vocabulary: Optional[Vocabulary]) -> dict:
    """Explain one episode and write its tensors, policy, samples and summary."""
    mdp = Mdp(transition, reward, traj.horizon)
    mdp.require_valid()
    require_valid_trajectory(mdp, traj)
    k = min(k, traj.horizon)

    cf = estimate_counterfactual_transitions(mdp, traj, d=config.d, seed=config.seed)
    policy = solve_optimal_cf_policy(mdp, traj, cf, k)
    # same stream for all three so they describe the same samples
    explanations = sample_explanations(policy, cf, traj, mdp.reward, config.n_samples,
                                       make_rng(config.seed, Stream.EXPLANATION))
    profile = change_frequency_profile(policy, cf, traj, mdp.reward, config.n_samples,
                                       make_rng(config.seed, Stream.EXPLANATION))
    groups = explanation_summary(policy, cf, traj, mdp.reward, config.n_samples,
                                 make_rng(config.seed, Stream.EXPLANATION))

    _check_write(formats.write_cf_transitions(out / "cf_transitions.txt", cf))
    _check_write(formats.write_cf_policy(out / "cf_policy.txt", out / "cf_values.txt", policy))
    _check_write(formats.write_frame(out / "explanations.csv",
                                     formats.explanations_frame(explanations, traj, vocabulary)))
    _check_write(formats.write_frame(out / "unique_explanations.csv",
                                     formats.explanation_groups_frame(groups, vocabulary)))
    profile_rows = pd.DataFrame({
        "t": np.arange(traj.horizon),
        "change_frequency": profile.frequencies,
        "observed_state": traj.states,
        "best_state": profile.best.states,
        "observed_action": traj.actions,
        "best_action": profile.best.actions,
    })
    _check_write(formats.write_frame(out / "profile.csv", profile_rows))

    summary = {
        "episode": traj.id,
        "horizon": traj.horizon,
        "k": k,
        "d": config.d,
        "seed": config.seed,
        "observed_outcome": outcome(mdp, traj),
        "cf_value": policy.value(traj.s0),
        "mean_sampled_outcome": float(profile.outcomes.mean()),
        "best_sampled_outcome": profile.best.outcome,
        "unique_explanations": len(groups),
        "samples": config.n_samples,
    }
    _check_write(formats.write_json(out / "summary.json", summary))
    return summary


def cmd_explain(config: RunConfig) -> int:
    out = _output_dir(config)
    transition, reward = _read_model(config)
    log = _read_log(config)

    if config.episode_id is None:
        report = run_log_suite(transition, reward, log, config.k_values, d=config.d,
                               n_samples=config.n_samples, seed=config.seed,
                               workers=config.workers)
        _check_write(formats.write_report(out, report))
        print(f"explained {len(log)} episodes into {out}")
        return EXIT_OK

    traj = _select_episode(log, config.episode_id)
    summary = explain_episode_files(out, transition, reward, traj, max(config.k_values),
                                    config, log.vocabulary)
    print(f"episode {traj.id}: o={summary['observed_outcome']} "
          f"h={summary['cf_value']} (k={summary['k']})")
    return EXIT_OK


def cmd_baselines(config: RunConfig) -> int:
    out = _output_dir(config)
    transition = _check(formats.read_transition(_require(config.transition_path, "--transition")))
    reward = None
    if config.reward_path is not None:
        reward = _check(formats.read_reward(config.reward_path))
    log = _read_log(config)
    records = compare_baselines(transition, log, config.k_values, reward=reward,
                                forbid_unobserved=config.forbid_unobserved, d=config.d,
                                seed=config.seed, workers=config.workers)
    _check_write(formats.write_frame(out / "baselines.csv", baseline_frame(records)))
    print(f"wrote {len(records)} baseline records to {out}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    result = run_verification(instances=args.instances, seed=args.seed, d=args.d)
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        frame = pd.DataFrame([vars(r) for r in result.records],
                             columns=["instance", "check", "passed", "detail"])
        _check_write(formats.write_frame(out / "verify.csv", frame))
    failures = result.failures
    for failure in failures[:20]:
        print(f"FAIL instance {failure.instance} {failure.check}: {failure.detail}", file=sys.stderr)
    print(f"{len(result.records) - len(failures)}/{len(result.records)} checks passed "
          f"on {args.instances} instances")
    return EXIT_OK if result.passed else EXIT_VERIFY_FAILED


COMMANDS = {
    "synth": cmd_synth,
    "estimate": cmd_estimate,
    "explain": cmd_explain,
    "baselines": cmd_baselines,
}


def setup_logging(level: str) -> None:
    logging.basicConfig(level=getattr(logging, level), format=LOG_FORMAT, stream=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        if args.command == "verify":
            return cmd_verify(args)
        return COMMANDS[args.command](resolve_config(args))
    except (CfExplainError, InputError, ValueError, OSError) as e:
        logger.debug("command %s failed", args.command, exc_info=True)
        print(formats.error_record(type(e).__name__, str(e), args.command), file=sys.stderr)
        return EXIT_ERROR
