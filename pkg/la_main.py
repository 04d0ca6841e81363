"""
Command-line entry point.

    python la_main.py train --space space.json --config hyper.ini --out runs/gen
    python la_main.py eval --benchmark B3 --policy olla
    python la_main.py eval --benchmark B2a --policy runs/gen/checkpoints/final.npz --baseline
    python la_main.py plot-data --kind mcs-cdf --inputs runs/eval/metrics.csv --out mcs_cdf.csv

Exit codes: 0 success, 1 unexpected error, 2 usage error, 3 unknown benchmark,
4 feature-schema mismatch, 5 invalid configuration file.
"""

import argparse
import configparser
import logging
import sys
import time
import traceback
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from bench.benchmarks import BENCHMARK_IDS, UnknownBenchmarkError, get_benchmark
from bench.compare import compare_vs_baseline
from bench.metrics import aggregate
from bench.plot_data import PLOT_KINDS, alpha_series, emit
from bench.presets import preset_stream, sweep_alpha, sweep_arch
from bench.randomization import RandomizationSpace
from bench.runner import PolicySpec, run_benchmark
from bench.scenario_parser import ConfigFileError, RunFile, TrainingSpace, parse_benchmark_overrides, parse_training_space
from channel_logger import ChannelLogger
from la_command import LaCommand, arg
from la_config import LA_CONFIG, OUTPUT_DIR, BenchSettings, load_config
from la_mdp.features import SchemaMismatchError, la_feature_schema
from la_tools import get_logger, read_csv, write_csv
from radio_sim.scenario import ScenarioError
from runtime.trainer import TrainingConfig, train

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_UNKNOWN_BENCHMARK = 3
EXIT_SCHEMA_MISMATCH = 4
EXIT_BAD_CONFIG = 5

logger = get_logger("LA Main")

COMMON = [
    arg("--config", help="hyperparameter INI layered on config.ini"),
    arg("--out", help="output directory (default: $LA_OUTPUT_DIR/<command>_<time>)"),
    arg("--run-id", default=None),
]
BENCH_ARGS = [
    arg("--benchmark", default="B2a"),
    arg("--seeds", type=int, default=None, help="number of seeds (benchmark default when omitted)"),
    arg("--seed-offset", type=int, default=0),
    arg("--duration-tti", type=int, default=None),
    arg("--workers", type=int, default=None),
    arg("--overrides", help="JSON benchmark override file"),
]
TRAIN_ARGS = [
    arg("--space", help="JSON training space file"),
    arg("--mode", choices=("threaded", "sync"), default="threaded"),
    arg("--seed", type=int, default=0),
    arg("--max-steps", type=int, default=None),
    arg("--max-seconds", type=float, default=None),
    arg("--max-rounds", type=int, default=None),
    arg("--episode-tti", type=int, default=None, help="training scenario duration"),
]


def _out_dir(args, command: str) -> Path:
    out = Path(args.out) if args.out else OUTPUT_DIR / f"{command}_{time.strftime('%Y%m%d_%H%M%S')}"
    out.mkdir(parents=True, exist_ok=True)
    return out


def _channel_logger(args, out: Path) -> ChannelLogger:
    return ChannelLogger(out, run_id=args.run_id or out.name)


def _training_space(args, cfg: configparser.ConfigParser) -> TrainingSpace:
    bench = BenchSettings.from_config(cfg)
    if args.space:
        ts = parse_training_space(RunFile.load(args.space), master_seed=bench.master_seed)
    else:
        ts = TrainingSpace("generalized", RandomizationSpace(), 250, 160, bench.master_seed)
    if args.episode_tti:
        ts = TrainingSpace(ts.preset, ts.space.model_copy(update={"duration_tti": args.episode_tti}), ts.n_configs, ts.n_seeds, ts.master_seed)
    return ts


def _train_kwargs(args) -> dict:
    if args.max_steps is None and args.max_seconds is None and args.max_rounds is None:
        raise ConfigFileError("training needs --max-steps, --max-seconds or --max-rounds")
    return dict(mode=args.mode, seed=args.seed, max_learner_steps=args.max_steps, max_seconds=args.max_seconds, max_rounds=args.max_rounds)


def _benchmark(args, cfg: configparser.ConfigParser):
    settings = BenchSettings.from_config(cfg)
    overrides = parse_benchmark_overrides(RunFile.load(args.overrides) if args.overrides else None)
    bench = get_benchmark(args.benchmark, settings, overrides)
    if args.duration_tti:
        bench = bench.model_copy(update={"duration_tti": args.duration_tti})
    workers = args.workers or settings.workers
    return bench, bench.seeds(args.seeds, args.seed_offset), workers


def cmd_train(args, cfg, out: Path) -> int:
    ts = _training_space(args, cfg)
    stream = preset_stream(ts.preset, ts.space, ts.n_configs, ts.n_seeds, ts.master_seed)
    tc = TrainingConfig.from_config(cfg)
    la_feature_schema(tc.mdp).save_manifest(out / "feature_schema.json")
    run = train(stream, tc, out_dir=out, channel_logger=_channel_logger(args, out), **_train_kwargs(args))
    logger.info("TRAIN_DONE", extra=dict(checkpoint=run.final_checkpoint, steps=run.learner.step, **run.conservation()))
    return EXIT_OK


def cmd_eval(args, cfg, out: Path) -> int:
    bench, seeds, workers = _benchmark(args, cfg)
    tc = TrainingConfig.from_config(cfg)
    cl = _channel_logger(args, out)
    policy = PolicySpec.parse(args.policy)
    rows = run_benchmark(bench, policy, seeds, workers=workers, mdp=tc.mdp, sim=tc.sim, channel_logger=cl)
    logger.info("EVAL_DONE", extra=dict(benchmark=bench.id, policy=policy.name, **aggregate(rows)))
    if args.baseline and policy.kind != "olla":
        baseline = run_benchmark(bench, PolicySpec(kind="olla"), seeds, workers=workers, mdp=tc.mdp, sim=tc.sim, channel_logger=cl)
        gains = compare_vs_baseline(rows, baseline)
        write_csv(out / "gains.csv", gains)
        for g in gains:
            logger.info("GAIN", extra=dict(metric=g["metric"], median=f"{g['median']:.2f}%", q1=f"{g['q1']:.2f}", q3=f"{g['q3']:.2f}"))
    return EXIT_OK


def cmd_bench_olla(args, cfg, out: Path) -> int:
    ids = args.benchmarks or [b for b in BENCHMARK_IDS if b != "B1"]
    tc = TrainingConfig.from_config(cfg)
    cl = _channel_logger(args, out)
    for bench_id in ids:
        args.benchmark = bench_id
        bench, seeds, workers = _benchmark(args, cfg)
        rows = run_benchmark(bench, PolicySpec(kind="olla"), seeds, workers=workers, mdp=tc.mdp, sim=tc.sim, channel_logger=cl)
        logger.info("OLLA_BENCHMARK", extra=dict(benchmark=bench_id, **aggregate(rows)))
    return EXIT_OK


def cmd_sweep_alpha(args, cfg, out: Path) -> int:
    ts = _training_space(args, cfg)
    bench, seeds, workers = _benchmark(args, cfg)
    stream = preset_stream(ts.preset, ts.space, ts.n_configs, ts.n_seeds, ts.master_seed)
    tc = TrainingConfig.from_config(cfg)
    alphas = tuple(args.alphas) if args.alphas else (0.0, 0.5, 2.0)
    results = sweep_alpha(stream, tc, bench, seeds, out, alphas, _train_kwargs(args), workers, _channel_logger(args, out))
    write_csv(out / "alpha.csv", alpha_series(results))
    return EXIT_OK


def cmd_sweep_arch(args, cfg, out: Path) -> int:
    ts = _training_space(args, cfg)
    bench, seeds, workers = _benchmark(args, cfg)
    stream = preset_stream(ts.preset, ts.space, ts.n_configs, ts.n_seeds, ts.master_seed)
    table = sweep_arch(stream, TrainingConfig.from_config(cfg), bench, seeds, out, train_kwargs=_train_kwargs(args), workers=workers)
    write_csv(out / "arch.csv", table)
    return EXIT_OK


def cmd_replay_audit(args, cfg, out: Path) -> int:
    path = Path(args.run_dir) / "replay_audit.csv"
    if not path.exists():
        raise ConfigFileError(f"no replay audit in {args.run_dir}")
    ticks = {}
    for row in read_csv(path):
        ticks.setdefault(row["elapsed_s"], []).append(int(row["size"]))
    summary = [dict(elapsed_s=t, shards=len(s), total=sum(s), imbalance=max(s) - min(s)) for t, s in ticks.items()]
    write_csv(out / "imbalance.csv", summary)
    worst = max((s["imbalance"] for s in summary), default=0)
    logger.info("REPLAY_AUDIT", extra=dict(ticks=len(summary), max_imbalance=worst))
    if args.max_imbalance is not None and worst > args.max_imbalance:
        logger.error("REPLAY_IMBALANCED", extra=dict(max_imbalance=worst, allowed=args.max_imbalance))
        return EXIT_ERROR
    return EXIT_OK


def cmd_plot_data(args, cfg, out: Path) -> int:
    emit(args.kind, args.inputs, out / f"{args.kind}.csv", baseline=args.baseline)
    return EXIT_OK


COMMANDS: List[LaCommand] = [
    LaCommand("train", cmd_train, "train a policy on a randomized scenario stream", COMMON + TRAIN_ARGS),
    LaCommand(
        "eval",
        cmd_eval,
        "evaluate a policy on a benchmark",
        COMMON
        + BENCH_ARGS
        + [
            arg("--policy", default="olla", help="olla | inner-loop | random | fixed:<mcs> | <checkpoint.npz>"),
            arg("--checkpoint", dest="policy", help="same as --policy <checkpoint.npz>"),
            arg("--baseline", action="store_true", help="also run OLLA and write gains.csv"),
        ],
    ),
    LaCommand("bench-olla", cmd_bench_olla, "run the OLLA baseline on benchmarks", COMMON + BENCH_ARGS + [arg("--benchmarks", nargs="*")]),
    LaCommand("sweep-alpha", cmd_sweep_alpha, "train and evaluate one policy per robustness weight", COMMON + BENCH_ARGS + TRAIN_ARGS + [arg("--alphas", nargs="*", type=float)]),
    LaCommand("sweep-arch", cmd_sweep_arch, "train and evaluate the architecture grid", COMMON + BENCH_ARGS + TRAIN_ARGS),
    LaCommand(
        "replay-audit", cmd_replay_audit, "summarize shard balance of a training run", COMMON + [arg("--run-dir", required=True), arg("--max-imbalance", type=int)]
    ),
    LaCommand(
        "plot-data",
        cmd_plot_data,
        "write CSV series for a figure kind",
        COMMON + [arg("--kind", choices=PLOT_KINDS, required=True), arg("--inputs", nargs="+", required=True), arg("--baseline", default="olla")],
    ),
]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="la_main", description="Generalizable RL link adaptation")
    subparsers = parser.add_subparsers(dest="command_name", required=True)
    for command in COMMANDS:
        command.add_to(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        cfg = load_config(args.config) if args.config else LA_CONFIG
        out = _out_dir(args, args.command.name)
        logger.info("COMMAND_STARTED", extra=dict(command=args.command.name, out=str(out)))
        return args.command(args, cfg, out)
    except UnknownBenchmarkError as e:
        logger.error("UNKNOWN_BENCHMARK", extra=dict(error=str(e)))
        return EXIT_UNKNOWN_BENCHMARK
    except SchemaMismatchError as e:
        logger.error("SCHEMA_MISMATCH", extra=dict(error=str(e)))
        return EXIT_SCHEMA_MISMATCH
    except (ConfigFileError, ScenarioError, ValidationError, configparser.Error, FileNotFoundError) as e:
        logger.error("INVALID_CONFIGURATION", extra=dict(error=str(e)))
        return EXIT_BAD_CONFIG
    except Exception as e:
        logger.error("UNEXPECTED_ERROR", extra=dict(error=str(e), traceback=traceback.format_exc()))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
