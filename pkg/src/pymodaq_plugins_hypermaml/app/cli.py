"""Command line: ``python -m pymodaq_plugins_hypermaml <command> [flags]``.

Commands: train, eval, bench-time, toy2d, plot. Exit codes: 0 success, 1 any other
package error, 2 invalid configuration or usage, 3 checkpoint error, 4 I/O failure.
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from pymodaq.utils.logger import set_logger, get_module_name

from pymodaq_plugins_hypermaml import __version__
from pymodaq_plugins_hypermaml.app.run_config import RunConfig, overrides_from_flags, preset_names
from pymodaq_plugins_hypermaml.app.toy2d import check_toy, draw_tasks, evaluate_tasks
from pymodaq_plugins_hypermaml.app.training import load_trained, train_loop
from pymodaq_plugins_hypermaml.bench.evaluate import evaluate
from pymodaq_plugins_hypermaml.bench.report import FORMATS, write_report
from pymodaq_plugins_hypermaml.bench.timing import build_timing_variants, time_adaptation
from pymodaq_plugins_hypermaml.errors import ConfigError, HyperMamlError
from pymodaq_plugins_hypermaml.meta.algorithms import ALGORITHMS
from pymodaq_plugins_hypermaml.meta.hypermaml import SWITCH_MODES
from pymodaq_plugins_hypermaml.tasks.gaussian2d import N_TASKS

logger = set_logger(get_module_name(__file__))

IO_EXIT_CODE = 4
RUN_CONFIG_NAME = 'run_config.toml'


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=Path, help="TOML run configuration")
    common.add_argument('--preset', help="shipped preset, one of: " + ', '.join(preset_names()))
    common.add_argument('--seed', type=int)
    common.add_argument('--threads', type=int, help="worker threads; 1 is the deterministic mode")
    common.add_argument('--out', type=Path, help="output directory")
    common.add_argument('--checkpoint', type=Path)
    common.add_argument('--force', action='store_true', help="load checkpoints written for another configuration")
    common.add_argument('--algorithm', choices=tuple(ALGORITHMS))
    common.add_argument('--inner-steps', type=int)
    common.add_argument('--first-order', action='store_true')
    common.add_argument('--switch-mode', choices=SWITCH_MODES)
    common.add_argument('--no-enhancement', action='store_true')
    common.add_argument('--epochs', type=int)
    common.add_argument('--format', choices=FORMATS, default='json', help="report format")
    common.add_argument('--quiet', action='store_true', help="no progress bars")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='pymodaq_plugins_hypermaml',
                                     description="MAML and HyperMAML few-shot meta-learning")
    parser.add_argument('--version', action='version', version=__version__)
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True
    common = _common_flags()

    commands.add_parser('train', parents=[common], help="meta-train and write checkpoints to --out")

    evaluation = commands.add_parser('eval', parents=[common], help="evaluate a checkpoint")
    evaluation.add_argument('--split', choices=('val', 'test'), default='test')
    evaluation.add_argument('--n-tasks', type=int, help="number of evaluation episodes")

    timing = commands.add_parser('bench-time', parents=[common], help="time adaptation + prediction")
    timing.add_argument('--n-tasks', type=int, help="number of pre-generated episodes")
    timing.add_argument('--repeats', type=int)
    timing.add_argument('--steps', type=int, nargs='+', help="MAML inner-step counts to time")
    timing.add_argument('--core', type=int, help="CPU core for the timing run, default the lowest allowed one")

    toy = commands.add_parser('toy2d', parents=[common], help="train and plot on the four 2D tasks")
    toy.add_argument('--n-tasks', type=int, help="evaluation episodes over all four tasks")

    commands.add_parser('plot', parents=[common], help="decision boundaries of a trained 2D checkpoint")
    return parser


def load_config(args, preset: Optional[str] = None) -> RunConfig:
    """--preset < --config < flags. Commands working on a checkpoint fall back to the run
    configuration saved next to it."""
    path = args.config
    if path is None and args.checkpoint is not None and args.preset is None:
        sibling = args.checkpoint.parent.joinpath(RUN_CONFIG_NAME)
        if sibling.is_file():
            path = sibling
    overrides = overrides_from_flags(algorithm=args.algorithm, seed=args.seed, threads=args.threads,
                                     out=str(args.out) if args.out is not None else None, quiet=args.quiet,
                                     epochs=args.epochs, inner_steps=args.inner_steps, first_order=args.first_order,
                                     switch_mode=args.switch_mode, no_enhancement=args.no_enhancement)
    return RunConfig.load(args.preset or preset, path, overrides)


def _require_checkpoint(args):
    if args.checkpoint is None:
        raise ConfigError(f"{args.command} needs --checkpoint")


def cmd_train(args) -> int:
    cfg = load_config(args)
    result = train_loop(cfg, resume=args.checkpoint, force=args.force)
    print(f"trained {cfg.algorithm} for {result.checkpoint.epoch} epochs, "
          f"best validation accuracy {result.best_accuracy:.4f}, artifacts in {cfg.out}")
    return 0


def cmd_eval(args) -> int:
    _require_checkpoint(args)
    cfg = load_config(args)
    family, algorithm, params, checkpoint = load_trained(cfg, args.checkpoint, args.force)
    count = args.n_tasks or int(cfg('bench', 'episodes'))
    episodes = family.episodes(args.split, count, cfg.n_way, cfg.k_shot, cfg.q_per_class)
    report = evaluate(algorithm, params, episodes, count, threads=cfg.threads, seed=cfg.seed,
                      config_hash=cfg.config_hash(), quiet=cfg.quiet)
    report.metadata.update(split=args.split, epoch=checkpoint.epoch)
    path = write_report(report, cfg.out.joinpath(f"eval_{args.split}.{args.format}"))
    print(f"{report.summary()} -> {path}")
    return 0


def cmd_bench_time(args) -> int:
    cfg = load_config(args)
    family = cfg.make_family()
    steps = args.steps or list(cfg('bench', 'steps'))
    count = args.n_tasks or int(cfg('bench', 'episodes'))
    variants = build_timing_variants(cfg.encoder_config(), cfg.n_way, steps, cfg.seed, cfg.maml_config(),
                                     cfg.hyper_config(), cfg('init', 'scheme'))
    episodes = list(family.episodes('test', count, cfg.n_way, cfg.k_shot, cfg.q_per_class))
    reports = time_adaptation(variants, episodes, args.repeats or int(cfg('bench', 'repeats')), cfg.seed, cfg.quiet,
                              core=args.core)
    path = write_report(reports, cfg.out.joinpath(f"bench_time.{args.format}"))
    for report in reports:
        print(report.summary())
    print(f"-> {path}")
    return 0


def cmd_toy2d(args) -> int:
    default = 'toy2d-hypermaml' if args.algorithm == 'hypermaml' else 'toy2d-maml1'
    cfg = load_config(args, preset=default)
    check_toy(cfg, cfg.make_family())
    train_loop(cfg, force=args.force)
    family, algorithm, params, _ = load_trained(cfg, cfg.out.joinpath('last.ckpt'))
    per_task = max((args.n_tasks or int(cfg('bench', 'episodes'))) // N_TASKS, 2)
    reports = evaluate_tasks(cfg, check_toy(cfg, family), algorithm, params, per_task)
    path = write_report(reports, cfg.out.joinpath(f"toy2d.{args.format}"))
    figure = draw_tasks(cfg, family, algorithm, params, cfg.out.joinpath('decision_boundaries.svg'))
    for report in reports:
        print(report.summary())
    print(f"-> {path}, {figure}")
    return 0


def cmd_plot(args) -> int:
    _require_checkpoint(args)
    cfg = load_config(args)
    family, algorithm, params, _ = load_trained(cfg, args.checkpoint, args.force)
    figure = draw_tasks(cfg, check_toy(cfg, family), algorithm, params,
                        cfg.out.joinpath('decision_boundaries.svg'))
    print(f"-> {figure}")
    return 0


COMMANDS = {'train': cmd_train, 'eval': cmd_eval, 'bench-time': cmd_bench_time, 'toy2d': cmd_toy2d,
            'plot': cmd_plot}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, dispatch, and turn errors into an exit code with a one-line message on stderr."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    try:
        return COMMANDS[args.command](args)
    except HyperMamlError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return IO_EXIT_CODE


def main(argv: List[str] = None):
    sys.exit(run(sys.argv[1:] if argv is None else argv))
