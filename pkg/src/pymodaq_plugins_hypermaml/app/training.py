"""Outer training loop with validation, checkpoints and an epoch log."""
import math
from concurrent.futures import ThreadPoolExecutor
from contextlib import ExitStack
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import pandas as pd
from pymodaq.utils.logger import set_logger, get_module_name
from tqdm import tqdm

from pymodaq_plugins_hypermaml.app.run_config import RunConfig
from pymodaq_plugins_hypermaml.bench.evaluate import evaluate
from pymodaq_plugins_hypermaml.bench.report import Report, write_report
from pymodaq_plugins_hypermaml.errors import CheckpointError, NonFiniteError, TrainingAborted
from pymodaq_plugins_hypermaml.exporters.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from pymodaq_plugins_hypermaml.meta.algorithms import MetaAlgorithm
from pymodaq_plugins_hypermaml.meta.schedules import lr_schedule
from pymodaq_plugins_hypermaml.models.params import ParamSet
from pymodaq_plugins_hypermaml.tasks.family import TaskFamily
from pymodaq_plugins_hypermaml.utils import derive_rng

logger = set_logger(get_module_name(__file__))

EPOCH_COLUMNS = ['epoch', 'loss', 'lam', 'lr', 'val_accuracy', 'val_ci95']
LAST, BEST = 'last.ckpt', 'best.ckpt'


@dataclass
class TrainingResult:
    params: ParamSet
    checkpoint: Checkpoint
    log: pd.DataFrame
    validations: List[Report] = field(default_factory=list)
    best_accuracy: float = float('nan')


def make_checkpoint(cfg: RunConfig, algorithm: MetaAlgorithm, params: ParamSet, epoch: int) -> Checkpoint:
    return Checkpoint(cfg.config_hash(), epoch, params.numpy(), algorithm.optimizer.state_arrays())


def restore(cfg: RunConfig, algorithm: MetaAlgorithm, params: ParamSet, checkpoint: Checkpoint) -> ParamSet:
    """Parameters and optimizer state of ``checkpoint`` on top of freshly built ``params``."""
    missing = set(params.keys()) ^ set(checkpoint.tensors)
    if missing:
        raise CheckpointError(f"checkpoint tensors do not match the model, differing names: {sorted(missing)}")
    params = params.with_arrays(checkpoint.tensors).astype(cfg.dtype)
    if checkpoint.optimizer:
        algorithm.optimizer.load_state_arrays(checkpoint.optimizer)
    algorithm.set_epoch(max(checkpoint.epoch - 1, 0))
    return params


def build(cfg: RunConfig, executor=None) -> Tuple[TaskFamily, MetaAlgorithm, ParamSet]:
    family = cfg.make_family()
    algorithm = cfg.make_algorithm(executor)
    params = algorithm.init_params(cfg.encoder_config(), cfg.n_way, derive_rng(cfg.seed, 'init'),
                                   cfg('init', 'scheme'), cfg.dtype)
    return family, algorithm, params


def load_trained(cfg: RunConfig, checkpoint_path: Union[str, Path], force: bool = False,
                 executor=None) -> Tuple[TaskFamily, MetaAlgorithm, ParamSet, Checkpoint]:
    family, algorithm, params = build(cfg, executor)
    checkpoint = load_checkpoint(checkpoint_path, cfg.config_hash(), force)
    return family, algorithm, restore(cfg, algorithm, params, checkpoint), checkpoint


def validate(cfg: RunConfig, algorithm: MetaAlgorithm, params: ParamSet, family: TaskFamily,
             epoch: int) -> Report:
    count = cfg('training', 'val_episodes')
    episodes = family.episodes('val', count, cfg.n_way, cfg.k_shot, cfg.q_per_class)
    report = evaluate(algorithm, params, episodes, count,
                      variant=algorithm.name, seed=cfg.seed, config_hash=cfg.config_hash(), quiet=True)
    report.metadata['epoch'] = epoch
    return report


def train_loop(cfg: RunConfig, resume: Optional[Union[str, Path]] = None, force: bool = False) -> TrainingResult:
    """Meta-train ``cfg.algorithm`` for ``cfg.epochs`` epochs and write the run artifacts to ``cfg.out``.

    Every epoch draws ``episodes_per_epoch`` training episodes grouped in meta-batches,
    advances the warm-up coefficient and the learning-rate schedule, and logs the mean
    training loss. Validation runs every ``val_every`` epochs and after the last one;
    ``best.ckpt`` follows the best validation accuracy, ``last.ckpt`` is refreshed every
    ``checkpoint_every`` epochs and at the end.
    """
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    cfg.to_toml(out.joinpath('run_config.toml'))

    with ExitStack() as stack:
        executor = stack.enter_context(ThreadPoolExecutor(cfg.threads)) if cfg.threads > 1 else None
        family, algorithm, params = build(cfg, executor)
        start = 0
        if resume is not None:
            checkpoint = load_checkpoint(resume, cfg.config_hash(), force)
            params = restore(cfg, algorithm, params, checkpoint)
            start = checkpoint.epoch
            logger.info(f"resuming from {resume} at epoch {start}")

        rows, validations = [], []
        best = -math.inf
        batch = cfg.meta_batch
        steps = max(cfg.episodes_per_epoch // batch, 1)
        milestones = cfg('training', 'lr_milestones')
        base_lr = cfg.base_lr()

        for epoch in tqdm(range(start, cfg.epochs), desc=f"train {algorithm.name}", disable=cfg.quiet):
            algorithm.set_epoch(epoch)
            algorithm.optimizer.lr = lr_schedule(epoch, milestones, base_lr, cfg('training', 'lr_decay'))
            lam = getattr(algorithm, 'lam', 0.0)
            losses = []
            try:
                for step in range(steps):
                    first = epoch * steps * batch + step * batch
                    episodes = list(family.episodes('train', batch, cfg.n_way, cfg.k_shot, cfg.q_per_class,
                                                    start=first))
                    params, loss = algorithm.meta_step(params, episodes)
                    if not math.isfinite(loss):
                        raise NonFiniteError(f"meta-loss is {loss}")
                    losses.append(loss)
            except NonFiniteError as e:
                logger.error(f"epoch {epoch}: {e}")
                save_checkpoint(make_checkpoint(cfg, algorithm, params, epoch), out.joinpath(LAST))
                _write_log(rows, out)
                raise TrainingAborted(epoch, str(e)) from e

            row = {'epoch': epoch, 'loss': sum(losses) / len(losses), 'lam': lam, 'lr': algorithm.optimizer.lr,
                   'val_accuracy': float('nan'), 'val_ci95': float('nan')}
            done = epoch + 1
            if done % cfg('training', 'val_every') == 0 or done == cfg.epochs:
                report = validate(cfg, algorithm, params, family, epoch)
                validations.append(report)
                row.update(val_accuracy=report.mean, val_ci95=report.ci95)
                if report.mean > best:
                    best = report.mean
                    save_checkpoint(make_checkpoint(cfg, algorithm, params, done), out.joinpath(BEST))
                logger.info(f"epoch {epoch} validation: {report.summary()}")
            logger.info(f"epoch {epoch}: loss {row['loss']:.4f}, lambda {lam:.3f}, lr {row['lr']:.2e}")
            rows.append(row)
            if done % cfg('training', 'checkpoint_every') == 0:
                save_checkpoint(make_checkpoint(cfg, algorithm, params, done), out.joinpath(LAST))

    final = make_checkpoint(cfg, algorithm, params, max(cfg.epochs, start))
    save_checkpoint(final, out.joinpath(LAST))
    log = _write_log(rows, out)
    if validations:
        write_report(validations, out.joinpath('validation.json'))
    return TrainingResult(params, final, log, validations, best if validations else float('nan'))


def _write_log(rows, out: Path) -> pd.DataFrame:
    log = pd.DataFrame(rows, columns=EPOCH_COLUMNS)
    log.to_csv(out.joinpath('epochs.csv'), index=False)
    return log
