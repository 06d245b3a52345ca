"""Per-task evaluation and decision-boundary figure of the four-task 2D family."""
from pathlib import Path
from typing import List

import numpy as np

from pymodaq_plugins_hypermaml.app.run_config import RunConfig
from pymodaq_plugins_hypermaml.bench.evaluate import evaluate
from pymodaq_plugins_hypermaml.bench.plotting import plot_decision_boundary_2d
from pymodaq_plugins_hypermaml.bench.report import Report
from pymodaq_plugins_hypermaml.errors import ConfigError
from pymodaq_plugins_hypermaml.meta.algorithms import MetaAlgorithm
from pymodaq_plugins_hypermaml.models.params import ParamSet
from pymodaq_plugins_hypermaml.tasks.family import TaskFamily
from pymodaq_plugins_hypermaml.tasks.gaussian2d import N_TASKS, Gaussian2dFamily
from pymodaq_plugins_hypermaml.utils import derive_rng


def check_toy(cfg: RunConfig, family: TaskFamily) -> Gaussian2dFamily:
    if not isinstance(family, Gaussian2dFamily):
        raise ConfigError(f"this command runs on the gaussian2d family, the configuration uses "
                          f"{cfg('tasks', 'family')!r}")
    return family


def task_episodes(cfg: RunConfig, family: Gaussian2dFamily, task_id: int, count: int, purpose: str):
    for index in range(count):
        yield family.task_episode(task_id, cfg.k_shot, cfg.q_per_class, derive_rng(cfg.seed, purpose, task_id, index))


def evaluate_tasks(cfg: RunConfig, family: Gaussian2dFamily, algorithm: MetaAlgorithm, params: ParamSet,
                   per_task: int) -> List[Report]:
    """One report per toy task plus an overall one pooling every episode, last in the list."""
    reports = []
    for task_id in range(N_TASKS):
        reports.append(evaluate(algorithm, params, task_episodes(cfg, family, task_id, per_task, 'toy-eval'),
                                per_task, variant=f"{algorithm.name}-task{task_id}", threads=cfg.threads,
                                seed=cfg.seed, config_hash=cfg.config_hash(), quiet=cfg.quiet))
    pooled = [a for report in reports for a in report.accuracies]
    reports.append(Report(algorithm.name, pooled, metadata=dict(reports[0].metadata, tasks=N_TASKS)))
    return reports


def draw_tasks(cfg: RunConfig, family: Gaussian2dFamily, algorithm: MetaAlgorithm, params: ParamSet,
               path: Path) -> Path:
    episodes = [next(task_episodes(cfg, family, task_id, 1, 'toy-plot')) for task_id in range(N_TASKS)]
    center = tuple(np.asarray(family.geometry.offset, dtype=float))
    title = f"{algorithm.name}, {cfg.k_shot}-shot"
    if algorithm.name != 'hypermaml':
        title += f", {cfg('maml', 'inner_steps')} inner step(s)"
    return plot_decision_boundary_2d(algorithm, params, episodes, path, int(cfg('plot', 'grid_resolution')),
                                     float(cfg('plot', 'extent')), center, title)
