import os
from contextlib import contextmanager
from dataclasses import dataclass, replace
from time import perf_counter
from typing import List, Optional, Sequence

import numpy as np
from pymodaq.utils.logger import set_logger, get_module_name
from threadpoolctl import threadpool_limits
from tqdm import tqdm

from pymodaq_plugins_hypermaml import __version__
from pymodaq_plugins_hypermaml.bench.report import Report
from pymodaq_plugins_hypermaml.errors import ConfigError
from pymodaq_plugins_hypermaml.meta.algorithms import HyperMamlAlgorithm, MamlAlgorithm, MetaAlgorithm
from pymodaq_plugins_hypermaml.meta.hypermaml import HyperMamlConfig
from pymodaq_plugins_hypermaml.meta.maml import MamlConfig
from pymodaq_plugins_hypermaml.models.encoders import EncoderConfig
from pymodaq_plugins_hypermaml.models.params import ParamSet
from pymodaq_plugins_hypermaml.tasks.episode import Episode
from pymodaq_plugins_hypermaml.utils import derive_rng

logger = set_logger(get_module_name(__file__))


@dataclass
class TimingVariant:
    label: str
    algorithm: MetaAlgorithm
    params: ParamSet


def build_timing_variants(encoder_cfg: EncoderConfig, n_way: int, steps: Sequence[int], seed: int = 0,
                          maml_cfg: MamlConfig = None, hyper_cfg: HyperMamlConfig = None,
                          scheme: str = 'kaiming_uniform') -> List[TimingVariant]:
    """MAML at each inner-step count plus HyperMAML, all from the same encoder and head initialization."""
    variants = []
    for step in steps:
        algorithm = MamlAlgorithm(replace(maml_cfg or MamlConfig(), inner_steps=int(step)))
        params = algorithm.init_params(encoder_cfg, n_way, derive_rng(seed, 'init'), scheme)
        variants.append(TimingVariant(f"maml-{step}", algorithm, params))
    hyper = HyperMamlAlgorithm(hyper_cfg)
    hyper.set_epoch(hyper.cfg.milestones[1])
    variants.append(TimingVariant('hypermaml', hyper,
                                  hyper.init_params(encoder_cfg, n_way, derive_rng(seed, 'init'), scheme)))
    return variants


def _check_shared_config(variants: Sequence[TimingVariant]):
    reference = None
    for variant in variants:
        shared = (variant.params.part('encoder').config, variant.params.part('head').config)
        if reference is not None and shared != reference:
            raise ConfigError(f"{variant.label} uses a different encoder/head configuration than "
                              f"{variants[0].label}")
        reference = shared


@contextmanager
def single_core(core: Optional[int] = None):
    """Pin the calling process to one CPU core and numpy's BLAS pools to one thread inside the block.

    ``core`` defaults to the lowest core the process may already run on. The previous
    affinity is restored on exit. Yields the pinned core, or None where affinity is unsupported.
    """
    previous, pinned = None, None
    if hasattr(os, 'sched_setaffinity'):
        try:
            previous = os.sched_getaffinity(0)
            pinned = min(previous) if core is None else int(core)
            os.sched_setaffinity(0, {pinned})
        except (OSError, ValueError) as e:
            logger.warning(f"timing runs unpinned, could not bind to core {pinned}: {e}")
            previous, pinned = None, None
    else:
        logger.warning("timing runs unpinned, CPU affinity is not available on this platform")
    try:
        with threadpool_limits(limits=1):
            yield pinned
    finally:
        if previous is not None:
            os.sched_setaffinity(0, previous)


def time_adaptation(variants: Sequence[TimingVariant], episodes: Sequence[Episode], repeats: int = 3,
                    seed: int = None, quiet: bool = True, core: Optional[int] = None) -> List[Report]:
    """Wall-clock of adapt + predict over every pre-generated episode, ``repeats`` times per variant.

    Episodes are generated before the clock starts and every variant runs sequentially
    on one core with single-threaded BLAS. Accuracies come from the first repeat.
    """
    if repeats < 1 or not episodes:
        raise ConfigError(f"timing needs repeats >= 1 and episodes, got {repeats} and {len(episodes)}")
    _check_shared_config(variants)
    reports = []
    with single_core(core) as pinned:
        for variant in variants:
            times, accuracies = [], []
            for repeat in tqdm(range(repeats), desc=f"time {variant.label}", disable=quiet, leave=False):
                start = perf_counter()
                scores = [variant.algorithm.accuracy(variant.params, episode) for episode in episodes]
                times.append(perf_counter() - start)
                if repeat == 0:
                    accuracies = scores
            report = Report(variant.label, accuracies, times,
                            metadata={'seed': seed, 'version': __version__, 'n_tasks': len(episodes),
                                      'repeats': repeats, 'core': pinned})
            logger.info(report.summary())
            reports.append(report)
    return reports


def is_nondecreasing(values: Sequence[float], tolerance: float = 0.0) -> bool:
    """True if each value is at least the previous one minus ``tolerance`` (relative)."""
    values = np.asarray(values, dtype=np.float64)
    return bool(np.all(values[1:] >= values[:-1] * (1.0 - tolerance)))
