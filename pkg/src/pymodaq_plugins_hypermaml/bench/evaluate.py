from concurrent.futures import ThreadPoolExecutor
from itertools import islice
from typing import Callable, Iterable, Optional

from pymodaq.utils.logger import set_logger, get_module_name
from tqdm import tqdm

from pymodaq_plugins_hypermaml import __version__
from pymodaq_plugins_hypermaml.bench.report import Report
from pymodaq_plugins_hypermaml.errors import ConfigError, DatasetError
from pymodaq_plugins_hypermaml.models.params import ParamSet
from pymodaq_plugins_hypermaml.tasks.episode import Episode

logger = set_logger(get_module_name(__file__))


def evaluate(algorithm, params: ParamSet, episodes: Iterable[Episode], n_episodes: int, variant: str = None,
             threads: int = 1, seed: Optional[int] = None, config_hash: str = '', quiet: bool = True,
             score: Callable = None) -> Report:
    """Adapt on each support set, score query accuracy and aggregate into a Report.

    ``score(params, episode) -> accuracy`` defaults to ``algorithm.accuracy``. With
    ``threads > 1`` episodes are scored concurrently; results keep episode order.
    """
    if n_episodes < 2:
        raise ConfigError(f"evaluation needs at least 2 episodes, got {n_episodes}")
    score = score or algorithm.accuracy
    stream = islice(iter(episodes), n_episodes)
    progress = dict(total=n_episodes, desc=f"eval {variant or algorithm.name}", disable=quiet, leave=False)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            accuracies = list(tqdm(pool.map(lambda ep: score(params, ep), stream), **progress))
    else:
        accuracies = [score(params, ep) for ep in tqdm(stream, **progress)]
    if len(accuracies) < n_episodes:
        raise DatasetError(f"episode stream ended after {len(accuracies)} of {n_episodes} episodes")
    report = Report(variant or algorithm.name, accuracies,
                    metadata={'seed': seed, 'config_hash': config_hash, 'version': __version__})
    logger.info(report.summary())
    return report
