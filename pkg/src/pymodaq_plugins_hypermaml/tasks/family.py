from typing import Dict, Iterator, List, Optional, Sequence

import numpy as np
from pymodaq.utils.logger import set_logger, get_module_name

from pymodaq_plugins_hypermaml.errors import DatasetError
from pymodaq_plugins_hypermaml.tasks.episode import Episode, assemble_episode
from pymodaq_plugins_hypermaml.tasks.splits import SPLITS, split_classes, split_cross_domain
from pymodaq_plugins_hypermaml.utils import derive_rng

logger = set_logger(get_module_name(__file__))

KINDS = ('gaussian2d', 'glyphs', 'image-folder', 'cross-domain')


class TaskFamily:
    """A collection of tasks: class pools per split plus a way to draw class samples.

    Class references are ``<family name>:<class name>``. Episodes are sampled from
    independent random streams keyed by (seed, split, index).
    """
    kind = ''

    def __init__(self, name: str, classes: Sequence[str], seed: int = 0):
        self.name = name
        self.seed = int(seed)
        self.classes: List[str] = [self.ref(c) for c in classes]
        self.pools: Dict[str, List[str]] = {split: list(self.classes) for split in SPLITS}

    def __repr__(self):
        sizes = ', '.join(f"{split}={len(pool)}" for split, pool in self.pools.items())
        return f"{type(self).__name__}({self.name!r}, {sizes})"

    def ref(self, class_name) -> str:
        class_name = str(class_name)
        return class_name if class_name.startswith(f"{self.name}:") else f"{self.name}:{class_name}"

    @property
    def input_shape(self):
        raise NotImplementedError

    def split(self, ratios: Sequence[float] = (0.6, 0.2, 0.2), seed: Optional[int] = None) -> 'TaskFamily':
        train, val, test = split_classes(self.classes, ratios, self.seed if seed is None else seed)
        self.pools = {'train': train, 'val': val, 'test': test}
        logger.info(f"{self.name}: {len(train)}/{len(val)}/{len(test)} train/val/test classes")
        return self

    def draw_class(self, ref: str, count: int, rng: np.random.Generator) -> np.ndarray:
        """``count`` inputs of class ``ref``."""
        raise NotImplementedError

    def episode_rng(self, split: str, index: int) -> np.random.Generator:
        return derive_rng(self.seed, self.name, split, index)

    def sample_episode(self, split: str, n_way: int, k_shot: int, q_per_class: int, index: int) -> Episode:
        return self.draw_episode(split, n_way, k_shot, q_per_class, self.episode_rng(split, index))

    def draw_episode(self, split: str, n_way: int, k_shot: int, q_per_class: int,
                     rng: np.random.Generator) -> Episode:
        pool = self.pools[split]
        if len(pool) < n_way:
            raise DatasetError(f"{self.name} {split} pool has {len(pool)} classes, {n_way}-way episodes need more")
        chosen = rng.choice(len(pool), size=n_way, replace=False)
        samples = [self.draw_class(pool[i], k_shot + q_per_class, rng) for i in chosen]
        return assemble_episode(samples, k_shot, q_per_class, rng)

    def episodes(self, split: str, count: int, n_way: int, k_shot: int, q_per_class: int,
                 start: int = 0) -> Iterator[Episode]:
        for index in range(start, start + count):
            yield self.sample_episode(split, n_way, k_shot, q_per_class, index)


class CrossDomainFamily(TaskFamily):
    """Meta-train on every class of ``source``, validate and test on a split of ``target``."""
    kind = 'cross-domain'

    def __init__(self, source: TaskFamily, target: TaskFamily, ratios: Sequence[float] = (0.6, 0.2, 0.2),
                 seed: int = 0):
        if source.name == target.name:
            raise DatasetError(f"cross-domain families need distinct names, both are {source.name!r}")
        if source.input_shape != target.input_shape:
            raise DatasetError(f"{source.name} inputs {source.input_shape} and {target.name} inputs "
                               f"{target.input_shape} differ")
        self.name = f"{source.name}->{target.name}"
        self.seed = int(seed)
        self.source, self.target = source, target
        self.classes = source.classes + target.classes
        train, val, test = split_cross_domain(source.classes, target.classes, ratios, seed)
        self.pools = {'train': train, 'val': val, 'test': test}

    @property
    def input_shape(self):
        return self.source.input_shape

    def split(self, ratios=(0.6, 0.2, 0.2), seed=None) -> 'TaskFamily':
        return self

    def draw_class(self, ref: str, count: int, rng: np.random.Generator) -> np.ndarray:
        family = self.source if ref.startswith(f"{self.source.name}:") else self.target
        return family.draw_class(ref, count, rng)
