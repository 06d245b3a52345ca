from dataclasses import dataclass

import numpy as np

from pymodaq_plugins_hypermaml.autodiff.tensor import Tensor
from pymodaq_plugins_hypermaml.errors import DatasetError


@dataclass
class Episode:
    """One N-way K-shot task. Labels are integers in [0, n_way)."""
    support_x: Tensor
    support_y: np.ndarray
    query_x: Tensor
    query_y: np.ndarray
    n_way: int
    k_shot: int
    q_per_class: int

    def __post_init__(self):
        if not isinstance(self.support_x, Tensor):
            self.support_x = Tensor(np.asarray(self.support_x, dtype=np.float32))
        if not isinstance(self.query_x, Tensor):
            self.query_x = Tensor(np.asarray(self.query_x, dtype=np.float32))
        self.support_y = np.asarray(self.support_y, dtype=np.int64)
        self.query_y = np.asarray(self.query_y, dtype=np.int64)

    @property
    def support(self):
        return self.support_x, self.support_y

    @property
    def query(self):
        return self.query_x, self.query_y

    def validate(self) -> 'Episode':
        for part, x, y, per_class in (('support', self.support_x, self.support_y, self.k_shot),
                                      ('query', self.query_x, self.query_y, self.q_per_class)):
            if len(x) != len(y) or len(y) != self.n_way * per_class:
                raise DatasetError(f"{part} holds {len(x)} inputs and {len(y)} labels, "
                                   f"expected {self.n_way}×{per_class}")
            if y.size and (y.min() < 0 or y.max() >= self.n_way):
                raise DatasetError(f"{part} labels outside [0, {self.n_way})")
            counts = np.bincount(y, minlength=self.n_way)
            if np.any(counts != per_class):
                raise DatasetError(f"{part} class counts {counts.tolist()} differ from {per_class}")
        return self

    def astype(self, dtype) -> 'Episode':
        return Episode(Tensor(self.support_x.data.astype(dtype)), self.support_y,
                       Tensor(self.query_x.data.astype(dtype)), self.query_y,
                       self.n_way, self.k_shot, self.q_per_class)


def assemble_episode(samples, k_shot: int, q_per_class: int, rng: np.random.Generator) -> Episode:
    """Episode from per-class sample arrays (each holding k_shot + q_per_class inputs).

    Class ``i`` of ``samples`` gets label ``i``; support and query are shuffled.
    """
    n_way = len(samples)
    support_x = np.concatenate([s[:k_shot] for s in samples])
    query_x = np.concatenate([s[k_shot:k_shot + q_per_class] for s in samples])
    support_y = np.repeat(np.arange(n_way), k_shot)
    query_y = np.repeat(np.arange(n_way), q_per_class)
    support_order = rng.permutation(len(support_y))
    query_order = rng.permutation(len(query_y))
    return Episode(support_x[support_order], support_y[support_order],
                   query_x[query_order], query_y[query_order], n_way, k_shot, q_per_class)
