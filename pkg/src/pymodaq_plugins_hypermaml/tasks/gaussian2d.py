"""Four permuted-ellipse tasks on the plane.

Two horizontal ellipses sit on the main diagonal, two vertical ones on the anti
diagonal. Tasks 0/1 classify the horizontal pair, 2/3 the vertical pair; odd
task ids swap the two labels of their even partner.
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from pymodaq_plugins_hypermaml.errors import ConfigError
from pymodaq_plugins_hypermaml.tasks.episode import Episode, assemble_episode
from pymodaq_plugins_hypermaml.tasks.family import TaskFamily

N_TASKS = 4


@dataclass
class Gaussian2dGeometry:
    center: float = 2.0
    major_variance: float = 1.0
    minor_variance: float = 0.1
    offset: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        self.offset = tuple(float(v) for v in self.offset)
        if self.major_variance <= 0 or self.minor_variance <= 0 or len(self.offset) != 2:
            raise ConfigError(f"invalid gaussian2d geometry {self}")

    @classmethod
    def from_config(cls, config) -> 'Gaussian2dGeometry':
        return cls(center=config('tasks', 'gaussian2d', 'center'),
                   major_variance=config('tasks', 'gaussian2d', 'major_variance'),
                   minor_variance=config('tasks', 'gaussian2d', 'minor_variance'),
                   offset=tuple(config('tasks', 'gaussian2d', 'offset')))

    def clusters(self, task_id: int) -> List[Tuple[np.ndarray, np.ndarray]]:
        """(mean, covariance) of the cluster labelled 0 and of the one labelled 1."""
        if task_id not in range(N_TASKS):
            raise ValueError(f"task_id must be in 0..{N_TASKS - 1}, got {task_id}")
        c = self.center
        offset = np.asarray(self.offset)
        if task_id < 2:
            means = [(c, c), (-c, -c)]
            cov = np.diag([self.major_variance, self.minor_variance])
        else:
            means = [(-c, c), (c, -c)]
            cov = np.diag([self.minor_variance, self.major_variance])
        clusters = [(np.asarray(m) + offset, cov) for m in means]
        return clusters[::-1] if task_id % 2 else clusters


def _draw(geometry: Gaussian2dGeometry, task_id: int, count: int, rng: np.random.Generator) -> List[np.ndarray]:
    return [rng.multivariate_normal(mean, cov, size=count) for mean, cov in geometry.clusters(task_id)]


def gaussian2d_episode(task_id: int, n_per_cluster: int, rng: np.random.Generator,
                       q_per_cluster: Optional[int] = None,
                       geometry: Optional[Gaussian2dGeometry] = None) -> Episode:
    """2-way episode of toy task ``task_id``, support and query drawn i.i.d. from the same clusters."""
    geometry = geometry or Gaussian2dGeometry()
    q_per_cluster = n_per_cluster if q_per_cluster is None else q_per_cluster
    samples = _draw(geometry, task_id, n_per_cluster + q_per_cluster, rng)
    return assemble_episode(samples, n_per_cluster, q_per_cluster, rng)


def bayes_accuracy(geometry: Gaussian2dGeometry, task_id: int, n_samples: int, rng: np.random.Generator) -> float:
    """Monte-Carlo accuracy of the true-posterior classifier on ``task_id``."""
    samples = _draw(geometry, task_id, n_samples, rng)
    x = np.concatenate(samples)
    y = np.repeat([0, 1], n_samples)
    log_lik = []
    for mean, cov in geometry.clusters(task_id):
        diff = x - mean
        log_lik.append(-0.5 * np.einsum('ij,jk,ik->i', diff, np.linalg.inv(cov), diff)
                       - 0.5 * np.log(np.linalg.det(cov)))
    return float(np.mean(np.argmax(np.stack(log_lik, axis=1), axis=1) == y))


class Gaussian2dFamily(TaskFamily):
    """Single shared pool of the four toy tasks, used by every split."""
    kind = 'gaussian2d'

    def __init__(self, geometry: Optional[Gaussian2dGeometry] = None, seed: int = 0):
        super().__init__('gaussian2d', [str(i) for i in range(N_TASKS)], seed)
        self.geometry = geometry or Gaussian2dGeometry()

    @property
    def input_shape(self):
        return (2,)

    def split(self, ratios=(0.6, 0.2, 0.2), seed=None) -> 'TaskFamily':
        return self

    def task_episode(self, task_id: int, k_shot: int, q_per_class: int, rng: np.random.Generator) -> Episode:
        return gaussian2d_episode(task_id, k_shot, rng, q_per_class, self.geometry)

    def draw_episode(self, split, n_way, k_shot, q_per_class, rng) -> Episode:
        if n_way != 2:
            raise ConfigError(f"gaussian2d tasks are 2-way, got n_way={n_way}")
        return self.task_episode(int(rng.integers(N_TASKS)), k_shot, q_per_class, rng)
