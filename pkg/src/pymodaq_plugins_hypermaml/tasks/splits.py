from typing import List, Sequence, Tuple

import numpy as np

from pymodaq_plugins_hypermaml.errors import ConfigError, DatasetError
from pymodaq_plugins_hypermaml.utils import derive_rng

SPLITS = ('train', 'val', 'test')


def _check_ratios(ratios: Sequence[float]) -> np.ndarray:
    ratios = np.asarray(ratios, dtype=np.float64)
    if ratios.ndim != 1 or np.any(ratios <= 0) or not np.isclose(ratios.sum(), 1.0):
        raise ConfigError(f"split ratios must be positive and sum to 1, got {ratios.tolist()}")
    return ratios


def _allocate(n: int, ratios: np.ndarray) -> List[int]:
    """Largest-remainder allocation of ``n`` items to ``ratios``."""
    exact = ratios * n
    sizes = np.floor(exact).astype(int)
    remainder = exact - sizes
    for i in np.argsort(-remainder, kind='stable')[:n - sizes.sum()]:
        sizes[i] += 1
    return sizes.tolist()


def split_classes(pool: Sequence[str], ratios: Sequence[float] = (0.6, 0.2, 0.2),
                  seed: int = 0) -> Tuple[List[str], List[str], List[str]]:
    """Deterministic disjoint train/val/test partition of a class pool."""
    ratios = _check_ratios(ratios)
    if len(ratios) != 3:
        raise ConfigError(f"need three split ratios (train, val, test), got {len(ratios)}")
    pool = sorted(set(pool))
    sizes = _allocate(len(pool), ratios)
    if min(sizes) == 0:
        raise DatasetError(f"{len(pool)} classes cannot fill every split with ratios {ratios.tolist()}")
    order = derive_rng(seed, 'split').permutation(len(pool))
    shuffled = [pool[i] for i in order]
    bounds = np.cumsum([0] + sizes)
    return tuple(sorted(shuffled[bounds[i]:bounds[i + 1]]) for i in range(3))


def split_cross_domain(source_pool: Sequence[str], target_pool: Sequence[str],
                       ratios: Sequence[float] = (0.6, 0.2, 0.2),
                       seed: int = 0) -> Tuple[List[str], List[str], List[str]]:
    """Train on the whole source pool, validate and test on a split of the target pool.

    Class references carry their family namespace (``family:class``), so equal
    class names in the two families never collide.
    """
    ratios = _check_ratios(ratios)
    train = sorted(set(source_pool))
    target = sorted(set(target_pool))
    if set(train) & set(target):
        raise DatasetError("cross-domain pools overlap; class references must be namespaced by family")
    sizes = _allocate(len(target), ratios[1:] / ratios[1:].sum())
    if not train or min(sizes) == 0:
        raise DatasetError(f"cross-domain split needs a nonempty source pool and at least two target "
                           f"classes, got {len(train)} and {len(target)}")
    order = derive_rng(seed, 'split-cross-domain').permutation(len(target))
    shuffled = [target[i] for i in order]
    return train, sorted(shuffled[:sizes[0]]), sorted(shuffled[sizes[0]:])
