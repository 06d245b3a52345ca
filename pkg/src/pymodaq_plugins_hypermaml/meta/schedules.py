from typing import Sequence, Tuple

from pymodaq_plugins_hypermaml.errors import ConfigError


def check_milestones(milestones: Sequence[int]) -> Tuple[int, ...]:
    milestones = tuple(int(m) for m in milestones)
    if any(b <= a for a, b in zip(milestones, milestones[1:])):
        raise ConfigError(f"milestones must be strictly increasing, got {milestones}")
    return milestones


def switch_lambda(epoch: float, milestones: Sequence[int] = (51, 550)) -> float:
    """Share of the hypernetwork update: 0 up to m1, 1 from m2, linear in between."""
    m1, m2 = check_milestones(milestones)
    if epoch <= m1:
        return 0.0
    if epoch >= m2:
        return 1.0
    return (epoch - m1) / (m2 - m1)


def lr_schedule(epoch: int, milestones: Sequence[int], base_lr: float, decay: float = 0.3) -> float:
    """base_lr · decay^k, k the number of milestones already reached."""
    reached = sum(1 for m in check_milestones(milestones) if m <= epoch)
    return base_lr * decay ** reached
