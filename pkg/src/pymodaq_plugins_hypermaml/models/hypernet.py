from dataclasses import asdict, dataclass

import numpy as np

from pymodaq_plugins_hypermaml.autodiff import functional as F
from pymodaq_plugins_hypermaml.autodiff.tensor import Tensor
from pymodaq_plugins_hypermaml.errors import ConfigError, ShapeError
from pymodaq_plugins_hypermaml.models.init import init_params
from pymodaq_plugins_hypermaml.models.params import ParamSet

DEPTH = 3


@dataclass
class HyperNetConfig:
    """Shared per-class MLP mapping an enhanced support row to (head weight column, bias element)."""
    embed_dim: int = 64
    n_way: int = 5
    hidden: int = 256
    depth: int = DEPTH
    enhancement: bool = True

    def __post_init__(self):
        if self.depth != DEPTH:
            raise ConfigError(f"hypernetwork depth is fixed to {DEPTH}, got {self.depth}")
        if min(self.embed_dim, self.n_way, self.hidden) <= 0:
            raise ConfigError(f"hypernetwork widths must be positive: {self}")

    @property
    def input_width(self) -> int:
        return self.embed_dim + (2 if self.enhancement else 1) * self.n_way

    @property
    def output_width(self) -> int:
        return self.embed_dim + 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'HyperNetConfig':
        return cls(**data)


def build_hypernetwork(cfg: HyperNetConfig, rng: np.random.Generator, scheme: str = 'kaiming_uniform',
                       dtype=np.float32) -> ParamSet:
    widths = [cfg.input_width] + [cfg.hidden] * (cfg.depth - 1) + [cfg.output_width]
    spec = {}
    for i in range(cfg.depth):
        last = i == cfg.depth - 1
        spec[f'fc{i}.weight'] = ((widths[i], widths[i + 1]), 'zero' if last else 'weight')
        spec[f'fc{i}.bias'] = ((widths[i + 1],), 'bias')
    return init_params(spec, rng, scheme, role='hypernet', config=cfg.to_dict(), dtype=dtype)


def hypernet_forward(eta: ParamSet, rows: Tensor) -> Tensor:
    """Apply the hypernetwork to every row of ``rows`` (n_way × input_width)."""
    cfg = HyperNetConfig.from_dict(eta.config)
    if rows.ndim != 2 or rows.shape[1] != cfg.input_width:
        raise ShapeError(f"hypernetwork expects rows of width {cfg.input_width}, got shape {rows.shape}")
    x = rows
    for i in range(cfg.depth):
        x = F.add(F.matmul(x, eta[f'fc{i}.weight']), eta[f'fc{i}.bias'])
        if i < cfg.depth - 1:
            x = F.relu(x)
    return x
