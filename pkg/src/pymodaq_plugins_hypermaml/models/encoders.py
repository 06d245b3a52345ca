from dataclasses import asdict, dataclass
from typing import Dict, Tuple

import numpy as np
from pymodaq.utils.logger import set_logger, get_module_name

from pymodaq_plugins_hypermaml.autodiff import functional as F
from pymodaq_plugins_hypermaml.autodiff.tensor import Tensor
from pymodaq_plugins_hypermaml.errors import ConfigError, ShapeError
from pymodaq_plugins_hypermaml.models.init import init_params
from pymodaq_plugins_hypermaml.models.params import ParamSet

logger = set_logger(get_module_name(__file__))

VARIANTS = ('linear2d', 'mlp', 'conv4')
CONV_BLOCKS = 4


@dataclass
class EncoderConfig:
    variant: str = 'conv4'
    input_shape: Tuple[int, ...] = (1, 28, 28)
    embed_dim: int = 64
    width: int = 64
    batch_norm: bool = True

    def __post_init__(self):
        self.input_shape = tuple(int(s) for s in self.input_shape)
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown encoder variant {self.variant!r}, expected one of {VARIANTS}")
        if self.embed_dim <= 0 or self.width <= 0:
            raise ConfigError(f"embedding dim and width must be positive, got {self.embed_dim} and {self.width}")
        if self.variant == 'conv4':
            if len(self.input_shape) != 3:
                raise ConfigError(f"conv4 needs a C×H×W input shape, got {self.input_shape}")
            if min(self.input_shape[1:]) < 2 ** CONV_BLOCKS:
                raise ConfigError(f"conv4 input {self.input_shape} is too small for {CONV_BLOCKS} pooling stages")
            if self.embed_dim != self.width:
                raise ConfigError(f"conv4 embeds into its channel width ({self.width}), "
                                  f"embed_dim {self.embed_dim} differs")
        if self.variant == 'linear2d' and self.input_shape != (2,):
            raise ConfigError(f"linear2d takes 2D points, got input shape {self.input_shape}")

    @property
    def embedding_dim(self) -> int:
        if self.variant == 'linear2d':
            return int(np.prod(self.input_shape))
        return self.embed_dim

    @property
    def feature_map(self) -> Tuple[int, int]:
        """Spatial size after the pooling stages (conv4 only)."""
        h, w = self.input_shape[1:]
        for _ in range(CONV_BLOCKS):
            h, w = h // 2, w // 2
        return h, w

    def to_dict(self) -> dict:
        data = asdict(self)
        data['input_shape'] = list(self.input_shape)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'EncoderConfig':
        return cls(**data)


def parameter_spec(cfg: EncoderConfig) -> Dict[str, tuple]:
    spec = {}
    if cfg.variant == 'conv4':
        channels = cfg.input_shape[0]
        for i in range(CONV_BLOCKS):
            spec[f'conv{i}.weight'] = ((cfg.width, channels, 3, 3), 'weight')
            spec[f'conv{i}.bias'] = ((cfg.width,), 'bias')
            if cfg.batch_norm:
                spec[f'bn{i}.weight'] = ((cfg.width,), 'scale')
                spec[f'bn{i}.bias'] = ((cfg.width,), 'shift')
            channels = cfg.width
    elif cfg.variant == 'mlp':
        widths = [int(np.prod(cfg.input_shape)), cfg.width, cfg.embed_dim]
        for i in range(2):
            spec[f'fc{i}.weight'] = ((widths[i], widths[i + 1]), 'weight')
            spec[f'fc{i}.bias'] = ((widths[i + 1],), 'bias')
            if cfg.batch_norm:
                spec[f'bn{i}.weight'] = ((widths[i + 1],), 'scale')
                spec[f'bn{i}.bias'] = ((widths[i + 1],), 'shift')
    return spec


def build_encoder(cfg: EncoderConfig, rng: np.random.Generator, scheme: str = 'kaiming_uniform',
                  dtype=np.float32) -> ParamSet:
    params = init_params(parameter_spec(cfg), rng, scheme, role='encoder', config=cfg.to_dict(), dtype=dtype)
    logger.debug(f"built {cfg.variant} encoder with {params.size} parameters")
    return params


def _conv4(gamma: ParamSet, x: Tensor, cfg: EncoderConfig) -> Tensor:
    for i in range(CONV_BLOCKS):
        weight = gamma[f'conv{i}.weight']
        x = F.conv2d(x, weight, stride=1, padding=1)
        x = F.add(x, F.reshape(gamma[f'conv{i}.bias'], (1, weight.shape[0], 1, 1)))
        if cfg.batch_norm:
            x = F.batch_norm(x, gamma[f'bn{i}.weight'], gamma[f'bn{i}.bias'])
        x = F.maxpool2x2(F.relu(x))
    if x.shape[2] * x.shape[3] > 1:
        return F.global_avg_pool(x)
    return F.reshape(x, (x.shape[0], x.shape[1]))


def _mlp(gamma: ParamSet, x: Tensor, cfg: EncoderConfig) -> Tensor:
    x = F.reshape(x, (x.shape[0], -1))
    for i in range(2):
        x = F.add(F.matmul(x, gamma[f'fc{i}.weight']), gamma[f'fc{i}.bias'])
        if cfg.batch_norm:
            x = F.batch_norm(x, gamma[f'bn{i}.weight'], gamma[f'bn{i}.bias'])
        x = F.relu(x)
    return x


def encode(gamma: ParamSet, batch) -> Tensor:
    """Embeddings (B × embedding_dim) of a batch of inputs."""
    cfg = EncoderConfig.from_dict(gamma.config)
    batch = batch if isinstance(batch, Tensor) else Tensor(batch)
    if tuple(batch.shape[1:]) != cfg.input_shape:
        raise ShapeError(f"{cfg.variant} encoder expects inputs of shape (B, {cfg.input_shape}), "
                         f"got {batch.shape}")
    if cfg.variant == 'linear2d':
        return batch
    if cfg.variant == 'mlp':
        return _mlp(gamma, batch, cfg)
    return _conv4(gamma, batch, cfg)
