import numpy as np

from pymodaq_plugins_hypermaml.autodiff import functional as F
from pymodaq_plugins_hypermaml.autodiff.tensor import Tensor
from pymodaq_plugins_hypermaml.errors import ConfigError, ShapeError
from pymodaq_plugins_hypermaml.models.init import init_params
from pymodaq_plugins_hypermaml.models.params import ParamSet


def build_head(embed_dim: int, n_way: int, rng: np.random.Generator, scheme: str = 'kaiming_uniform',
               dtype=np.float32) -> ParamSet:
    """Linear classifier θ: ``weight`` (embed_dim × n_way) and ``bias`` (n_way)."""
    if embed_dim <= 0 or n_way < 2:
        raise ConfigError(f"head needs a positive embedding dim and n_way >= 2, got {embed_dim}, {n_way}")
    spec = {'weight': ((embed_dim, n_way), 'weight'), 'bias': ((n_way,), 'bias')}
    return init_params(spec, rng, scheme, role='head', config={'embed_dim': embed_dim, 'n_way': n_way},
                       dtype=dtype)


def classify(theta: ParamSet, embeddings: Tensor) -> Tensor:
    weight = theta['weight']
    if embeddings.ndim != 2 or embeddings.shape[1] != weight.shape[0]:
        raise ShapeError(f"head expects embeddings of width {weight.shape[0]}, got shape {embeddings.shape}")
    return F.add(F.matmul(embeddings, weight), theta['bias'])
