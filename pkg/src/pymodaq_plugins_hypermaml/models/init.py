"""Weight initialization schemes.

Dense weights are stored (fan_in, fan_out); convolution kernels (out, in, kh, kw)
with fan_in = in * kh * kw.
"""
from typing import Dict, Tuple

import numpy as np

from pymodaq_plugins_hypermaml.errors import ConfigError
from pymodaq_plugins_hypermaml.models.params import ParamSet

SCHEMES = ('kaiming_uniform', 'xavier_uniform', 'zeros')


def fan_in_out(shape: Tuple[int, ...]) -> Tuple[int, int]:
    if len(shape) == 2:
        return shape[0], shape[1]
    if len(shape) == 4:
        receptive = shape[2] * shape[3]
        return shape[1] * receptive, shape[0] * receptive
    raise ConfigError(f"no fan definition for a weight of shape {shape}")


def weight_bound(shape: Tuple[int, ...], scheme: str) -> float:
    fan_in, fan_out = fan_in_out(shape)
    if scheme == 'kaiming_uniform':
        return float(np.sqrt(6.0 / fan_in))
    if scheme == 'xavier_uniform':
        return float(np.sqrt(6.0 / (fan_in + fan_out)))
    if scheme == 'zeros':
        return 0.0
    raise ConfigError(f"unknown init scheme {scheme!r}, expected one of {SCHEMES}")


def init_params(spec: Dict[str, Tuple[Tuple[int, ...], str]], rng: np.random.Generator,
                scheme: str = 'kaiming_uniform', role: str = 'encoder', config: dict = None,
                dtype=np.float32) -> ParamSet:
    """Build a ParamSet from ``{name: (shape, kind)}``.

    kind is 'weight' (drawn from the scheme), 'bias' or 'shift' (zeros), 'scale' (ones)
    or 'zero' (a weight forced to zero whatever the scheme).
    """
    tensors = {}
    for name, (shape, kind) in spec.items():
        shape = tuple(shape)
        if kind == 'weight':
            bound = weight_bound(shape, scheme)
            values = rng.uniform(-bound, bound, size=shape) if bound else np.zeros(shape)
        elif kind in ('bias', 'shift', 'zero'):
            values = np.zeros(shape)
        elif kind == 'scale':
            values = np.ones(shape)
        else:
            raise ConfigError(f"{name}: unknown parameter kind {kind!r}")
        tensors[name] = np.asarray(values, dtype=dtype)
    return ParamSet(tensors, role, config)
