from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from pymodaq_plugins_hypermaml.autodiff.tensor import Tensor
from pymodaq_plugins_hypermaml.errors import CheckpointError, ShapeError
from pymodaq_plugins_hypermaml.models.params import ParamSet


@dataclass
class AdamState:
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def zeros(cls, params: ParamSet) -> 'AdamState':
        return cls(0, {n: np.zeros(t.shape, dtype=t.dtype) for n, t in params.items()},
                   {n: np.zeros(t.shape, dtype=t.dtype) for n, t in params.items()})


def adam_step(params: ParamSet, grads: Mapping, state: AdamState, lr: float,
              betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8) -> Tuple[ParamSet, AdamState]:
    """One bias-corrected Adam update. Returns new detached parameters and a new state."""
    beta1, beta2 = betas
    step = state.step + 1
    new_params, new_m, new_v = {}, {}, {}
    for name, param in params.items():
        grad = np.asarray(getattr(grads[name], 'data', grads[name]), dtype=param.dtype)
        m_prev = state.m.get(name, np.zeros(param.shape, dtype=param.dtype))
        v_prev = state.v.get(name, np.zeros(param.shape, dtype=param.dtype))
        if grad.shape != param.shape or m_prev.shape != param.shape:
            raise ShapeError(f"{name}: gradient {grad.shape} or state {m_prev.shape} differ from "
                             f"parameter {param.shape}")
        m = beta1 * m_prev + (1 - beta1) * grad
        v = beta2 * v_prev + (1 - beta2) * grad * grad
        m_hat = m / (1 - beta1 ** step)
        v_hat = v / (1 - beta2 ** step)
        update = lr * m_hat / (np.sqrt(v_hat) + eps)
        new_params[name] = Tensor((param.data - update).astype(param.dtype))
        new_m[name], new_v[name] = m.astype(param.dtype), v.astype(param.dtype)
    return params.replace(new_params), AdamState(step, new_m, new_v)


class Adam:
    """Adam holding its own state and a mutable learning rate (driven by the lr schedule)."""

    def __init__(self, lr: float = 1e-3, betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        self.lr = lr
        self.betas = tuple(betas)
        self.eps = eps
        self.state = AdamState()

    def step(self, params: ParamSet, grads: Mapping) -> ParamSet:
        params, self.state = adam_step(params, grads, self.state, self.lr, self.betas, self.eps)
        return params

    def state_arrays(self) -> Dict[str, np.ndarray]:
        arrays = {'adam.step': np.asarray([self.state.step], dtype=np.float32)}
        arrays.update({f'adam.m/{n}': a for n, a in self.state.m.items()})
        arrays.update({f'adam.v/{n}': a for n, a in self.state.v.items()})
        return arrays

    def load_state_arrays(self, arrays: Mapping[str, np.ndarray]):
        if 'adam.step' not in arrays:
            raise CheckpointError("optimizer section has no adam.step entry")
        step = int(np.asarray(arrays['adam.step']).ravel()[0])
        m = {k[len('adam.m/'):]: np.asarray(a) for k, a in arrays.items() if k.startswith('adam.m/')}
        v = {k[len('adam.v/'):]: np.asarray(a) for k, a in arrays.items() if k.startswith('adam.v/')}
        self.state = AdamState(step, m, v)
