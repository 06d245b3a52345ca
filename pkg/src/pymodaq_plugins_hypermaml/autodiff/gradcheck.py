from typing import Callable, Dict, Mapping

import numpy as np

from pymodaq_plugins_hypermaml.autodiff.backprop import GradMap
from pymodaq_plugins_hypermaml.autodiff.tensor import Tensor
from pymodaq_plugins_hypermaml.errors import NonFiniteError


def _as_arrays(point) -> Dict[str, np.ndarray]:
    return {name: np.array(getattr(value, 'data', value), dtype=np.float64) for name, value in point.items()}


def _evaluate(f: Callable, point, arrays: Dict[str, np.ndarray]) -> float:
    if hasattr(point, 'with_arrays'):
        value = f(point.with_arrays(arrays))
    else:
        value = f({name: Tensor(array) for name, array in arrays.items()})
    value = float(getattr(value, 'data', value))
    if not np.isfinite(value):
        raise NonFiniteError(f"function evaluated to {value} during finite differencing")
    return value


def finite_diff_grad(f: Callable, point: Mapping, epsilon: float = 1e-4) -> GradMap:
    """Central-difference gradient of a scalar function of named tensors, in 64-bit precision.

    ``point`` is a ParamSet (rebuilt through ``with_arrays``) or a plain mapping of
    arrays/tensors, in which case ``f`` receives a dict of float64 tensors.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    arrays = _as_arrays(point)
    grads = {}
    for name, array in arrays.items():
        grad = np.zeros_like(array)
        for position in np.ndindex(array.shape):
            original = array[position]
            array[position] = original + epsilon
            upper = _evaluate(f, point, arrays)
            array[position] = original - epsilon
            lower = _evaluate(f, point, arrays)
            array[position] = original
            grad[position] = (upper - lower) / (2 * epsilon)
        grads[name] = Tensor(grad)
    return GradMap(grads)


def _flat(value, keys) -> np.ndarray:
    if isinstance(value, Mapping):
        return np.concatenate([np.ravel(getattr(value[k], 'data', value[k])) for k in keys])
    return np.ravel(getattr(value, 'data', value))


def relative_error(a, b) -> float:
    """||a - b|| / max(||a||, ||b||), with a floor so two zero vectors compare equal."""
    keys = list(a) if isinstance(a, Mapping) else None
    a = _flat(a, keys).astype(np.float64)
    b = _flat(b, keys).astype(np.float64)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / scale)
