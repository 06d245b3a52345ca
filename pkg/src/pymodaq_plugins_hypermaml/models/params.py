from collections.abc import Mapping
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from pymodaq_plugins_hypermaml.autodiff.tensor import Tensor
from pymodaq_plugins_hypermaml.errors import ShapeError

ROLES = ('encoder', 'head', 'hypernet', 'all')


class ParamSet(Mapping):
    """Ordered, immutable map of parameter name to Tensor.

    ``role`` tags the network the parameters belong to. ``config`` carries the
    (plain dict) configuration the set was built from, so forward functions can
    be called with the set alone. A joined set (role ``all``) prefixes every name
    with its part role: ``encoder/conv0.weight``.
    """

    def __init__(self, tensors: Dict[str, Tensor], role: str, config: Optional[dict] = None):
        if role not in ROLES:
            raise ValueError(f"unknown parameter role {role!r}, expected one of {ROLES}")
        self._tensors = {name: t if isinstance(t, Tensor) else Tensor(t) for name, t in tensors.items()}
        self.role = role
        self.config = dict(config or {})

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def __repr__(self):
        return f"ParamSet(role={self.role}, {len(self)} tensors, {self.size} values)"

    @property
    def size(self) -> int:
        return sum(t.size for t in self._tensors.values())

    @property
    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: t.shape for name, t in self._tensors.items()}

    def replace(self, tensors: Dict[str, Tensor]) -> 'ParamSet':
        """Same role and config, new tensors. Names and shapes must match exactly."""
        if list(tensors) != list(self._tensors):
            raise ShapeError(f"{self.role} parameter names {list(tensors)} differ from {list(self._tensors)}")
        for name, tensor in tensors.items():
            if tensor.shape != self._tensors[name].shape:
                raise ShapeError(f"{name}: shape {tensor.shape} differs from {self._tensors[name].shape}")
        return ParamSet(tensors, self.role, self.config)

    def numpy(self) -> Dict[str, np.ndarray]:
        return {name: t.data for name, t in self._tensors.items()}

    def with_arrays(self, arrays: Dict[str, np.ndarray]) -> 'ParamSet':
        return self.replace({name: Tensor(np.array(arrays[name])) for name in self._tensors})

    def flatten(self) -> np.ndarray:
        if not self._tensors:
            return np.zeros(0, dtype=np.float32)
        return np.concatenate([t.data.ravel() for t in self._tensors.values()])

    def unflatten(self, vector: np.ndarray) -> 'ParamSet':
        vector = np.asarray(vector)
        if vector.shape != (self.size,):
            raise ShapeError(f"flat vector of shape {vector.shape} does not match {self.size} parameters")
        arrays, start = {}, 0
        for name, tensor in self._tensors.items():
            arrays[name] = vector[start:start + tensor.size].reshape(tensor.shape).astype(tensor.dtype)
            start += tensor.size
        return self.with_arrays(arrays)

    def watch(self, tape) -> 'ParamSet':
        """Copy of the set whose tensors are leaves on ``tape``."""
        return self.replace({name: tape.watch(t) for name, t in self._tensors.items()})

    def detach(self) -> 'ParamSet':
        return self.replace({name: t.detach() for name, t in self._tensors.items()})

    def astype(self, dtype) -> 'ParamSet':
        return self.replace({name: Tensor(t.data.astype(dtype)) for name, t in self._tensors.items()})

    @classmethod
    def join(cls, *sets: 'ParamSet') -> 'ParamSet':
        tensors, config = {}, {}
        for part in sets:
            if part.role == 'all' or part.role in config:
                raise ValueError(f"cannot join a second {part.role} parameter set")
            config[part.role] = part.config
            tensors.update({f"{part.role}/{name}": t for name, t in part.items()})
        return cls(tensors, 'all', config)

    def part(self, role: str) -> 'ParamSet':
        if self.role != 'all':
            if role != self.role:
                raise KeyError(f"{self.role} parameter set has no {role} part")
            return self
        if role not in self.config:
            raise KeyError(f"joined parameter set has no {role} part")
        prefix = f"{role}/"
        return ParamSet({name[len(prefix):]: t for name, t in self._tensors.items() if name.startswith(prefix)},
                        role, self.config[role])

    def roles(self) -> Tuple[str, ...]:
        return tuple(self.config) if self.role == 'all' else (self.role,)

    def updated(self, **parts: 'ParamSet') -> 'ParamSet':
        """Joined set with some parts swapped."""
        return ParamSet.join(*(parts.get(role, self.part(role)) for role in self.roles()))
