from typing import Optional, Tuple

import numpy as np

DEFAULT_DTYPE = np.float32


class Tensor:
    """Dense array, optionally attached to a Tape through ``node``.

    Tensors without a node are constants for differentiation.
    """
    __slots__ = ('data', 'node', 'tape')
    __array_priority__ = 100

    def __init__(self, data, dtype=None):
        array = np.asarray(data, dtype=dtype)
        if dtype is None and array.dtype.kind != 'f':
            array = array.astype(DEFAULT_DTYPE)
        self.data: np.ndarray = array
        self.node: Optional[int] = None
        self.tape = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def requires_grad(self) -> bool:
        return self.node is not None

    @property
    def T(self) -> 'Tensor':
        from pymodaq_plugins_hypermaml.autodiff import functional as F
        return F.transpose(self)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return self.data.item()

    def detach(self) -> 'Tensor':
        return Tensor(self.data)

    def reshape(self, *shape) -> 'Tensor':
        from pymodaq_plugins_hypermaml.autodiff import functional as F
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.reshape(self, shape)

    def __len__(self):
        return len(self.data)

    def __repr__(self):
        suffix = f", node={self.node}" if self.node is not None else ""
        return f"Tensor({self.data!r}{suffix})"

    def _wrap(self, other) -> 'Tensor':
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=self.dtype))

    def __add__(self, other):
        from pymodaq_plugins_hypermaml.autodiff import functional as F
        return F.add(self, self._wrap(other))

    def __radd__(self, other):
        from pymodaq_plugins_hypermaml.autodiff import functional as F
        return F.add(self._wrap(other), self)

    def __sub__(self, other):
        from pymodaq_plugins_hypermaml.autodiff import functional as F
        return F.add(self, F.scale(self._wrap(other), -1.0))

    def __rsub__(self, other):
        from pymodaq_plugins_hypermaml.autodiff import functional as F
        return F.add(self._wrap(other), F.scale(self, -1.0))

    def __neg__(self):
        from pymodaq_plugins_hypermaml.autodiff import functional as F
        return F.scale(self, -1.0)

    def __mul__(self, other):
        from pymodaq_plugins_hypermaml.autodiff import functional as F
        if np.isscalar(other):
            return F.scale(self, float(other))
        return F.mul(self, self._wrap(other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        from pymodaq_plugins_hypermaml.autodiff import functional as F
        if not np.isscalar(other):
            return F.mul(self, F.pow(self._wrap(other), -1.0))
        return F.scale(self, 1.0 / float(other))

    def __pow__(self, exponent):
        from pymodaq_plugins_hypermaml.autodiff import functional as F
        return F.pow(self, float(exponent))

    def __matmul__(self, other):
        from pymodaq_plugins_hypermaml.autodiff import functional as F
        return F.matmul(self, self._wrap(other))

    def __rmatmul__(self, other):
        from pymodaq_plugins_hypermaml.autodiff import functional as F
        return F.matmul(self._wrap(other), self)
