from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, List, Optional, Tuple

import numpy as np

from pymodaq_plugins_hypermaml.errors import NestingError

MAX_NESTING_LEVEL = 1


@dataclass
class Node:
    """One recorded primitive application. Leaves have no context."""
    index: int
    kind: str
    inputs: Tuple[Optional[int], ...]
    ctx: Any
    order: int

    @property
    def is_leaf(self) -> bool:
        return self.ctx is None


class Tape:
    """Append-only record of primitive applications.

    A tape belongs to one thread. ``nesting_level`` is 0 during forward passes and 1
    while a ``create_graph`` backward records gradient nodes; nodes carry the level
    they were recorded at as their ``order``.
    """

    def __init__(self, dtype=np.float32):
        self.dtype = np.dtype(dtype)
        self.nodes: List[Node] = []
        self.nesting_level = 0
        self.recording = True

    def __len__(self):
        return len(self.nodes)

    def __repr__(self):
        return f"Tape(dtype={self.dtype.name}, nodes={len(self.nodes)}, level={self.nesting_level})"

    def record(self, kind: str, inputs: Tuple[Optional[int], ...], ctx) -> int:
        index = len(self.nodes)
        self.nodes.append(Node(index, kind, inputs, ctx, self.nesting_level))
        return index

    def watch(self, value):
        """Leaf tensor on this tape holding a copy of ``value`` cast to the tape dtype."""
        from pymodaq_plugins_hypermaml.autodiff.tensor import Tensor
        data = value.data if isinstance(value, Tensor) else value
        leaf = Tensor(np.array(data, dtype=self.dtype))
        leaf.node = self.record('leaf', (), None)
        leaf.tape = self
        return leaf

    @contextmanager
    def paused(self):
        previous = self.recording
        self.recording = False
        try:
            yield self
        finally:
            self.recording = previous

    @contextmanager
    def nested(self):
        if self.nesting_level >= MAX_NESTING_LEVEL:
            raise NestingError(f"only {MAX_NESTING_LEVEL} nesting level of create_graph is supported")
        previous = self.recording
        self.nesting_level += 1
        self.recording = True
        try:
            yield self
        finally:
            self.nesting_level -= 1
            self.recording = previous
