from collections.abc import Mapping
from typing import Dict, Iterator, List, Optional

import numpy as np

from pymodaq_plugins_hypermaml.autodiff.primitives import PRIMITIVES, apply_primitive
from pymodaq_plugins_hypermaml.autodiff.tensor import Tensor
from pymodaq_plugins_hypermaml.errors import GradientError, NestingError, ShapeError


class GradMap(Mapping):
    """Gradients keyed by parameter name; each entry has its parameter's shape."""

    def __init__(self, grads: Dict[str, Tensor], shapes: Optional[Dict[str, tuple]] = None):
        if shapes is not None:
            for name, grad in grads.items():
                if grad.shape != tuple(shapes[name]):
                    raise ShapeError(f"gradient of {name!r} has shape {grad.shape}, "
                                     f"parameter has {tuple(shapes[name])}")
        self._grads = dict(grads)

    def __getitem__(self, name: str) -> Tensor:
        return self._grads[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._grads)

    def __len__(self) -> int:
        return len(self._grads)

    def __repr__(self):
        return f"GradMap({', '.join(f'{k}: {v.shape}' for k, v in self._grads.items())})"

    def numpy(self) -> Dict[str, np.ndarray]:
        return {name: grad.data for name, grad in self._grads.items()}

    def norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(g.data.astype(np.float64) ** 2)) for g in self._grads.values())))


def _relevant_nodes(tape, loss_node: int, targets: set) -> List[int]:
    """Ancestors of the loss that lie on a path from at least one target, highest index first."""
    ancestors = set()
    stack = [loss_node]
    while stack:
        index = stack.pop()
        if index in ancestors:
            continue
        ancestors.add(index)
        stack.extend(i for i in tape.nodes[index].inputs if i is not None)
    relevant = set()
    for index in sorted(ancestors):
        node = tape.nodes[index]
        if index in targets or any(i in relevant for i in node.inputs if i is not None):
            relevant.add(index)
    return sorted(relevant, reverse=True)


def _accumulate(grads: Dict[int, Tensor], index: int, grad: Tensor):
    if index in grads:
        grads[index] = apply_primitive('add', (grads[index], grad))
    else:
        grads[index] = grad


def _run(tape, loss: Tensor, targets: set, create_graph: bool) -> Dict[int, Tensor]:
    order = _relevant_nodes(tape, loss.node, targets)
    relevant = set(order)
    if create_graph:
        for index in order:
            if tape.nodes[index].order >= 1 and not tape.nodes[index].is_leaf:
                raise NestingError("create_graph backward through gradient nodes needs a second nesting level")
    grads: Dict[int, Tensor] = {}
    seed = Tensor(np.ones(loss.shape, dtype=loss.dtype))
    if loss.node in relevant:
        grads[loss.node] = seed
    for index in order:
        node = tape.nodes[index]
        grad = grads.get(index)
        if node.is_leaf or grad is None:
            continue
        needs = tuple(i is not None and i in relevant for i in node.inputs)
        if not any(needs):
            continue
        input_grads = PRIMITIVES[node.kind].backward(node.ctx, grad, needs)
        for input_index, need, input_grad in zip(node.inputs, needs, input_grads):
            if need and input_grad is not None:
                _accumulate(grads, input_index, input_grad)
    return grads


def backward(loss: Tensor, wrt: Mapping, create_graph: bool = False) -> GradMap:
    """d(loss)/d(wrt[name]) for every name.

    Gradients are total derivatives: a target computed from another target contributes
    through both. Parameters the loss does not depend on get zero gradients. With
    ``create_graph`` the returned gradients are recorded on the tape (order 1) so a
    later backward can differentiate through them.
    """
    if loss.size != 1 or loss.ndim > 1:
        raise GradientError(f"backward needs a scalar loss, got shape {loss.shape}")
    tape = loss.tape
    for name, tensor in wrt.items():
        if tensor.node is not None and tape is not None and tensor.tape is not tape:
            raise GradientError(f"{name!r} lives on a different tape than the loss")
    if tape is None or loss.node is None:
        return GradMap({name: Tensor(np.zeros(t.shape, dtype=t.dtype)) for name, t in wrt.items()})
    targets = {t.node for t in wrt.values() if t.node is not None}
    if create_graph:
        with tape.nested():
            grads = _run(tape, loss, targets, create_graph=True)
    else:
        with tape.paused():
            grads = _run(tape, loss, targets, create_graph=False)
    out = {}
    for name, tensor in wrt.items():
        grad = grads.get(tensor.node) if tensor.node is not None else None
        if grad is None:
            grad = Tensor(np.zeros(tensor.shape, dtype=tensor.dtype))
        out[name] = grad
    return GradMap(out, {name: t.shape for name, t in wrt.items()})
