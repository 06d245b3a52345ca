from .tensor import Tensor, DEFAULT_DTYPE
from .tape import Tape, Node, MAX_NESTING_LEVEL
from .primitives import PRIMITIVES, PUBLIC_KINDS, apply_primitive
from .backprop import GradMap, backward
from .gradcheck import finite_diff_grad, relative_error
from . import functional
