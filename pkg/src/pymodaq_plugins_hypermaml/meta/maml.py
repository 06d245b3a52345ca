from concurrent.futures import Executor
from dataclasses import asdict, dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pymodaq.utils.logger import set_logger, get_module_name

from pymodaq_plugins_hypermaml.autodiff import functional as F
from pymodaq_plugins_hypermaml.autodiff.backprop import GradMap, backward
from pymodaq_plugins_hypermaml.autodiff.tape import Tape
from pymodaq_plugins_hypermaml.autodiff.tensor import Tensor
from pymodaq_plugins_hypermaml.errors import ConfigError, NonFiniteError
from pymodaq_plugins_hypermaml.models.encoders import encode
from pymodaq_plugins_hypermaml.models.heads import classify
from pymodaq_plugins_hypermaml.models.params import ParamSet
from pymodaq_plugins_hypermaml.tasks.episode import Episode

logger = set_logger(get_module_name(__file__))


@dataclass
class MamlConfig:
    inner_lr: float = 0.01
    inner_steps: int = 1
    first_order: bool = False
    meta_lr: float = 0.001
    meta_batch: int = 4
    adapt_encoder: bool = True

    def __post_init__(self):
        if self.inner_lr < 0 or self.meta_lr <= 0:
            raise ConfigError(f"learning rates must be positive: inner {self.inner_lr}, meta {self.meta_lr}")
        if self.inner_steps < 0 or self.meta_batch < 1:
            raise ConfigError(f"inner_steps must be >= 0 and meta_batch >= 1, got {self.inner_steps}, "
                              f"{self.meta_batch}")

    def to_dict(self) -> dict:
        return asdict(self)


def on_tape(params: ParamSet) -> bool:
    return any(t.node is not None for t in params.values())


def ensure_tape(params: ParamSet) -> ParamSet:
    """``params`` itself if it is already recorded, else a copy watched on a fresh tape."""
    if on_tape(params):
        return params
    dtype = next(iter(params.values())).dtype if len(params) else np.float32
    return params.watch(Tape(dtype=dtype))


def forward(params: ParamSet, x) -> Tensor:
    """Logits of a joined (encoder + head) parameter set."""
    return classify(params.part('head'), encode(params.part('encoder'), x))


def cross_entropy(params: ParamSet, x, y) -> Tensor:
    return F.softmax_xent(forward(params, x), y)


def check_finite(loss: Tensor, what: str) -> Tensor:
    if not np.all(np.isfinite(loss.data)):
        logger.error(f"non-finite {what}: {loss.data}")
        raise NonFiniteError(f"non-finite {what}")
    return loss


def gradient_steps(params: ParamSet, loss_fn: Callable[[ParamSet], Tensor], lr: float, steps: int,
                   create_graph: bool = False) -> ParamSet:
    """``steps`` iterations of θ ← θ − lr·∇L(θ)."""
    for _ in range(steps):
        loss = check_finite(loss_fn(params), 'inner loss')
        grads = backward(loss, params, create_graph=create_graph)
        params = params.replace({name: F.add(p, F.scale(grads[name], -lr)) for name, p in params.items()})
    return params


def maml_adapt(theta_all: ParamSet, support: Tuple, cfg: MamlConfig, training: bool = False) -> ParamSet:
    """Task-adapted copy of ``theta_all`` after ``cfg.inner_steps`` gradient steps on the support loss.

    While training without ``first_order``, the steps are recorded with create_graph
    so the result stays differentiable with respect to the original parameters.
    """
    x, y = support
    if cfg.inner_steps == 0:
        return theta_all
    params = ensure_tape(theta_all)
    create_graph = training and not cfg.first_order
    if cfg.adapt_encoder:
        return gradient_steps(params, lambda p: cross_entropy(p, x, y), cfg.inner_lr, cfg.inner_steps,
                              create_graph)
    encoder = params.part('encoder')
    embeddings = encode(encoder, x)
    head = gradient_steps(params.part('head'), lambda h: F.softmax_xent(classify(h, embeddings), y),
                          cfg.inner_lr, cfg.inner_steps, create_graph)
    return params.updated(head=head)


def maml_episode_loss(theta_all: ParamSet, episode: Episode, cfg: MamlConfig) -> Tensor:
    adapted = maml_adapt(theta_all, episode.support, cfg, training=True)
    return check_finite(cross_entropy(adapted, *episode.query), 'query loss')


def _episode_gradient(theta_all: ParamSet, episode: Episode, cfg: MamlConfig,
                      loss_fn) -> Tuple[GradMap, float]:
    watched = theta_all.watch(Tape(dtype=next(iter(theta_all.values())).dtype))
    loss = loss_fn(watched, episode, cfg)
    return backward(loss, watched), float(loss.item())


def meta_gradient(theta_all: ParamSet, episodes: Sequence[Episode], cfg, loss_fn,
                  executor: Optional[Executor] = None) -> Tuple[GradMap, float]:
    """Gradient of the summed query losses. Each episode runs on its own tape.

    Per-episode gradients are added in episode order whatever executor computes them.
    """
    if not episodes:
        raise ConfigError("meta-step needs at least one episode")
    if executor is None:
        results: List = [_episode_gradient(theta_all, ep, cfg, loss_fn) for ep in episodes]
    else:
        results = list(executor.map(lambda ep: _episode_gradient(theta_all, ep, cfg, loss_fn), episodes))
    total = {name: np.zeros(t.shape, dtype=t.dtype) for name, t in theta_all.items()}
    loss = 0.0
    for grads, episode_loss in results:
        for name in total:
            total[name] = total[name] + grads[name].data
        loss += episode_loss
    if not np.isfinite(loss):
        raise NonFiniteError(f"non-finite meta-loss {loss}")
    return GradMap({n: Tensor(a) for n, a in total.items()}, theta_all.shapes), loss


def maml_meta_gradient(theta_all: ParamSet, episodes: Sequence[Episode], cfg: MamlConfig,
                       executor: Optional[Executor] = None) -> Tuple[GradMap, float]:
    return meta_gradient(theta_all, episodes, cfg, maml_episode_loss, executor)


def maml_meta_step(theta_all: ParamSet, episodes: Sequence[Episode], cfg: MamlConfig, optimizer,
                   executor: Optional[Executor] = None) -> Tuple[ParamSet, float]:
    """One optimizer step on Σ_i L_Qi(f_θ'i). Returns the updated parameters and the meta-loss."""
    grads, loss = maml_meta_gradient(theta_all, episodes, cfg, executor)
    return optimizer.step(theta_all, grads), loss
