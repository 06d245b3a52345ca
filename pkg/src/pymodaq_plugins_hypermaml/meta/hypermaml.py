from concurrent.futures import Executor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from pymodaq_plugins_hypermaml.autodiff import functional as F
from pymodaq_plugins_hypermaml.autodiff.backprop import GradMap, backward
from pymodaq_plugins_hypermaml.autodiff.tensor import Tensor
from pymodaq_plugins_hypermaml.errors import ConfigError, DatasetError, ShapeError
from pymodaq_plugins_hypermaml.meta.maml import check_finite, ensure_tape, meta_gradient
from pymodaq_plugins_hypermaml.meta.schedules import check_milestones, switch_lambda
from pymodaq_plugins_hypermaml.models.encoders import encode
from pymodaq_plugins_hypermaml.models.heads import classify
from pymodaq_plugins_hypermaml.models.hypernet import HyperNetConfig, hypernet_forward
from pymodaq_plugins_hypermaml.models.params import ParamSet
from pymodaq_plugins_hypermaml.tasks.episode import Episode

SWITCH_MODES = ('update_blend', 'loss_blend')


@dataclass
class HyperMamlConfig:
    milestones: Tuple[int, int] = (51, 550)
    switch_mode: str = 'update_blend'
    enhancement: bool = True
    switch: bool = True
    aggregation: str = 'mean'
    hypernet: HyperNetConfig = field(default_factory=HyperNetConfig)
    meta_lr: float = 0.001
    warmup_inner_lr: float = 0.01
    meta_batch: int = 4

    def __post_init__(self):
        if isinstance(self.hypernet, dict):
            self.hypernet = HyperNetConfig.from_dict(self.hypernet)
        self.milestones = check_milestones(self.milestones)
        if len(self.milestones) != 2:
            raise ConfigError(f"warm-up needs two milestones, got {self.milestones}")
        if self.switch_mode not in SWITCH_MODES:
            raise ConfigError(f"unknown switch mode {self.switch_mode!r}, expected one of {SWITCH_MODES}")
        if self.aggregation != 'mean':
            raise ConfigError(f"only mean aggregation of support embeddings exists, got {self.aggregation!r}")
        if self.meta_lr <= 0 or self.warmup_inner_lr < 0 or self.meta_batch < 1:
            raise ConfigError(f"invalid learning rates or meta batch in {self}")
        self.hypernet.enhancement = self.enhancement

    def lam(self, epoch: float) -> float:
        """Warm-up coefficient for ``epoch``; always 1 with the switch disabled."""
        return switch_lambda(epoch, self.milestones) if self.switch else 1.0

    def to_dict(self) -> dict:
        data = asdict(self)
        data['milestones'] = list(self.milestones)
        return data


@dataclass
class AdaptedModel:
    """Base head θ plus a task-specific delta Δθ; ``effective`` is θ' = θ + Δθ."""
    base: ParamSet
    delta: ParamSet

    def __post_init__(self):
        if self.base.shapes != self.delta.shapes:
            raise ShapeError(f"head update shapes {self.delta.shapes} differ from head shapes {self.base.shapes}")

    @property
    def effective(self) -> ParamSet:
        return self.base.replace({name: F.add(p, self.delta[name]) for name, p in self.base.items()})


def support_predictions(theta: ParamSet, embeddings: Tensor) -> Tensor:
    """Detached softmax predictions of the base head on the support embeddings."""
    return F.softmax(classify(theta.detach(), embeddings.detach()))


def enhance_support(embeddings: Tensor, labels, predictions: Optional[Tensor], n_way: int,
                    k_shot: Optional[int] = None) -> Tensor:
    """Per-class rows: mean embedding ⊕ mean prediction ⊕ one-hot label.

    ``predictions=None`` drops the prediction block (enhancement disabled).
    """
    labels = np.asarray(labels, dtype=np.int64)
    counts = np.bincount(labels, minlength=n_way) if labels.size else np.zeros(n_way, dtype=int)
    if len(counts) != n_way or np.any(counts == 0):
        raise DatasetError(f"every class in [0, {n_way}) needs support examples, counts are {counts.tolist()}")
    if k_shot is not None and np.any(counts != k_shot):
        raise DatasetError(f"support class counts {counts.tolist()} differ from k_shot={k_shot}")
    blocks = [F.mean_rows(embeddings, labels, n_way)]
    if predictions is not None:
        blocks.append(F.mean_rows(predictions, labels, n_way))
    blocks.append(Tensor(np.eye(n_way, dtype=embeddings.dtype)))
    return F.concat_last_axis(*blocks)


def hyper_update(theta: ParamSet, enhanced: Tensor, eta: ParamSet) -> AdaptedModel:
    """Hypernetwork update of the head: row c of H(enhanced) updates weight column c and bias c."""
    weight = theta['weight']
    embed_dim, n_way = weight.shape
    if enhanced.shape[0] != n_way:
        raise ShapeError(f"enhanced support has {enhanced.shape[0]} rows, the head has {n_way} classes")
    out = hypernet_forward(eta, enhanced)
    if out.shape != (n_way, embed_dim + 1):
        raise ShapeError(f"hypernetwork output {out.shape} does not match head slices {(n_way, embed_dim + 1)}")
    delta = {'weight': F.transpose(F.slice_last_axis(out, 0, embed_dim)),
             'bias': F.reshape(F.slice_last_axis(out, embed_dim, embed_dim + 1), (n_way,))}
    return AdaptedModel(theta, theta.replace(delta))


def _hyper_model(theta, eta, embeddings, labels, n_way, enhancement) -> AdaptedModel:
    predictions = support_predictions(theta, embeddings) if enhancement else None
    return hyper_update(theta, enhance_support(embeddings, labels, predictions, n_way), eta)


def _gradient_delta(theta: ParamSet, embeddings: Tensor, labels, lr: float, create_graph: bool) -> ParamSet:
    loss = check_finite(F.softmax_xent(classify(theta, embeddings), labels), 'warm-up support loss')
    grads = backward(loss, theta, create_graph=create_graph)
    return theta.replace({name: F.scale(grads[name], -lr) for name in theta})


def hypermaml_adapt(theta_all: ParamSet, support: Tuple, cfg: HyperMamlConfig, lam: float,
                    training: bool = False) -> AdaptedModel:
    """θ' = θ + λ·H(…) − (1−λ)·α∇θ L_S on the head.

    The endpoints skip the unused term, so λ=1 is the plain hypernetwork update
    (no inner backward) and λ=0 is one gradient step on the head. The loss_blend
    mode always adapts with the hypernetwork; its blend happens in the meta-loss.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    x, y = support
    theta, eta = theta_all.part('head'), theta_all.part('hypernet')
    n_way = theta['weight'].shape[1]
    if cfg.switch_mode == 'loss_blend' or lam == 1.0:
        embeddings = encode(theta_all.part('encoder'), x)
        return _hyper_model(theta, eta, embeddings, y, n_way, cfg.enhancement)
    params = ensure_tape(theta_all)
    theta, eta = params.part('head'), params.part('hypernet')
    embeddings = encode(params.part('encoder'), x)
    step = _gradient_delta(theta, embeddings, y, cfg.warmup_inner_lr, create_graph=training)
    if lam == 0.0:
        return AdaptedModel(theta, step)
    hyper = _hyper_model(theta, eta, embeddings, y, n_way, cfg.enhancement).delta
    blended = {name: F.add(F.scale(hyper[name], lam), F.scale(step[name], 1.0 - lam)) for name in theta}
    return AdaptedModel(theta, theta.replace(blended))


def query_loss(model: AdaptedModel, gamma: ParamSet, query: Tuple) -> Tensor:
    x, y = query
    return check_finite(F.softmax_xent(classify(model.effective, encode(gamma, x)), y), 'query loss')


def hypermaml_episode_loss(theta_all: ParamSet, episode: Episode, cfg: HyperMamlConfig, lam: float) -> Tensor:
    gamma = theta_all.part('encoder')
    if cfg.switch_mode == 'update_blend' or lam == 1.0:
        return query_loss(hypermaml_adapt(theta_all, episode.support, cfg, lam, training=True), gamma, episode.query)
    # loss_blend: λ·L_hyper + (1−λ)·L_maml with a one-step head update for the MAML term
    theta = theta_all.part('head')
    embeddings = encode(gamma, episode.support_x)
    maml_model = AdaptedModel(theta, _gradient_delta(theta, embeddings, episode.support_y,
                                                     cfg.warmup_inner_lr, create_graph=True))
    maml_loss = query_loss(maml_model, gamma, episode.query)
    if lam == 0.0:
        return maml_loss
    hyper_loss = query_loss(hypermaml_adapt(theta_all, episode.support, cfg, lam, training=True),
                            gamma, episode.query)
    return F.add(F.scale(hyper_loss, lam), F.scale(maml_loss, 1.0 - lam))


def hypermaml_meta_gradient(theta_all: ParamSet, episodes: Sequence[Episode], cfg: HyperMamlConfig, lam: float,
                            executor: Optional[Executor] = None) -> Tuple[GradMap, float]:
    return meta_gradient(theta_all, episodes, cfg,
                         lambda params, episode, c: hypermaml_episode_loss(params, episode, c, lam), executor)


def hypermaml_meta_step(theta_all: ParamSet, episodes: Sequence[Episode], cfg: HyperMamlConfig, lam: float,
                        optimizer, executor: Optional[Executor] = None) -> Tuple[ParamSet, float]:
    """One joint optimizer step on encoder γ, head θ and hypernetwork η."""
    grads, loss = hypermaml_meta_gradient(theta_all, episodes, cfg, lam, executor)
    return optimizer.step(theta_all, grads), loss


def predict_query(model, gamma: ParamSet, query_x) -> Tensor:
    """Class probabilities (M × n_way) of the query inputs.

    ``model`` is an AdaptedModel, a head ParamSet, or a joined set whose own
    encoder then replaces ``gamma``.
    """
    if isinstance(model, AdaptedModel):
        head = model.effective
    elif model.role == 'all':
        gamma, head = model.part('encoder'), model.part('head')
    else:
        head = model
    return F.softmax(classify(head, encode(gamma, query_x)))
