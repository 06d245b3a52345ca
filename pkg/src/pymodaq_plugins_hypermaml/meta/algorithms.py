"""Meta-learning algorithms behind one interface.

Every algorithm exposes ``init_params``, ``adapt``, ``predict`` and ``meta_step``;
training, evaluation, timing and plotting only go through these.
"""
from concurrent.futures import Executor
from dataclasses import replace
from typing import Dict, Optional, Sequence, Tuple, Type

import numpy as np

from pymodaq_plugins_hypermaml.autodiff.tensor import Tensor
from pymodaq_plugins_hypermaml.errors import ConfigError
from pymodaq_plugins_hypermaml.meta.hypermaml import (HyperMamlConfig, hypermaml_adapt, hypermaml_meta_step,
                                                      predict_query)
from pymodaq_plugins_hypermaml.meta.maml import MamlConfig, maml_adapt, maml_meta_step
from pymodaq_plugins_hypermaml.meta.optim import Adam
from pymodaq_plugins_hypermaml.models.encoders import EncoderConfig, build_encoder
from pymodaq_plugins_hypermaml.models.heads import build_head
from pymodaq_plugins_hypermaml.models.hypernet import build_hypernetwork
from pymodaq_plugins_hypermaml.models.params import ParamSet
from pymodaq_plugins_hypermaml.tasks.episode import Episode

MANDATORY_METHODS = ('init_params', 'adapt', 'predict', 'meta_step')


class MetaAlgorithm:
    name = ''

    def __init__(self, cfg, executor: Optional[Executor] = None):
        self.cfg = cfg
        self.executor = executor
        self.optimizer = Adam(lr=cfg.meta_lr)
        self.epoch = 0

    def __repr__(self):
        return f"{type(self).__name__}({self.cfg})"

    def set_epoch(self, epoch: int):
        self.epoch = epoch

    def base_params(self, encoder_cfg: EncoderConfig, n_way: int, rng: np.random.Generator,
                    scheme: str, dtype) -> Tuple[ParamSet, ParamSet]:
        encoder = build_encoder(encoder_cfg, rng, scheme, dtype)
        head = build_head(encoder_cfg.embedding_dim, n_way, rng, scheme, dtype)
        return encoder, head

    def init_params(self, encoder_cfg: EncoderConfig, n_way: int, rng: np.random.Generator,
                    scheme: str = 'kaiming_uniform', dtype=np.float32) -> ParamSet:
        raise NotImplementedError

    def adapt(self, params: ParamSet, support: Tuple, training: bool = False):
        raise NotImplementedError

    def predict(self, params: ParamSet, model, query_x) -> Tensor:
        return predict_query(model, params.part('encoder'), query_x)

    def meta_step(self, params: ParamSet, episodes: Sequence[Episode]) -> Tuple[ParamSet, float]:
        raise NotImplementedError

    def accuracy(self, params: ParamSet, episode: Episode) -> float:
        """Query accuracy after adapting on the support set. Ties go to the lowest class index."""
        model = self.adapt(params, episode.support)
        probs = self.predict(params, model, episode.query_x).data
        return float(np.mean(np.argmax(probs, axis=1) == episode.query_y))


class MamlAlgorithm(MetaAlgorithm):
    name = 'maml'

    def __init__(self, cfg: MamlConfig = None, executor: Optional[Executor] = None):
        super().__init__(cfg or MamlConfig(), executor)

    def init_params(self, encoder_cfg, n_way, rng, scheme='kaiming_uniform', dtype=np.float32) -> ParamSet:
        return ParamSet.join(*self.base_params(encoder_cfg, n_way, rng, scheme, dtype))

    def adapt(self, params, support, training=False):
        return maml_adapt(params, support, self.cfg, training)

    def meta_step(self, params, episodes):
        return maml_meta_step(params, episodes, self.cfg, self.optimizer, self.executor)


class FomamlAlgorithm(MamlAlgorithm):
    name = 'fomaml'

    def __init__(self, cfg: MamlConfig = None, executor: Optional[Executor] = None):
        super().__init__(replace(cfg or MamlConfig(), first_order=True), executor)


class HyperMamlAlgorithm(MetaAlgorithm):
    name = 'hypermaml'

    def __init__(self, cfg: HyperMamlConfig = None, executor: Optional[Executor] = None):
        super().__init__(cfg or HyperMamlConfig(), executor)

    @property
    def lam(self) -> float:
        return self.cfg.lam(self.epoch)

    def init_params(self, encoder_cfg, n_way, rng, scheme='kaiming_uniform', dtype=np.float32) -> ParamSet:
        encoder, head = self.base_params(encoder_cfg, n_way, rng, scheme, dtype)
        self.cfg.hypernet = replace(self.cfg.hypernet, embed_dim=encoder_cfg.embedding_dim, n_way=n_way,
                                    enhancement=self.cfg.enhancement)
        return ParamSet.join(encoder, head, build_hypernetwork(self.cfg.hypernet, rng, scheme, dtype))

    def adapt(self, params, support, training=False):
        return hypermaml_adapt(params, support, self.cfg, self.lam, training)

    def meta_step(self, params, episodes):
        return hypermaml_meta_step(params, episodes, self.cfg, self.lam, self.optimizer, self.executor)


ALGORITHMS: Dict[str, Type[MetaAlgorithm]] = {cls.name: cls for cls in (MamlAlgorithm, FomamlAlgorithm,
                                                                         HyperMamlAlgorithm)}


def make_algorithm(name: str, maml_cfg: MamlConfig = None, hyper_cfg: HyperMamlConfig = None,
                   executor: Optional[Executor] = None) -> MetaAlgorithm:
    if name not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {name!r}, expected one of {tuple(ALGORITHMS)}")
    if name == 'hypermaml':
        return HyperMamlAlgorithm(hyper_cfg, executor)
    return ALGORITHMS[name](maml_cfg, executor)
