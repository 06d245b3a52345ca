"""Run configuration: package defaults < preset < --config file < command-line flags."""
import copy
from concurrent.futures import Executor
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import numpy as np
import toml
from pymodaq.utils.logger import set_logger, get_module_name

from pymodaq_plugins_hypermaml.errors import ConfigError
from pymodaq_plugins_hypermaml.meta.algorithms import ALGORITHMS, MetaAlgorithm, make_algorithm
from pymodaq_plugins_hypermaml.meta.hypermaml import HyperMamlConfig
from pymodaq_plugins_hypermaml.meta.maml import MamlConfig
from pymodaq_plugins_hypermaml.models.encoders import EncoderConfig
from pymodaq_plugins_hypermaml.models.hypernet import HyperNetConfig
from pymodaq_plugins_hypermaml.models.init import SCHEMES
from pymodaq_plugins_hypermaml.tasks.family import KINDS, CrossDomainFamily, TaskFamily
from pymodaq_plugins_hypermaml.tasks.gaussian2d import Gaussian2dFamily, Gaussian2dGeometry
from pymodaq_plugins_hypermaml.tasks.glyphs import GlyphConfig, GlyphFamily
from pymodaq_plugins_hypermaml.tasks.image_folder import load_image_folder
from pymodaq_plugins_hypermaml.utils import config_hash

logger = set_logger(get_module_name(__file__))

PRESET_DIR = Path(__file__).resolve().parent.parent.joinpath('resources', 'presets')
CONFIG_SECTIONS = ('general', 'init', 'tasks', 'training', 'bench', 'plot')
DTYPES = ('float32', 'float64')

RUN_DEFAULTS = {
    'algorithm': 'maml',
    'encoder': {'variant': 'conv4', 'embed_dim': 64, 'width': 64, 'batch_norm': True},
    'tasks': {'family': 'glyphs', 'path': '', 'target_family': '', 'target_path': '', 'n_way': 5, 'k_shot': 1,
              'image_size': 28, 'channels': 1, 'min_per_class': 1},
    'maml': {'inner_lr': 0.01, 'inner_steps': 1, 'first_order': False, 'meta_lr': 0.001, 'adapt_encoder': True},
    'hypermaml': {'milestones': [51, 550], 'switch_mode': 'update_blend', 'enhancement': True, 'switch': True,
                  'hidden': 256, 'meta_lr': 0.001, 'warmup_inner_lr': 0.01},
    'training': {'epochs': 600, 'lr_milestones': [51, 550]},
    'run': {'out': 'runs/default', 'threads': 1, 'quiet': False},
}


def deep_merge(base: Mapping, update: Mapping) -> dict:
    """Copy of ``base`` with ``update`` merged in, tables recursively, leaves replaced."""
    merged = copy.deepcopy(dict(base))
    for key, value in update.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def nested(flat: Mapping[str, Any]) -> dict:
    """``{'maml.inner_steps': 5}`` -> ``{'maml': {'inner_steps': 5}}``; None values are dropped."""
    tree = {}
    for dotted, value in flat.items():
        if value is None:
            continue
        node = tree
        *parents, leaf = dotted.split('.')
        for key in parents:
            node = node.setdefault(key, {})
        node[leaf] = value
    return tree


def package_defaults() -> dict:
    from pymodaq_plugins_hypermaml import config
    return {section: copy.deepcopy(dict(config(section))) for section in CONFIG_SECTIONS}


def read_toml(path: Union[str, Path]) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file {path} does not exist")
    try:
        return toml.load(path)
    except toml.TomlDecodeError as e:
        raise ConfigError(f"{path} is not valid TOML: {e}") from e


def preset_names():
    return sorted(p.stem for p in PRESET_DIR.glob('*.toml'))


def read_preset(name: str) -> dict:
    path = PRESET_DIR.joinpath(f'{name}.toml')
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}, available: {', '.join(preset_names())}")
    return read_toml(path)


class RunConfig:
    """Merged configuration tree of one run with typed builders for every component.

    Values are read like the package config, ``cfg('maml', 'inner_steps')``.
    """

    def __init__(self, data: Mapping):
        self.data = deep_merge(deep_merge(package_defaults(), RUN_DEFAULTS), data)
        self.validate()

    @classmethod
    def load(cls, preset: Optional[str] = None, path: Optional[Union[str, Path]] = None,
             overrides: Optional[Mapping[str, Any]] = None) -> 'RunConfig':
        data = {}
        if preset:
            data = deep_merge(data, read_preset(preset))
        if path:
            data = deep_merge(data, read_toml(path))
        if overrides:
            data = deep_merge(data, nested(overrides))
        return cls(data)

    def __call__(self, *keys):
        node = self.data
        try:
            for key in keys:
                node = node[key]
        except (KeyError, TypeError):
            raise ConfigError(f"configuration has no entry {'.'.join(keys)}") from None
        return node

    def __repr__(self):
        return f"RunConfig({self.algorithm}, {self('tasks', 'family')}, hash={self.config_hash()[:12]})"

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}, expected one of {tuple(ALGORITHMS)}")
        if self('tasks', 'family') not in KINDS or self('tasks', 'family') == 'cross-domain':
            raise ConfigError(f"unknown task family {self('tasks', 'family')!r}")
        if self('general', 'dtype') not in DTYPES:
            raise ConfigError(f"dtype must be one of {DTYPES}, got {self('general', 'dtype')!r}")
        if self('init', 'scheme') not in SCHEMES:
            raise ConfigError(f"unknown init scheme {self('init', 'scheme')!r}, expected one of {SCHEMES}")
        if min(self.n_way, self.k_shot, self.q_per_class) < 1:
            raise ConfigError(f"n_way, k_shot and q_per_class must be >= 1, got {self.n_way}, {self.k_shot}, "
                              f"{self.q_per_class}")
        if self.epochs < 0 or self.episodes_per_epoch < 1 or self.threads < 1:
            raise ConfigError("epochs >= 0, episodes_per_epoch >= 1 and threads >= 1 are required")
        for key in ('val_every', 'checkpoint_every'):
            if self('training', key) < 1:
                raise ConfigError(f"training.{key} must be >= 1")
        if self('training', 'val_episodes') < 2:
            raise ConfigError("training.val_episodes must be >= 2")
        self.encoder_config()
        self.maml_config()
        self.hyper_config()

    @property
    def algorithm(self) -> str:
        return self('algorithm')

    @property
    def seed(self) -> int:
        return int(self('general', 'seed'))

    @property
    def dtype(self):
        return np.dtype(self('general', 'dtype')).type

    @property
    def n_way(self) -> int:
        return int(self('tasks', 'n_way'))

    @property
    def k_shot(self) -> int:
        return int(self('tasks', 'k_shot'))

    @property
    def q_per_class(self) -> int:
        return int(self('tasks', 'q_per_class'))

    @property
    def epochs(self) -> int:
        return int(self('training', 'epochs'))

    @property
    def episodes_per_epoch(self) -> int:
        return int(self('training', 'episodes_per_epoch'))

    @property
    def meta_batch(self) -> int:
        return int(self('training', 'meta_batch'))

    @property
    def out(self) -> Path:
        return Path(self('run', 'out'))

    @property
    def threads(self) -> int:
        return int(self('run', 'threads'))

    @property
    def quiet(self) -> bool:
        return bool(self('run', 'quiet'))

    @property
    def input_shape(self):
        family = self('tasks', 'family')
        if family == 'gaussian2d':
            return (2,)
        if family == 'glyphs':
            size = int(self('tasks', 'glyphs', 'image_size'))
            return (1, size, size)
        size = int(self('tasks', 'image_size'))
        return (int(self('tasks', 'channels')), size, size)

    def encoder_config(self) -> EncoderConfig:
        section = self('encoder')
        return EncoderConfig(variant=section['variant'], input_shape=self.input_shape,
                             embed_dim=int(section['embed_dim']), width=int(section['width']),
                             batch_norm=bool(section['batch_norm']))

    def maml_config(self) -> MamlConfig:
        section = self('maml')
        return MamlConfig(inner_lr=float(section['inner_lr']), inner_steps=int(section['inner_steps']),
                          first_order=bool(section['first_order']), meta_lr=float(section['meta_lr']),
                          meta_batch=self.meta_batch, adapt_encoder=bool(section['adapt_encoder']))

    def hyper_config(self) -> HyperMamlConfig:
        section = self('hypermaml')
        hypernet = HyperNetConfig(embed_dim=self.encoder_config().embedding_dim, n_way=self.n_way,
                                  hidden=int(section['hidden']), enhancement=bool(section['enhancement']))
        return HyperMamlConfig(milestones=tuple(section['milestones']), switch_mode=section['switch_mode'],
                               enhancement=bool(section['enhancement']), switch=bool(section['switch']),
                               hypernet=hypernet, meta_lr=float(section['meta_lr']),
                               warmup_inner_lr=float(section['warmup_inner_lr']), meta_batch=self.meta_batch)

    def make_algorithm(self, executor: Optional[Executor] = None) -> MetaAlgorithm:
        return make_algorithm(self.algorithm, self.maml_config(), self.hyper_config(), executor)

    def base_lr(self) -> float:
        section = 'hypermaml' if self.algorithm == 'hypermaml' else 'maml'
        return float(self(section, 'meta_lr'))

    def _single_family(self, kind: str, path: str, name: Optional[str] = None) -> TaskFamily:
        if kind == 'gaussian2d':
            return Gaussian2dFamily(Gaussian2dGeometry.from_config(self), self.seed)
        if kind == 'glyphs':
            return GlyphFamily(GlyphConfig.from_config(self), self.seed, name=name or 'glyphs')
        if kind == 'image-folder':
            if not path:
                raise ConfigError("the image-folder family needs tasks.path")
            # every kept class must fill the support and query sets of an episode
            min_per_class = max(int(self('tasks', 'min_per_class')), self.k_shot + self.q_per_class)
            return load_image_folder(path, int(self('tasks', 'image_size')), int(self('tasks', 'channels')),
                                     min_per_class, name=name, seed=self.seed)
        raise ConfigError(f"unknown task family {kind!r}")

    def make_family(self) -> TaskFamily:
        """The configured family with its class pools split; cross-domain when a target family is set."""
        ratios = tuple(self('tasks', 'split_ratios'))
        source = self._single_family(self('tasks', 'family'), self('tasks', 'path'))
        target_kind = self('tasks', 'target_family')
        if not target_kind:
            return source.split(ratios, self.seed)
        target = self._single_family(target_kind, self('tasks', 'target_path'),
                                     name=f"{target_kind}-target" if target_kind == source.name else None)
        return CrossDomainFamily(source, target, ratios, self.seed)

    def hashed_data(self) -> dict:
        return {key: value for key, value in self.data.items() if key != 'run'}

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON of everything but the run-location keys."""
        return config_hash(self.hashed_data())

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def to_toml(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('w') as f:
            toml.dump(self.data, f)
        return path


def overrides_from_flags(**flags) -> Dict[str, Any]:
    """Dotted-key overrides from parsed command-line flags; unset flags are omitted."""
    mapping = {'algorithm': 'algorithm', 'seed': 'general.seed', 'threads': 'run.threads', 'out': 'run.out',
               'quiet': 'run.quiet', 'epochs': 'training.epochs', 'inner_steps': 'maml.inner_steps',
               'first_order': 'maml.first_order', 'switch_mode': 'hypermaml.switch_mode',
               'no_enhancement': 'hypermaml.enhancement'}
    overrides = {}
    for flag, key in mapping.items():
        value = flags.get(flag)
        if value is None or value is False:
            continue
        overrides[key] = False if flag == 'no_enhancement' else value
    return overrides
