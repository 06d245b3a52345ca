"""MAML and HyperMAML few-shot meta-learning on a numpy autodiff engine."""
from pathlib import Path
from pymodaq.utils.logger import set_logger  # to be imported by other modules.

from .utils import Config, derive_rng
from .errors import (HyperMamlError, ShapeError, NonFiniteError, GradientError, NestingError, ConfigError,
                     DatasetError, CheckpointError, TrainingAborted)

config = Config()

__version__ = Path(__file__).parent.joinpath('resources', 'VERSION').read_text().strip()
