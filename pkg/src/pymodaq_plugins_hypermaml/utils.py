# -*- coding: utf-8 -*-
"""
Created the 31/08/2023

@author: Sebastien Weber
"""
import hashlib
import json
import zlib
from pathlib import Path
from typing import Any, Mapping, Union

import numpy as np
from pymodaq.utils.config import BaseConfig


class Config(BaseConfig):
    """Main class to deal with configuration values for this plugin"""
    config_template_path = Path(__file__).parent.joinpath('resources/config_template.toml')
    config_name = f"config_{__package__.split('pymodaq_plugins_')[1]}"


def _seed_word(key: Union[int, str]) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode('utf-8'))
    return int(key)


def derive_rng(seed: int, *keys: Union[int, str]) -> np.random.Generator:
    """Independent random stream for (seed, *keys).

    Streams are derived by hashing the key words through numpy's SeedSequence, so
    episode ``i`` of a split is the same whatever order episodes are drawn in.
    """
    entropy = [int(seed) & 0xFFFFFFFF] + [_seed_word(k) & 0xFFFFFFFF for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def canonical_json(data: Mapping[str, Any]) -> str:
    return json.dumps(data, sort_keys=True, separators=(',', ':'), default=str)


def config_hash(data: Mapping[str, Any]) -> str:
    return hashlib.sha256(canonical_json(data).encode('utf-8')).hexdigest()
