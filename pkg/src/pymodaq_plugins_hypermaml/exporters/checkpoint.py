"""Binary checkpoint files.

Layout, all integers little-endian::

    b'MFGE' | u32 format version | u16 hash length, config hash (utf-8) | u32 epoch
    u32 tensor count, tensors | u32 optimizer entry count, optimizer entries

An entry is ``u16 name length, name (utf-8), u8 rank, rank × u32 dims, float32 data``.
"""
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import ClassVar, Dict, Optional, Union

import numpy as np
from pymodaq.utils.logger import set_logger, get_module_name

from pymodaq_plugins_hypermaml.errors import CheckpointError

logger = set_logger(get_module_name(__file__))

MAGIC = b'MFGE'
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    config_hash: str
    epoch: int
    tensors: Dict[str, np.ndarray]
    optimizer: Dict[str, np.ndarray] = field(default_factory=dict)

    u16: ClassVar[struct.Struct] = struct.Struct('<H')
    u32: ClassVar[struct.Struct] = struct.Struct('<I')
    u8: ClassVar[struct.Struct] = struct.Struct('<B')

    def to_bytes(self) -> bytes:
        chunks = [MAGIC, self.u32.pack(FORMAT_VERSION)]
        chunks += self._string(self.config_hash)
        chunks.append(self.u32.pack(int(self.epoch)))
        for section in (self.tensors, self.optimizer):
            chunks.append(self.u32.pack(len(section)))
            for name, array in section.items():
                chunks += self._entry(name, array)
        return b''.join(chunks)

    @classmethod
    def _string(cls, text: str):
        raw = text.encode('utf-8')
        if len(raw) > 0xFFFF:
            raise CheckpointError(f"name of {len(raw)} bytes does not fit the checkpoint format")
        return [cls.u16.pack(len(raw)), raw]

    @classmethod
    def _entry(cls, name: str, array: np.ndarray):
        array = np.asarray(array)
        if array.ndim > 0xFF:
            raise CheckpointError(f"{name}: rank {array.ndim} does not fit the checkpoint format")
        data = np.ascontiguousarray(array, dtype='<f4')
        return cls._string(name) + [cls.u8.pack(array.ndim),
                                    struct.pack(f'<{array.ndim}I', *array.shape), data.tobytes()]

    @classmethod
    def from_bytes(cls, raw: bytes) -> 'Checkpoint':
        reader = _Reader(raw)
        magic = reader.take(len(MAGIC))
        if magic != MAGIC:
            raise CheckpointError(f"bad magic {magic!r}, expected {MAGIC!r}")
        version = reader.unpack(cls.u32)
        if version != FORMAT_VERSION:
            raise CheckpointError(f"checkpoint format version {version}, this build reads {FORMAT_VERSION}")
        config_hash = reader.string()
        epoch = reader.unpack(cls.u32)
        sections = []
        for _ in range(2):
            entries = {}
            for _ in range(reader.unpack(cls.u32)):
                name = reader.string()
                rank = reader.unpack(cls.u8)
                shape = struct.unpack(f'<{rank}I', reader.take(4 * rank))
                count = int(np.prod(shape)) if rank else 1
                entries[name] = np.frombuffer(reader.take(4 * count), dtype='<f4').astype(np.float32).reshape(shape)
            sections.append(entries)
        if not reader.done:
            raise CheckpointError(f"{len(raw) - reader.offset} trailing bytes after the optimizer section")
        return cls(config_hash, epoch, sections[0], sections[1])


class _Reader:

    def __init__(self, raw: bytes):
        self.raw = raw
        self.offset = 0

    @property
    def done(self) -> bool:
        return self.offset == len(self.raw)

    def take(self, count: int) -> bytes:
        if self.offset + count > len(self.raw):
            raise CheckpointError(f"truncated checkpoint: needed {count} bytes at offset {self.offset}, "
                                  f"file holds {len(self.raw)}")
        chunk = self.raw[self.offset:self.offset + count]
        self.offset += count
        return chunk

    def unpack(self, segment: struct.Struct) -> int:
        return segment.unpack(self.take(segment.size))[0]

    def string(self) -> str:
        return self.take(self.unpack(Checkpoint.u16)).decode('utf-8')


def save_checkpoint(checkpoint: Checkpoint, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + '.tmp')
    tmp.write_bytes(checkpoint.to_bytes())
    tmp.replace(path)
    logger.debug(f"checkpoint of epoch {checkpoint.epoch} written to {path}")
    return path


def load_checkpoint(path: Union[str, Path], expected_hash: Optional[str] = None, force: bool = False) -> Checkpoint:
    """Read and version-check a checkpoint; a config-hash mismatch is refused unless ``force``."""
    path = Path(path)
    checkpoint = Checkpoint.from_bytes(path.read_bytes())
    if expected_hash is not None and checkpoint.config_hash != expected_hash:
        message = (f"{path} was written for configuration {checkpoint.config_hash[:12]}, "
                   f"the current one is {expected_hash[:12]}")
        if not force:
            raise CheckpointError(message + " (use --force to load it anyway)")
        logger.warning(message + ", loading anyway")
    return checkpoint

