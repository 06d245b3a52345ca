"""Procedural handwriting-like glyph classes.

A class is a fixed set of seeded strokes (segments, arcs and polylines) drawn
with OpenCV. Every sample of a class re-renders that prototype through a small
random affine warp and adds pixel noise.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import cv2
import numpy as np

from pymodaq_plugins_hypermaml.errors import ConfigError, DatasetError
from pymodaq_plugins_hypermaml.tasks.episode import Episode
from pymodaq_plugins_hypermaml.tasks.family import TaskFamily
from pymodaq_plugins_hypermaml.utils import derive_rng

STROKE_KINDS = ('segment', 'arc', 'polyline')


@dataclass
class GlyphConfig:
    n_classes: int = 120
    image_size: int = 28
    strokes: Tuple[int, int] = (2, 4)
    noise_std: float = 0.08
    max_rotation_deg: float = 10.0
    max_shift_px: float = 1.5
    scale_jitter: float = 0.08

    def __post_init__(self):
        self.strokes = tuple(int(s) for s in self.strokes)
        if self.n_classes < 2 or self.image_size < 8 or not 1 <= self.strokes[0] <= self.strokes[1]:
            raise ConfigError(f"invalid glyph configuration {self}")

    @classmethod
    def from_config(cls, config) -> 'GlyphConfig':
        return cls(**{key: config('tasks', 'glyphs', key) for key in cls.__dataclass_fields__})


def glyph_prototype(class_seed: int, cfg: GlyphConfig) -> np.ndarray:
    """Noise-free image_size×image_size rendering of a class, values in [0, 1]."""
    rng = derive_rng(class_seed, 'glyph-class')
    size = cfg.image_size
    canvas = np.zeros((size, size), dtype=np.uint8)
    margin = size * 0.2
    thickness = max(1, size // 14)

    def point():
        return rng.uniform(margin, size - margin, size=2)

    for _ in range(int(rng.integers(cfg.strokes[0], cfg.strokes[1] + 1))):
        kind = STROKE_KINDS[int(rng.integers(len(STROKE_KINDS)))]
        if kind == 'segment':
            a, b = point(), point()
            cv2.line(canvas, tuple(int(v) for v in a), tuple(int(v) for v in b), 255, thickness, cv2.LINE_AA)
        elif kind == 'arc':
            center = tuple(int(v) for v in point())
            axes = tuple(int(v) for v in rng.uniform(size * 0.1, size * 0.3, size=2))
            start = float(rng.uniform(0, 360))
            cv2.ellipse(canvas, center, axes, float(rng.uniform(0, 180)), start,
                        start + float(rng.uniform(90, 300)), 255, thickness, cv2.LINE_AA)
        else:
            points = np.stack([point() for _ in range(int(rng.integers(3, 6)))]).astype(np.int32)
            cv2.polylines(canvas, [points.reshape(-1, 1, 2)], False, 255, thickness, cv2.LINE_AA)
    return canvas.astype(np.float32) / 255.0


def render_glyph(prototype: np.ndarray, rng: np.random.Generator, cfg: GlyphConfig) -> np.ndarray:
    """One 1×H×W sample of a class: jittered affine warp of its prototype plus Gaussian noise."""
    size = prototype.shape[0]
    angle = float(rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg))
    scale = float(1.0 + rng.uniform(-cfg.scale_jitter, cfg.scale_jitter))
    matrix = cv2.getRotationMatrix2D((size / 2.0, size / 2.0), angle, scale)
    matrix[:, 2] += rng.uniform(-cfg.max_shift_px, cfg.max_shift_px, size=2)
    warped = cv2.warpAffine(prototype, matrix, (size, size), flags=cv2.INTER_LINEAR,
                            borderMode=cv2.BORDER_CONSTANT, borderValue=0)
    noisy = warped + rng.normal(0.0, cfg.noise_std, size=warped.shape).astype(np.float32)
    return np.clip(noisy, 0.0, 1.0)[None, :, :].astype(np.float32)


def glyph_sample(class_seed: int, sample_seed: int, cfg: Optional[GlyphConfig] = None) -> np.ndarray:
    cfg = cfg or GlyphConfig()
    return render_glyph(glyph_prototype(class_seed, cfg), derive_rng(class_seed, 'glyph-sample', sample_seed), cfg)


class GlyphFamily(TaskFamily):
    kind = 'glyphs'

    def __init__(self, cfg: Optional[GlyphConfig] = None, seed: int = 0, name: str = 'glyphs'):
        self.cfg = cfg or GlyphConfig()
        super().__init__(name, [f"{i:04d}" for i in range(self.cfg.n_classes)], seed)
        self._prototypes = {}

    @property
    def input_shape(self):
        return (1, self.cfg.image_size, self.cfg.image_size)

    def class_seed(self, ref: str) -> int:
        return int(derive_rng(self.seed, self.name, ref.split(':', 1)[1]).integers(2 ** 31))

    def prototype(self, ref: str) -> np.ndarray:
        if ref not in self._prototypes:
            self._prototypes[ref] = glyph_prototype(self.class_seed(ref), self.cfg)
        return self._prototypes[ref]

    def draw_class(self, ref: str, count: int, rng: np.random.Generator) -> np.ndarray:
        if ref not in self.classes:
            raise DatasetError(f"{ref} is not a class of {self.name}")
        seed, prototype = self.class_seed(ref), self.prototype(ref)
        return np.stack([render_glyph(prototype, derive_rng(seed, 'glyph-sample', int(s)), self.cfg)
                         for s in rng.integers(2 ** 31, size=count)])


def glyph_episode(family: GlyphFamily, split: str, n_way: int, k_shot: int, q_per_class: int,
                  rng: np.random.Generator) -> Episode:
    """N-way K-shot episode whose classes are drawn without replacement from the split's pool."""
    return family.draw_episode(split, n_way, k_shot, q_per_class, rng)
