from pathlib import Path
from typing import Dict, Union

import cv2
import numpy as np
from pymodaq.utils.logger import set_logger, get_module_name

from pymodaq_plugins_hypermaml.errors import DatasetError
from pymodaq_plugins_hypermaml.tasks.family import TaskFamily

logger = set_logger(get_module_name(__file__))

IMAGE_SUFFIXES = ('.png', '.jpg', '.jpeg', '.bmp', '.pgm')


def read_image(path: Path, image_size: int, channels: int = 1) -> np.ndarray:
    """Decode, convert to ``channels`` (1 or 3), resize to a square and scale to [0, 1]. Returns C×H×W."""
    frame = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if frame is None:
        raise DatasetError(f"could not decode {path}")
    if frame.dtype != np.uint8:
        frame = cv2.normalize(frame, None, 0, 255, cv2.NORM_MINMAX).astype(np.uint8)
    if frame.ndim == 3 and frame.shape[2] == 4:
        frame = cv2.cvtColor(frame, cv2.COLOR_BGRA2BGR)
    if channels == 1:
        if frame.ndim == 3:
            frame = cv2.cvtColor(frame, cv2.COLOR_BGR2GRAY)
        frame = frame[:, :, None]
    else:
        frame = cv2.cvtColor(frame, cv2.COLOR_GRAY2RGB) if frame.ndim == 2 else cv2.cvtColor(frame,
                                                                                              cv2.COLOR_BGR2RGB)
    resized = cv2.resize(frame, (image_size, image_size), interpolation=cv2.INTER_AREA)
    if resized.ndim == 2:
        resized = resized[:, :, None]
    return np.ascontiguousarray(resized.transpose(2, 0, 1)).astype(np.float32) / 255.0


class ImageFolderFamily(TaskFamily):
    """Classes read from ``root/<class-name>/*.png|jpg``, held in memory."""
    kind = 'image-folder'

    def __init__(self, name: str, images: Dict[str, np.ndarray], channels: int, image_size: int, seed: int = 0):
        super().__init__(name, sorted(images), seed)
        self.images = {self.ref(c): array for c, array in images.items()}
        self.channels = channels
        self.image_size = image_size

    @property
    def input_shape(self):
        return (self.channels, self.image_size, self.image_size)

    def draw_class(self, ref: str, count: int, rng: np.random.Generator) -> np.ndarray:
        images = self.images[ref]
        if len(images) < count:
            raise DatasetError(f"{ref} holds {len(images)} images, {count} requested")
        return images[rng.choice(len(images), size=count, replace=False)]


def load_image_folder(path: Union[str, Path], image_size: int = 28, channels: int = 1, min_per_class: int = 1,
                      name: str = None, seed: int = 0) -> ImageFolderFamily:
    """Family from a folder of class-named subdirectories.

    Undecodable images are skipped and classes with fewer than ``min_per_class``
    images are excluded, both with a warning.
    """
    root = Path(path)
    if channels not in (1, 3):
        raise DatasetError(f"channels must be 1 or 3, got {channels}")
    if not root.is_dir():
        raise DatasetError(f"{root} is not a readable directory")
    images = {}
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        decoded = []
        for file in sorted(class_dir.iterdir()):
            if file.suffix.lower() not in IMAGE_SUFFIXES:
                continue
            try:
                decoded.append(read_image(file, image_size, channels))
            except DatasetError as e:
                logger.warning(f"skipping image: {e}")
        if len(decoded) < min_per_class:
            logger.warning(f"excluding class {class_dir.name}: {len(decoded)} images, "
                           f"{min_per_class} needed")
            continue
        images[class_dir.name] = np.stack(decoded)
    if not images:
        raise DatasetError(f"{root} contains no usable class folder")
    family = ImageFolderFamily(name or root.name, images, channels, image_size, seed)
    logger.info(f"loaded {len(images)} classes from {root}")
    return family
