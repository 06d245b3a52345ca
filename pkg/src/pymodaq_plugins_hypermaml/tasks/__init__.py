from .episode import Episode, assemble_episode
from .splits import SPLITS, split_classes, split_cross_domain
from .family import TaskFamily, CrossDomainFamily, KINDS
from .gaussian2d import Gaussian2dFamily, Gaussian2dGeometry, gaussian2d_episode, bayes_accuracy, N_TASKS
from .glyphs import GlyphConfig, GlyphFamily, glyph_episode, glyph_prototype, glyph_sample
from .image_folder import ImageFolderFamily, load_image_folder, read_image
