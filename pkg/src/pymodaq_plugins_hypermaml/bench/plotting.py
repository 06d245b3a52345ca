from pathlib import Path
from typing import Sequence, Tuple, Union

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402
from pymodaq.utils.logger import set_logger, get_module_name  # noqa: E402

from pymodaq_plugins_hypermaml.autodiff.tensor import Tensor  # noqa: E402
from pymodaq_plugins_hypermaml.errors import ConfigError  # noqa: E402
from pymodaq_plugins_hypermaml.tasks.episode import Episode  # noqa: E402

logger = set_logger(get_module_name(__file__))

LABEL_COLORS = ('#c0392b', '#2471a3')
REGION_COLORS = ('#f5b7b1', '#aed6f1')


def decision_grid(algorithm, params, episode: Episode, resolution: int = 200, extent: float = 6.0,
                  center: Tuple[float, float] = (0.0, 0.0)) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Predicted label on a resolution×resolution grid covering center ± extent, after adapting on the support."""
    if tuple(params.part('encoder').config.get('input_shape', ())) != (2,):
        raise ConfigError("decision boundaries are drawn for 2D-input models only")
    xs = np.linspace(center[0] - extent, center[0] + extent, resolution)
    ys = np.linspace(center[1] - extent, center[1] + extent, resolution)
    xx, yy = np.meshgrid(xs, ys)
    dtype = next(iter(params.values())).dtype
    points = Tensor(np.stack([xx.ravel(), yy.ravel()], axis=1).astype(dtype))
    model = algorithm.adapt(params, episode.support)
    probs = algorithm.predict(params, model, points).data
    return xx, yy, np.argmax(probs, axis=1).reshape(xx.shape)


def plot_decision_boundary_2d(algorithm, params, episodes: Sequence[Episode], path: Union[str, Path],
                              resolution: int = 200, extent: float = 6.0,
                              center: Tuple[float, float] = (0.0, 0.0), title: str = None) -> Path:
    """One panel per task: shaded predicted regions, support points (filled) and query points (hollow). SVG."""
    path = Path(path)
    fig, axes = plt.subplots(1, len(episodes), figsize=(3.2 * len(episodes), 3.4), squeeze=False)
    try:
        for task_id, (ax, episode) in enumerate(zip(axes[0], episodes)):
            xx, yy, labels = decision_grid(algorithm, params, episode, resolution, extent, center)
            ax.contourf(xx, yy, labels, levels=[-0.5, 0.5, 1.5], cmap=ListedColormap(REGION_COLORS))
            for label, color in enumerate(LABEL_COLORS):
                support = episode.support_x.data[episode.support_y == label]
                query = episode.query_x.data[episode.query_y == label]
                ax.scatter(query[:, 0], query[:, 1], s=14, facecolors='none', edgecolors=color, linewidths=0.8)
                ax.scatter(support[:, 0], support[:, 1], s=28, c=color, edgecolors='k', linewidths=0.6)
            ax.set_xlim(xx.min(), xx.max())
            ax.set_ylim(yy.min(), yy.max())
            ax.set_aspect('equal')
            ax.set_title(f"task {task_id}", fontsize=10)
            ax.tick_params(labelsize=7)
        if title:
            fig.suptitle(title, fontsize=11)
        fig.tight_layout()
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format='svg')
    finally:
        plt.close(fig)
    logger.info(f"decision boundaries written to {path}")
    return path
