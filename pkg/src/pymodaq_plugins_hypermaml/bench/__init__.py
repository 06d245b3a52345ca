from pymodaq.utils.logger import set_logger, get_module_name

from .report import Report, CSV_COLUMNS, ci95, write_report, read_report
from .evaluate import evaluate
from .timing import TimingVariant, build_timing_variants, single_core, time_adaptation, is_nondecreasing

logger = set_logger(get_module_name(__file__))

try:
    from .plotting import decision_grid, plot_decision_boundary_2d
except ImportError as e:
    logger.warning(f"decision-boundary plots are unavailable, matplotlib could not be loaded: {e}")
