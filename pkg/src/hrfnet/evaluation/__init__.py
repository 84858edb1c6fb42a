from .auc import AUC_MODES, binary_auc, per_image_auc, pixel_auc
from .bench import BENCH_HEADER, MemoryResult, bench_row, measure_fps, measure_memory
from .evaluate import MetricsReport, collect_predictions, evaluate, threshold_metrics
from .render import grid_size, render_comparison

__all__ = [
    "AUC_MODES",
    "BENCH_HEADER",
    "MemoryResult",
    "MetricsReport",
    "bench_row",
    "binary_auc",
    "collect_predictions",
    "evaluate",
    "grid_size",
    "measure_fps",
    "measure_memory",
    "per_image_auc",
    "pixel_auc",
    "render_comparison",
    "threshold_metrics",
]
