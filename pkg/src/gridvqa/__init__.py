"""Grounded grid-cell VQA toolkit.

Synthesizes balanced question/answer/cell triplets from land-cover
segmentation rasters, answers questions exactly with a pixel-counting
oracle, and scores prediction files with answer, cell-grounding and
segmentation metrics plus distribution-bias reports.
"""

from .balance import balance_dataset
from .bias import bias_report, lb_score, prior, uniform
from .evalmetrics import (
    cell_correlation,
    cell_metrics,
    confusion_accumulate,
    seg_metrics,
    vqa_metrics,
)
from .questions import enumerate_candidates, oracle_answer, question_key
from .raster import (
    AreaLabel,
    CellId,
    ClassStats,
    Nomenclature,
    SegmentationMap,
    area_label,
    cell_id,
    cells_of_class,
    class_stats,
    load_map,
    present_classes,
)
from .summary import parse_summary, render_explanation, render_summary
from .templates import (
    Binding,
    Template,
    TemplateRegistry,
    expand,
    match_question,
    parse_registry,
    variant_count,
)

__version__ = "0.1.0"
