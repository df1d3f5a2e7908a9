from .geometry import Geometry, arm_width, geometry
from .theorems import (BoundsReport, Condition, IlyashenkoBound, best_K, check_aggregate,
                       check_calanchi_ruf, check_theorem_1_1, check_theorem_1_2,
                       check_theorem_1_3, default_K, ilyashenko_log_bound)
from .transforms import Reduction, normalize, reduce_leading, reduce_leading_report

__all__ = [
    "BoundsReport", "Condition", "Geometry", "IlyashenkoBound", "Reduction", "arm_width",
    "best_K", "check_aggregate", "check_calanchi_ruf", "check_theorem_1_1", "check_theorem_1_2",
    "check_theorem_1_3", "default_K", "geometry", "ilyashenko_log_bound", "normalize",
    "reduce_leading", "reduce_leading_report",
]
