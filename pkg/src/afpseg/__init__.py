"""Gap and overlap segmentation for automated fiber placement depth maps."""
from .evaluation import EvalReport, evaluate, iou
from .pipeline import PipelineParams, inspect
from .types import DefectClass, DefectMask, DepthMap, Polarity

__all__ = [
    "DefectClass", "DefectMask", "DepthMap", "EvalReport", "PipelineParams",
    "Polarity", "evaluate", "inspect", "iou",
]
__version__ = "0.1.0"
