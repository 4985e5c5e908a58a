"""Per-class IoU and confusion matrix against ground-truth label masks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .types import DefectClass, DefectMask

N_CLASSES = 3
SCORED = (DefectClass.GAP, DefectClass.OVERLAP)


def _check(pred: DefectMask, gt: DefectMask) -> None:
    if pred.shape != gt.shape:
        raise ValueError(f"prediction {pred.shape} and ground truth {gt.shape} differ in size")


def _ratio(inter: int, union: int) -> float:
    # both sets empty counts as perfect agreement
    return 1.0 if union == 0 else inter / union


def iou(pred: DefectMask, gt: DefectMask, klass: DefectClass) -> float:
    _check(pred, gt)
    p, g = pred.pixels_of(klass), gt.pixels_of(klass)
    return _ratio(int(np.count_nonzero(p & g)), int(np.count_nonzero(p | g)))


def confusion_matrix(pred: DefectMask, gt: DefectMask) -> np.ndarray:
    """Rows index the ground-truth class, columns the predicted class."""
    _check(pred, gt)
    idx = gt.classes.astype(np.int64).ravel() * N_CLASSES + pred.classes.ravel()
    return np.bincount(idx, minlength=N_CLASSES ** 2).reshape(N_CLASSES, N_CLASSES)


@dataclass(frozen=True)
class ClassCounts:
    intersection: int
    union: int
    pred: int
    gt: int

    @property
    def iou(self) -> float:
        return _ratio(self.intersection, self.union)


@dataclass(frozen=True)
class EvalReport:
    iou_gap: float
    iou_overlap: float
    counts: dict = field(repr=False)  # DefectClass -> ClassCounts
    confusion: np.ndarray = field(repr=False)

    @property
    def mean_iou(self) -> float:
        return (self.iou_gap + self.iou_overlap) / 2

    def to_dict(self) -> dict:
        return {
            "iou_gap": self.iou_gap,
            "iou_overlap": self.iou_overlap,
            "mean_iou": self.mean_iou,
            "counts": {k.name.lower(): vars(v) for k, v in self.counts.items()},
            "confusion_matrix": self.confusion.tolist(),
            "confusion_axes": "rows=ground truth, cols=prediction; order neutral, gap, overlap",
        }


def evaluate(pred: DefectMask, gt: DefectMask) -> EvalReport:
    cm = confusion_matrix(pred, gt)
    counts = {}
    for k in SCORED:
        inter = int(cm[k, k])
        n_pred = int(cm[:, k].sum())
        n_gt = int(cm[k, :].sum())
        counts[k] = ClassCounts(inter, n_pred + n_gt - inter, n_pred, n_gt)
    return EvalReport(counts[DefectClass.GAP].iou, counts[DefectClass.OVERLAP].iou, counts, cm)


@dataclass(frozen=True)
class BatchSummary:
    """Micro-averaged counts and macro-averaged IoUs over scenes."""

    n_scenes: int
    macro_iou_gap: float | None
    macro_iou_overlap: float | None
    macro_mean_iou: float | None
    micro: EvalReport | None

    def to_dict(self) -> dict:
        return {
            "n_scenes": self.n_scenes,
            "macro": {
                "iou_gap": self.macro_iou_gap,
                "iou_overlap": self.macro_iou_overlap,
                "mean_iou": self.macro_mean_iou,
            },
            "micro": None if self.micro is None else self.micro.to_dict(),
        }


def aggregate(reports: Iterable[EvalReport]) -> BatchSummary:
    reports = list(reports)
    if not reports:
        return BatchSummary(0, None, None, None, None)
    cm = sum(r.confusion for r in reports)
    counts = {}
    for k in SCORED:
        inter = sum(r.counts[k].intersection for r in reports)
        n_pred = sum(r.counts[k].pred for r in reports)
        n_gt = sum(r.counts[k].gt for r in reports)
        counts[k] = ClassCounts(inter, n_pred + n_gt - inter, n_pred, n_gt)
    micro = EvalReport(counts[DefectClass.GAP].iou, counts[DefectClass.OVERLAP].iou, counts, cm)
    g = float(np.mean([r.iou_gap for r in reports]))
    o = float(np.mean([r.iou_overlap for r in reports]))
    return BatchSummary(len(reports), g, o, float(np.mean([r.mean_iou for r in reports])), micro)
