"""Raster containers shared by every pipeline stage.

All rasters are stored as read-only numpy arrays indexed ``[row, col]``
with row 0 at the top of the image.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np


class Polarity(IntEnum):
    """Edge label codes used in a :class:`PolarEdgeMap`."""

    NONE = 0
    UPPER = 1
    LOWER = 2


class DefectClass(IntEnum):
    """Label-mask codes; stable on disk."""

    NEUTRAL = 0
    GAP = 1
    OVERLAP = 2


def _frozen(arr: np.ndarray, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    if out.ndim != 2:
        raise ValueError(f"expected a 2D raster, got shape {out.shape}")
    if out.shape[0] < 1 or out.shape[1] < 1:
        raise ValueError("raster must be at least 1x1")
    out.flags.writeable = False
    return out


class _Raster:
    __slots__ = ()

    @property
    def shape(self) -> tuple[int, int]:
        return self._data().shape  # type: ignore[return-value]

    @property
    def height(self) -> int:
        return self._data().shape[0]

    @property
    def width(self) -> int:
        return self._data().shape[1]

    def _data(self) -> np.ndarray:  # pragma: no cover - overridden
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class DepthMap(_Raster):
    """Surface height image, intensities normalized to [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = _frozen(self.pixels, np.float64)
        if not np.all(np.isfinite(px)) or px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("normalized intensities must lie in [0, 1]")
        object.__setattr__(self, "pixels", px)

    def _data(self):
        return self.pixels


@dataclass(frozen=True, eq=False)
class BinaryMask(_Raster):
    bits: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bits", _frozen(self.bits, bool))

    def _data(self):
        return self.bits

    def count(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True, eq=False)
class PolarEdgeMap(_Raster):
    labels: np.ndarray

    def __post_init__(self):
        lab = _frozen(self.labels, np.uint8)
        if lab.max() > Polarity.LOWER:
            raise ValueError("edge labels must be in {0, 1, 2}")
        object.__setattr__(self, "labels", lab)

    def _data(self):
        return self.labels

    def of(self, polarity: Polarity) -> np.ndarray:
        return self.labels == polarity


@dataclass(frozen=True, eq=False)
class SignedGradientMap(_Raster):
    """Vertical gradient; positive where intensity grows with row index."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, np.float64))

    def _data(self):
        return self.values


@dataclass(frozen=True, eq=False)
class DefectMask(_Raster):
    classes: np.ndarray

    def __post_init__(self):
        cls = _frozen(self.classes, np.uint8)
        if cls.max() > DefectClass.OVERLAP:
            raise ValueError("defect codes must be in {0, 1, 2}")
        object.__setattr__(self, "classes", cls)

    def _data(self):
        return self.classes

    @classmethod
    def empty(cls, width: int, height: int) -> "DefectMask":
        return cls(np.zeros((height, width), dtype=np.uint8))

    def pixels_of(self, klass: DefectClass) -> np.ndarray:
        return self.classes == klass
