"""Salt-and-pepper suppression."""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .types import DepthMap

DEFAULT_MEDIAN = 3


def median_filter(img: DepthMap, n: int = DEFAULT_MEDIAN) -> DepthMap:
    """n x n median with replicated borders; output has the input's size.

    ``n`` must be odd so the median is always one of the window samples.
    """
    n = int(n)
    if n < 1 or n % 2 == 0:
        raise ValueError(f"median window must be a positive odd integer, got {n}")
    if n > min(img.width, img.height):
        raise ValueError(f"median window {n} exceeds image size {img.width}x{img.height}")
    if n == 1:
        return img
    r = n // 2
    padded = np.pad(img.pixels, r, mode="edge")
    windows = sliding_window_view(padded, (n, n)).reshape(img.height, img.width, n * n)
    k = (n * n) // 2
    # partition instead of np.median: selects a sample, never averages two
    med = np.partition(windows, k, axis=-1)[..., k]
    return DepthMap(med)
