"""Edge extraction, horizontal filtering and upper/lower polarity.

Gradient sign convention used throughout: a positive vertical response
means intensity increases with row index (dark above, bright below).
An upper tow boundary is therefore positive and a lower one negative.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .types import BinaryMask, DepthMap, PolarEdgeMap, Polarity, SignedGradientMap

DEFAULT_SE_LEN = 5
_REL_EPS = 1e-9

_NEIGHBORS_8 = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


@dataclass(frozen=True)
class CannyParams:
    """Gaussian width and hysteresis ratios.

    Both thresholds are fractions of an anchor taken as the
    ``percentile``-th percentile of the nonzero gradient magnitudes.
    """

    sigma: float = 2.0
    low_ratio: float = 0.4
    high_ratio: float = 1.0
    percentile: float = 90.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0 < self.low_ratio < self.high_ratio <= 1:
            raise ValueError(
                f"need 0 < low_ratio < high_ratio <= 1, got {self.low_ratio}, {self.high_ratio}"
            )
        if not 0 < self.percentile <= 100:
            raise ValueError(f"percentile must be in (0, 100], got {self.percentile}")


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = max(1, math.ceil(3 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _correlate_rows(a: np.ndarray, k: np.ndarray) -> np.ndarray:
    r = len(k) // 2
    p = np.pad(a, ((0, 0), (r, r)), mode="edge")
    return sliding_window_view(p, len(k), axis=1) @ k


def _correlate_cols(a: np.ndarray, k: np.ndarray) -> np.ndarray:
    return _correlate_rows(a.T, k).T


def gaussian_blur(a: np.ndarray, sigma: float) -> np.ndarray:
    k = gaussian_kernel(sigma)
    return _correlate_cols(_correlate_rows(a, k), k)


def _sobel(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.pad(a, 1, mode="edge")
    top, mid, bot = p[:-2], p[1:-1], p[2:]
    # smoothing [1 2 1] across columns, central difference across rows
    gy = (bot[:, :-2] + 2 * bot[:, 1:-1] + bot[:, 2:]) - (top[:, :-2] + 2 * top[:, 1:-1] + top[:, 2:])
    left, right = p[:, :-2], p[:, 2:]
    gx = (right[:-2] + 2 * right[1:-1] + right[2:]) - (left[:-2] + 2 * left[1:-1] + left[2:])
    return gx, gy


def _check_min_size(img: DepthMap) -> None:
    if img.width < 3 or img.height < 3:
        raise ValueError(f"image must be at least 3x3, got {img.width}x{img.height}")


def sobel_vertical(img: DepthMap) -> SignedGradientMap:
    _check_min_size(img)
    _, gy = _sobel(img.pixels)
    return SignedGradientMap(gy)


def _non_max_suppression(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Thin ridges along the gradient direction quantized to 4 bins.

    A pixel is a ridge maximum when it is >= its neighbour on the
    low-index side and strictly > the one on the high-index side. For
    vertical gradients the mark then goes to the lower row of the pixel
    pair straddling the peak, so a step between rows k-1 and k is marked
    at row k even when blur or a nearby opposite edge skews the ridge.

    Returns the thinned mask and the ridge strength at each marked pixel.
    """
    h, w = mag.shape
    eps = _REL_EPS * float(mag.max()) if mag.size else 0.0
    p = np.pad(mag, 1, mode="constant")
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    vertical = (angle >= 67.5) & (angle < 112.5)
    diag_down = (angle >= 22.5) & (angle < 67.5)  # gradient toward (+row, +col)
    diag_up = (angle >= 112.5) & (angle < 157.5)  # gradient toward (+row, -col)
    horizontal = ~(vertical | diag_down | diag_up)

    def nb(dr, dc):
        return p[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]

    # (low-index side, high-index side) per direction
    before = np.select([vertical, diag_down, diag_up, horizontal],
                       [nb(-1, 0), nb(-1, -1), nb(-1, 1), nb(0, -1)])
    after = np.select([vertical, diag_down, diag_up, horizontal],
                      [nb(1, 0), nb(1, 1), nb(1, -1), nb(0, 1)])
    peak = (mag > eps) & (mag >= before - eps) & (mag > after + eps)

    down = peak & vertical & (after > before + eps) & (np.arange(h)[:, None] < h - 1)
    stay = peak & ~down
    thin = stay.copy()
    strength = np.where(stay, mag, 0.0)
    r, c = np.nonzero(down)
    thin[r + 1, c] = True
    np.maximum.at(strength, (r + 1, c), mag[r, c])
    return thin, strength


def _hysteresis(strong: np.ndarray, weak: np.ndarray) -> np.ndarray:
    h, w = strong.shape
    out = strong.copy()
    queue = deque(zip(*np.nonzero(strong)))
    while queue:
        r, c = queue.popleft()
        for dr, dc in _NEIGHBORS_8:
            rr, cc = r + dr, c + dc
            if 0 <= rr < h and 0 <= cc < w and weak[rr, cc] and not out[rr, cc]:
                out[rr, cc] = True
                queue.append((rr, cc))
    return out


def gradient_magnitude(img: DepthMap, sigma: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    smooth = gaussian_blur(img.pixels, sigma)
    gx, gy = _sobel(smooth)
    return np.hypot(gx, gy), gx, gy


def canny(img: DepthMap, p: CannyParams = CannyParams()) -> BinaryMask:
    _check_min_size(img)
    mag, gx, gy = gradient_magnitude(img, p.sigma)
    thin, strength = _non_max_suppression(mag, gx, gy)
    nonzero = mag[mag > 1e-12]
    if nonzero.size == 0:
        return BinaryMask(np.zeros(mag.shape, dtype=bool))
    anchor = float(np.percentile(nonzero, p.percentile))
    # equal-contrast steps differ by rounding noise; don't let it split them
    slack = _REL_EPS * anchor
    strong = thin & (strength >= p.high_ratio * anchor - slack)
    weak = thin & (strength >= p.low_ratio * anchor - slack)
    return BinaryMask(_hysteresis(strong, weak))


def _erode_h(bits: np.ndarray, n: int) -> np.ndarray:
    # anchor at the left end of the line; outside the image counts as unset
    p = np.pad(bits, ((0, 0), (0, n - 1)), mode="constant")
    return sliding_window_view(p, n, axis=1).all(axis=-1)


def _dilate_h(bits: np.ndarray, n: int) -> np.ndarray:
    p = np.pad(bits, ((0, 0), (n - 1, 0)), mode="constant")
    return sliding_window_view(p, n, axis=1).any(axis=-1)


def open_horizontal(mask: BinaryMask, se_len: int = DEFAULT_SE_LEN) -> BinaryMask:
    """Opening with a 1 x se_len line: keeps horizontal runs >= se_len."""
    if se_len < 1:
        raise ValueError(f"structuring element length must be >= 1, got {se_len}")
    return BinaryMask(_dilate_h(_erode_h(mask.bits, se_len), se_len))


def classify_edges(edges: BinaryMask, g: SignedGradientMap) -> PolarEdgeMap:
    if edges.shape != g.shape:
        raise ValueError(f"edge mask {edges.shape} and gradient {g.shape} differ in size")
    vals = g.values
    h, w = vals.shape
    padded = np.pad(vals, 1, mode="constant")
    vote = sliding_window_view(padded, (3, 3)).sum(axis=(-1, -2))
    sign = np.where(vals != 0, np.sign(vals), np.sign(vote))
    labels = np.zeros((h, w), dtype=np.uint8)
    labels[edges.bits & (sign > 0)] = Polarity.UPPER
    labels[edges.bits & (sign < 0)] = Polarity.LOWER
    return PolarEdgeMap(labels)
