"""Reading depth maps and writing label masks / overlays.

Depth maps come in as 8- or 16-bit single-channel PNG or binary PGM
(P5). Label masks go out as 8-bit grayscale PNG holding the raw class
codes, so ``load_mask_png(save_mask_png(m))`` is bit-exact.
"""
from __future__ import annotations

import os
import re
import tempfile
from pathlib import Path
from typing import Callable

import numpy as np
from PIL import Image

from .types import DefectClass, DefectMask, DepthMap

GAP_RGB = (255, 0, 0)
OVERLAP_RGB = (0, 255, 0)
TINT = 0.6

_PGM_HEADER = re.compile(rb"^P5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s")


class ImageFormatError(ValueError):
    """The file is not a supported single-channel raster."""


def _read_pgm(data: bytes) -> tuple[np.ndarray, int]:
    m = _PGM_HEADER.match(data)
    if m is None:
        raise ImageFormatError("malformed PGM header")
    width, height, maxval = (int(g) for g in m.groups())
    if not 0 < maxval < 65536:
        raise ImageFormatError(f"PGM maxval out of range: {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    n = width * height
    body = data[m.end():m.end() + n * dtype.itemsize]
    if n == 0:
        raise ImageFormatError("zero-sized image")
    if len(body) != n * dtype.itemsize:
        raise ImageFormatError("truncated PGM payload")
    return np.frombuffer(body, dtype=dtype).reshape(height, width), maxval


def _read_png(path: Path) -> tuple[np.ndarray, int]:
    with Image.open(path) as im:
        im.load()
        mode = im.mode
        if mode == "L":
            return np.asarray(im, dtype=np.uint8), 255
        if mode in ("I;16", "I;16B", "I;16L", "I"):
            arr = np.asarray(im).astype(np.int64)
            if arr.min(initial=0) < 0 or arr.max(initial=0) > 65535:
                raise ImageFormatError("16-bit image with out-of-range samples")
            return arr.astype(np.uint16), 65535
    raise ImageFormatError(f"expected a single-channel grayscale image, got mode {mode!r}")


def read_raw(path) -> tuple[np.ndarray, int]:
    """Return the raw sample grid and the format's full-scale value."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ImageFormatError(f"cannot read {path}: {exc}") from exc
    if data[:2] == b"P5":
        arr, maxval = _read_pgm(data)
    else:
        try:
            arr, maxval = _read_png(path)
        except (OSError, SyntaxError) as exc:
            raise ImageFormatError(f"cannot decode {path}: {exc}") from exc
    if arr.size == 0:
        raise ImageFormatError("zero-sized image")
    return arr, maxval


def load_depth_map(path) -> DepthMap:
    arr, maxval = read_raw(path)
    return DepthMap(arr.astype(np.float64) / float(maxval))


def write_pgm(path, samples: np.ndarray, maxval: int | None = None) -> None:
    """Write a binary P5 PGM; 16-bit samples are stored big-endian."""
    samples = np.asarray(samples)
    if samples.ndim != 2:
        raise ValueError("PGM payload must be 2D")
    if maxval is None:
        maxval = 65535 if samples.dtype.itemsize > 1 else 255
    h, w = samples.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    dtype = ">u2" if maxval > 255 else "u1"
    atomic_write(path, lambda f: f.write(header + samples.astype(dtype).tobytes()))


def atomic_write(path, write: Callable) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "wb") as f:
            write(f)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def save_png(path, arr: np.ndarray) -> None:
    """Atomically write a uint8 (H, W) or (H, W, 3) array as PNG."""
    arr = np.ascontiguousarray(arr, dtype=np.uint8)
    im = Image.fromarray(arr)
    atomic_write(path, lambda f: im.save(f, format="PNG"))


def save_mask_png(mask: DefectMask, path) -> None:
    save_png(path, mask.classes)


def load_mask_png(path) -> DefectMask:
    arr, maxval = read_raw(path)
    if maxval != 255:
        raise ImageFormatError("label masks must be 8-bit")
    if arr.max() > DefectClass.OVERLAP:
        raise ImageFormatError(f"label codes outside {{0,1,2}} in {path}")
    return DefectMask(arr)


def to_gray8(img) -> np.ndarray:
    px = img.pixels if isinstance(img, DepthMap) else np.asarray(img, dtype=np.float64)
    return np.clip(np.floor(px * 255.0 + 0.5), 0, 255).astype(np.uint8)


def overlay_rgb(base: DepthMap, mask: DefectMask) -> np.ndarray:
    if base.shape != mask.shape:
        raise ValueError(f"overlay size mismatch: base {base.shape} vs mask {mask.shape}")
    gray = to_gray8(base).astype(np.float64)
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    for klass, color in ((DefectClass.GAP, GAP_RGB), (DefectClass.OVERLAP, OVERLAP_RGB)):
        sel = mask.classes == klass
        rgb[sel] = (1.0 - TINT) * rgb[sel] + TINT * np.asarray(color, dtype=np.float64)
    return np.floor(rgb + 0.5).astype(np.uint8)


def save_overlay_png(base: DepthMap, mask: DefectMask, path) -> None:
    save_png(path, overlay_rgb(base, mask))
