"""Synthetic AFP depth maps with exact gap/overlap ground truth.

Tows are bright horizontal bands whose top edge follows a sinusoidal
course. Where bands overlap the heights add, so doubly covered rows are
brighter; uncovered rows stay at background level. Truth is computed
from band geometry before any noise is applied.

Boundary rows follow the detector's convention: a tow's upper boundary
is its first covered row, its lower boundary the first row below it.
Truth marks rows strictly between the lower boundary of one tow and the
upper boundary of the next.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .io import save_mask_png, save_png, to_gray8
from .types import DefectClass, DefectMask, DepthMap


@dataclass(frozen=True)
class TowCourse:
    top: float  # nominal first row of the band
    amplitude: float = 0.0
    wavelength: float = 128.0
    phase: float = 0.0

    def top_rows(self, width: int) -> np.ndarray:
        x = np.arange(width, dtype=np.float64)
        y = self.top + self.amplitude * np.sin(2 * math.pi * x / self.wavelength + self.phase)
        return np.floor(y + 0.5).astype(np.int64)


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    tow_height: int
    courses: tuple[TowCourse, ...]
    tow_intensity: float = 0.55
    background_intensity: float = 0.2
    salt_pepper: float = 0.0
    texture_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "courses", tuple(
            c if isinstance(c, TowCourse) else TowCourse(**c) for c in self.courses))
        if self.width < 1 or self.height < 1 or self.tow_height < 1:
            raise ValueError("scene and tow sizes must be positive")
        if not 0 <= self.background_intensity < self.tow_intensity <= 1:
            raise ValueError("need 0 <= background_intensity < tow_intensity <= 1")
        if not 0 <= self.salt_pepper < 1:
            raise ValueError("salt-and-pepper density must be in [0, 1)")
        if self.texture_sigma < 0:
            raise ValueError("texture sigma must be >= 0")
        tops = [c.top for c in self.courses]
        if tops != sorted(tops):
            raise ValueError("tows must be ordered top to bottom")
        for i, c in enumerate(self.courses):
            t = c.top_rows(self.width)
            if t.min() < 0 or t.max() + self.tow_height > self.height:
                raise ValueError(f"tow {i} leaves the image")

    @classmethod
    def stacked(cls, width: int, tow_height: int, offsets, *, margin: int = 12,
                drifts=None, **kw) -> "SceneSpec":
        """Build a scene from signed inter-tow offsets (gap > 0, overlap < 0).

        ``drifts`` is an optional list of (amplitude, wavelength, phase) per
        tow; the image height is chosen to fit all bands plus ``margin``.
        """
        n = len(offsets) + 1
        drifts = list(drifts) if drifts is not None else [(0.0, 128.0, 0.0)] * n
        if len(drifts) != n:
            raise ValueError("need one drift per tow")
        reach = math.ceil(max((abs(d[0]) for d in drifts), default=0.0)) + 1
        top = float(margin + reach)
        courses = []
        for i, (amp, wl, ph) in enumerate(drifts):
            courses.append(TowCourse(top, float(amp), float(wl), float(ph)))
            if i < len(offsets):
                top += tow_height + int(offsets[i])
        height = int(top + tow_height + reach + margin)
        return cls(width, height, tow_height, tuple(courses), **kw)

    @property
    def offsets(self) -> list[float]:
        return [b.top - a.top - self.tow_height for a, b in zip(self.courses, self.courses[1:])]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["courses"] = [asdict(c) for c in self.courses]
        d["offsets"] = self.offsets
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        d = dict(d)
        d.pop("offsets", None)
        d["courses"] = tuple(TowCourse(**c) for c in d["courses"])
        return cls(**d)


@dataclass(frozen=True, eq=False)
class Scene:
    spec: SceneSpec
    depth: DepthMap
    truth: DefectMask
    curves: dict = field(repr=False)  # {"upper": [rows per tow], "lower": [...]}, each (width,)

    def truth_curves_json(self) -> dict:
        return {
            "convention": "row of upper boundary = first tow row; lower boundary = first row below the tow",
            "width": self.spec.width,
            "upper": [c.tolist() for c in self.curves["upper"]],
            "lower": [c.tolist() for c in self.curves["lower"]],
        }


def _truth_mask(uppers: list[np.ndarray], lowers: list[np.ndarray], height: int) -> np.ndarray:
    width = uppers[0].shape[0] if uppers else 0
    rows = np.arange(height)[:, None]
    gap = np.zeros((height, width), dtype=bool)
    overlap = np.zeros((height, width), dtype=bool)
    for y_l, y_u in zip(lowers, uppers[1:]):
        lo, hi = np.minimum(y_l, y_u), np.maximum(y_l, y_u)
        inside = (rows > lo) & (rows < hi)
        gap |= inside & (y_u > y_l)
        overlap |= inside & (y_u < y_l)
    out = np.zeros((height, width), dtype=np.uint8)
    out[gap] = DefectClass.GAP
    out[overlap] = DefectClass.OVERLAP
    return out


def generate(spec: SceneSpec) -> Scene:
    rows = np.arange(spec.height)[:, None]
    uppers = [c.top_rows(spec.width) for c in spec.courses]
    lowers = [u + spec.tow_height for u in uppers]
    cover = np.zeros((spec.height, spec.width), dtype=np.int64)
    for u, l in zip(uppers, lowers):
        cover += (rows >= u) & (rows < l)
    step = spec.tow_intensity - spec.background_intensity
    img = np.clip(spec.background_intensity + step * cover, 0.0, 1.0)
    truth = _truth_mask(uppers, lowers, spec.height)

    rng = np.random.default_rng(spec.seed)
    if spec.texture_sigma > 0:
        img = np.clip(img + rng.normal(0.0, spec.texture_sigma, img.shape), 0.0, 1.0)
    if spec.salt_pepper > 0:
        u = rng.random(img.shape)
        img = np.where(u < spec.salt_pepper / 2, 0.0, img)
        img = np.where((u >= spec.salt_pepper / 2) & (u < spec.salt_pepper), 1.0, img)
    return Scene(spec, DepthMap(img), DefectMask(truth), {"upper": uppers, "lower": lowers})


@dataclass(frozen=True)
class CorpusRanges:
    """Inclusive (low, high) sampling ranges for :func:`corpus`."""

    width: tuple[int, int] = (256, 256)
    n_tows: tuple[int, int] = (3, 4)
    tow_height: tuple[int, int] = (24, 32)
    offset: tuple[int, int] = (-4, 4)
    amplitude: tuple[float, float] = (0.0, 2.0)
    wavelength: tuple[float, float] = (64.0, 256.0)
    salt_pepper: tuple[float, float] = (0.0, 0.0)
    texture_sigma: tuple[float, float] = (0.0, 0.0)
    margin: int = 12
    shared_drift: bool = True  # one head path for the whole course
    tow_intensity: float = 0.55
    background_intensity: float = 0.2

    def __post_init__(self):
        for name in ("width", "n_tows", "tow_height", "offset", "amplitude",
                     "wavelength", "salt_pepper", "texture_sigma"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"empty range for {name}: ({lo}, {hi})")
        if self.n_tows[0] < 1:
            raise ValueError("need at least one tow per scene")

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusRanges":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


def _scene_seeds(seed: int, n: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def corpus(n: int, ranges: CorpusRanges = CorpusRanges(), seed: int = 0) -> list[SceneSpec]:
    if n < 1:
        raise ValueError("corpus size must be >= 1")
    specs = []
    for scene_seed in _scene_seeds(seed, n):
        rng = np.random.default_rng(scene_seed)

        def ui(r):
            return int(rng.integers(r[0], r[1] + 1))

        def uf(r):
            return float(rng.uniform(r[0], r[1]))

        n_tows = ui(ranges.n_tows)
        th = ui(ranges.tow_height)
        offsets = [ui(ranges.offset) for _ in range(n_tows - 1)]
        drifts = [(uf(ranges.amplitude), uf(ranges.wavelength), uf((0.0, 2 * math.pi)))
                  for _ in range(1 if ranges.shared_drift else n_tows)]
        if ranges.shared_drift:
            drifts = drifts * n_tows
        specs.append(SceneSpec.stacked(
            ui(ranges.width), th, offsets, margin=ranges.margin, drifts=drifts,
            tow_intensity=ranges.tow_intensity,
            background_intensity=ranges.background_intensity,
            salt_pepper=uf(ranges.salt_pepper),
            texture_sigma=uf(ranges.texture_sigma),
            seed=scene_seed,
        ))
    return specs


def write_scene(scene: Scene, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_png(out / "scene.png", to_gray8(scene.depth))
    save_mask_png(scene.truth, out / "truth.png")
    (out / "truth_curves.json").write_text(json.dumps(scene.truth_curves_json(), indent=1) + "\n")


def write_corpus(specs: list[SceneSpec], out_dir, extra: dict | None = None) -> dict:
    """One sub-directory per scene plus a top-level manifest.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, spec in enumerate(specs):
        name = f"scene_{i:03d}"
        write_scene(generate(spec), out / name)
        entries.append({"name": name, "spec": spec.to_dict()})
    manifest = dict(extra or {})
    manifest["scenes"] = entries
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest
