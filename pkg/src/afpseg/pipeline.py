"""End-to-end inspection: median -> edges -> tow lines -> defects."""
from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from . import io
from .edges import CannyParams, canny, classify_edges, open_horizontal, sobel_vertical
from .preprocess import median_filter
from .segmentation import (DefectRegion, Pairing, Segmentation, assemble_mask,
                           extract_regions, pair_boundaries, segment_pair)
from .towlines import GroupingParams, TowBoundary, reconstruct_boundaries
from .types import BinaryMask, DepthMap, PolarEdgeMap, Polarity

log = logging.getLogger(__name__)

STAGE_FILES = (
    "01_median.png", "02_edges.png", "03_opened.png", "04_polarity.png",
    "05_groups.png", "06_boundaries.png",
)
UPPER_RGB = (0, 255, 0)
LOWER_RGB = (255, 0, 0)


@dataclass(frozen=True)
class PipelineParams:
    median: int = 3  # 0 disables
    sigma: float = 2.0
    canny_low: float = 0.4
    canny_high: float = 1.0
    se_length: int = 5
    alpha_x: float = 1.0
    alpha_y: float = 4.0
    d_th: float = 30.0
    spline_s: float | None = None  # None: number of knots
    min_span: int = 2  # shorter merged boundaries are dropped
    tolerance: float = 1.0

    def __post_init__(self):
        if self.median != 0 and (self.median < 1 or self.median % 2 == 0):
            raise ValueError(f"--median must be 0 or a positive odd integer, got {self.median}")
        if self.se_length < 1:
            raise ValueError("--se-length must be >= 1")
        if self.min_span < 2:
            raise ValueError("--min-span must be >= 2")
        if self.tolerance < 0:
            raise ValueError("--tolerance must be >= 0")
        if self.spline_s is not None and self.spline_s < 0:
            raise ValueError("--spline-s must be >= 0")
        # constructing these validates the remaining fields
        self.canny_params()
        self.grouping()

    def canny_params(self) -> CannyParams:
        return CannyParams(sigma=self.sigma, low_ratio=self.canny_low, high_ratio=self.canny_high)

    def grouping(self) -> GroupingParams:
        return GroupingParams(self.alpha_x, self.alpha_y, self.d_th)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineParams":
        """Accepts flag-style keys (``canny-low``) as well as field names."""
        known = {f.name for f in fields(cls)}
        norm = {k.replace("-", "_"): v for k, v in d.items()}
        unknown = sorted(set(norm) - known)
        if unknown:
            raise ValueError(f"unknown pipeline parameters: {', '.join(unknown)}")
        return cls(**norm)


def load_config(path) -> dict:
    """Read a JSON config file into a flat dict with field-style keys."""
    with open(path) as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


@dataclass(eq=False)
class Inspection:
    params: PipelineParams
    filtered: DepthMap
    edges: BinaryMask
    opened: BinaryMask
    polarity: PolarEdgeMap
    stages: dict
    boundaries: list[TowBoundary]
    pairing: Pairing
    segmentation: Segmentation
    regions: list[DefectRegion]
    warnings: list[str] = field(default_factory=list)
    timing_ms: dict = field(default_factory=dict)

    def report(self, timing: bool = False) -> dict:
        index = {id(b): i for i, b in enumerate(self.boundaries)}
        return {
            "params": self.params.to_dict(),
            "image": {"width": self.filtered.width, "height": self.filtered.height},
            "boundaries": [b.to_dict() for b in self.boundaries],
            "pairs": [
                {
                    "upper_tow_lower_boundary": index[id(p.upper_tow_lower_boundary)],
                    "lower_tow_upper_boundary": index[id(p.lower_tow_upper_boundary)],
                    "shared_domain": list(p.shared_domain),
                }
                for p in self.pairing.pairs
            ],
            "defects": [r.to_dict() for r in self.regions],
            "unpaired_boundaries": [index[id(b)] for b in self.pairing.unpaired],
            "conflict_pixels": self.segmentation.conflicts,
            "warnings": list(self.warnings),
            "timing_ms": dict(self.timing_ms) if timing else None,
        }


def inspect(img: DepthMap, params: PipelineParams = PipelineParams()) -> Inspection:
    timing: dict[str, float] = {}
    t0 = time.perf_counter()

    def lap(name):
        nonlocal t0
        now = time.perf_counter()
        timing[name] = round((now - t0) * 1000.0, 3)
        t0 = now

    filtered = median_filter(img, params.median) if params.median else img
    lap("median")
    edges = canny(filtered, params.canny_params())
    opened = open_horizontal(edges, params.se_length)
    polar = classify_edges(opened, sobel_vertical(filtered))
    lap("edges")
    boundaries, stages = reconstruct_boundaries(polar, params.grouping(), params.spline_s,
                                               params.min_span)
    lap("towlines")
    pairing = pair_boundaries(boundaries)
    contribs = [segment_pair(p, params.tolerance, img.height) for p in pairing.pairs]
    seg = assemble_mask(contribs, img.width, img.height)
    regions = extract_regions(seg.mask, seg.widths)
    lap("segmentation")

    warnings = []
    if not boundaries:
        warnings.append("no tow boundaries found")
    elif not pairing.pairs:
        warnings.append("no adjacent tow pairs found")
    # the outer edges of the first and last tow never have a neighbour
    outer = set()
    if pairing.tows:
        outer = {id(pairing.tows[0].upper), id(pairing.tows[-1].lower)}
    stray = [b for b in pairing.unpaired if id(b) not in outer]
    if stray:
        warnings.append(f"{len(stray)} boundaries could not be paired")
    if seg.conflicts:
        warnings.append(f"{seg.conflicts} pixels claimed as both gap and overlap; kept as overlap")
    for w in warnings:
        log.warning(w)
    return Inspection(params, filtered, edges, opened, polar, stages, boundaries,
                      pairing, seg, regions, warnings, timing)


# -- stage rendering ---------------------------------------------------------

def _binary_img(mask: BinaryMask) -> np.ndarray:
    return np.where(mask.bits, 255, 0).astype(np.uint8)


def polarity_rgb(pe: PolarEdgeMap) -> np.ndarray:
    out = np.zeros(pe.shape + (3,), dtype=np.uint8)
    out[pe.labels == Polarity.UPPER] = UPPER_RGB
    out[pe.labels == Polarity.LOWER] = LOWER_RGB
    return out


def _palette(i: int) -> tuple[int, int, int]:
    # golden-angle hue walk, deterministic
    h = (i * 137.508) % 360 / 60.0
    x = 1 - abs(h % 2 - 1)
    r, g, b = [(1, x, 0), (x, 1, 0), (0, 1, x), (0, x, 1), (x, 0, 1), (1, 0, x)][int(h) % 6]
    return int(55 + 200 * r), int(55 + 200 * g), int(55 + 200 * b)


def groups_rgb(insp: Inspection) -> np.ndarray:
    h, w = insp.polarity.shape
    px = np.zeros((h, w, 3), dtype=np.uint8)
    labels = []
    for pol in (Polarity.UPPER, Polarity.LOWER):
        for gid, group in enumerate(insp.stages[pol]["groups"], start=1):
            color = _palette(gid + (0 if pol == Polarity.UPPER else 50))
            for reg in group:
                for c, r in reg.pixels:
                    px[r, c] = color
            first = group[0]
            tag = ("U" if pol == Polarity.UPPER else "L") + str(gid)
            labels.append((first.leftmost, tag, color))
    im = Image.fromarray(px)
    draw = ImageDraw.Draw(im)
    for (c, r), tag, color in labels:
        draw.text((c, max(0, r - 11)), tag, fill=color)
    return np.asarray(im)


def boundaries_rgb(base: DepthMap, boundaries: list[TowBoundary]) -> np.ndarray:
    gray = io.to_gray8(base)
    out = np.repeat(gray[:, :, None], 3, axis=2)
    for b in boundaries:
        lo, hi = b.domain
        xs = np.arange(lo, hi + 1)
        ys = np.floor(b(xs) + 0.5).astype(np.int64)
        ok = (ys >= 0) & (ys < base.height)
        out[ys[ok], xs[ok]] = UPPER_RGB if b.polarity == Polarity.UPPER else LOWER_RGB
    return out


def write_outputs(insp: Inspection, base: DepthMap, out_dir, stages: bool = False,
                  timing: bool = False) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if stages:
        io.save_png(out / "01_median.png", io.to_gray8(insp.filtered))
        io.save_png(out / "02_edges.png", _binary_img(insp.edges))
        io.save_png(out / "03_opened.png", _binary_img(insp.opened))
        io.save_png(out / "04_polarity.png", polarity_rgb(insp.polarity))
        io.save_png(out / "05_groups.png", groups_rgb(insp))
        io.save_png(out / "06_boundaries.png", boundaries_rgb(base, insp.boundaries))
    io.save_overlay_png(base, insp.segmentation.mask, out / "07_defects.png")
    io.save_mask_png(insp.segmentation.mask, out / "defects_mask.png")
    report = insp.report(timing=timing)
    text = json.dumps(report, indent=1, sort_keys=True) + "\n"
    io.atomic_write(out / "report.json", lambda f: f.write(text.encode()))
    return report
