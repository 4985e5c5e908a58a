"""Pairing boundaries of adjacent tows and labelling the space between."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .towlines import TowBoundary, connected_components
from .types import DefectClass, DefectMask, Polarity

DEFAULT_TOLERANCE = 1.0


def _intersect(a: tuple[int, int], b: tuple[int, int]) -> tuple[int, int] | None:
    lo, hi = max(a[0], b[0]), min(a[1], b[1])
    return (lo, hi) if lo <= hi else None


@dataclass(frozen=True)
class TowPair:
    """Lower boundary of the upper tow against upper boundary of the tow below."""

    upper_tow_lower_boundary: TowBoundary
    lower_tow_upper_boundary: TowBoundary
    shared_domain: tuple[int, int] = field(init=False)

    def __post_init__(self):
        dom = _intersect(self.upper_tow_lower_boundary.domain, self.lower_tow_upper_boundary.domain)
        if dom is None:
            raise ValueError("paired boundaries have disjoint domains")
        object.__setattr__(self, "shared_domain", dom)

    def swapped(self) -> "TowPair":
        return TowPair(self.lower_tow_upper_boundary, self.upper_tow_lower_boundary)


@dataclass
class Tow:
    upper: TowBoundary | None
    lower: TowBoundary | None

    def row(self) -> float:
        b = self.upper if self.upper is not None else self.lower
        return b.median_row()


@dataclass
class Pairing:
    pairs: list[TowPair]
    tows: list[Tow]
    unpaired: list[TowBoundary]


def pair_boundaries(boundaries: Sequence[TowBoundary]) -> Pairing:
    """Assemble tows top to bottom and pair neighbours.

    Each upper boundary takes the nearest still-unmatched lower boundary
    below it whose domain overlaps its own. A lower boundary left over
    becomes a tow without a top (e.g. cut by the image border). Anything
    that ends up in no pair is reported in ``unpaired``.
    """
    ordered = sorted(boundaries, key=lambda b: (b.median_row(), b.polarity, b.group_id))
    uppers = [b for b in ordered if b.polarity == Polarity.UPPER]
    lowers = [b for b in ordered if b.polarity == Polarity.LOWER]
    taken: set[int] = set()
    tows: list[Tow] = []
    for up in uppers:
        match = None
        for i, lo in enumerate(lowers):
            if i in taken or lo.median_row() <= up.median_row():
                continue
            if _intersect(up.domain, lo.domain) is not None:
                match = i
                break
        if match is not None:
            taken.add(match)
            tows.append(Tow(up, lowers[match]))
        else:
            tows.append(Tow(up, None))
    tows.extend(Tow(None, lo) for i, lo in enumerate(lowers) if i not in taken)
    tows.sort(key=Tow.row)

    pairs: list[TowPair] = []
    used: set[int] = set()
    for above, below in zip(tows, tows[1:]):
        if above.lower is None or below.upper is None:
            continue
        if _intersect(above.lower.domain, below.upper.domain) is None:
            continue
        pairs.append(TowPair(above.lower, below.upper))
        used.update((id(above.lower), id(below.upper)))
    unpaired = [b for b in ordered if id(b) not in used]
    return Pairing(pairs, tows, unpaired)


@dataclass(frozen=True)
class Contribution:
    """Pixels a single pair claims, as parallel arrays."""

    cols: np.ndarray
    rows: np.ndarray
    classes: np.ndarray
    widths: np.ndarray

    def __len__(self):
        return len(self.cols)

    def of(self, klass: DefectClass) -> set[tuple[int, int]]:
        sel = self.classes == klass
        return set(zip(self.cols[sel].tolist(), self.rows[sel].tolist()))


def segment_pair(pair: TowPair, tol: float = DEFAULT_TOLERANCE,
                 height: int | None = None) -> Contribution:
    """Per column, mark rows strictly between the two curves.

    Curve values are snapped to the nearest pixel row first (boundary rows
    belong to the tows). With ``w = y_upper_of_lower_tow -
    y_lower_of_upper_tow``, ``w > tol`` is a gap, ``w < -tol`` an overlap
    and anything else lies within tolerance.
    """
    if not tol >= 0:
        raise ValueError(f"tolerance must be >= 0, got {tol}")
    x0, x1 = pair.shared_domain
    xs = np.arange(x0, x1 + 1)
    y_l = np.floor(pair.upper_tow_lower_boundary(xs) + 0.5).astype(np.int64)
    y_u = np.floor(pair.lower_tow_upper_boundary(xs) + 0.5).astype(np.int64)
    cols, rows, classes, widths = [], [], [], []
    for x, a, b in zip(xs.tolist(), y_l.tolist(), y_u.tolist()):
        w = b - a
        if w > tol:
            klass, lo, hi = DefectClass.GAP, a, b
        elif w < -tol:
            klass, lo, hi = DefectClass.OVERLAP, b, a
        else:
            continue
        first, last = lo + 1, hi - 1
        if height is not None:
            first, last = max(first, 0), min(last, height - 1)
        for r in range(first, last + 1):
            cols.append(x)
            rows.append(r)
            classes.append(int(klass))
            widths.append(abs(w))
    return Contribution(
        np.array(cols, dtype=np.int64),
        np.array(rows, dtype=np.int64),
        np.array(classes, dtype=np.uint8),
        np.array(widths, dtype=np.float64),
    )


@dataclass(frozen=True, eq=False)
class Segmentation:
    mask: DefectMask
    widths: np.ndarray  # per-pixel |w| of the claiming pair, 0 where neutral
    conflicts: int


def assemble_mask(contributions: Sequence[Contribution], width: int, height: int) -> Segmentation:
    """Union of pair contributions; gap/overlap collisions resolve to overlap."""
    classes = np.zeros((height, width), dtype=np.uint8)
    widths = np.zeros((height, width), dtype=np.float64)
    claimed_gap = np.zeros((height, width), dtype=bool)
    claimed_overlap = np.zeros((height, width), dtype=bool)
    for con in contributions:
        if len(con) == 0:
            continue
        if (con.cols.min() < 0 or con.cols.max() >= width
                or con.rows.min() < 0 or con.rows.max() >= height):
            raise ValueError("contribution falls outside the image")
        for klass, claimed in ((DefectClass.GAP, claimed_gap), (DefectClass.OVERLAP, claimed_overlap)):
            sel = con.classes == klass
            r, c = con.rows[sel], con.cols[sel]
            claimed[r, c] = True
            np.maximum.at(widths, (r, c), con.widths[sel])
    classes[claimed_gap] = DefectClass.GAP
    classes[claimed_overlap] = DefectClass.OVERLAP
    conflicts = int(np.count_nonzero(claimed_gap & claimed_overlap))
    return Segmentation(DefectMask(classes), widths, conflicts)


@dataclass(frozen=True)
class DefectRegion:
    klass: DefectClass
    pixels: frozenset
    bbox: tuple[int, int, int, int]  # (min_col, min_row, max_col, max_row)
    area: int
    max_width: float

    def to_dict(self) -> dict:
        return {
            "class": self.klass.name.lower(),
            "bbox": list(self.bbox),
            "area_px": self.area,
            "max_width_px": round(float(self.max_width), 6),
        }


def extract_regions(mask: DefectMask, widths: np.ndarray | None = None) -> list[DefectRegion]:
    """8-connected defect regions per class.

    ``max_width`` is the largest boundary separation recorded in
    ``widths``; without it, the thickest column of the region plus one
    (the separation of the rows bounding it).
    """
    regions = []
    for klass in (DefectClass.GAP, DefectClass.OVERLAP):
        for pix in connected_components(mask.pixels_of(klass)):
            cols = np.array([c for c, _ in pix])
            rows = np.array([r for _, r in pix])
            if widths is not None:
                mw = float(widths[rows, cols].max())
            else:
                mw = float(np.bincount(cols - cols.min()).max() + 1)
            regions.append(DefectRegion(
                klass, frozenset(pix),
                (int(cols.min()), int(rows.min()), int(cols.max()), int(rows.max())),
                len(pix), mw,
            ))
    return regions
