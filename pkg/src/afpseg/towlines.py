"""From polarized edge pixels to smooth per-tow boundary curves.

Edge pieces of one polarity are labelled (8-connectivity), grouped by a
weighted facing-endpoint distance, bridged into a single polyline per
group and finally fitted with a cubic smoothing spline ``row = f(col)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import UnivariateSpline

from .types import PolarEdgeMap, Polarity

Pixel = tuple[int, int]  # (col, row)


@dataclass(frozen=True)
class EdgeRegion:
    id: int
    polarity: Polarity
    pixels: tuple[Pixel, ...]
    leftmost: Pixel
    rightmost: Pixel
    bbox: tuple[int, int, int, int]  # (min_col, min_row, max_col, max_row)

    @classmethod
    def from_pixels(cls, id: int, polarity: Polarity, pixels: Sequence[Pixel]) -> "EdgeRegion":
        if not pixels:
            raise ValueError("an edge region needs at least one pixel")
        pix = tuple(sorted((int(c), int(r)) for c, r in pixels))
        cols = [c for c, _ in pix]
        rows = [r for _, r in pix]
        lo, hi = min(cols), max(cols)
        return cls(
            id=id,
            polarity=Polarity(polarity),
            pixels=pix,
            leftmost=(lo, _median_row([r for c, r in pix if c == lo])),
            rightmost=(hi, _median_row([r for c, r in pix if c == hi])),
            bbox=(lo, min(rows), hi, max(rows)),
        )

    def column_profile(self) -> dict[int, int]:
        by_col: dict[int, list[int]] = {}
        for c, r in self.pixels:
            by_col.setdefault(c, []).append(r)
        return {c: _median_row(rs) for c, rs in by_col.items()}


@dataclass(frozen=True)
class GroupingParams:
    alpha_x: float = 1.0
    alpha_y: float = 4.0
    d_th: float = 30.0

    def __post_init__(self):
        if self.alpha_x < 0 or self.alpha_y < 0:
            raise ValueError("distance weights must be nonnegative")
        if not self.alpha_x < self.alpha_y:
            raise ValueError(f"need alpha_x < alpha_y, got {self.alpha_x} >= {self.alpha_y}")
        if not self.d_th > 0:
            raise ValueError(f"d_th must be positive, got {self.d_th}")


def _median_row(rows: Sequence[int]) -> int:
    s = sorted(rows)
    return s[(len(s) - 1) // 2]


class _DisjointSet:
    def __init__(self, n: int = 0):
        self.parent = list(range(n))

    def add(self) -> int:
        self.parent.append(len(self.parent))
        return len(self.parent) - 1

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # smaller index wins so roots stay deterministic
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb


def connected_components(fg: np.ndarray) -> list[list[Pixel]]:
    """Two-pass 8-connected labelling of a boolean grid.

    Components are returned in raster order of their first pixel, each as
    a list of (col, row) in raster order.
    """
    h, w = fg.shape
    prov = np.zeros((h, w), dtype=np.int64)
    ds = _DisjointSet(1)  # slot 0 = background
    rows, cols = np.nonzero(fg)
    for r, c in zip(rows.tolist(), cols.tolist()):
        # neighbours already visited in raster order: W, NW, N, NE
        seen = []
        if c > 0 and prov[r, c - 1]:
            seen.append(prov[r, c - 1])
        if r > 0:
            for cc in (c - 1, c, c + 1):
                if 0 <= cc < w and prov[r - 1, cc]:
                    seen.append(prov[r - 1, cc])
        if not seen:
            prov[r, c] = ds.add()
        else:
            prov[r, c] = seen[0]
            for other in seen[1:]:
                ds.union(seen[0], other)

    members: dict[int, list[Pixel]] = {}
    for r, c in zip(rows.tolist(), cols.tolist()):
        members.setdefault(ds.find(int(prov[r, c])), []).append((c, r))
    return list(members.values())


def label_components(pe: PolarEdgeMap, polarity: Polarity) -> list[EdgeRegion]:
    """Regions of one polarity; ids follow raster discovery order from 1."""
    comps = connected_components(pe.of(polarity))
    return [EdgeRegion.from_pixels(i, polarity, pix) for i, pix in enumerate(comps, start=1)]


def _facing(a: EdgeRegion, b: EdgeRegion) -> tuple[EdgeRegion, EdgeRegion]:
    if a.rightmost[0] <= b.leftmost[0]:
        return a, b
    if b.rightmost[0] <= a.leftmost[0]:
        return b, a
    # horizontally overlapping: order by left end, then by id for determinism
    return (a, b) if (a.leftmost, a.id) <= (b.leftmost, b.id) else (b, a)


def region_distance(a: EdgeRegion, b: EdgeRegion, p: GroupingParams) -> float:
    """Weighted gap between facing endpoints, horizontal part clipped at 0."""
    if a.polarity != b.polarity:
        raise ValueError("cannot measure distance between regions of different polarity")
    left, right = _facing(a, b)
    dx = max(0, right.leftmost[0] - left.rightmost[0])
    dy = abs(right.leftmost[1] - left.rightmost[1])
    return p.alpha_x * dx + p.alpha_y * dy


def group_regions(regions: Sequence[EdgeRegion], p: GroupingParams) -> list[list[EdgeRegion]]:
    """Partition by the transitive closure of ``d(a, b) < d_th``.

    Groups come back ordered by their topmost-then-leftmost member; the
    members of each group are ordered the same way.
    """
    regions = list(regions)
    if len({r.polarity for r in regions}) > 1:
        raise ValueError("all regions in a grouping call must share one polarity")
    ds = _DisjointSet(len(regions))
    for i in range(len(regions)):
        for j in range(i + 1, len(regions)):
            if region_distance(regions[i], regions[j], p) < p.d_th:
                ds.union(i, j)
    buckets: dict[int, list[EdgeRegion]] = {}
    for i, reg in enumerate(regions):
        buckets.setdefault(ds.find(i), []).append(reg)

    def key(r: EdgeRegion):
        return (r.bbox[1], r.bbox[0], r.pixels, r.id)

    groups = [sorted(g, key=key) for g in buckets.values()]
    groups.sort(key=lambda g: key(g[0]))
    return groups


def bresenham(p0: Pixel, p1: Pixel) -> list[Pixel]:
    """Integer line from p0 to p1 inclusive, (col, row) pixels."""
    x0, y0 = p0
    x1, y1 = p1
    dx, dy = abs(x1 - x0), abs(y1 - y0)
    sx = 1 if x1 >= x0 else -1
    sy = 1 if y1 >= y0 else -1
    steep = dy > dx
    if steep:
        dx, dy = dy, dx
    out = []
    # err tracks 2*dx*(frac - 1/2) of the minor-axis position; ties round away from p0
    err = 2 * dy - dx
    major, minor = 0, 0
    for _ in range(dx + 1):
        if steep:
            out.append((x0 + sx * minor, y0 + sy * major))
        else:
            out.append((x0 + sx * major, y0 + sy * minor))
        if err >= 0:
            minor += 1
            err -= 2 * dx
        err += 2 * dy
        major += 1
    return out


def merge_group(group: Sequence[EdgeRegion]) -> list[Pixel]:
    """One (col, row) per column across the group, bridging the holes."""
    if not group:
        raise ValueError("cannot merge an empty group")
    ordered = sorted(group, key=lambda r: (r.leftmost[0], r.id))
    votes: dict[int, list[int]] = {}
    for reg in ordered:
        for c, r in reg.column_profile().items():
            votes.setdefault(c, []).append(r)
    for left, right in zip(ordered, ordered[1:]):
        for c, r in bresenham(left.rightmost, right.leftmost)[1:-1]:
            votes.setdefault(c, []).append(r)
    return [(c, _median_row(votes[c])) for c in sorted(votes)]


@dataclass(frozen=True, eq=False)
class TowBoundary:
    polarity: Polarity
    group_id: int
    knots_x: np.ndarray
    knots_y: np.ndarray
    smoothing: float
    degree: int
    spline: UnivariateSpline = field(repr=False)

    @property
    def domain(self) -> tuple[int, int]:
        return int(self.knots_x[0]), int(self.knots_x[-1])

    @property
    def knots(self) -> list[tuple[int, int]]:
        return [(int(x), int(y)) for x, y in zip(self.knots_x, self.knots_y)]

    def median_row(self) -> float:
        return float(np.median(self.knots_y))

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        lo, hi = self.domain
        if np.any(x < lo) or np.any(x > hi):
            raise ValueError(f"evaluation outside boundary domain [{lo}, {hi}]")
        return self.spline(x)

    def to_dict(self) -> dict:
        return {
            "polarity": self.polarity.name.lower(),
            "group_id": self.group_id,
            "domain": list(self.domain),
            "smoothing": self.smoothing,
            "knots": [list(k) for k in self.knots],
        }


def fit_boundary(polyline: Sequence[Pixel], smoothing: float | None = None, *,
                 polarity: Polarity = Polarity.NONE, group_id: int = 0) -> TowBoundary:
    """Cubic smoothing spline through a column-monotone polyline.

    ``smoothing`` bounds the residual sum of squares; ``None`` uses the
    number of knots. Fewer than four knots fall back to a linear spline.
    """
    if len(polyline) == 0:
        raise ValueError("cannot fit an empty polyline")
    xs = np.array([p[0] for p in polyline], dtype=np.float64)
    ys = np.array([p[1] for p in polyline], dtype=np.float64)
    if len(xs) < 2:
        raise ValueError("need at least two points to fit a boundary")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("polyline columns must be strictly increasing")
    s = float(len(xs)) if smoothing is None else float(smoothing)
    if s < 0:
        raise ValueError(f"smoothing must be >= 0, got {s}")
    k = 3 if len(xs) >= 4 else 1
    spline = UnivariateSpline(xs, ys, k=k, s=s)
    return TowBoundary(Polarity(polarity), group_id, xs, ys, s, k, spline)


def reconstruct_boundaries(pe: PolarEdgeMap, p: GroupingParams = GroupingParams(),
                           smoothing: float | None = None,
                           min_span: int = 2) -> tuple[list[TowBoundary], dict]:
    """Run labelling, grouping, merging and fitting for both polarities.

    Returns the boundaries and a dict of intermediates per polarity
    (regions and groups) for stage dumps.
    """
    boundaries: list[TowBoundary] = []
    stages: dict = {}
    for pol in (Polarity.UPPER, Polarity.LOWER):
        regions = label_components(pe, pol)
        groups = group_regions(regions, p)
        stages[pol] = {"regions": regions, "groups": groups}
        for gid, group in enumerate(groups, start=1):
            line = merge_group(group)
            if len(line) < min_span:
                continue
            boundaries.append(fit_boundary(line, smoothing, polarity=pol, group_id=gid))
    return boundaries, stages
