import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from afpseg.segmentation import (Contribution, TowPair, assemble_mask, extract_regions,
                                 pair_boundaries, segment_pair)
from afpseg.towlines import fit_boundary
from afpseg.types import DefectClass, DefectMask, Polarity

U, L = Polarity.UPPER, Polarity.LOWER
GAP, OVER = DefectClass.GAP, DefectClass.OVERLAP


def flat(row, pol, x0=0, x1=49, gid=1):
    return fit_boundary([(x, row) for x in range(x0, x1 + 1)], polarity=pol, group_id=gid)


def curve(rows, pol, x0=0):
    return fit_boundary([(x0 + i, int(r)) for i, r in enumerate(rows)], 0.0, polarity=pol)


def tows(*spans, width=50):
    """Full-width boundaries for tows given as (top, bottom) rows."""
    out = []
    for i, (top, bottom) in enumerate(spans, start=1):
        out += [flat(top, U, 0, width - 1, i), flat(bottom, L, 0, width - 1, i)]
    return out


# -- pairing ---------------------------------------------------------------------------------

def test_one_tow_no_pairs():
    p = pair_boundaries(tows((5, 20)))
    assert p.pairs == [] and len(p.tows) == 1 and len(p.unpaired) == 2


def test_two_tows_one_pair():
    bs = tows((5, 20), (23, 40))
    p = pair_boundaries(bs)
    assert len(p.pairs) == 1
    assert p.pairs[0].upper_tow_lower_boundary is bs[1]
    assert p.pairs[0].lower_tow_upper_boundary is bs[2]


def test_three_tows_two_pairs_top_to_bottom():
    bs = tows((5, 20), (23, 40), (38, 55))
    p = pair_boundaries(list(reversed(bs)))
    assert [(pr.upper_tow_lower_boundary.median_row(), pr.lower_tow_upper_boundary.median_row())
            for pr in p.pairs] == [(20, 23), (40, 38)]
    assert {b.median_row() for b in p.unpaired} == {5, 55}


def test_missing_upper_boundary_still_pairs_below():
    # the middle tow lost its top edge; its bottom edge still pairs with the next tow
    bs = [flat(5, U), flat(20, L), flat(40, L, gid=2), flat(43, U, gid=3), flat(60, L, gid=3)]
    p = pair_boundaries(bs)
    assert [(pr.upper_tow_lower_boundary.median_row(), pr.lower_tow_upper_boundary.median_row())
            for pr in p.pairs] == [(40, 43)]
    assert all(b in p.unpaired or any(b is x for pr in p.pairs
               for x in (pr.upper_tow_lower_boundary, pr.lower_tow_upper_boundary)) for b in bs)


def test_disjoint_domains_do_not_pair():
    bs = [flat(20, L, 0, 10), flat(23, U, 20, 30)]
    p = pair_boundaries(bs)
    assert p.pairs == [] and len(p.unpaired) == 2
    with pytest.raises(ValueError):
        TowPair(bs[0], bs[1])


def test_shared_domain_is_intersection():
    assert TowPair(flat(20, L, 3, 40), flat(23, U, 10, 49)).shared_domain == (10, 40)


# -- per-pair segmentation ------------------------------------------------------------------------------

def test_gap_rows_strictly_between():
    c = segment_pair(TowPair(flat(10, L), flat(14, U)), 1.0)
    assert c.of(OVER) == set()
    assert c.of(GAP) == {(x, r) for x in range(50) for r in (11, 12, 13)}


def test_overlap_rows_strictly_between():
    c = segment_pair(TowPair(flat(14, L), flat(10, U)), 1.0)
    assert c.of(GAP) == set()
    assert c.of(OVER) == {(x, r) for x in range(50) for r in (11, 12, 13)}


@pytest.mark.parametrize("w", [-1, 0, 1])
def test_within_tolerance_is_neutral(w):
    assert len(segment_pair(TowPair(flat(10, L), flat(10 + w, U)), 1.0)) == 0


def test_negative_tolerance_rejected():
    with pytest.raises(ValueError):
        segment_pair(TowPair(flat(10, L), flat(14, U)), -1)


def test_clipped_to_height():
    c = segment_pair(TowPair(flat(10, L), flat(14, U)), 1.0, height=12)
    assert set(c.rows.tolist()) == {11}


rows = st.lists(st.integers(0, 30), min_size=5, max_size=30)


@given(rows, rows, st.floats(0, 4))
def test_swap_antisymmetry(a, b, tol):
    n = min(len(a), len(b))
    pair = TowPair(curve(a[:n], L), curve(b[:n], U))
    fwd, back = segment_pair(pair, tol), segment_pair(pair.swapped(), tol)
    assert fwd.of(GAP) == back.of(OVER) and fwd.of(OVER) == back.of(GAP)
    assert not fwd.of(GAP) & fwd.of(OVER)


@given(rows, rows)
def test_infinite_tolerance_empty(a, b):
    n = min(len(a), len(b))
    assert len(segment_pair(TowPair(curve(a[:n], L), curve(b[:n], U)), math.inf)) == 0


# -- assembly and regions ----------------------------------------------------------------------------------

def _contrib(pixels, klass, width=0.0):
    cols = np.array([c for c, _ in pixels], dtype=np.int64)
    rws = np.array([r for _, r in pixels], dtype=np.int64)
    return Contribution(cols, rws, np.full(len(pixels), klass, np.uint8),
                        np.full(len(pixels), width))


def test_no_contributions_all_neutral():
    seg = assemble_mask([], 8, 6)
    assert not seg.mask.classes.any() and seg.conflicts == 0


def test_conflict_resolves_to_overlap_and_is_counted():
    seg = assemble_mask([_contrib([(1, 1), (2, 1)], GAP), _contrib([(2, 1)], OVER)], 5, 5)
    assert seg.mask.classes[1, 1] == GAP and seg.mask.classes[1, 2] == OVER
    assert seg.conflicts == 1


def test_out_of_bounds_contribution_rejected():
    with pytest.raises(ValueError):
        assemble_mask([_contrib([(5, 0)], GAP)], 5, 5)


def test_gap_band_single_region():
    seg = assemble_mask([segment_pair(TowPair(flat(10, L), flat(14, U)), 1.0)], 50, 30)
    regs = extract_regions(seg.mask, seg.widths)
    assert len(regs) == 1
    r = regs[0]
    assert (r.klass, r.area, r.bbox, r.max_width) == (GAP, 150, (0, 11, 49, 13), 4.0)
    assert r.to_dict() == {"class": "gap", "bbox": [0, 11, 49, 13], "area_px": 150,
                           "max_width_px": 4.0}


def test_adjacent_gap_and_overlap_are_two_regions():
    m = np.zeros((6, 10), dtype=np.uint8)
    m[2, 0:5] = GAP
    m[2, 5:10] = OVER
    regs = extract_regions(DefectMask(m))
    assert sorted((r.klass, r.area) for r in regs) == [(GAP, 5), (OVER, 5)]
    assert all(r.max_width == 2 for r in regs)  # one row thick -> bounded two rows apart
