import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from afpseg.evaluation import aggregate, confusion_matrix, evaluate, iou
from afpseg.types import DefectClass, DefectMask
from oracles import naive_confusion, naive_iou, pixel_counts

GAP, OVER = DefectClass.GAP, DefectClass.OVERLAP
labels = arrays(np.uint8, (16, 16), elements=st.integers(0, 2))


def M(a):
    return DefectMask(np.asarray(a, dtype=np.uint8))


def test_identical_nonempty():
    m = M([[1, 2], [0, 1]])
    assert iou(m, m, GAP) == 1.0


def test_disjoint_nonempty():
    assert iou(M([[1, 0]]), M([[0, 1]]), GAP) == 0.0


def test_block_example():
    pred = np.zeros((4, 4), np.uint8)
    gt = np.zeros((4, 4), np.uint8)
    pred[0:2, 0:2] = GAP
    gt[0:2, 1:3] = GAP  # same 2x2 block moved one column over
    assert iou(M(pred), M(gt), GAP) == pytest.approx(1 / 3)


def test_empty_vs_empty_is_one_and_one_sided_is_zero():
    z = DefectMask.empty(3, 3)
    assert iou(z, z, OVER) == 1.0
    assert iou(z, M(np.eye(3)), GAP) == 0.0


def test_pred_equals_gt_report():
    m = M([[0, 1, 2], [2, 1, 0]])
    r = evaluate(m, m)
    assert (r.iou_gap, r.iou_overlap, r.mean_iou) == (1.0, 1.0, 1.0)
    assert np.array_equal(r.confusion, np.diag([2, 2, 2]))


def test_all_neutral_prediction_scores_zero():
    r = evaluate(DefectMask.empty(3, 2), M([[0, 1, 2], [2, 1, 0]]))
    assert r.iou_gap == 0.0 and r.iou_overlap == 0.0


def test_size_mismatch():
    with pytest.raises(ValueError):
        evaluate(DefectMask.empty(3, 2), DefectMask.empty(2, 3))


@given(labels, labels)
def test_matches_naive_counting(p, g):
    r = evaluate(M(p), M(g))
    assert np.array_equal(r.confusion, naive_confusion(p, g))
    for k in (GAP, OVER):
        inter, union = pixel_counts(p, g, k)
        assert (r.counts[k].intersection, r.counts[k].union) == (inter, union)
        assert iou(M(p), M(g), k) == naive_iou(p, g, k)
    assert r.mean_iou == (r.iou_gap + r.iou_overlap) / 2
    assert 0 <= r.iou_gap <= 1 and 0 <= r.iou_overlap <= 1


@given(labels, labels, st.randoms())
def test_symmetric_and_permutation_invariant(p, g, rnd):
    rows, cols = list(range(16)), list(range(16))
    rnd.shuffle(rows)
    rnd.shuffle(cols)
    for k in (GAP, OVER):
        assert iou(M(p), M(g), k) == iou(M(g), M(p), k)
        assert iou(M(p[rows][:, cols]), M(g[rows][:, cols]), k) == iou(M(p), M(g), k)


@given(labels, labels)
def test_confusion_rows_are_truth_counts(p, g):
    cm = confusion_matrix(M(p), M(g))
    assert cm.sum(axis=1).tolist() == [int((g == k).sum()) for k in range(3)]


@given(labels)
def test_self_iou_is_one(m):
    assert all(iou(M(m), M(m), k) == 1.0 for k in DefectClass)


def test_aggregate_micro_and_macro():
    a = evaluate(M([[1, 1, 0, 0]]), M([[1, 0, 0, 0]]))  # gap 1/2, overlap vacuous 1
    b = evaluate(M([[2, 0, 0, 0]]), M([[2, 2, 0, 0]]))  # gap vacuous 1, overlap 1/2
    s = aggregate([a, b])
    assert s.n_scenes == 2
    assert s.macro_iou_gap == pytest.approx(0.75) and s.macro_mean_iou == pytest.approx(0.75)
    assert s.micro.iou_gap == pytest.approx(0.5) and s.micro.iou_overlap == pytest.approx(0.5)
    assert s.to_dict()["micro"]["counts"]["gap"] == {"intersection": 1, "union": 2, "pred": 2, "gt": 1}


def test_aggregate_empty():
    s = aggregate([])
    assert s.n_scenes == 0 and s.micro is None and s.to_dict()["macro"]["mean_iou"] is None
