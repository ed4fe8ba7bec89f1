import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from someip_ids.evaluation import (
    ClassTooSmall,
    LengthMismatch,
    SingleClassInput,
    class_metrics,
    confusion,
    metrics_from_confusion,
    micro_recall,
    prf1,
    roc_auc,
    roc_binary,
    roc_set,
    stratified_kfold,
)


def test_prf1_two_one_one():
    y_true = [1, 1, 1, 0, 0]
    y_pred = [1, 1, 0, 1, 0]
    m = prf1(y_true, y_pred, 1)
    assert (m.tp, m.fp, m.fn) == (2, 1, 1)
    assert m.precision == m.recall == m.f1 == pytest.approx(2 / 3)


def test_prf1_no_support():
    m = prf1([0, 0], [0, 0], 3)
    assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)
    assert m.no_support


def test_prf1_perfect():
    m = prf1([0, 2, 2], [0, 2, 2], 2)
    assert (m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0)


def test_confusion_identity_for_perfect_predictions():
    y = [0, 1, 2, 3, 4, 4, 0]
    cm = confusion(y, y)
    assert np.array_equal(cm.normalized, np.eye(5))


def test_confusion_all_class_zero_and_empty_rows():
    y_true = [0, 1, 1, 2]
    cm = confusion(y_true, [0, 0, 0, 0])
    assert np.array_equal(cm.normalized[:3, 0], [1, 1, 1])
    assert not cm.normalized[3].any() and not cm.normalized[4].any()
    assert cm.no_support == [False, False, False, True, True]


def test_confusion_length_mismatch():
    with pytest.raises(LengthMismatch):
        confusion([0, 1], [0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=80))
def test_confusion_consistent_with_prf1(pairs):
    y_true, y_pred = map(list, zip(*pairs))
    cm = confusion(y_true, y_pred)
    for a, b in zip(metrics_from_confusion(cm), class_metrics(y_true, y_pred)):
        assert (a.tp, a.fp, a.fn, a.tn) == (b.tp, b.fp, b.fn, b.tn)
    rows = cm.normalized.sum(axis=1)
    for n, s in zip(cm.counts.sum(axis=1), rows):
        assert s == pytest.approx(1.0 if n else 0.0, abs=1e-9)
    assert micro_recall(y_true, y_pred) == pytest.approx(np.mean(np.array(y_true) == np.array(y_pred)))


def test_roc_hand_case():
    curve = roc_binary([0.9, 0.8, 0.4, 0.1], [1, 0, 1, 0])
    # thresholds +inf, .9, .8, .4, .1, -inf enumerated by hand
    assert curve.fpr.tolist() == [0, 0, 0.5, 0.5, 1, 1]
    assert curve.tpr.tolist() == [0, 0.5, 0.5, 1, 1, 1]
    assert curve.auc == pytest.approx(0.75)


def test_roc_constant_scores():
    assert roc_binary([0.3] * 6, [1, 0, 1, 0, 0, 1]).auc == pytest.approx(0.5, abs=1e-9)


def test_roc_perfect_separation():
    assert roc_binary([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]).auc == 1.0


def test_roc_single_class():
    with pytest.raises(SingleClassInput):
        roc_binary([0.1, 0.2], [1, 1])


def _pairwise_auc(scores, pos):
    """Mann-Whitney oracle: P(score_pos > score_neg) + 0.5 P(tie)."""
    s = np.asarray(scores)
    p, n = s[np.asarray(pos, bool)], s[~np.asarray(pos, bool)]
    wins = (p[:, None] > n[None, :]).sum() + 0.5 * (p[:, None] == n[None, :]).sum()
    return wins / (len(p) * len(n))


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 6), st.booleans()), min_size=2, max_size=40))
def test_auc_equals_mann_whitney(items):
    scores, pos = zip(*items)
    if all(pos) or not any(pos):
        return
    curve = roc_binary(np.array(scores) / 6.0, pos)
    assert curve.auc == pytest.approx(_pairwise_auc(scores, pos), abs=1e-12)
    assert (np.diff(curve.fpr) >= 0).all() and (np.diff(curve.tpr) >= 0).all()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_auc_monotone_transform_invariance(seed):
    r = np.random.default_rng(seed)
    y = np.r_[np.arange(5), r.integers(0, 5, 30)]
    scores = r.dirichlet(np.ones(5), size=len(y))
    warped = np.exp(3 * scores) - 7
    a, b = roc_auc(scores, y), roc_auc(warped, y)
    for x, z in zip(a, b):
        assert x.auc == pytest.approx(z.auc, abs=1e-12)


def test_micro_and_macro():
    r = np.random.default_rng(0)
    y = np.r_[np.arange(5), r.integers(0, 5, 50)]
    scores = r.dirichlet(np.ones(5), size=len(y))
    per = roc_auc(scores, y)
    macro = roc_auc(scores, y, "macro")
    assert macro.auc == pytest.approx(np.mean([c.auc for c in per]))
    onehot = y[:, None] == np.arange(5)
    micro = roc_auc(scores, y, "micro")
    assert micro.auc == pytest.approx(_pairwise_auc(scores.ravel(), onehot.ravel()))
    with pytest.raises(ValueError):
        roc_auc(scores, y, "weird")


def test_roc_set_has_seven_curves_and_handles_missing_class():
    y = np.array([0, 0, 1, 1, 2, 3, 4])
    scores = np.eye(5)[y] * 0.9 + 0.02
    curves = roc_set(scores, y)
    assert list(curves) == [f"class_{c}" for c in range(5)] + ["micro", "macro"]
    assert all(c.auc == 1.0 for c in curves.values())
    y2 = np.array([0, 0, 1, 1])
    curves = roc_set(np.eye(5)[y2], y2)
    assert curves["class_3"] is None and curves["macro"] is None
    assert json.dumps(curves["micro"].to_json())


# --- stratification ---------------------------------------------------------


def test_kfold_nine_samples():
    labels = [0, 0, 0, 1, 1, 1, 2, 2, 2]
    for _, val in stratified_kfold(labels, k=3, seed=1):
        assert sorted(np.array(labels)[val].tolist()) == [0, 1, 2]


def test_kfold_class_too_small():
    with pytest.raises(ClassTooSmall):
        stratified_kfold([0, 0, 0, 1], k=2)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(3, 40), min_size=1, max_size=5), st.integers(2, 3), st.integers(0, 99))
def test_kfold_properties(class_sizes, k, seed):
    labels = np.concatenate([np.full(n, c) for c, n in enumerate(class_sizes)])
    splits = stratified_kfold(labels, k=k, seed=seed)
    vals = [v for _, v in splits]
    assert sorted(np.concatenate(vals).tolist()) == list(range(len(labels)))
    for trn, val in splits:
        assert not set(trn) & set(val)
        assert len(trn) + len(val) == len(labels)
        for c, n in enumerate(class_sizes):
            prop_fold = np.mean(labels[val] == c)
            assert abs(prop_fold - n / len(labels)) <= 1 / len(val) + 1e-12
            # +-1 sample of the proportional share
            assert abs(np.sum(labels[val] == c) - n / k) < 1 + 1e-9
    sizes = [len(v) for v in vals]
    assert max(sizes) - min(sizes) <= 1


def test_kfold_deterministic():
    labels = np.repeat(np.arange(3), 10)
    a = stratified_kfold(labels, 3, seed=5)
    b = stratified_kfold(labels, 3, seed=5)
    assert all(np.array_equal(x[1], y[1]) for x, y in zip(a, b))
