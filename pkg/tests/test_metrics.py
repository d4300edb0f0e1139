import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spdcl.metrics import (
    binary_f1,
    evaluate,
    hamming_loss,
    label_frequency_groups,
    macro_f1,
    macro_f1_per_group,
    matthews,
    micro_f1,
    subset_accuracy,
)

# --------------------------------------------------------- counting oracles
# Plain-Python loops, no numpy: the independent route the implementations
# must agree with exactly.


def oracle_counts(truth, pred, label):
    tp = fp = fn = 0
    for t_row, p_row in zip(truth, pred):
        t, p = t_row[label], p_row[label]
        if t == 1 and p == 1:
            tp += 1
        elif t == 0 and p == 1:
            fp += 1
        elif t == 1 and p == 0:
            fn += 1
    return tp, fp, fn


def oracle_f1(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 else 2.0 * tp / denom


def oracle_micro(truth, pred):
    tp = fp = fn = 0
    for lab in range(len(truth[0])):
        a, b, c = oracle_counts(truth, pred, lab)
        tp, fp, fn = tp + a, fp + b, fn + c
    return oracle_f1(tp, fp, fn)


def oracle_macro(truth, pred):
    scores = [oracle_f1(*oracle_counts(truth, pred, lab)) for lab in range(len(truth[0]))]
    return sum(scores) / len(scores)


def oracle_hamming(truth, pred):
    wrong = sum(
        1 for t_row, p_row in zip(truth, pred) for t, p in zip(t_row, p_row) if t != p
    )
    return wrong / (len(truth) * len(truth[0]))


def oracle_subset(truth, pred):
    exact = sum(1 for t_row, p_row in zip(truth, pred) if list(t_row) == list(p_row))
    return exact / len(truth)


def oracle_matthews(truth, pred):
    tp = sum(1 for t, p in zip(truth, pred) if t == 1 and p == 1)
    tn = sum(1 for t, p in zip(truth, pred) if t == 0 and p == 0)
    fp = sum(1 for t, p in zip(truth, pred) if t == 0 and p == 1)
    fn = sum(1 for t, p in zip(truth, pred) if t == 1 and p == 0)
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    return 0.0 if denom == 0 else (tp * tn - fp * fn) / math.sqrt(denom)


def random_pair(rng, n, labels):
    truth = rng.integers(0, 2, size=(n, labels))
    pred = rng.integers(0, 2, size=(n, labels))
    return truth, pred


# ------------------------------------------------------------- fixed cases


def test_micro_f1_endpoints_and_hand_case():
    truth = np.array([[1, 0, 1], [0, 1, 0], [1, 1, 0], [0, 0, 1]])
    assert micro_f1(truth, truth) == 1.0
    assert micro_f1(truth, np.zeros_like(truth)) == 0.0
    # hand count: pred flips one positive off and one negative on
    pred = np.array([[1, 0, 0], [0, 1, 1], [1, 1, 0], [0, 0, 1]])
    # tp=5, fn=1, fp=1 -> 2*5/(10+1+1)
    assert micro_f1(truth, pred) == pytest.approx(10 / 12)


def test_macro_f1_zero_convention():
    # one label predicted perfectly, one label absent everywhere -> (1+0)/2
    truth = np.array([[1, 0], [1, 0], [0, 0]])
    pred = truth.copy()
    assert macro_f1(truth, pred) == pytest.approx(0.5)
    full = np.array([[1, 1], [1, 1]])
    assert macro_f1(full, full) == 1.0


def test_hamming_loss_cases():
    truth = np.array([[1, 0], [0, 1]])
    assert hamming_loss(truth, truth) == 0.0
    one_bit = np.array([[1, 1], [0, 1]])
    assert hamming_loss(truth, one_bit) == 0.25
    assert hamming_loss(truth, 1 - truth) == 1.0


def test_subset_accuracy_cases():
    truth = np.array([[1, 0], [0, 1], [1, 1], [0, 0]])
    assert subset_accuracy(truth, truth) == 1.0
    assert subset_accuracy(truth, 1 - truth) == 0.0
    half = truth.copy()
    half[2:] = 1 - half[2:]
    assert subset_accuracy(truth, half) == 0.5


def test_matthews_cases():
    truth = np.array([1, 0, 1, 0, 1])
    assert matthews(truth, truth) == pytest.approx(1.0)
    assert matthews(truth, 1 - truth) == pytest.approx(-1.0)
    ten_t = np.array([1, 1, 1, 0, 0, 0, 1, 0, 1, 0])
    ten_p = np.array([1, 0, 1, 0, 1, 0, 1, 0, 0, 0])
    # tp=3 tn=4 fp=1 fn=2 -> (12-2)/sqrt(4*5*5*6)
    assert matthews(ten_t, ten_p) == pytest.approx(10 / math.sqrt(600))
    assert matthews(np.array([1, 1]), np.array([1, 1])) == 0.0  # degenerate factor


def test_binary_f1_cases():
    truth = np.array([1, 0, 1, 1, 0])
    assert binary_f1(truth, truth) == 1.0
    assert binary_f1(truth, np.zeros(5, dtype=int)) == 0.0
    pred = np.array([1, 1, 0, 1, 0])
    # tp=2 fp=1 fn=1
    assert binary_f1(truth, pred) == pytest.approx(4 / 6)


def test_shape_and_type_rejection():
    with pytest.raises(ValueError, match="shape mismatch"):
        micro_f1(np.zeros((2, 3), dtype=int), np.zeros((3, 2), dtype=int))
    with pytest.raises(ValueError):
        matthews(np.array([0, 2]), np.array([0, 1]))
    with pytest.raises(ValueError):
        as_bad = np.array([[0.5, 1.0]])
        hamming_loss(as_bad, as_bad)


# --------------------------------------------------------- frequency groups


def test_groups_by_descending_frequency():
    # 8 labels with frequencies 8,7,...,1 -> four groups of two
    rows = []
    for count, lab in zip(range(8, 0, -1), range(8)):
        for _ in range(count):
            rows.append([1 if j == lab else 0 for j in range(8)])
    groups = label_frequency_groups(np.array(rows), n_groups=4)
    assert groups.tolist() == [0, 0, 1, 1, 2, 2, 3, 3]


def test_single_group_contains_everything():
    labels = np.array([[1, 0, 1], [0, 1, 1]])
    assert label_frequency_groups(labels, n_groups=1).tolist() == [0, 0, 0]
    with pytest.raises(ValueError, match="exceeds"):
        label_frequency_groups(labels, n_groups=4)


def test_groups_match_sort_and_slice_oracle():
    rng = np.random.default_rng(19)
    freqs = rng.integers(0, 40, size=12)
    rows = np.zeros((int(freqs.sum()), 12), dtype=int)
    pos = 0
    for lab, count in enumerate(freqs):
        rows[pos : pos + count, lab] = 1
        pos += count
    got = label_frequency_groups(rows, n_groups=5)
    order = sorted(range(12), key=lambda j: (-freqs[j], j))
    sizes = [3, 3, 2, 2, 2]  # 12 labels over 5 groups, remainder first
    expected = np.zeros(12, dtype=int)
    pos = 0
    for g, size in enumerate(sizes):
        for j in order[pos : pos + size]:
            expected[j] = g
        pos += size
    assert got.tolist() == expected.tolist()


def test_per_group_macro_f1():
    truth = np.array([[1, 0, 1, 0], [0, 1, 0, 1], [1, 1, 0, 0]])
    groups = np.array([0, 0, 1, 1])
    perfect = macro_f1_per_group(truth, truth, groups)
    assert perfect == [1.0, 1.0]
    whole = macro_f1_per_group(truth, truth, np.zeros(4, dtype=int))
    assert whole == [macro_f1(truth, truth)]
    with pytest.raises(ValueError, match="cover"):
        macro_f1_per_group(truth, truth, np.array([0, 0, 2, 2]))


# -------------------------------------------------------- oracle equivalence


def test_all_metrics_match_oracles_exactly():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n = int(rng.integers(1, 30))
        labels = int(rng.integers(1, 8))
        truth, pred = random_pair(rng, n, labels)
        t_list, p_list = truth.tolist(), pred.tolist()
        assert micro_f1(truth, pred) == oracle_micro(t_list, p_list)
        assert macro_f1(truth, pred) == oracle_macro(t_list, p_list)
        assert hamming_loss(truth, pred) == oracle_hamming(t_list, p_list)
        assert subset_accuracy(truth, pred) == oracle_subset(t_list, p_list)
        tv = rng.integers(0, 2, size=n)
        pv = rng.integers(0, 2, size=n)
        assert matthews(tv, pv) == oracle_matthews(tv.tolist(), pv.tolist())
        assert binary_f1(tv, pv) == oracle_f1(
            *oracle_counts([[t] for t in tv.tolist()], [[p] for p in pv.tolist()], 0)
        )


# --------------------------------------------------------------- properties


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 20), st.integers(1, 6))
def test_perfect_prediction_is_perfect(seed, n, labels):
    rng = np.random.default_rng(seed)
    truth = rng.integers(0, 2, size=(n, labels))
    truth[0] = 1  # every label represented at least once
    assert micro_f1(truth, truth) == 1.0
    assert macro_f1(truth, truth) == 1.0
    assert subset_accuracy(truth, truth) == 1.0
    assert hamming_loss(truth, truth) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 20), st.integers(1, 6))
def test_hamming_complement_identity(seed, n, labels):
    rng = np.random.default_rng(seed)
    truth, pred = random_pair(rng, n, labels)
    assert hamming_loss(truth, pred) + hamming_loss(truth, 1 - pred) == pytest.approx(1.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 20), st.integers(2, 6))
def test_label_permutation_invariance(seed, n, labels):
    rng = np.random.default_rng(seed)
    truth, pred = random_pair(rng, n, labels)
    perm = rng.permutation(labels)
    assert micro_f1(truth[:, perm], pred[:, perm]) == micro_f1(truth, pred)
    assert macro_f1(truth[:, perm], pred[:, perm]) == pytest.approx(macro_f1(truth, pred))
    assert hamming_loss(truth[:, perm], pred[:, perm]) == hamming_loss(truth, pred)
    assert subset_accuracy(truth[:, perm], pred[:, perm]) == subset_accuracy(truth, pred)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 25), st.integers(2, 9), st.data())
def test_group_weighted_mean_equals_global_macro(seed, n, labels, data):
    n_groups = data.draw(st.integers(1, labels))
    rng = np.random.default_rng(seed)
    truth, pred = random_pair(rng, n, labels)
    train_labels = rng.integers(0, 2, size=(40, labels))
    groups = label_frequency_groups(train_labels, n_groups=n_groups)
    per_group = macro_f1_per_group(truth, pred, groups)
    sizes = [int((groups == g).sum()) for g in range(n_groups)]
    weighted = sum(f * s for f, s in zip(per_group, sizes)) / labels
    assert abs(weighted - macro_f1(truth, pred)) <= 1e-12


# ------------------------------------------------------------- evaluate()


def test_evaluate_multiclass_binary_extras():
    truth = np.array([0, 1, 1, 0])
    pred = np.array([0, 1, 0, 0])
    report = evaluate(truth, pred, n_labels=2)
    assert report.matthews_corr == matthews(truth, pred)
    assert report.binary_f1 == binary_f1(truth, pred)
    assert report.subset_accuracy == 0.75


def test_evaluate_multilabel_has_no_binary_extras():
    truth = np.array([[1, 0, 1], [0, 1, 0]])
    report = evaluate(truth, truth, groups=np.array([0, 0, 1]))
    assert report.matthews_corr is None
    assert report.per_group_macro_f1 == [1.0, 1.0]
