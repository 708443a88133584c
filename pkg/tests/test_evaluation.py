import numpy as np
import pytest
from scipy.optimize import linprog

from rgi.errors import DegenerateLabels, EmptyEvaluation, ShapeError, SplitError
from rgi.evaluation import (LinearProbe, Split, evaluate, fit_linear_probe, l2_normalize_rows,
                            linear_evaluation, random_split, score)
from rgi.random import Rng


def test_l2_normalize_cases():
    np.testing.assert_allclose(l2_normalize_rows([[3.0, 4.0]]), [[0.6, 0.8]])
    np.testing.assert_array_equal(l2_normalize_rows([[0.0, 0.0]]), [[0.0, 0.0]])
    z = l2_normalize_rows(Rng(0).normal((50, 7)))
    assert np.abs(np.sqrt((z ** 2).sum(axis=1)) - 1).max() <= 1e-12


@pytest.mark.parametrize("n,sizes", [(100, (10, 10, 80)), (37, (3, 3, 31))])
def test_split_sizes(n, sizes):
    s = random_split(n, (0.1, 0.1, 0.8), seed=0)
    assert (len(s.train_idx), len(s.val_idx), len(s.test_idx)) == sizes
    assert sorted(np.concatenate([s.train_idx, s.val_idx, s.test_idx]).tolist()) == list(range(n))


def test_split_seeded():
    a, b = random_split(100, seed=3), random_split(100, seed=3)
    assert np.array_equal(a.train_idx, b.train_idx) and np.array_equal(a.test_idx, b.test_idx)
    assert not np.array_equal(a.train_idx, random_split(100, seed=4).train_idx)


def test_split_degenerate():
    with pytest.raises(SplitError):
        random_split(5)
    with pytest.raises(SplitError):
        random_split(100, (0.5, 0.5, 0.5))
    with pytest.raises(SplitError):
        Split(np.array([0, 1]), np.array([1]), np.array([2]))


def blobs(seed=0, n=40):
    rng = Rng(seed)
    y = np.repeat([0, 1], n // 2)
    x = rng.normal((n, 2)) * 0.15 + np.where(y[:, None] == 0, -1.0, 1.0) * np.array([[1.0, 0.5]])
    return x, y


def linearly_separable(x, y):
    """Feasibility LP: exists (w, b) with (2y-1)(w.x + b) >= 1."""
    s = 2 * y - 1
    a_ub = -s[:, None] * np.hstack([x, np.ones((len(x), 1))])
    res = linprog(np.zeros(3), A_ub=a_ub, b_ub=-np.ones(len(x)), bounds=[(None, None)] * 3)
    return res.status == 0


def test_probe_separable_blobs():
    x, y = blobs()
    assert linearly_separable(x, y)
    # validation rows duplicate the training rows, so the kept step is the best train fit
    emb, labels = np.vstack([x, x]), np.concatenate([y, y])
    split = Split(np.arange(38), np.arange(40, 78), np.array([78, 79]))
    probe = fit_linear_probe(emb, labels, split, seed=0, weight_decay=0.0, steps=2000)
    assert evaluate(probe, x, y, np.arange(38)) == 1.0


def test_probe_identical_embeddings_learns_prior():
    n = 100
    y = (Rng(2).uniform(n) < 0.7).astype(int)
    emb = np.ones((n, 4)) / 2.0
    split = random_split(n, seed=1)
    probe = fit_linear_probe(emb, y, split, seed=0)
    majority = max(np.mean(y[split.val_idx]), 1 - np.mean(y[split.val_idx]))
    assert evaluate(probe, emb, y, split.val_idx) == pytest.approx(majority, abs=0.05)


def test_probe_deterministic():
    x, y = blobs(3)
    split = random_split(40, (0.5, 0.25, 0.25), seed=0)
    a = fit_linear_probe(x, y, split, seed=5)
    b = fit_linear_probe(x, y, split, seed=5)
    assert a.weight.tobytes() == b.weight.tobytes() and a.bias.tobytes() == b.bias.tobytes()


def test_probe_never_reads_test_labels():
    x, y = blobs(4)
    split = random_split(40, (0.5, 0.25, 0.25), seed=0)
    poisoned = y.copy()
    poisoned[split.test_idx] = 1 - poisoned[split.test_idx]
    a = fit_linear_probe(x, y, split, seed=0)
    b = fit_linear_probe(x, poisoned, split, seed=0)
    assert a.weight.tobytes() == b.weight.tobytes()


def test_probe_degenerate_labels():
    split = random_split(40, (0.5, 0.25, 0.25), seed=0)
    with pytest.raises(DegenerateLabels):
        fit_linear_probe(np.ones((40, 2)), np.zeros(40, dtype=int), split)


def test_multilabel_probe_runs():
    rng = Rng(6)
    x = rng.normal((300, 5))
    y = (x[:, :3] > 0).astype(int)
    split = random_split(300, (0.5, 0.2, 0.3), seed=0)
    probe = fit_linear_probe(x, y, split, task="multilabel", seed=0)
    assert probe.weight.shape == (5, 3)
    assert evaluate(probe, x, y, split.test_idx) > 0.9


def test_accuracy_perfect_and_ties():
    probe = LinearProbe(np.eye(3), np.zeros((1, 3)))
    labels = np.array([0, 1, 2])
    assert evaluate(probe, np.eye(3), labels, [0, 1, 2]) == 1.0
    assert probe.predict(np.ones((1, 3)))[0] == 0


def brute_micro_f1(pred, truth):
    tp = fp = fn = 0
    for p_row, t_row in zip(pred, truth):
        for p, t in zip(p_row, t_row):
            tp += p and t
            fp += p and not t
            fn += (not p) and t
    return 0.0 if tp == 0 else 2 * tp / (2 * tp + fp + fn)


def test_micro_f1_cases():
    truth = np.array([[1, 0], [0, 1], [1, 0]])
    pred = np.array([[1, 1], [0, 1], [0, 0]])  # TP=2, FP=1, FN=1
    assert brute_micro_f1(pred, truth) == pytest.approx(2 / 3)
    assert score(pred, truth, "multilabel") == pytest.approx(2 / 3)
    assert score(np.zeros_like(truth), truth, "multilabel") == 0.0
    assert score(truth, truth, "multilabel") == 1.0


def test_micro_f1_random_matches_brute_force():
    rng = Rng(7)
    for _ in range(20):
        p = (rng.uniform((6, 4)) < 0.5).astype(int)
        t = (rng.uniform((6, 4)) < 0.5).astype(int)
        assert score(p, t, "multilabel") == pytest.approx(brute_micro_f1(p, t), abs=1e-15)


def test_evaluate_errors():
    probe = LinearProbe(np.eye(2), np.zeros((1, 2)))
    with pytest.raises(EmptyEvaluation):
        evaluate(probe, np.eye(2), [0, 1], [])
    with pytest.raises(ShapeError):
        evaluate(probe, np.ones((2, 3)), [0, 1], [0])


def test_evaluate_permutation_invariant():
    x, y = blobs(8)
    split = random_split(40, (0.5, 0.25, 0.25), seed=0)
    probe = fit_linear_probe(x, y, split, seed=0)
    perm = Rng(9).permutation(40)
    inv = np.argsort(perm)
    assert evaluate(probe, x[perm], y[perm], inv[split.test_idx]) == evaluate(probe, x, y, split.test_idx)


def test_linear_evaluation_one_hot_is_perfect():
    y = np.repeat(np.arange(4), 25)
    scores = linear_evaluation(np.eye(4)[y], y, seeds=range(3))
    assert scores == [1.0, 1.0, 1.0]
