"""Linear evaluation of frozen embeddings."""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLabels, EmptyEvaluation, ShapeError, SplitError
from .random import Rng
from .trainer import OptimizerState, adam_step

PROBE_LR = 1e-2
PROBE_STEPS = 1000
PROBE_WEIGHT_DECAY = 1e-4


def l2_normalize_rows(z):
    z = np.asarray(z, dtype=np.float64)
    norms = np.sqrt((z * z).sum(axis=1, keepdims=True))
    return np.divide(z, norms, out=np.zeros_like(z), where=norms > 0)


@dataclass(frozen=True, eq=False)
class Split:
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray

    def __post_init__(self):
        parts = (self.train_idx, self.val_idx, self.test_idx)
        if any(len(p) == 0 for p in parts):
            raise SplitError("every split part must be non-empty")
        joined = np.concatenate(parts)
        if len(np.unique(joined)) != len(joined):
            raise SplitError("split parts overlap")


def random_split(n, fractions=(0.1, 0.1, 0.8), seed=0):
    """Seeded shuffle cut into train/val/test.

    Train and val sizes are floored; test takes the remainder when the
    fractions sum to one, otherwise its own floored share.
    """
    f_train, f_val, f_test = fractions
    total = f_train + f_val + f_test
    if min(fractions) < 0 or total > 1 + 1e-9:
        raise SplitError(f"invalid split fractions {fractions}")
    n_train = int(np.floor(n * f_train + 1e-9))
    n_val = int(np.floor(n * f_val + 1e-9))
    n_test = n - n_train - n_val if abs(total - 1) < 1e-9 else int(np.floor(n * f_test + 1e-9))
    if min(n_train, n_val, n_test) < 1:
        raise SplitError(f"{n} nodes are too few for fractions {fractions}")
    perm = Rng(seed).permutation(n)
    return Split(perm[:n_train], perm[n_train:n_train + n_val],
                 perm[n_train + n_val:n_train + n_val + n_test])


@dataclass(frozen=True, eq=False)
class LinearProbe:
    weight: np.ndarray
    bias: np.ndarray
    task: str = "multiclass"

    def logits(self, emb):
        emb = np.asarray(emb, dtype=np.float64)
        if emb.shape[1] != self.weight.shape[0]:
            raise ShapeError(f"probe expects {self.weight.shape[0]} features, got {emb.shape[1]}")
        return emb @ self.weight + self.bias

    def predict(self, emb):
        z = self.logits(emb)
        if self.task == "multilabel":
            return (z > 0).astype(np.int64)
        return np.argmax(z, axis=1)


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _probe_grads(x, y, w, b, task):
    """Gradient of mean cross-entropy wrt (w, b)."""
    z = x @ w + b
    if task == "multilabel":
        err = (_sigmoid(z) - y) / y.size
    else:
        p = _softmax(z)
        p[np.arange(len(y)), y] -= 1.0
        err = p / len(y)
    return x.T @ err, err.sum(axis=0, keepdims=True)


def score(pred, truth, task):
    """Accuracy (multiclass) or micro-averaged F1 (multilabel)."""
    if task == "multilabel":
        tp = int(np.sum((pred == 1) & (truth == 1)))
        fp = int(np.sum((pred == 1) & (truth == 0)))
        fn = int(np.sum((pred == 0) & (truth == 1)))
        denom = 2 * tp + fp + fn
        return 2 * tp / denom if denom and tp else 0.0
    return float(np.mean(pred == truth))


def fit_linear_probe(emb, labels, split, task="multiclass", seed=0, num_classes=None,
                     lr=PROBE_LR, steps=PROBE_STEPS, weight_decay=PROBE_WEIGHT_DECAY):
    """Full-batch logistic regression with Adam; keeps the best-validation step.

    Only ``labels[split.train_idx]`` and ``labels[split.val_idx]`` are read.
    """
    emb = np.asarray(emb, dtype=np.float64)
    labels = np.asarray(labels)
    y_train = labels[split.train_idx]
    y_val = labels[split.val_idx]
    x_train, x_val = emb[split.train_idx], emb[split.val_idx]
    if task == "multilabel":
        c = labels.shape[1]
        if len(np.unique(y_train)) < 2:
            raise DegenerateLabels("training labels are all identical")
    else:
        y_train = y_train.astype(np.int64)
        if len(np.unique(y_train)) < 2:
            raise DegenerateLabels("training split contains a single class")
        c = num_classes or int(max(y_train.max(), y_val.max())) + 1
    d = emb.shape[1]
    rng = Rng(seed)
    bound = np.sqrt(6.0 / (d + c))
    params = {"w": (2.0 * rng.uniform((d, c)) - 1.0) * bound, "b": np.zeros((1, c))}
    state = OptimizerState(weight_decay=weight_decay)
    best, best_score = params, -1.0
    for _ in range(steps):
        gw, gb = _probe_grads(x_train, y_train, params["w"], params["b"], task)
        params, state = adam_step(params, {"w": gw, "b": gb}, state, lr)
        probe = LinearProbe(params["w"], params["b"], task)
        s = score(probe.predict(x_val), y_val, task)
        if s > best_score:
            best, best_score = params, s
    return LinearProbe(best["w"], best["b"], task)


def evaluate(probe, emb, labels, idx):
    idx = np.asarray(idx, dtype=np.int64)
    if len(idx) == 0:
        raise EmptyEvaluation("no nodes to evaluate")
    emb = np.asarray(emb)
    return score(probe.predict(emb[idx]), np.asarray(labels)[idx], probe.task)


def linear_evaluation(emb, labels, task="multiclass", seeds=range(5), fractions=(0.1, 0.1, 0.8),
                      num_classes=None):
    """L2-normalize, then split/fit/score once per seed.  Returns per-seed test scores."""
    z = l2_normalize_rows(emb)
    scores = []
    for seed in seeds:
        split = random_split(len(z), fractions, seed)
        probe = fit_linear_probe(z, labels, split, task, seed, num_classes)
        scores.append(evaluate(probe, z, labels, split.test_idx))
    return scores
