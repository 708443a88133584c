"""scikit-learn compatible wrappers.

``RGI`` is a transformer: ``fit`` trains the encoder without labels and
``transform`` returns frozen embeddings.  Because the model needs the
graph, both methods take it as a keyword (or accept a
:class:`~rgi.data.GraphDataset` as ``X``).
"""

from types import SimpleNamespace

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .data import GraphDataset, l1_normalize_rows
from .encoder import EncoderConfig, ModelParams, embed
from .errors import ShapeError
from .evaluation import fit_linear_probe, l2_normalize_rows
from .graph import PropagationConfig, SparseGraph, build_csr
from .loss import LossWeights
from .random import Rng
from .trainer import ScheduleConfig, TrainConfig, train


def check_graph(graph, num_nodes):
    """Coerce ``graph`` to a :class:`SparseGraph` with ``num_nodes`` nodes.

    Accepts a SparseGraph, a scipy sparse / dense adjacency matrix or an
    (E, 2) edge array.
    """
    if graph is None:
        raise ValueError("a graph is required (pass graph=...)")
    if isinstance(graph, SparseGraph):
        g = graph
    elif sp.issparse(graph) or (isinstance(graph, np.ndarray) and graph.ndim == 2
                                and graph.shape[0] == graph.shape[1] and graph.shape[1] != 2):
        coo = sp.coo_matrix(graph)
        if coo.shape != (num_nodes, num_nodes):
            raise ShapeError(f"adjacency is {coo.shape}, expected {num_nodes} nodes")
        g = build_csr(np.stack([coo.row, coo.col], axis=1)[coo.data != 0], num_nodes)
    else:
        g = build_csr(np.asarray(graph, dtype=np.int64).reshape(-1, 2), num_nodes)
    if g.num_nodes != num_nodes:
        raise ShapeError(f"graph has {g.num_nodes} nodes but X has {num_nodes} rows")
    return g


def _unpack(X, graph):
    if isinstance(X, GraphDataset):
        return X.features, X.graph
    X = check_array(X, dtype=np.float64)
    return X, check_graph(graph, X.shape[0])


class RGI(TransformerMixin, BaseEstimator):
    """Self-supervised GCN encoder trained by predicting propagated embeddings.

    Defaults follow the Amazon Photos column of the reference
    hyperparameters (D=512, hidden 1024, lr 1e-4, 1000 epochs).
    """

    def __init__(self, hidden_dim=1024, output_dim=512, num_layers=2, norm="batch",
                 pred_hidden=None, shift="sym_norm_adj", steps=1,
                 lambda1=10.0, lambda2=5.0, lambda3=1.0,
                 lr=1e-4, n_epochs=1000, n_warmup=None, weight_decay=1e-5,
                 p_input=0.5, p_local=0.0, l1_normalize=False, precision="double",
                 random_state=0):
        self.hidden_dim = hidden_dim
        self.output_dim = output_dim
        self.num_layers = num_layers
        self.norm = norm
        self.pred_hidden = pred_hidden
        self.shift = shift
        self.steps = steps
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.lambda3 = lambda3
        self.lr = lr
        self.n_epochs = n_epochs
        self.n_warmup = n_warmup
        self.weight_decay = weight_decay
        self.p_input = p_input
        self.p_local = p_local
        self.l1_normalize = l1_normalize
        self.precision = precision
        self.random_state = random_state

    def _train_config(self, n_features):
        enc = EncoderConfig(n_features, self.hidden_dim, self.output_dim, self.num_layers,
                            self.p_input, self.norm)
        n_warmup = self.n_warmup if self.n_warmup is not None else max(1, self.n_epochs // 10)
        return TrainConfig(
            encoder=enc,
            propagation=PropagationConfig(self.shift, self.steps),
            weights=LossWeights(self.lambda1, self.lambda2, self.lambda3),
            schedule=ScheduleConfig(self.lr, n_warmup, self.n_epochs),
            p_local=self.p_local,
            weight_decay=self.weight_decay,
            pred_hidden=self.pred_hidden,
            seed=self.random_state if self.random_state is not None else 0,
            precision=self.precision,
        )

    def fit(self, X, y=None, *, graph=None):
        X, g = _unpack(X, graph)
        if self.l1_normalize:
            X = l1_normalize_rows(X)
        cfg = self._train_config(X.shape[1])
        ds = GraphDataset(g, X, np.zeros(len(X), dtype=np.int64))
        self.params_, self.history_ = train(ds, cfg)
        self.config_ = cfg
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X, *, graph=None):
        check_is_fitted(self, "params_")
        X, g = _unpack(X, graph)
        if X.shape[1] != self.n_features_in_:
            raise ShapeError(f"X has {X.shape[1]} features, model was fit on {self.n_features_in_}")
        if self.l1_normalize:
            X = l1_normalize_rows(X)
        return embed(X, g, self.params_, self.config_.encoder)

    def fit_transform(self, X, y=None, *, graph=None):
        return self.fit(X, y, graph=graph).transform(X, graph=graph)

    def save(self, path):
        check_is_fitted(self, "params_")
        self.params_.save(path)

    def load_params(self, path, n_features):
        params = ModelParams.load(path)
        cfg = self._train_config(n_features)
        params.check_matches(cfg.encoder, self.pred_hidden)
        self.params_, self.config_, self.n_features_in_ = params, cfg, n_features
        self.history_ = []
        return self


class LinearProbeClassifier(ClassifierMixin, BaseEstimator):
    """Logistic-regression probe on row-L2-normalized embeddings.

    ``fit`` holds out ``val_fraction`` of the given rows to select the best
    Adam step unless explicit ``X_val``/``y_val`` are passed.
    """

    def __init__(self, task="multiclass", val_fraction=0.5, normalize=True, random_state=0):
        self.task = task
        self.val_fraction = val_fraction
        self.normalize = normalize
        self.random_state = random_state

    def _prep(self, X):
        X = check_array(X, dtype=np.float64)
        return l2_normalize_rows(X) if self.normalize else X

    def fit(self, X, y, X_val=None, y_val=None):
        X = self._prep(X)
        y = np.asarray(y)
        if self.task == "multiclass":
            self.classes_, y = np.unique(y, return_inverse=True)
        seed = self.random_state or 0
        if X_val is None:
            n = len(X)
            n_val = min(n - 1, max(1, int(round(n * self.val_fraction))))
            perm = Rng(seed).permutation(n)
            tr, va = perm[n_val:], perm[:n_val]
            X_all, y_all = X, y
        else:
            Xv = self._prep(X_val)
            yv = np.asarray(y_val)
            if self.task == "multiclass":
                yv = np.searchsorted(self.classes_, yv)
            X_all = np.vstack([X, Xv])
            y_all = np.concatenate([y, yv]) if y.ndim == 1 else np.vstack([y, yv])
            tr, va = np.arange(len(X)), np.arange(len(X), len(X_all))
        split = SimpleNamespace(train_idx=tr, val_idx=va)
        num_classes = len(self.classes_) if self.task == "multiclass" else None
        self.probe_ = fit_linear_probe(X_all, y_all, split, self.task, seed, num_classes)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "probe_")
        return self.probe_.logits(self._prep(X))

    def predict(self, X):
        check_is_fitted(self, "probe_")
        pred = self.probe_.predict(self._prep(X))
        return self.classes_[pred] if self.task == "multiclass" else pred
