"""GCN encoder and the two MLP prediction heads."""

from dataclasses import dataclass

import numpy as np

from . import checkpoint
from .autodiff import Tensor, as_tensor, batch_norm, dropout, layer_norm, relu, sparse_matmul
from .errors import ShapeError
from .graph import SparseOperator, gcn_normalized
from .random import Rng

NORMS = ("batch", "layer", "none")
HEADS = ("phi", "psi")


@dataclass(frozen=True)
class EncoderConfig:
    input_dim: int
    hidden_dim: int = 1024
    output_dim: int = 512
    num_layers: int = 2
    p_input: float = 0.5
    norm: str = "batch"

    def __post_init__(self):
        if self.num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        if min(self.input_dim, self.hidden_dim, self.output_dim) < 1:
            raise ValueError("dimensions must be >= 1")
        if not 0.0 <= self.p_input < 1.0:
            raise ValueError(f"p_input must be in [0, 1), got {self.p_input}")
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}, got {self.norm!r}")

    @property
    def use_batch_norm(self):
        return self.norm == "batch"

    def layer_dims(self):
        dims = [self.input_dim] + [self.hidden_dim] * (self.num_layers - 1) + [self.output_dim]
        return list(zip(dims[:-1], dims[1:]))


class ModelParams(dict):
    """Ordered mapping of parameter name to 2-D float64 array.

    Names: ``gcn.{i}.w``, ``gcn.{i}.b``, ``bn.{i}.gamma``/``bn.{i}.beta``
    (``ln.`` for layer norm) and ``{phi,psi}.{0,1}.{w,b}``.
    """

    def copy(self):
        return ModelParams((k, v.copy()) for k, v in self.items())

    def as_tensors(self, dtype=np.float64):
        return {k: Tensor(v, requires_grad=True, dtype=dtype) for k, v in self.items()}

    def save(self, path):
        checkpoint.save(path, self)

    @classmethod
    def load(cls, path):
        return cls(checkpoint.load(path))

    def check_matches(self, cfg, pred_hidden=None):
        """Raise ShapeError unless the arrays fit ``cfg``."""
        if pred_hidden is None:
            pred_hidden = self["phi.0.w"].shape[1] if "phi.0.w" in self else cfg.output_dim
        expected = _shapes(cfg, pred_hidden)
        got = {k: v.shape for k, v in self.items()}
        if got != expected:
            diff = sorted(set(expected.items()) ^ set(got.items()))
            raise ShapeError(f"parameters do not match encoder config: {diff[:4]}")


def _norm_prefix(cfg):
    return {"batch": "bn", "layer": "ln"}.get(cfg.norm)


def _shapes(cfg, pred_hidden):
    shapes = {}
    prefix = _norm_prefix(cfg)
    for i, (fan_in, fan_out) in enumerate(cfg.layer_dims()):
        shapes[f"gcn.{i}.w"] = (fan_in, fan_out)
        shapes[f"gcn.{i}.b"] = (1, fan_out)
        if prefix and i < cfg.num_layers - 1:
            shapes[f"{prefix}.{i}.gamma"] = (1, fan_out)
            shapes[f"{prefix}.{i}.beta"] = (1, fan_out)
    d = cfg.output_dim
    for head in HEADS:
        shapes[f"{head}.0.w"] = (d, pred_hidden)
        shapes[f"{head}.0.b"] = (1, pred_hidden)
        shapes[f"{head}.1.w"] = (pred_hidden, d)
        shapes[f"{head}.1.b"] = (1, d)
    return shapes


def glorot_uniform(rng, fan_in, fan_out):
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return (2.0 * rng.uniform((fan_in, fan_out)) - 1.0) * bound


def init_params(cfg, pred_hidden=None, seed=0):
    """Glorot-uniform weights, zero biases, unit gamma, zero beta."""
    rng = Rng(seed)
    params = ModelParams()
    for name, shape in _shapes(cfg, pred_hidden or cfg.output_dim).items():
        kind = name.rsplit(".", 1)[1]
        if kind == "w":
            params[name] = glorot_uniform(rng, *shape)
        elif kind == "gamma":
            params[name] = np.ones(shape)
        else:
            params[name] = np.zeros(shape)
    return params


def kipf_shift(g):
    """Self-looped, symmetrically normalized adjacency used by the GCN layers."""
    return gcn_normalized(g)


def gcn_layer(x, s, w, b):
    x, w, b = as_tensor(x), as_tensor(w, x.dtype), as_tensor(b, x.dtype)
    if x.shape[1] != w.shape[0]:
        raise ShapeError(f"layer input has {x.shape[1]} features, weight expects {w.shape[0]}")
    if x.shape[0] != s.num_nodes:
        raise ShapeError(f"{x.shape[0]} feature rows for a {s.num_nodes}-node graph")
    return sparse_matmul(s, x @ w) + b


def _lookup(params, dtype):
    return {k: as_tensor(v, dtype) for k, v in params.items()}


def encoder_forward(x, shift, params, cfg, rng=None, training=False):
    """Local embeddings ``U`` (N x output_dim).

    ``shift`` is the self-looped GCN operator (see :func:`kipf_shift`).
    ``params`` may hold tensors (training) or arrays (inference).
    """
    x = as_tensor(x)
    if x.shape[1] != cfg.input_dim:
        raise ShapeError(f"features have {x.shape[1]} columns, encoder expects {cfg.input_dim}")
    p = _lookup(params, x.dtype)
    h = dropout(x, cfg.p_input, rng, training) if training else x
    prefix = _norm_prefix(cfg)
    for i in range(cfg.num_layers):
        h = gcn_layer(h, shift, p[f"gcn.{i}.w"], p[f"gcn.{i}.b"])
        if i == cfg.num_layers - 1:
            break
        if prefix == "bn":
            h = batch_norm(h, p[f"bn.{i}.gamma"], p[f"bn.{i}.beta"])
        elif prefix == "ln":
            h = layer_norm(h, p[f"ln.{i}.gamma"], p[f"ln.{i}.beta"])
        h = relu(h)
    return h


def predictor_forward(z, which, params):
    """Two-layer MLP head ``which`` in {"phi", "psi"}; no normalization."""
    if which not in HEADS:
        raise ValueError(f"unknown head {which!r}")
    z = as_tensor(z)
    p = _lookup({k: v for k, v in params.items() if k.startswith(which + ".")}, z.dtype)
    w0 = p[f"{which}.0.w"]
    if z.shape[1] != w0.shape[0]:
        raise ShapeError(f"head {which} expects {w0.shape[0]} inputs, got {z.shape[1]}")
    h = relu(z @ w0 + p[f"{which}.0.b"])
    return h @ p[f"{which}.1.w"] + p[f"{which}.1.b"]


def embed(x, shift, params, cfg):
    """Inference-mode embeddings as a plain array."""
    if not isinstance(shift, SparseOperator):
        shift = kipf_shift(shift)
    return encoder_forward(x, shift, params, cfg, training=False).values
