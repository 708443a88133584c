"""Adam, the warmup/cosine schedule and the self-supervised training loop."""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .autodiff import Tape, backward, dropout
from .encoder import EncoderConfig, encoder_forward, init_params, kipf_shift, predictor_forward
from .errors import DivergenceError, InvalidEpoch, ShapeError
from .graph import PropagationConfig, propagate, shift_operator
from .loss import LossWeights, total_loss
from .random import Rng

logger = logging.getLogger(__name__)

PRECISIONS = {"double": np.float64, "single": np.float32}


@dataclass(frozen=True)
class ScheduleConfig:
    base_lr: float = 1e-4
    n_warmup: int = 100
    n_epochs: int = 1000

    def __post_init__(self):
        if not 0 < self.n_warmup <= self.n_epochs:
            raise ValueError(f"need 0 < n_warmup <= n_epochs, got {self.n_warmup}, {self.n_epochs}")


def lr_at(epoch, s):
    """Linear warmup to ``base_lr`` over ``n_warmup`` epochs, then cosine decay to 0."""
    if not 0 <= epoch < s.n_epochs:
        raise InvalidEpoch(f"epoch {epoch} outside [0, {s.n_epochs})")
    if epoch < s.n_warmup:
        return s.base_lr * (epoch + 1) / s.n_warmup
    progress = (epoch - s.n_warmup) / (s.n_epochs - s.n_warmup)
    return s.base_lr * 0.5 * (1.0 + math.cos(math.pi * progress))


@dataclass(frozen=True)
class OptimizerState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0


def adam_step(params, grads, state, lr):
    """One bias-corrected Adam update with coupled L2 weight decay.

    Pure: returns ``(new_params, new_state)`` and leaves the inputs intact.
    """
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    new_params = type(params)() if isinstance(params, dict) else {}
    m_out, v_out = {}, {}
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeError(f"{name}: gradient {g.shape} vs parameter {p.shape}")
        if state.weight_decay:
            g = g + state.weight_decay * p
        m = b1 * state.m.get(name, 0.0) + (1 - b1) * g
        v = b2 * state.v.get(name, 0.0) + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        new_params[name] = p - lr * m_hat / (np.sqrt(v_hat) + state.eps)
        m_out[name], v_out[name] = m, v
    return new_params, replace(state, m=m_out, v=v_out, t=t)


@dataclass(frozen=True)
class TrainConfig:
    encoder: EncoderConfig
    propagation: PropagationConfig = PropagationConfig()
    weights: LossWeights = LossWeights()
    schedule: ScheduleConfig = ScheduleConfig()
    p_local: float = 0.0
    weight_decay: float = 1e-5
    pred_hidden: int = None
    seed: int = 0
    precision: str = "double"

    def __post_init__(self):
        if not 0.0 <= self.p_local < 1.0:
            raise ValueError(f"p_local must be in [0, 1), got {self.p_local}")
        if self.precision not in PRECISIONS:
            raise ValueError(f"precision must be one of {sorted(PRECISIONS)}")


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    lr: float
    rec: float
    var: float
    cov: float
    total: float


def rgi_objective(x, kipf, shift, tensors, cfg, rng, training=True):
    """Forward pass of one training step; returns ``(loss tensor, breakdown)``.

    Dropout on the local embeddings only affects the copy that is propagated.
    """
    u = encoder_forward(x, kipf, tensors, cfg.encoder, rng, training)
    u_prop = dropout(u, cfg.p_local, rng, training) if training else u
    v = propagate(u_prop, cfg.propagation, shift)
    v_hat = predictor_forward(u, "phi", tensors)
    u_hat = predictor_forward(v, "psi", tensors)
    return total_loss(u, v, u_hat, v_hat, cfg.weights)


def train(ds, cfg, params=None, callback=None):
    """Run the full-graph training loop for ``cfg.schedule.n_epochs`` steps.

    Returns ``(params, history)``.  ``callback(epoch, params, metrics)`` is
    invoked after every update.
    """
    dtype = PRECISIONS[cfg.precision]
    if params is None:
        params = init_params(cfg.encoder, cfg.pred_hidden, cfg.seed)
    else:
        params.check_matches(cfg.encoder, cfg.pred_hidden)
        params = params.copy()
    kipf = kipf_shift(ds.graph)
    shift = shift_operator(ds.graph, cfg.propagation.kind)
    x = ds.features.astype(dtype)
    rng = Rng(cfg.seed).spawn(1)
    state = OptimizerState(weight_decay=cfg.weight_decay)
    history = []
    for epoch in range(cfg.schedule.n_epochs):
        lr = lr_at(epoch, cfg.schedule)
        with Tape() as tape:
            tensors = params.as_tensors(dtype)
            loss, parts = rgi_objective(x, kipf, shift, tensors, cfg, rng, training=True)
        if not np.isfinite(parts.total):
            raise DivergenceError(epoch, parts.total)
        by_node = backward(tape, loss)
        grads = {k: by_node[t.node_id].astype(np.float64) for k, t in tensors.items()}
        params, state = adam_step(params, grads, state, lr)
        metrics = EpochMetrics(epoch, lr, parts.rec, parts.var, parts.cov, parts.total)
        history.append(metrics)
        if epoch % 100 == 0:
            logger.debug("epoch %d lr %.3g loss %.6g", epoch, lr, parts.total)
        if callback is not None:
            callback(epoch, params, metrics)
    return params, history


def write_metrics_csv(path, history):
    with open(path, "w") as fh:
        fh.write("epoch,lr,rec,var,cov,total\n")
        for m in history:
            fh.write(f"{m.epoch},{m.lr:.9g},{m.rec:.9g},{m.var:.9g},{m.cov:.9g},{m.total:.9g}\n")
