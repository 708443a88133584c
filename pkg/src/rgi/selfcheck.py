"""Built-in numerical checks run by ``rgi selfcheck``.

Each check returns ``(max_error, tolerance)``; it passes when
``max_error <= tolerance``.
"""

import numpy as np

from . import autodiff as ad
from .data import erdos_renyi
from .encoder import EncoderConfig, gcn_layer, init_params, kipf_shift, predictor_forward
from .gradcheck import check_gradients
from .graph import PropagationConfig, ShiftKind, propagate, shift_operator
from .loss import LossWeights, covariance_loss, reconstruction_loss, variance_loss
from .random import Rng
from .trainer import ScheduleConfig, TrainConfig, lr_at, rgi_objective

CHECKS = {}


def check(name):
    def register(fn):
        CHECKS[name] = fn
        return fn
    return register


def _grad(loss_fn, arrays, tol, n_samples=None):
    res = check_gradients(loss_fn, arrays, n_samples=n_samples)
    if not res.checked or res.zero_failures:
        return np.inf, tol
    return res.max_rel_error, tol


def _randn(shape, seed):
    return Rng(seed).normal(shape)


def dense_shift(adj, kind):
    """Dense reference for the three shift operators (zero rows for isolated nodes)."""
    deg = adj.sum(axis=1)
    inv = np.where(deg > 0, 1.0 / np.where(deg > 0, deg, 1.0), 0.0)
    kind = ShiftKind.parse(kind)
    if kind is ShiftKind.MEAN_ADJACENCY:
        return inv[:, None] * adj
    a_hat = np.sqrt(inv)[:, None] * adj * np.sqrt(inv)[None, :]
    if kind is ShiftKind.SYM_NORM_ADJACENCY:
        return a_hat
    return np.eye(len(adj)) - a_hat


@check("grad.matmul")
def _():
    return _grad(lambda t: (t["a"] @ t["b"]).sum() ** 2,
                 {"a": _randn((4, 3), 1), "b": _randn((3, 5), 2)}, 1e-6)


@check("grad.relu")
def _():
    c = _randn((5, 4), 4)
    return _grad(lambda t: (ad.relu(t["x"]) * c).sum(), {"x": _randn((5, 4), 3)}, 1e-6)


@check("grad.batch_norm")
def _():
    c = _randn((6, 4), 8)
    arrays = {"x": _randn((6, 4), 5), "g": _randn((1, 4), 6), "b": _randn((1, 4), 7)}
    return _grad(lambda t: (ad.batch_norm(t["x"], t["g"], t["b"]) * c).sum() ** 2, arrays, 1e-5)


@check("grad.layer_norm")
def _():
    c = _randn((6, 4), 12)
    arrays = {"x": _randn((6, 4), 9), "g": _randn((1, 4), 10), "b": _randn((1, 4), 11)}
    return _grad(lambda t: (ad.layer_norm(t["x"], t["g"], t["b"]) * c).sum() ** 2, arrays, 1e-5)


@check("grad.dropout")
def _():
    c = _randn((8, 3), 14)

    def f(t):
        return (ad.dropout(t["x"], 0.5, Rng(3), training=True) * c).sum() ** 2

    return _grad(f, {"x": _randn((8, 3), 13)}, 1e-6)


@check("grad.spmm_mean_adj")
def _():
    g = erdos_renyi(9, 0.3, seed=2)
    s = shift_operator(g, ShiftKind.MEAN_ADJACENCY)
    c = _randn((9, 3), 16)
    cfg = PropagationConfig(ShiftKind.MEAN_ADJACENCY, 2)
    return _grad(lambda t: (propagate(t["u"], cfg, s) * c).sum() ** 2, {"u": _randn((9, 3), 15)}, 1e-6)


@check("grad.gcn_layer")
def _():
    g = erdos_renyi(10, 0.3, seed=3)
    s = kipf_shift(g)
    x = _randn((10, 4), 17)
    c = _randn((10, 3), 18)
    arrays = {"w": _randn((4, 3), 19), "b": _randn((1, 3), 20)}
    return _grad(lambda t: (gcn_layer(x, s, t["w"], t["b"]) * c).sum() ** 2, arrays, 1e-6)


@check("grad.covariance_terms")
def _():
    return _grad(lambda t: variance_loss(t["z"]) + covariance_loss(t["z"]),
                 {"z": _randn((7, 4), 21)}, 1e-6)


@check("grad.rgi_loss")
def _():
    cfg, x, kipf, shift = small_problem()
    params = init_params(cfg.encoder, seed=0)

    def f(t):
        return rgi_objective(x, kipf, shift, t, cfg, None, training=False)[0]

    return _grad(f, dict(params), 1e-4, n_samples=200)


@check("shift.operators_dense_oracle")
def _():
    worst = 0.0
    for seed in range(20):
        n = 2 + seed % 9
        g = erdos_renyi(n, 0.35, seed)
        adj = g.to_dense()
        for kind in ShiftKind:
            worst = max(worst, np.abs(shift_operator(g, kind).to_dense() - dense_shift(adj, kind)).max())
    return worst, 1e-12


@check("propagate.matrix_power")
def _():
    worst = 0.0
    for seed in range(20):
        n = 2 + seed % 9
        g = erdos_renyi(n, 0.4, seed + 100)
        u = _randn((n, 3), seed)
        for kind in ShiftKind:
            s = shift_operator(g, kind)
            for k in (1, 2, 5):
                ref = np.linalg.matrix_power(dense_shift(g.to_dense(), kind), k) @ u
                worst = max(worst, np.abs(propagate(u, PropagationConfig(kind, k), s) - ref).max())
    return worst, 1e-12


@check("loss.analytic_cases")
def _():
    errs = [
        abs(variance_loss(np.array([[1.0, 0.0], [-1.0, 0.0]])).item() - 1.0),
        abs(covariance_loss(np.array([[1.0, 1.0], [-1.0, -1.0]])).item() - 4.0),
        abs(variance_loss(np.ones((5, 3))).item() - 1.0),
        abs(reconstruction_loss(np.zeros((3, 2)), np.ones((3, 2)), np.ones((3, 2)), np.ones((3, 2))).item() - 1.0),
    ]
    w = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]) * np.sqrt(3.0) / 2.0
    errs += [abs(variance_loss(w).item()), abs(covariance_loss(w).item())]
    return max(errs), 1e-12


@check("schedule.endpoints")
def _():
    s = ScheduleConfig(1e-3, 10, 110)
    errs = [abs(lr_at(9, s) - 1e-3), abs(lr_at(60, s) - 5e-4), abs(lr_at(0, s) - 1e-4)]
    return max(errs), 1e-15


def small_problem(n=20, d=8, dim=16, seed=0):
    """Random 20-node problem used by the full-loss gradient check."""
    g = erdos_renyi(n, 0.25, seed)
    x = Rng(seed + 1).normal((n, d))
    enc = EncoderConfig(d, dim, dim, 2, p_input=0.0)
    cfg = TrainConfig(enc, PropagationConfig(ShiftKind.SYM_NORM_ADJACENCY, 1), LossWeights(10, 5, 1))
    return cfg, x, kipf_shift(g), shift_operator(g, cfg.propagation.kind)


def run_checks(write=print, names=None):
    """Run registered checks; returns True when all pass."""
    ok = True
    for name, fn in CHECKS.items():
        if names and name not in names:
            continue
        try:
            err, tol = fn()
            passed = bool(err <= tol)
            write(f"{'PASS' if passed else 'FAIL'} {name} max_error={err:.3e} tol={tol:.0e}")
        except Exception as exc:  # a broken rule should fail the check, not crash the run
            passed = False
            write(f"FAIL {name} error={type(exc).__name__}: {exc}")
        ok &= passed
    return ok
