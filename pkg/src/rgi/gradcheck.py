"""Central finite-difference gradient checking.

The numerical side evaluates the loss on plain arrays with no tape, so it
is independent of every backward rule.  Coordinates whose +-h perturbation
flips any relu's activation pattern are reported as skipped.

Relative error is meaningless for a gradient that is exactly zero (for
example a bias feeding straight into batch norm).  When both the analytic
and numeric values sit below the finite-difference roundoff level
``NOISE_FACTOR * eps * |f| / h``, the coordinate is instead required to
agree to within that level in absolute terms and is counted in ``zero``.
"""

from dataclasses import dataclass

import numpy as np

from .autodiff import Tape, Tensor, backward, relu_masks
from .random import Rng

EPS_REL = 1e-5
DENOM_FLOOR = 1e-6
NOISE_FACTOR = 64.0


@dataclass
class GradCheckResult:
    max_rel_error: float
    checked: int
    skipped: int
    worst: tuple = None
    zero: int = 0
    zero_failures: int = 0

    def ok(self, tol):
        return self.checked > 0 and self.max_rel_error <= tol and self.zero_failures == 0


def analytic_gradients(loss_fn, arrays):
    with Tape() as tape:
        tensors = {k: Tensor(v, requires_grad=True) for k, v in arrays.items()}
        loss = loss_fn(tensors)
    grads = backward(tape, loss)
    return {k: grads[t.node_id] for k, t in tensors.items()}


def _evaluate(loss_fn, arrays):
    with relu_masks() as masks:
        value = loss_fn({k: Tensor(v) for k, v in arrays.items()}).item()
    return value, masks


def _same_pattern(a, b):
    return len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b))


def relative_error(analytic, numeric, floor=DENOM_FLOOR):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def check_gradients(loss_fn, arrays, n_samples=None, seed=0, eps_rel=EPS_REL):
    """Compare analytic and central-difference gradients.

    ``loss_fn`` maps ``{name: Tensor}`` to a 1x1 tensor.  With ``n_samples``
    set, that many coordinates are drawn uniformly over all parameters;
    otherwise every coordinate is checked.
    """
    arrays = {k: np.array(v, dtype=np.float64) for k, v in arrays.items()}
    grads = analytic_gradients(loss_fn, arrays)
    coords = [(k, i) for k, v in arrays.items() for i in range(v.size)]
    if n_samples is not None and n_samples < len(coords):
        pick = Rng(seed).permutation(len(coords))[:n_samples]
        coords = [coords[i] for i in sorted(pick)]
    worst, worst_at, checked, skipped, zero, zero_failures = 0.0, None, 0, 0, 0, 0
    for name, i in coords:
        flat = arrays[name].reshape(-1)
        x0 = flat[i]
        h = eps_rel * max(1.0, abs(x0))
        flat[i] = x0 + h
        f_plus, m_plus = _evaluate(loss_fn, arrays)
        flat[i] = x0 - h
        f_minus, m_minus = _evaluate(loss_fn, arrays)
        flat[i] = x0
        if not _same_pattern(m_plus, m_minus):
            skipped += 1
            continue
        numeric = (f_plus - f_minus) / (2 * h)
        analytic = grads[name].reshape(-1)[i]
        noise = NOISE_FACTOR * np.finfo(np.float64).eps * max(abs(f_plus), abs(f_minus), 1.0) / h
        if max(abs(analytic), abs(numeric)) < noise:
            zero += 1
            zero_failures += abs(analytic - numeric) > noise
            continue
        err = relative_error(analytic, numeric)
        checked += 1
        if err > worst:
            worst, worst_at = err, (name, i)
    return GradCheckResult(worst, checked, skipped, worst_at, zero, zero_failures)
