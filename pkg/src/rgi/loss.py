"""Reconstruction, variance and covariance objectives.

All functions take :class:`~rgi.autodiff.Tensor` inputs (plain arrays are
wrapped as constants) and return 1x1 tensors, so they can sit on a tape.
Normalizations follow the reference pseudocode: covariance divides by
``N - 1`` and reconstruction is a mean over all ``N * D`` elements.
"""

from dataclasses import dataclass

import numpy as np

from .autodiff import as_tensor, center_columns, diagonal, multiply_constant
from .errors import BatchTooSmall, ShapeError


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 10.0
    lambda2: float = 5.0
    lambda3: float = 1.0

    def __post_init__(self):
        if min(self.lambda1, self.lambda2, self.lambda3) < 0:
            raise ValueError(f"loss weights must be non-negative: {self}")


@dataclass(frozen=True)
class LossBreakdown:
    rec: float
    var: float
    cov: float
    total: float


def sample_covariance(z):
    z = as_tensor(z)
    n = z.shape[0]
    if n < 2:
        raise BatchTooSmall(f"covariance needs at least 2 rows, got {n}")
    c = center_columns(z)
    return (c.T @ c) * (1.0 / (n - 1))


def variance_loss(z):
    """Mean over columns of ``(1 - var_n)**2``."""
    cov = sample_covariance(z)
    d = cov.shape[0]
    return ((1.0 - diagonal(cov)) ** 2).sum() * (1.0 / d)


def covariance_loss(z):
    """Sum of squared off-diagonal covariances divided by the dimension."""
    cov = sample_covariance(z)
    d = cov.shape[0]
    off = multiply_constant(cov, 1.0 - np.eye(d))
    return (off ** 2).sum() * (1.0 / d)


def _mse(a, b):
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    return ((a - b) ** 2).sum() * (1.0 / a.values.size)


def reconstruction_loss(u, u_hat, v, v_hat):
    u, u_hat, v, v_hat = (as_tensor(t) for t in (u, u_hat, v, v_hat))
    return _mse(u, u_hat) + _mse(v, v_hat)


def total_loss(u, v, u_hat, v_hat, weights):
    """Weighted, symmetrized RGI objective.

    Returns ``(total, breakdown)``; ``total`` is a tensor that can be
    differentiated, ``breakdown`` holds the float values of each term.
    """
    u, v = as_tensor(u), as_tensor(v)
    if u.shape != v.shape:
        raise ShapeError(f"local and global views differ: {u.shape} vs {v.shape}")
    rec = reconstruction_loss(u, u_hat, v, v_hat)
    var = variance_loss(u) + variance_loss(v)
    cov = covariance_loss(u) + covariance_loss(v)
    total = rec * weights.lambda1 + var * weights.lambda2 + cov * weights.lambda3
    breakdown = LossBreakdown(rec.item(), var.item(), cov.item(), total.item())
    return total, breakdown
