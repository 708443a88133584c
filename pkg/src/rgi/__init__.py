"""Regularized Graph Infomax.

Self-supervised training of a GCN encoder by predicting embeddings
propagated through the graph (and vice versa) under variance/covariance
regularization, plus linear-probe evaluation of the frozen embeddings.
"""

from .data import GraphDataset, SbmConfig, generate_sbm, l1_normalize_rows, load_dataset, load_manifest
from .encoder import EncoderConfig, ModelParams, embed, init_params
from .estimator import RGI, LinearProbeClassifier
from .evaluation import evaluate, fit_linear_probe, l2_normalize_rows, linear_evaluation, random_split
from .graph import PropagationConfig, ShiftKind, SparseGraph, build_csr, propagate, shift_operator, spmm
from .loss import LossBreakdown, LossWeights, total_loss
from .trainer import ScheduleConfig, TrainConfig, lr_at, train

__version__ = "0.1.0"

__all__ = [
    "RGI", "LinearProbeClassifier",
    "GraphDataset", "SbmConfig", "generate_sbm", "l1_normalize_rows", "load_dataset", "load_manifest",
    "EncoderConfig", "ModelParams", "embed", "init_params",
    "evaluate", "fit_linear_probe", "l2_normalize_rows", "linear_evaluation", "random_split",
    "PropagationConfig", "ShiftKind", "SparseGraph", "build_csr", "propagate", "shift_operator", "spmm",
    "LossBreakdown", "LossWeights", "total_loss",
    "ScheduleConfig", "TrainConfig", "lr_at", "train",
]
