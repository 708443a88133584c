"""Datasets: text-file loading, feature normalization and a synthetic SBM."""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import hadamard

from .errors import CountMismatch, ParseError
from .graph import SparseGraph, build_csr, read_edge_list, write_edge_list
from .random import Rng

TASKS = ("multiclass", "multilabel")


@dataclass(frozen=True, eq=False)
class GraphDataset:
    graph: SparseGraph
    features: np.ndarray
    labels: np.ndarray
    task: str = "multiclass"
    name: str = "dataset"
    num_classes: int = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")
        n = self.graph.num_nodes
        if self.features.shape[0] != n:
            raise CountMismatch(f"{self.features.shape[0]} feature rows for {n} nodes")
        if len(self.labels) != n:
            raise CountMismatch(f"{len(self.labels)} labels for {n} nodes")
        if self.num_classes is None:
            c = self.labels.shape[1] if self.task == "multilabel" else int(self.labels.max()) + 1
            object.__setattr__(self, "num_classes", c)

    @property
    def num_nodes(self):
        return self.graph.num_nodes

    @property
    def num_features(self):
        return self.features.shape[1]


def l1_normalize_rows(x):
    """Divide each row by its L1 norm; zero rows stay zero."""
    x = np.asarray(x, dtype=np.float64)
    norms = np.abs(x).sum(axis=1, keepdims=True)
    return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)


def _read_matrix(path, dtype, what):
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise ParseError(path, lineno, f"expected {width} {what} fields, got {len(fields)}")
            try:
                rows.append([dtype(f) for f in fields])
            except ValueError:
                raise ParseError(path, lineno, f"cannot parse {what} value in {line[:40]!r}") from None
    return rows


def read_features(path):
    rows = _read_matrix(path, float, "feature")
    return np.array(rows, dtype=np.float64).reshape(len(rows), -1)


def read_labels(path, task, num_classes=None):
    if task == "multilabel":
        rows = _read_matrix(path, int, "label")
        labels = np.array(rows, dtype=np.int64).reshape(len(rows), -1)
        bad = np.argwhere((labels != 0) & (labels != 1))
        if len(bad):
            raise ParseError(path, int(bad[0, 0]) + 1, "multilabel entries must be 0 or 1")
        if num_classes is not None and labels.shape[1] != num_classes:
            raise ParseError(path, 1, f"{labels.shape[1]} label columns, expected {num_classes}")
        return labels
    labels = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                y = int(line)
            except ValueError:
                raise ParseError(path, lineno, f"non-integer label {line!r}") from None
            if y < 0 or (num_classes is not None and y >= num_classes):
                raise ParseError(path, lineno, f"label {y} outside [0, {num_classes})")
            labels.append(y)
    return np.array(labels, dtype=np.int64)


def load_dataset(edge_path, feature_path, label_path, task="multiclass",
                 num_classes=None, l1_normalize=False, name=None):
    """Load the three text files and cross-check their node counts."""
    if task not in TASKS:
        raise ValueError(f"task must be one of {TASKS}, got {task!r}")
    features = read_features(feature_path)
    labels = read_labels(label_path, task, num_classes)
    edges = read_edge_list(edge_path)
    n = features.shape[0]
    if len(labels) != n:
        raise CountMismatch(f"{label_path} has {len(labels)} rows but {feature_path} has {n}")
    if len(edges) and edges.max() >= n:
        raise CountMismatch(f"{edge_path} references node {edges.max()} but only {n} nodes have features")
    if l1_normalize:
        features = l1_normalize_rows(features)
    return GraphDataset(build_csr(edges, n), features, labels, task,
                        name or Path(feature_path).stem, num_classes)


MANIFEST_KEYS = {"edges", "features", "labels", "task", "l1_normalize", "num_classes", "name"}


def load_manifest(path):
    """Load a dataset from a JSON manifest; relative paths resolve against its folder."""
    path = Path(path)
    with open(path) as fh:
        manifest = json.load(fh)
    unknown = set(manifest) - MANIFEST_KEYS
    if unknown:
        raise ValueError(f"{path}: unknown manifest keys {sorted(unknown)}")
    missing = {"edges", "features", "labels", "task"} - set(manifest)
    if missing:
        raise ValueError(f"{path}: missing manifest keys {sorted(missing)}")
    base = path.parent
    return load_dataset(base / manifest["edges"], base / manifest["features"], base / manifest["labels"],
                        manifest["task"], manifest.get("num_classes"), manifest.get("l1_normalize", False),
                        manifest.get("name", path.stem))


def save_dataset(ds, directory):
    """Write edges/features/labels plus a manifest; returns the manifest path."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_edge_list(d / "edges.txt", ds.graph)
    with open(d / "features.csv", "w") as fh:
        for row in ds.features:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    with open(d / "labels.txt", "w") as fh:
        for y in ds.labels:
            fh.write((",".join(str(int(v)) for v in y) if ds.task == "multilabel" else str(int(y))) + "\n")
    manifest = {"edges": "edges.txt", "features": "features.csv", "labels": "labels.txt",
                "task": ds.task, "l1_normalize": False, "num_classes": ds.num_classes,
                "name": ds.name}
    with open(d / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    return d / "manifest.json"


@dataclass(frozen=True)
class SbmConfig:
    num_blocks: int = 3
    nodes_per_block: int = 100
    p_in: float = 0.1
    p_out: float = 0.01
    feature_dim: int = 32
    signal: float = 1.0
    noise_sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_out < self.p_in <= 1.0:
            raise ValueError("need 0 <= p_out < p_in <= 1")
        if min(self.num_blocks, self.nodes_per_block, self.feature_dim) < 1:
            raise ValueError("counts must be >= 1")
        if self.noise_sigma <= 0:
            raise ValueError("noise_sigma must be > 0")


def block_means(num_blocks, feature_dim, signal):
    """One +-signal sign pattern per block.

    Patterns are rows 1..B of a Sylvester Hadamard matrix (the all-ones row
    is skipped), tiled to ``feature_dim``; they are mutually orthogonal
    whenever the Hadamard order divides ``feature_dim``.
    """
    order = 1
    while order < num_blocks + 1:
        order *= 2
    h = hadamard(order)[1:num_blocks + 1].astype(np.float64)
    reps = -(-feature_dim // order)
    return signal * np.tile(h, (1, reps))[:, :feature_dim]


def generate_sbm(cfg):
    rng = Rng(cfg.seed)
    n = cfg.num_blocks * cfg.nodes_per_block
    labels = np.repeat(np.arange(cfg.num_blocks), cfg.nodes_per_block)
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(labels[iu] == labels[ju], cfg.p_in, cfg.p_out)
    keep = rng.uniform(len(iu)) < prob
    graph = build_csr(np.stack([iu[keep], ju[keep]], axis=1), n)
    means = block_means(cfg.num_blocks, cfg.feature_dim, cfg.signal)
    features = means[labels] + rng.normal((n, cfg.feature_dim), scale=cfg.noise_sigma)
    return GraphDataset(graph, features, labels, "multiclass", "sbm", cfg.num_blocks)


def erdos_renyi(n, p, seed=0):
    """G(n, p) random graph; used by tests and self-checks."""
    rng = Rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.uniform(len(iu)) < p
    return build_csr(np.stack([iu[keep], ju[keep]], axis=1), n)
