"""Sparse graph storage, shift operators and K-step feature propagation.

Graphs are undirected and unweighted, stored as CSR with sorted column
indices and no stored values.  Shift operators reuse that layout and add a
value array plus an optional diagonal term, so the normalized Laplacian and
the self-looped GCN operator share one sparse-dense kernel.
"""

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import InvalidEdge, ParseError, ShapeError


class ShiftKind(str, Enum):
    MEAN_ADJACENCY = "mean_adj"
    SYM_NORM_ADJACENCY = "sym_norm_adj"
    SYM_NORM_LAPLACIAN = "sym_norm_lap"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {
            "mean": cls.MEAN_ADJACENCY,
            "meanadjacency": cls.MEAN_ADJACENCY,
            "symnormadjacency": cls.SYM_NORM_ADJACENCY,
            "symnormlaplacian": cls.SYM_NORM_LAPLACIAN,
            "laplacian": cls.SYM_NORM_LAPLACIAN,
        }
        key = str(value).lower()
        for kind in cls:
            if kind.value == key:
                return kind
        try:
            return aliases[key.replace("_", "")]
        except KeyError:
            raise ValueError(f"unknown shift kind {value!r}") from None


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SparseGraph:
    num_nodes: int
    row_offsets: np.ndarray
    col_indices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_offsets", _frozen(self.row_offsets, np.int64))
        object.__setattr__(self, "col_indices", _frozen(self.col_indices, np.int64))

    @property
    def degrees(self):
        return np.diff(self.row_offsets)

    @property
    def num_edges(self):
        """Number of undirected edges."""
        return len(self.col_indices) // 2

    def neighbors(self, i):
        return self.col_indices[self.row_offsets[i]:self.row_offsets[i + 1]]

    def row_ids(self):
        return np.repeat(np.arange(self.num_nodes), self.degrees)

    def edges(self):
        """Undirected edges as an (E, 2) array with i < j."""
        rows = self.row_ids()
        keep = rows < self.col_indices
        return np.stack([rows[keep], self.col_indices[keep]], axis=1)

    def adjacency(self):
        data = np.ones(len(self.col_indices))
        return sp.csr_matrix((data, self.col_indices, self.row_offsets),
                             shape=(self.num_nodes, self.num_nodes))

    def to_dense(self):
        return self.adjacency().toarray()

    def permute(self, perm):
        """Relabel nodes so that new node ``k`` is old node ``perm[k]``."""
        perm = np.asarray(perm)
        inverse = np.empty_like(perm)
        inverse[perm] = np.arange(len(perm))
        return build_csr(inverse[self.edges()], self.num_nodes)

    def check(self):
        """Assert the structural invariants; used by tests and loaders."""
        n = self.num_nodes
        ro, ci = self.row_offsets, self.col_indices
        assert len(ro) == n + 1 and ro[0] == 0 and ro[-1] == len(ci)
        assert np.all(np.diff(ro) >= 0)
        rows = self.row_ids()
        assert np.all(rows != ci), "self-loop stored"
        same_row = rows[1:] == rows[:-1]
        assert np.all(np.diff(ci)[same_row] > 0), "columns not strictly increasing"
        a = self.adjacency()
        assert (a != a.T).nnz == 0, "not symmetric"


def build_csr(edges, num_nodes):
    """Symmetrize, deduplicate and sort an edge list into a :class:`SparseGraph`.

    Self-loops are dropped.  Raises :class:`InvalidEdge` for out-of-range ids.
    """
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    bad = (e < 0) | (e >= num_nodes)
    if bad.any():
        raise InvalidEdge(e[np.flatnonzero(bad.any(axis=1))[0]], num_nodes)
    e = e[e[:, 0] != e[:, 1]]
    both = np.concatenate([e, e[:, ::-1]])
    keys = np.unique(both[:, 0] * num_nodes + both[:, 1])
    rows, cols = np.divmod(keys, num_nodes)
    offsets = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=num_nodes), out=offsets[1:])
    return SparseGraph(num_nodes, offsets, cols)


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """CSR matrix over a graph's sparsity pattern plus a diagonal term.

    Applies ``y = S_offdiag @ m + diag[:, None] * m``.
    """

    graph: SparseGraph
    values: np.ndarray
    diag: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, np.float64))
        if self.diag is not None:
            object.__setattr__(self, "diag", _frozen(self.diag, np.float64))
        object.__setattr__(self, "_csr", None)

    @property
    def num_nodes(self):
        return self.graph.num_nodes

    @property
    def is_symmetric(self):
        return True

    @property
    def T(self):
        return self

    def csr(self):
        if self._csr is None:
            g = self.graph
            m = sp.csr_matrix((self.values, g.col_indices, g.row_offsets),
                              shape=(g.num_nodes, g.num_nodes))
            object.__setattr__(self, "_csr", m)
        return self._csr

    def to_dense(self):
        d = self.csr().toarray()
        if self.diag is not None:
            d[np.diag_indices_from(d)] += self.diag
        return d


@dataclass(frozen=True, eq=False)
class ShiftMatrix(SparseOperator):
    kind: ShiftKind = ShiftKind.SYM_NORM_ADJACENCY
    transposed: bool = False

    @property
    def is_symmetric(self):
        return self.kind is not ShiftKind.MEAN_ADJACENCY

    @property
    def T(self):
        if self.is_symmetric:
            return self
        g = self.graph
        inv = _safe_inverse(g.degrees.astype(np.float64))
        scale = inv[g.row_ids()] if self.transposed else inv[g.col_indices]
        return ShiftMatrix(g, scale, None, self.kind, not self.transposed)


def _safe_inverse(x):
    out = np.zeros_like(x)
    np.divide(1.0, x, out=out, where=x > 0)
    return out


def shift_operator(g, kind=ShiftKind.SYM_NORM_ADJACENCY):
    """Build a propagation operator without self-loops.

    Degree-0 nodes get all-zero rows; for the Laplacian they keep the bare
    identity diagonal entry.
    """
    kind = ShiftKind.parse(kind)
    deg = g.degrees.astype(np.float64)
    rows, cols = g.row_ids(), g.col_indices
    if kind is ShiftKind.MEAN_ADJACENCY:
        return ShiftMatrix(g, _safe_inverse(deg)[rows], None, kind)
    inv_sqrt = np.sqrt(_safe_inverse(deg))
    values = inv_sqrt[rows] * inv_sqrt[cols]
    if kind is ShiftKind.SYM_NORM_ADJACENCY:
        return ShiftMatrix(g, values, None, kind)
    return ShiftMatrix(g, -values, np.ones(g.num_nodes), kind)


def gcn_normalized(g):
    """``D~^-1/2 (A + I) D~^-1/2`` with degrees counted including the self-loop."""
    inv_sqrt = 1.0 / np.sqrt(g.degrees.astype(np.float64) + 1.0)
    values = inv_sqrt[g.row_ids()] * inv_sqrt[g.col_indices]
    return SparseOperator(g, values, inv_sqrt * inv_sqrt)


def spmm(s, m):
    """Sparse operator times dense matrix."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != s.num_nodes:
        raise ShapeError(f"operator has {s.num_nodes} rows, got matrix of shape {m.shape}")
    out = s.csr() @ m
    if s.diag is not None:
        out = out + s.diag.astype(m.dtype)[:, None] * m
    return np.asarray(out, dtype=m.dtype)


@dataclass(frozen=True)
class PropagationConfig:
    kind: ShiftKind = ShiftKind.SYM_NORM_ADJACENCY
    steps: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", ShiftKind.parse(self.kind))
        if int(self.steps) < 1:
            raise ValueError(f"propagation steps must be >= 1, got {self.steps}")


def propagate(u, cfg, s):
    """Apply the shift ``cfg.steps`` times.

    Works on plain arrays and on autodiff tensors; for tensors the gradient
    flows back through every step via the operator's transpose.
    """
    from .autodiff import Tensor, sparse_matmul

    if cfg.steps < 1:
        raise ValueError("propagation steps must be >= 1")
    for _ in range(cfg.steps):
        u = sparse_matmul(s, u) if isinstance(u, Tensor) else spmm(s, u)
    return u


def read_edge_list(path):
    """Parse a whitespace-separated edge file; returns an (E, 2) int array."""
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(path, lineno, f"expected 2 node ids, got {len(parts)} fields")
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(path, lineno, f"non-integer node id in {line!r}") from None
            if i < 0 or j < 0:
                raise ParseError(path, lineno, "negative node id")
            edges.append((i, j))
    return np.array(edges, dtype=np.int64).reshape(-1, 2)


def write_edge_list(path, g):
    with open(Path(path), "w") as fh:
        for i, j in g.edges():
            fh.write(f"{i} {j}\n")
