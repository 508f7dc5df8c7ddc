"""Sparse coordinate matrices and the sparse-dense product.

Coordinates are stored sorted row-major so traversal order (and therefore
floating-point reduction order) is fixed. Products go through scipy CSR,
which accumulates each row left to right over the sorted columns.
"""

import numpy as np
import scipy.sparse as sp

from ..errors import ShapeError
from .tensor import Tensor, _make, astensor


class SparseMatrix:
    """Immutable sparse matrix in sorted COO form."""

    def __init__(self, n_rows, n_cols, rows, cols, vals):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape):
            raise ShapeError("coordinate arrays must have equal length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= n_rows:
                raise ShapeError("row index out of bounds")
            if cols.min() < 0 or cols.max() >= n_cols:
                raise ShapeError("column index out of bounds")
        if not np.isfinite(vals).all():
            raise ShapeError("sparse values must be finite")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size > 1:
            dup = (np.diff(rows) == 0) & (np.diff(cols) == 0)
            if dup.any():
                raise ShapeError("duplicate (row, column) coordinate")
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.rows = rows
        self.cols = cols
        self.vals = vals
        self._csr = sp.csr_matrix(
            (vals, (rows, cols)), shape=(self.n_rows, self.n_cols)
        )
        self._csr_t = self._csr.T.tocsr()

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return self.vals.size

    @classmethod
    def identity(cls, n):
        idx = np.arange(n)
        return cls(n, n, idx, idx, np.ones(n))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols))
        out[self.rows, self.cols] = self.vals
        return out

    def row_sums(self) -> np.ndarray:
        return np.asarray(self._csr.sum(axis=1)).ravel()


def spmm(adj: SparseMatrix, x) -> Tensor:
    """Sparse-dense product; differentiable with respect to the dense side."""
    x = astensor(x)
    if x.ndim != 2:
        raise ShapeError(f"spmm expects a 2-d dense operand, got {x.shape}")
    if adj.n_cols != x.shape[0]:
        raise ShapeError(
            f"spmm dimensions disagree: {adj.shape} x {x.shape}"
        )
    out = adj._csr @ x.data

    def vjp(g):
        return (adj._csr_t @ g,)

    return _make(out, (x,), vjp)
