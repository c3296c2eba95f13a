"""Immutable CSR matrix and the exact kernels the rest of the package composes.

Every constructor canonicalizes: column indices sorted within rows, duplicates
summed, explicit zeros dropped. Arithmetic is delegated to ``scipy.sparse`` and
the result is canonicalized again, so two matrices are equal iff their three
CSR arrays are equal.
"""

from __future__ import annotations

import io
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp

from .errors import ShapeError, ValidationError

__all__ = [
    "SparseMatrix",
    "spmm",
    "hadamard",
    "add_scaled",
    "transpose",
    "entry",
    "dump_coo",
    "load_coo",
]


def _frozen(a, dtype):
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


class SparseMatrix:
    """Compressed sparse row matrix of non-negative reals.

    Prefer the ``from_*`` constructors; the raw initializer expects arrays
    that already satisfy the invariants and checks them.
    """

    __slots__ = ("n_rows", "n_cols", "row_offsets", "col_indices", "values")

    def __init__(self, n_rows, n_cols, row_offsets, col_indices, values):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.row_offsets = _frozen(row_offsets, np.int64)
        self.col_indices = _frozen(col_indices, np.int64)
        self.values = _frozen(values, np.float64)
        self._check()

    def _check(self):
        ro, ci, v = self.row_offsets, self.col_indices, self.values
        if self.n_rows < 0 or self.n_cols < 0:
            raise ShapeError(f"negative shape {self.shape}")
        if ro.shape != (self.n_rows + 1,) or ro[0] != 0 or ro[-1] != ci.size:
            raise ValidationError("row_offsets inconsistent with nnz")
        if ci.shape != v.shape:
            raise ValidationError("col_indices and values differ in length")
        if np.any(np.diff(ro) < 0):
            raise ValidationError("row_offsets not monotone")
        if ci.size:
            if ci.min() < 0 or ci.max() >= self.n_cols:
                raise ValidationError("column index out of range")
            # strictly increasing inside each row: a non-increase is only
            # allowed where a new row starts
            steps = np.diff(ci) <= 0
            starts = np.zeros(ci.size - 1, dtype=bool)
            inner = ro[1:-1]
            inner = inner[(inner > 0) & (inner < ci.size)]
            starts[inner - 1] = True
            if np.any(steps & ~starts):
                raise ValidationError("column indices not strictly increasing within a row")
            if np.any(v == 0):
                raise ValidationError("explicit zero stored")
            if not np.all(np.isfinite(v)):
                raise ValidationError("non-finite value stored")

    # construction -----------------------------------------------------------

    @classmethod
    def from_scipy(cls, m) -> "SparseMatrix":
        m = sp.csr_matrix(m, dtype=np.float64, copy=True)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        return cls(m.shape[0], m.shape[1], m.indptr, m.indices, m.data)

    @classmethod
    def from_coo(cls, rows, cols, values, shape) -> "SparseMatrix":
        """Build from coordinate triples; duplicates are summed."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        n, m = shape
        if rows.size and (rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= m):
            raise ShapeError(f"coordinate outside shape {shape}")
        return cls.from_scipy(sp.coo_matrix((values, (rows, cols)), shape=shape))

    @classmethod
    def from_dense(cls, a) -> "SparseMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise ShapeError("dense input must be 2-D")
        return cls.from_scipy(sp.csr_matrix(a))

    @classmethod
    def zeros(cls, n_rows, n_cols) -> "SparseMatrix":
        return cls(n_rows, n_cols, np.zeros(n_rows + 1), [], [])

    @classmethod
    def identity(cls, n) -> "SparseMatrix":
        return cls(n, n, np.arange(n + 1), np.arange(n), np.ones(n))

    # views ------------------------------------------------------------------

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return int(self.col_indices.size)

    def to_scipy(self):
        return sp.csr_matrix(
            (self.values, self.col_indices, self.row_offsets), shape=self.shape, copy=False
        )

    def to_dense(self):
        return self.to_scipy().toarray()

    def coo(self):
        """Row-major ``(rows, cols, values)`` arrays."""
        rows = np.repeat(np.arange(self.n_rows, dtype=np.int64), np.diff(self.row_offsets))
        return rows, self.col_indices, self.values

    def row(self, i):
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        return self.col_indices[lo:hi], self.values[lo:hi]

    def row_nnz(self):
        return np.diff(self.row_offsets)

    def is_binary(self):
        return bool(np.all(self.values == 1.0))

    def diagonal_nnz(self):
        rows, cols, _ = self.coo()
        return int(np.count_nonzero(rows == cols))

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self):
        return f"SparseMatrix(shape={self.shape}, nnz={self.nnz})"

    # operator sugar
    def __matmul__(self, other):
        return spmm(self, other)

    @property
    def T(self):
        return transpose(self)


def _same_shape(a, b, op):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def spmm(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    """Exact product ``a @ b``."""
    if a.n_cols != b.n_rows:
        raise ShapeError(f"spmm: inner dimensions differ {a.shape} @ {b.shape}")
    return SparseMatrix.from_scipy(a.to_scipy() @ b.to_scipy())


def hadamard(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    _same_shape(a, b, "hadamard")
    return SparseMatrix.from_scipy(a.to_scipy().multiply(b.to_scipy()))


def add_scaled(a: SparseMatrix, alpha_a: float, b: SparseMatrix, alpha_b: float) -> SparseMatrix:
    """``alpha_a * a + alpha_b * b``; entries that cancel are dropped."""
    _same_shape(a, b, "add_scaled")
    if not (np.isfinite(alpha_a) and np.isfinite(alpha_b)):
        raise ValidationError("add_scaled: non-finite coefficient")
    return SparseMatrix.from_scipy(a.to_scipy() * float(alpha_a) + b.to_scipy() * float(alpha_b))


def transpose(a: SparseMatrix) -> SparseMatrix:
    return SparseMatrix.from_scipy(a.to_scipy().transpose())


def entry(a: SparseMatrix, i: int, j: int) -> float:
    if not (0 <= i < a.n_rows and 0 <= j < a.n_cols):
        raise IndexError(f"entry ({i}, {j}) outside shape {a.shape}")
    cols, vals = a.row(i)
    k = np.searchsorted(cols, j)
    if k < cols.size and cols[k] == j:
        return float(vals[k])
    return 0.0


# debug dump ------------------------------------------------------------------


def _fmt(v):
    return format(float(v), ".17g")


def dump_coo(a: SparseMatrix, out: TextIO | None = None) -> str | None:
    """Write ``row<TAB>col<TAB>value`` lines in row-major order.

    Returns the text when ``out`` is None.
    """
    buf = io.StringIO() if out is None else out
    rows, cols, vals = a.coo()
    for r, c, v in zip(rows.tolist(), cols.tolist(), vals.tolist()):
        buf.write(f"{r}\t{c}\t{_fmt(v)}\n")
    if out is None:
        return buf.getvalue()
    return None


def load_coo(lines: Iterable[str], shape) -> SparseMatrix:
    rows, cols, vals = [], [], []
    for n, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValidationError(f"coo line {n}: expected 3 fields, got {len(parts)}")
        rows.append(int(parts[0]))
        cols.append(int(parts[1]))
        vals.append(float(parts[2]))
    return SparseMatrix.from_coo(rows, cols, vals, shape)
