"""Assembly of the finite stochastic matrix from per-cell kernel infima.

Each source cell i gets a row whose entry j is the integral over target cell j
of the infimum of p(t, .) over cell i. Whatever mass the truncated, minorized
kernel loses goes to the column of the return cell j0, and an extra absorbing
coordinate (the last row/column) represents the complement of the truncated
support: its column is identically zero and its row returns to j0 with
probability one. Row sums are exactly 1 by construction.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .grid import Partition, locate_cell
from .kernels import InfStrategy, KernelModel, cell_infima, strategy_offsets

DENSE_LIMIT = 4000  # q_max above this is stored as CSR
DROP_TOL = 1e-15


class DefectNegativeWarning(UserWarning):
    """A row accumulated mass beyond 1 before clamping: quadrature too coarse."""


@dataclass(frozen=True)
class GaussLegendre:
    """Fixed-order Gauss-Legendre rule applied per cell."""

    nodes: int = 5

    def __post_init__(self):
        if self.nodes < 2:
            raise ValueError("GaussLegendre needs at least 2 nodes")


@dataclass(frozen=True)
class Midpoint:
    """One midpoint evaluation per cell."""


QuadratureRule = GaussLegendre | Midpoint


def quad_nodes_weights(quad: QuadratureRule, p: Partition) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes per cell, shape (q_max, n), and shared weights, shape (n,).

    Weights sum to the cell width; the mesh is uniform so one weight vector
    serves every cell.
    """
    if isinstance(quad, Midpoint):
        return p.midpoints[:, None], np.array([p.delta])
    xi, om = np.polynomial.legendre.leggauss(quad.nodes)
    nodes = p.midpoints[:, None] + (0.5 * p.delta) * xi[None, :]
    return nodes, 0.5 * p.delta * om


@dataclass
class DiscretizedChain:
    """(q_max+1) x (q_max+1) row-stochastic matrix plus assembly metadata.

    ``row_totals[i]`` is the sum of the cell integrals of row i before the
    defect 1 - T_i was folded into column j0 (and 0 for the absorbing row).
    """

    matrix: np.ndarray | sp.csr_matrix
    row_totals: np.ndarray
    partition: Partition
    j0: int
    x0: float
    model: KernelModel
    strategy: InfStrategy
    quad: QuadratureRule
    drop_tol: float = DROP_TOL

    @property
    def size(self) -> int:
        return self.partition.q_max + 1

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else self.matrix

    def row_sums(self) -> np.ndarray:
        if self.is_sparse:
            return np.asarray(self.matrix.sum(axis=1)).ravel()
        return self.matrix.sum(axis=1)


def _auto_block(n_offsets: int, n_points: int) -> int:
    # keep the (block, offsets, points) evaluation tensor near 8M doubles
    return int(min(256, max(1, 8_000_000 // max(1, n_offsets * n_points))))


def _rows_block(model, p, Y_flat, w, strategy, lo, hi, n_nodes):
    """Integrals m[i, j] for source rows lo..hi-1 against every target cell."""
    a = p.points[lo:hi]
    b = p.points[lo + 1 : hi + 1]
    vals = cell_infima(model, a, b, Y_flat, strategy)
    return vals.reshape(hi - lo, p.q_max, n_nodes) @ w


def cell_row_integrals(
    model: KernelModel,
    p: Partition,
    i: int,
    quad: QuadratureRule = GaussLegendre(5),
    strategy: InfStrategy | None = None,
) -> tuple[np.ndarray, float]:
    """Per-target-cell integrals of the row-i infimum function and their sum.

    The total is the sum of the very terms that end up in the row, never an
    independent quadrature, so the assembled row sums are exact.
    """
    if not 0 <= i < p.q_max:
        raise ValueError(f"row index {i} outside [0, {p.q_max})")
    if strategy is None:
        strategy = model.default_strategy()
    Y, w = quad_nodes_weights(quad, p)
    m = _rows_block(model, p, Y.ravel(), w, strategy, i, i + 1, w.size)[0]
    return m, float(m.sum())


def assemble_matrix(
    model: KernelModel,
    p: Partition,
    j0: int | None = None,
    quad: QuadratureRule = GaussLegendre(5),
    strategy: InfStrategy | None = None,
    storage: str = "auto",
    drop_tol: float = DROP_TOL,
    threads: int = 1,
) -> DiscretizedChain:
    """Assemble the discretized chain over ``p``.

    ``j0`` defaults to the cell containing 0 when the support covers it, else
    cell 0; ``storage`` is "auto" (dense up to q_max = 4000), "dense" or
    "sparse". Rows are computed independently in blocks, optionally across
    ``threads`` workers, and assembled in row order so the result does not
    depend on the thread count.
    """
    if strategy is None:
        strategy = model.default_strategy()
    if j0 is None:
        j0 = locate_cell(p, 0.0)
        if j0 is None:
            j0 = 0
    if not 0 <= j0 < p.q_max:
        raise ValueError(f"j0 ={j0} outside [0, {p.q_max})")
    if storage not in ("auto", "dense", "sparse"):
        raise ValueError(f"unknown storage {storage!r}")
    use_sparse = storage == "sparse" or (storage == "auto" and p.q_max > DENSE_LIMIT)

    q = p.q_max
    Y, w = quad_nodes_weights(quad, p)
    Y_flat = Y.ravel()
    n_nodes = w.size
    n_off = strategy_offsets(strategy).size
    block = _auto_block(n_off, Y_flat.size)
    starts = list(range(0, q, block))

    row_totals = np.zeros(q + 1)
    worst_defect = 0.0

    def compute(lo):
        hi = min(lo + block, q)
        return lo, hi, _rows_block(model, p, Y_flat, w, strategy, lo, hi, n_nodes)

    if threads > 1:
        executor = ThreadPoolExecutor(max_workers=threads)
        results = executor.map(compute, starts)
    else:
        executor = None
        results = map(compute, starts)

    if use_sparse:
        data_parts, col_parts, count_parts = [], [], []
    else:
        dense = np.zeros((q + 1, q + 1))

    try:
        for lo, hi, m in results:
            T = m.sum(axis=1)
            row_totals[lo:hi] = T
            defect = 1.0 - T
            worst_defect = min(worst_defect, float(defect.min()))
            over = defect < 0
            if np.any(over):
                # analytically T_i <= 1; an overshoot is quadrature error, so
                # rescale those rows instead of leaving them super-stochastic
                m[over] /= T[over, None]
            m[:, j0] += np.maximum(defect, 0.0)
            if use_sparse:
                keep = m >= drop_tol
                keep[:, j0] = True
                dropped = np.where(keep, 0.0, m).sum(axis=1)
                m[:, j0] += dropped
                rows_idx, cols_idx = np.nonzero(keep)
                data_parts.append(m[rows_idx, cols_idx])
                col_parts.append(cols_idx.astype(np.int32))
                count_parts.append(keep.sum(axis=1))
            else:
                dense[lo:hi, :q] = m
    finally:
        if executor is not None:
            executor.shutdown()

    if worst_defect < -1e-9:
        warnings.warn(
            f"row mass exceeds 1 by {-worst_defect:.3e} before clamping",
            DefectNegativeWarning,
        )

    if use_sparse:
        data_parts.append(np.array([1.0]))
        col_parts.append(np.array([j0], dtype=np.int32))
        counts = np.concatenate(count_parts + [np.array([1])])
        indptr = np.zeros(q + 2, dtype=np.int32)
        np.cumsum(counts, out=indptr[1:])
        matrix = sp.csr_matrix(
            (np.concatenate(data_parts), np.concatenate(col_parts), indptr),
            shape=(q + 1, q + 1),
        )
    else:
        dense[q, j0] = 1.0
        matrix = dense

    return DiscretizedChain(
        matrix=matrix,
        row_totals=row_totals,
        partition=p,
        j0=j0,
        x0=float(p.points[j0]),
        model=model,
        strategy=strategy,
        quad=quad,
        drop_tol=drop_tol,
    )


def dump_matrix_csv(chain: DiscretizedChain, path) -> None:
    """Write entries >= drop_tol as CSV triplets i,j,value."""
    coo = sp.coo_matrix(chain.matrix)
    with open(path, "w") as fh:
        fh.write("i,j,value\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            if v >= chain.drop_tol:
                fh.write(f"{i},{j},{v:.12e}\n")
