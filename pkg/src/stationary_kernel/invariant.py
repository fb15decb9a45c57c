"""Left invariant probability vectors of row-stochastic matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .discretize import DiscretizedChain

DIRECT_MAX = 5000
AUTO_DIRECT_LIMIT = 2000


class SingularSystem(RuntimeError):
    """The linear system has no unique solution (reducible chain)."""


class NoConvergence(RuntimeError):
    """Power iteration ran out of iterations; carries the best iterate."""

    def __init__(self, iterations: int, residual: float, best: "InvariantVector"):
        super().__init__(
            f"no convergence after {iterations} iterations (residual {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual
        self.best = best


@dataclass
class InvariantVector:
    """Probability row vector with pi @ B = pi, plus solver telemetry."""

    weights: np.ndarray
    residual: float
    iterations: int
    method: str = ""


def _as_operator(chain):
    """Matrix plus metadata out of a DiscretizedChain or a raw array."""
    if isinstance(chain, DiscretizedChain):
        return chain.matrix, chain.size, True
    if sp.issparse(chain):
        return chain, chain.shape[0], False
    B = np.asarray(chain, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError("expected a square matrix")
    return B, B.shape[0], False


def direct_solve(B) -> np.ndarray:
    """Solve pi (B - I) = 0 with the first equation replaced by sum(pi) = 1.

    Dense LU elimination with partial pivoting; intended both as the small-
    instance solver and as the oracle for the power iteration.
    """
    B, n, _ = _as_operator(B)
    if n > DIRECT_MAX:
        raise ValueError(f"direct solve limited to {DIRECT_MAX} unknowns, got {n}")
    if sp.issparse(B):
        B = B.toarray()
    A = B.T - np.eye(n)
    A[0, :] = 1.0
    rhs = np.zeros(n)
    rhs[0] = 1.0
    try:
        pi = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from None
    if not np.all(np.isfinite(pi)) or np.any(pi < -1e-8):
        raise SingularSystem("solution is not a nonnegative probability vector")
    residual = float(np.abs(pi @ B - pi).sum())
    if residual > 1e-8:
        raise SingularSystem(f"large residual {residual:.3e} after elimination")
    return pi


def power_iteration(B, v0: np.ndarray, tol: float, max_iter: int,
                    record: list | None = None) -> tuple[np.ndarray, float, int]:
    """Iterate v <- v B until the l1 residual drops below tol.

    Returns (vector, residual, iterations); ``record``, when given, collects
    the residual after each iterate.
    """
    v = np.asarray(v0, dtype=float)
    residual = np.inf
    for it in range(1, max_iter + 1):
        w = v @ B
        if sp.issparse(B):
            w = np.asarray(w).ravel()
        residual = float(np.abs(w - v).sum())
        v = w
        if record is not None:
            record.append(residual)
        if residual <= tol:
            return v, residual, it
    return v, residual, max_iter


def _finalize(pi, residual, iterations, method, is_chain, B):
    pi = np.maximum(pi, 0.0)
    if is_chain:
        pi[-1] = 0.0
    pi = pi / pi.sum()
    residual = pi @ B - pi
    if sp.issparse(B):
        residual = np.asarray(residual).ravel()
    return InvariantVector(
        weights=pi,
        residual=float(np.abs(residual).sum()),
        iterations=iterations,
        method=method,
    )


def stationary_vector(
    chain,
    method: str = "auto",
    tol: float = 1e-12,
    max_iter: int = 1_000_000,
) -> InvariantVector:
    """Invariant probability vector of a DiscretizedChain or raw stochastic matrix.

    "auto" picks the direct solver up to 2000 cells and power iteration above;
    power iteration starts from the uniform vector over the genuine cells
    (zero on the absorbing coordinate) and measures the l1 residual.
    """
    B, n, is_chain = _as_operator(chain)
    if method not in ("auto", "direct", "power"):
        raise ValueError(f"unknown method {method!r}")
    q = n - 1 if is_chain else n
    if method == "auto":
        method = "direct" if q <= AUTO_DIRECT_LIMIT else "power"

    if method == "direct":
        pi = direct_solve(B if not is_chain else chain.matrix)
        return _finalize(pi, 0.0, 0, "direct", is_chain, B)

    v0 = np.zeros(n)
    if is_chain:
        v0[:-1] = 1.0 / q
    else:
        v0[:] = 1.0 / n
    pi, residual, iterations = power_iteration(B, v0, tol, max_iter)
    if residual > tol:
        best = _finalize(pi, residual, iterations, "power", is_chain, B)
        raise NoConvergence(iterations, best.residual, best)
    return _finalize(pi, residual, iterations, "power", is_chain, B)
