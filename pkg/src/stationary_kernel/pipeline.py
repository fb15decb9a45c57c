"""End-to-end run: assemble the matrix, solve for the invariant vector, build the density."""

from __future__ import annotations

import time
from dataclasses import dataclass

from .density import ApproxDensity, build_density
from .discretize import DiscretizedChain, GaussLegendre, QuadratureRule, assemble_matrix
from .grid import Partition
from .invariant import InvariantVector, stationary_vector
from .kernels import InfStrategy, KernelModel


@dataclass
class PipelineResult:
    chain: DiscretizedChain
    invariant: InvariantVector
    density: ApproxDensity
    runtime_seconds: float


def run_pipeline(
    model: KernelModel,
    partition: Partition,
    j0: int | None = None,
    quad: QuadratureRule = GaussLegendre(5),
    strategy: InfStrategy | None = None,
    solver: str = "auto",
    solver_tol: float = 1e-12,
    max_iter: int = 1_000_000,
    storage: str = "auto",
    threads: int = 1,
) -> PipelineResult:
    start = time.perf_counter()
    chain = assemble_matrix(
        model, partition, j0=j0, quad=quad, strategy=strategy,
        storage=storage, threads=threads,
    )
    pi = stationary_vector(chain, method=solver, tol=solver_tol, max_iter=max_iter)
    pk = build_density(chain, pi)
    return PipelineResult(chain, pi, pk, time.perf_counter() - start)
