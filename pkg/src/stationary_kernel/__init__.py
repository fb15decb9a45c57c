"""Stationary densities of 1-D Markov chains via transition-kernel discretization."""

from .density import (
    ApproxDensity,
    DimensionMismatch,
    build_density,
    density_eval,
    density_eval_grid,
    export_density_csv,
    measure_integrate,
)
from .diagnostics import (
    AssumptionReport,
    ErrorReport,
    RateStudy,
    assumption_diagnostics,
    export_comparison_csv,
    gaussian_stationary_density,
    hn_baseline,
    invariance_residual,
    make_error_report,
    mcmc_histogram,
    rate_study,
    riemann_l1_error,
    sup_error,
)
from .discretize import (
    DefectNegativeWarning,
    DiscretizedChain,
    GaussLegendre,
    Midpoint,
    assemble_matrix,
    cell_row_integrals,
    dump_matrix_csv,
)
from .grid import InvalidInterval, NonIntegralMesh, Partition, build_partition, locate_cell
from .innovations import (
    CustomDensity,
    Exponential,
    Exponential3,
    Gaussian,
    InnovationDensity,
    TabulatedDensity,
    Uniform,
    UnsamplableInnovation,
    absolute_moment,
    convolve_scaled,
    eval_density,
    eval_exponential3,
    validate_density,
)
from .invariant import (
    InvariantVector,
    NoConvergence,
    SingularSystem,
    direct_solve,
    power_iteration,
    stationary_vector,
)
from .kernels import (
    Ar1Kernel,
    ArchKernel,
    ConstantKernel,
    CustomKernel,
    EndpointMin,
    IteratedAr1Kernel,
    KernelModel,
    Sampled,
    cell_inf,
    cell_infima,
    drift_eval,
    iterated_ar1,
    kernel_eval,
    support_heuristic,
)
from .pipeline import PipelineResult, run_pipeline

__version__ = "0.1.0"
