"""Markov transition-density models p(x, y) and per-cell infimum evaluation.

All kernels evaluate with numpy broadcasting over x and y, so matrix assembly
and density reconstruction can batch their calls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .innovations import Exponential3, InnovationDensity, TabulatedDensity, convolve_scaled


@dataclass(frozen=True)
class EndpointMin:
    """Cell infimum as the minimum of the two endpoint values.

    Exact whenever t -> p(t, y) has no interior local minimum on a cell.
    """


@dataclass(frozen=True)
class Sampled:
    """Cell infimum as the minimum over n equispaced points (endpoints included)."""

    n: int = 9

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("Sampled needs n >= 2")


InfStrategy = EndpointMin | Sampled


class KernelModel:
    """Base transition-density model.

    ``monotone_hint`` declares that t -> p(t, y) has no interior minimum on
    small cells, making the endpoint rule exact; ``drift_exponent`` is the
    power e of the drift function V(x) = 1 + |x|^e used by the diagnostics.
    """

    innov: InnovationDensity | None
    monotone_hint: bool
    drift_exponent: float

    def eval(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def default_strategy(self) -> InfStrategy:
        return EndpointMin() if self.monotone_hint else Sampled(9)


@dataclass(frozen=True)
class Ar1Kernel(KernelModel):
    """p(x, y) = nu(y - rho * x) for the linear autoregression with |rho| < 1."""

    rho: float
    innov: InnovationDensity
    monotone_hint: bool = True

    def __post_init__(self):
        if not abs(self.rho) < 1:
            raise ValueError("need |rho| < 1")

    @property
    def drift_exponent(self) -> float:
        return self.innov.moment_order

    def eval(self, x, y):
        return self.innov.pdf(np.asarray(y, dtype=float) - self.rho * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class IteratedAr1Kernel(Ar1Kernel):
    """Kernel of the ell-step subsampled autoregression.

    Behaves as an AR(1) with coefficient rho_base**ell and the convolved
    innovation density; useful when the base innovation is too rough for the
    discretization to behave well.
    """

    ell: int = 1
    rho_base: float = 0.0

    @property
    def rho_eff(self) -> float:
        return self.rho


def iterated_ar1(
    innov: InnovationDensity,
    rho: float,
    ell: int = 3,
    mesh: float = 1e-3,
    support: tuple[float, float] | None = None,
) -> IteratedAr1Kernel:
    """Build the ell-step kernel, tabulating the convolved innovation numerically.

    The noise of the subsampled chain is sum_{j<ell} rho^j * theta_j, so the
    tabulation convolves scaled copies of ``innov`` with scales
    (rho^(ell-1), ..., rho, 1).
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if not abs(rho) < 1:
        raise ValueError("need |rho| < 1")
    scales = [rho**j for j in range(ell - 1, -1, -1)]
    if support is None:
        lo = hi = 0.0
        for s in scales:
            a, b = innov.truncated_support()
            lo += min(s * a, s * b)
            hi += max(s * a, s * b)
        support = (lo, hi)
    innov_ell = convolve_scaled(innov, scales, mesh, support)
    return IteratedAr1Kernel(rho=rho**ell, innov=innov_ell, ell=ell, rho_base=rho)


@dataclass(frozen=True)
class ArchKernel(KernelModel):
    """AR(1) with ARCH(1) errors: next state alpha*x + sqrt(beta + lam*x^2) * theta."""

    alpha: float
    beta: float
    lam: float
    innov: InnovationDensity
    drift_exponent: float = 1.0
    monotone_hint: bool = False

    def __post_init__(self):
        if self.beta <= 0 or self.lam <= 0:
            raise ValueError("need beta > 0 and lambda > 0")

    def eval(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        scale = np.sqrt(self.beta + self.lam * x * x)
        return self.innov.pdf((y - self.alpha * x) / scale) / scale


@dataclass(frozen=True)
class ConstantKernel(KernelModel):
    """x-independent kernel p(x, y) = nu(y); its stationary density is nu itself."""

    innov: InnovationDensity
    monotone_hint: bool = True

    @property
    def drift_exponent(self) -> float:
        return self.innov.moment_order

    def eval(self, x, y):
        x = np.asarray(x, dtype=float)
        return self.innov.pdf(np.asarray(y, dtype=float)) + 0.0 * x


@dataclass(frozen=True)
class CustomKernel(KernelModel):
    """Arbitrary vectorized kernel; drift exponent and monotone hint are mandatory."""

    fn: callable
    drift_exponent: float
    monotone_hint: bool
    innov: InnovationDensity | None = None

    def eval(self, x, y):
        return np.asarray(self.fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float)), dtype=float)


def kernel_eval(model: KernelModel, x: float, y: float) -> float:
    """Scalar kernel evaluation p(x, y)."""
    return float(model.eval(x, y))


def drift_eval(model: KernelModel, x) -> np.ndarray | float:
    """Drift function V(x) = 1 + |x|^e with e = model.drift_exponent."""
    scalar = np.isscalar(x)
    v = 1.0 + np.abs(np.asarray(x, dtype=float)) ** model.drift_exponent
    return float(v) if scalar else v


def strategy_offsets(strategy: InfStrategy) -> np.ndarray:
    """Relative positions in [0, 1] at which a cell is probed for its infimum."""
    if isinstance(strategy, EndpointMin):
        return np.array([0.0, 1.0])
    return np.linspace(0.0, 1.0, strategy.n)


def cell_infima(model: KernelModel, a, b, y, strategy: InfStrategy) -> np.ndarray:
    """inf over t in [a_r, b_r) of p(t, y_c) for every source cell r and point y_c.

    ``a`` and ``b`` are arrays of cell endpoints; the result has shape
    (len(a), len(y)).
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    offs = strategy_offsets(strategy)
    t = a[:, None] + offs[None, :] * (b - a)[:, None]
    vals = model.eval(t[:, :, None], y[None, None, :])
    return vals.min(axis=1)


def cell_inf(model: KernelModel, cell: tuple[float, float], y: float,
             strategy: InfStrategy | None = None) -> float:
    """Scalar cell infimum; defaults to the model's preferred strategy."""
    if strategy is None:
        strategy = model.default_strategy()
    a, b = cell
    if not a < b:
        raise ValueError("cell must satisfy a < b")
    return float(cell_infima(model, [a], [b], [y], strategy)[0, 0])


def support_heuristic(a: float, rho_eff: float, one_sided: bool) -> tuple[float, float]:
    """Integer support bracket for the stationary density of an AR(1) step.

    Starting from noise supported in [-a, a] (or [0, a] one-sided), the chain
    stays within a/(1 - rho) of the origin, rounded outward to integers.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    if not abs(rho_eff) < 1:
        raise ValueError("need |rho_eff| < 1")
    if one_sided:
        return (0.0, float(math.floor(a / (1.0 - rho_eff)) + 1))
    s = float(math.ceil(a / (1.0 - abs(rho_eff))))
    return (-s, s)
