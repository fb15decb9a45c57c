"""Innovation probability densities and numerical convolution of scaled copies.

The innovation law drives the autoregressive kernels: each density here is an
evaluable, vectorized pdf with support metadata, an optional exact sampler,
and a finite truncation rule for its tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

TAIL_EPS = 1e-8  # default tail mass discarded when truncating unbounded supports


class UnsamplableInnovation(RuntimeError):
    """Raised when exact simulation of an innovation law is not available."""


class InnovationDensity:
    """Base class for innovation pdfs.

    Subclasses provide a vectorized ``pdf``, a ``support`` interval (possibly
    unbounded) and ``moment_order``, the exponent of the polynomial drift
    function the density is paired with.
    """

    support: tuple[float, float]
    moment_order: float

    def pdf(self, y):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise UnsamplableInnovation(
            f"{type(self).__name__} has no exact sampler"
        )

    def truncated_support(self, eps: float = TAIL_EPS) -> tuple[float, float]:
        """Finite interval carrying all but at most ``eps`` of the mass."""
        lo, hi = self.support
        if math.isfinite(lo) and math.isfinite(hi):
            return (lo, hi)
        raise ValueError(
            f"{type(self).__name__} has unbounded support and no truncation rule"
        )


@dataclass(frozen=True)
class Gaussian(InnovationDensity):
    """Centered normal innovation with standard deviation ``sigma``."""

    sigma: float = 1.0
    moment_order: float = 2.0
    support: tuple[float, float] = (-math.inf, math.inf)

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        return np.exp(-0.5 * (y / self.sigma) ** 2) / (self.sigma * math.sqrt(2.0 * math.pi))

    def sample(self, rng, size):
        return rng.normal(0.0, self.sigma, size)

    def truncated_support(self, eps=TAIL_EPS):
        half = self.sigma * float(stats.norm.isf(eps / 2.0))
        return (-half, half)


@dataclass(frozen=True)
class Exponential(InnovationDensity):
    """Exponential innovation on [0, inf) with the given rate."""

    rate: float = 1.0
    moment_order: float = 2.0

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        object.__setattr__(self, "support", (0.0, math.inf))

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y >= 0.0, self.rate * np.exp(-self.rate * np.maximum(y, 0.0)), 0.0)

    def sample(self, rng, size):
        # inverse CDF transform of uniform draws
        u = rng.random(size)
        return -np.log1p(-u) / self.rate

    def truncated_support(self, eps=TAIL_EPS):
        return (0.0, -math.log(eps) / self.rate)


@dataclass(frozen=True)
class Uniform(InnovationDensity):
    """Uniform innovation on the closed interval [lo, hi]."""

    lo: float = 0.0
    hi: float = 1.0
    moment_order: float = 2.0

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("need lo < hi")
        object.__setattr__(self, "support", (self.lo, self.hi))

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        inside = (y >= self.lo) & (y <= self.hi)
        return np.where(inside, 1.0 / (self.hi - self.lo), 0.0)

    def sample(self, rng, size):
        return rng.uniform(self.lo, self.hi, size)


def eval_exponential3(rho: float, x) -> np.ndarray | float:
    """Closed-form pdf of s^2*E1 + s*E2 + E3 with E_i iid standard exponential, s = rho.

    Supported on [0, inf); the three exponential scales are rho^2, rho and 1.
    """
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    scalar = np.isscalar(x)
    x = np.asarray(x, dtype=float)
    xs = np.maximum(x, 0.0)
    val = (
        np.exp(-xs)
        - np.exp(-xs / rho)
        + rho * (np.exp(-xs / rho**2) - np.exp(-xs)) / (1.0 + rho)
    ) / (1.0 - rho) ** 2
    out = np.where(x >= 0.0, np.maximum(val, 0.0), 0.0)
    return float(out) if scalar else out


def _exponential3_tail(rho: float, x: float) -> float:
    # exact upper-tail mass of eval_exponential3, from the antiderivative
    return (
        math.exp(-x)
        - rho * math.exp(-x / rho)
        + rho * (rho**2 * math.exp(-x / rho**2) - math.exp(-x)) / (1.0 + rho)
    ) / (1.0 - rho) ** 2


@dataclass(frozen=True)
class Exponential3(InnovationDensity):
    """Three-fold convolution of standard exponentials scaled by rho^2, rho, 1."""

    rho: float
    moment_order: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        object.__setattr__(self, "support", (0.0, math.inf))

    def pdf(self, y):
        return eval_exponential3(self.rho, np.asarray(y, dtype=float))

    def sample(self, rng, size):
        u = rng.random((3, size))
        e = -np.log1p(-u)
        return self.rho**2 * e[0] + self.rho * e[1] + e[2]

    def truncated_support(self, eps=TAIL_EPS):
        lo, hi = 0.0, 1.0
        while _exponential3_tail(self.rho, hi) > eps:
            hi *= 2.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if _exponential3_tail(self.rho, mid) > eps:
                lo = mid
            else:
                hi = mid
        return (0.0, hi)


class TabulatedDensity(InnovationDensity):
    """Density tabulated on a strictly increasing grid, linearly interpolated.

    Evaluation returns 0 outside the grid. The trapezoid mass is renormalized
    to 1 at construction; the applied factor is recorded in ``meta``.
    """

    def __init__(self, xs, vals, moment_order: float = 2.0, meta: dict | None = None):
        xs = np.asarray(xs, dtype=float)
        vals = np.asarray(vals, dtype=float)
        if xs.ndim != 1 or xs.shape != vals.shape or xs.size < 2:
            raise ValueError("xs and vals must be 1-D arrays of equal length >= 2")
        if not np.all(np.diff(xs) > 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(vals < 0):
            raise ValueError("values must be nonnegative")
        mass = float(np.trapezoid(vals, xs))
        if mass <= 0:
            raise ValueError("density has nonpositive mass")
        self.xs = xs
        self.vals = vals / mass
        self.moment_order = float(moment_order)
        self.support = (float(xs[0]), float(xs[-1]))
        self.meta = dict(meta or {})
        self.meta["renormalized_by"] = mass

    def pdf(self, y):
        return np.interp(np.asarray(y, dtype=float), self.xs, self.vals, left=0.0, right=0.0)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("x,value\n")
            for x, v in zip(self.xs, self.vals):
                fh.write(f"{x:.12e},{v:.12e}\n")


@dataclass(frozen=True)
class CustomDensity(InnovationDensity):
    """User-supplied vectorized pdf with an explicit support interval."""

    fn: callable
    support: tuple[float, float]
    moment_order: float = 2.0

    def pdf(self, y):
        return np.asarray(self.fn(np.asarray(y, dtype=float)), dtype=float)


def eval_density(d: InnovationDensity, y: float) -> float:
    """Scalar pdf evaluation; 0 outside the support."""
    return float(d.pdf(y))


def validate_density(d: InnovationDensity, tol: float = 1e-6) -> float:
    """Check that the pdf integrates to 1, returning the computed mass."""
    if isinstance(d, TabulatedDensity):
        mass = float(np.trapezoid(d.vals, d.xs))
    else:
        lo, hi = d.truncated_support(1e-12)
        mass, _ = integrate.quad(lambda t: float(d.pdf(t)), lo, hi, limit=400)
    if abs(mass - 1.0) > tol:
        raise ValueError(f"density mass {mass!r} deviates from 1 beyond {tol}")
    return mass


def absolute_moment(d: InnovationDensity, m: float) -> float:
    """Numeric absolute moment of order m."""
    lo, hi = d.truncated_support(1e-12)
    val, _ = integrate.quad(lambda t: abs(t) ** m * float(d.pdf(t)), lo, hi, limit=400)
    return val


def _component_samples(base: InnovationDensity, scale: float, h: float, eps: float):
    """Sample the pdf of scale*X on a step-h grid starting at its support edge."""
    lo_b, hi_b = base.truncated_support(eps)
    lo, hi = sorted((scale * lo_b, scale * hi_b))
    n = max(2, int(math.ceil((hi - lo) / h)))
    xs = lo + h * np.arange(n + 1)
    vals = base.pdf(xs / scale) / abs(scale)
    return lo, vals


def convolve_scaled(
    base: InnovationDensity,
    scales,
    mesh: float,
    support: tuple[float, float],
    tail_eps: float = TAIL_EPS,
) -> TabulatedDensity:
    """Tabulate the density of sum_k scales[k] * X_k for iid X_k ~ base.

    Repeated trapezoid quadrature of the convolution integral on aligned
    uniform grids of step <= ``mesh``. Edge samples of the right factor are
    halved so that jump discontinuities at support boundaries (exponential,
    uniform) keep the quadrature second-order. The result is interpolated
    onto ``support`` and renormalized; a renormalization factor further than
    1e-2 from 1 means the requested window misses real mass.
    """
    scales = [float(s) for s in scales]
    if not scales:
        raise ValueError("scales must be nonempty")
    if any(s == 0.0 for s in scales):
        raise ValueError("scales must be nonzero")
    lo_req, hi_req = float(support[0]), float(support[1])
    width = hi_req - lo_req
    if width <= 0:
        raise ValueError("empty support interval")
    if mesh <= 0 or mesh > width / 100.0:
        raise ValueError("mesh must be positive and at most support width / 100")
    n = int(round(width / mesh))
    if abs(width / mesh - n) > 1e-9 * max(1, n):
        n = int(math.ceil(width / mesh))
    h = width / n

    truncations = []
    acc_lo, acc_vals = _component_samples(base, scales[0], h, tail_eps)
    truncations.append((acc_lo, acc_lo + h * (acc_vals.size - 1)))
    for s in scales[1:]:
        g_lo, g_vals = _component_samples(base, s, h, tail_eps)
        truncations.append((g_lo, g_lo + h * (g_vals.size - 1)))
        wf = acc_vals * h
        wf[0] *= 0.5
        wf[-1] *= 0.5
        g = g_vals.copy()
        g[0] *= 0.5
        g[-1] *= 0.5
        acc_vals = np.convolve(wf, g)
        acc_lo += g_lo

    conv_xs = acc_lo + h * np.arange(acc_vals.size)
    xs = lo_req + h * np.arange(n + 1)
    vals = np.maximum(np.interp(xs, conv_xs, acc_vals, left=0.0, right=0.0), 0.0)
    mass = float(np.trapezoid(vals, xs))
    if abs(mass - 1.0) > 1e-2:
        raise ValueError(
            f"support too small: tabulated mass {mass:.6f} on [{lo_req}, {hi_req}]"
        )
    return TabulatedDensity(
        xs,
        vals,
        moment_order=base.moment_order,
        meta={"component_supports": truncations, "raw_mass": mass},
    )
