"""Uniform partition of a truncated support [k_minus, k_plus) into half-open cells."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class InvalidInterval(ValueError):
    """k_minus must be strictly below k_plus."""


class NonIntegralMesh(ValueError):
    """The interval width is not an integer multiple of the mesh."""


@dataclass(frozen=True)
class Partition:
    """Half-open cells [x_i, x_{i+1}) of equal width ``delta`` tiling [k_minus, k_plus).

    ``points`` holds the q_max + 1 cell boundaries x_i = k_minus + i * delta,
    with the last point snapped exactly to k_plus.
    """

    k_minus: float
    k_plus: float
    delta: float
    q_max: int
    points: np.ndarray = field(repr=False)

    @property
    def cell_lefts(self) -> np.ndarray:
        return self.points[:-1]

    @property
    def cell_rights(self) -> np.ndarray:
        return self.points[1:]

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.points[:-1] + self.points[1:])


def build_partition(k_minus: float, k_plus: float, delta: float) -> Partition:
    """Build the uniform partition, requiring an integral cell count.

    Points are computed as k_minus + i * delta (no cumulative addition) so
    they carry no floating-point drift.
    """
    if not k_minus < k_plus:
        raise InvalidInterval(f"need k_minus < k_plus, got [{k_minus}, {k_plus})")
    if delta <= 0:
        raise NonIntegralMesh("delta must be positive")
    ratio = (k_plus - k_minus) / delta
    q_max = int(round(ratio))
    if q_max < 1 or abs(ratio - q_max) > 1e-9 * max(1.0, ratio):
        raise NonIntegralMesh(
            f"({k_plus} - {k_minus}) / {delta} = {ratio} is not an integer"
        )
    points = k_minus + delta * np.arange(q_max + 1, dtype=float)
    points[-1] = k_plus
    points.setflags(write=False)
    return Partition(float(k_minus), float(k_plus), float(delta), q_max, points)


def locate_cell(p: Partition, x: float) -> int | None:
    """Index i with x in [x_i, x_{i+1}), or None when x is outside [k_minus, k_plus)."""
    if x < p.k_minus or x >= p.k_plus:
        return None
    i = int(np.floor((x - p.k_minus) / p.delta))
    i = min(max(i, 0), p.q_max - 1)
    # guard against roundoff in the division above
    if i + 1 <= p.q_max and x >= p.points[i + 1]:
        i += 1
    elif x < p.points[i]:
        i -= 1
    return i
