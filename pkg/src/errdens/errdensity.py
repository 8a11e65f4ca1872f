"""Kernel estimators of the regression error density.

* :func:`two_step_density` smooths the trimmed leave-one-out residuals.
* :func:`oracle_density` does the same with the true (simulated) errors.
* :func:`naive_conditional_density` estimates the conditional density of
  ``Y - m_hat(x)`` at a fixed covariate value; it pays for the covariate
  dimension and is kept as a comparison baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import trapezoid

from .errors import EmptyNeighborhood, NoTrimmedObservations
from .kernels import eval_k1
from .regression import ResidualSet, Sample, _as_points, kernel_weights, nw_estimate

__all__ = [
    "EstimateKind",
    "DensityEstimate",
    "two_step_density",
    "oracle_density",
    "naive_conditional_density",
    "ise",
]

_BLOCK_ELEMENTS = 2_000_000


class EstimateKind(str, Enum):
    FEASIBLE = "feasible"
    ORACLE = "oracle"
    NAIVE_CONDITIONAL = "naive_conditional"


@dataclass(frozen=True)
class DensityEstimate:
    grid: NDArray[np.float64]
    values: NDArray[np.float64]
    b1: float
    kind: EstimateKind
    n_effective: int


def _check_grid(grid: ArrayLike) -> NDArray[np.float64]:
    g = np.atleast_1d(np.asarray(grid, dtype=float))
    if g.ndim != 1 or g.size == 0:
        raise ValueError("grid must be a nonempty vector")
    if np.any(np.diff(g) <= 0):
        raise ValueError("grid must be strictly increasing")
    return g


def _k1_sums(points: NDArray[np.float64], grid: NDArray[np.float64], b1: float,
             weights: NDArray[np.float64] | None = None) -> NDArray[np.float64]:
    """``out[k] = sum_i w_i K1((points_i - grid_k) / b1)``, summed over i in index order."""
    out = np.empty(grid.size)
    step = max(1, _BLOCK_ELEMENTS // max(1, points.size))
    for start in range(0, grid.size, step):
        g = grid[start : start + step]
        k = eval_k1((points[None, :] - g[:, None]) / b1)
        if weights is not None:
            k = k * weights
        out[start : start + step] = k.sum(axis=1)
    return out


def _masked_kde(values: NDArray[np.float64], mask: NDArray[np.bool_], b1: float, grid: ArrayLike,
                kind: EstimateKind) -> DensityEstimate:
    if b1 <= 0:
        raise ValueError("b1 must be positive")
    g = _check_grid(grid)
    mask = np.asarray(mask, dtype=bool)
    m = int(np.count_nonzero(mask))
    if m == 0:
        raise NoTrimmedObservations("no observation inside the trim region")
    pts = np.asarray(values, dtype=float)[mask]
    dens = _k1_sums(pts, g, b1) / (b1 * m)
    return DensityEstimate(grid=g, values=dens, b1=float(b1), kind=kind, n_effective=m)


def two_step_density(res: ResidualSet, b1: float, grid: ArrayLike) -> DensityEstimate:
    """Kernel density of the trimmed residuals, normalised by the trimmed-in count."""
    return _masked_kde(res.residuals, res.trim_mask, b1, grid, EstimateKind.FEASIBLE)


def oracle_density(true_errors: ArrayLike, trim_mask: ArrayLike, b1: float,
                   grid: ArrayLike) -> DensityEstimate:
    """Same estimator as :func:`two_step_density` evaluated on the true errors."""
    return _masked_kde(np.asarray(true_errors, dtype=float), trim_mask, b1, grid, EstimateKind.ORACLE)


def naive_conditional_density(sample: Sample, b0: float, h0: float, h1: float, x: ArrayLike,
                              grid: ArrayLike) -> DensityEstimate:
    """Conditional kernel density of ``Y - m_hat(x)`` given ``X = x``.

    ``b0`` is the bandwidth of the inner Nadaraya-Watson fit ``m_hat(x)``;
    ``h0`` and ``h1`` smooth the covariate and error directions.

    Raises
    ------
    EmptyNeighborhood
        If no covariate lies within ``h0/2`` (or ``b0/2`` for the inner fit) of ``x``.
    """
    if min(b0, h0, h1) <= 0:
        raise ValueError("bandwidths must be positive")
    g = _check_grid(grid)
    pts, single = _as_points(x, sample.d)
    if not single:
        raise ValueError("naive_conditional_density takes a single covariate point")
    w = kernel_weights(sample.x, pts, h0)[0]
    den = w.sum()
    if den == 0.0:
        raise EmptyNeighborhood(f"no observation within h0/2 of x={pts[0].tolist()} (h0={h0})")
    m_x = nw_estimate(sample, b0, pts[0])
    # The 1/(n h0^d) factors of numerator and denominator cancel.
    num = _k1_sums(sample.y - m_x, g, h1, weights=w)
    return DensityEstimate(grid=g, values=num / (h1 * den), b1=float(h1),
                           kind=EstimateKind.NAIVE_CONDITIONAL, n_effective=int(np.count_nonzero(w)))


def ise(est: DensityEstimate, f_true: Callable[[NDArray[np.float64]], NDArray[np.float64]]) -> float:
    """Trapezoid-rule integrated squared error of ``est`` against ``f_true`` over its grid."""
    if est.grid.size < 2:
        raise ValueError("ISE needs a grid of at least two points")
    err = est.values - np.asarray(f_true(est.grid), dtype=float)
    return float(trapezoid(err * err, x=est.grid))
